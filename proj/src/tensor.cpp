#include "sls/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>

#include <Eigen/Core>

namespace sls::ad {

bool Tensor::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

int Value::rows() const { return tape->val(id).rows; }
int Value::cols() const { return tape->val(id).cols; }
const Tensor& Value::val() const { return tape->val(id); }

Value Tape::input(Tensor t, bool requires_grad) {
    int id = emit(std::move(t), requires_grad, nullptr);
    return Value{this, id};
}

int Tape::emit(Tensor val, bool requires_grad, BackFn back) {
    nodes_.push_back(Node{std::move(val), Tensor(), requires_grad, std::move(back)});
    return int(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) n.grad = Tensor(n.val.rows, n.val.cols, 0.0);
    return n.grad;
}

const Tensor& Tape::grad(Value v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.v.empty()) {
        const_cast<Tape*>(this)->zero_like_cache_ = Tensor(n.val.rows, n.val.cols, 0.0);
        return zero_like_cache_;
    }
    return n.grad;
}

void Tape::backward(Value out) {
    if (out.tape != this) throw std::logic_error("backward: value from another tape");
    if (backward_done_) throw std::logic_error("backward: already run on this tape");
    const Tensor& ov = nodes_[out.id].val;
    if (!ov.is_scalar()) throw std::invalid_argument("backward: output must be a scalar");
    backward_done_ = true;
    grad_buf(out.id).v[0] = 1.0;
    for (int id = out.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.v.empty()) continue;
        if (!n.back) continue; // leaf
        n.back(*this, n.grad);
    }
}

int thread_budget() {
    static int n = [] {
        const char* env = std::getenv("SLS_THREADS");
        if (!env) return 1;
        int k = std::atoi(env);
        return k >= 1 ? k : 1;
    }();
    return n;
}

// ---------------------------------------------------------------------------
// helpers

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using MapC = Eigen::Map<const RowMat>;

MapC emap(const Tensor& t) { return MapC(t.v.data(), t.rows, t.cols); }
MapM emap(Tensor& t) { return MapM(t.v.data(), t.rows, t.cols); }

bool broadcastable(const Tensor& a, const Tensor& b) {
    return (a.rows == b.rows || a.rows == 1 || b.rows == 1) &&
           (a.cols == b.cols || a.cols == 1 || b.cols == 1);
}

// reduce a full-shape gradient into the (possibly broadcast) shape of target
void reduce_into(Tensor& target, const Tensor& full) {
    if (target.same_shape(full)) {
        for (int i = 0; i < full.size(); ++i) target.v[i] += full.v[i];
        return;
    }
    for (int r = 0; r < full.rows; ++r) {
        int tr = target.rows == 1 ? 0 : r;
        for (int c = 0; c < full.cols; ++c) {
            int tc = target.cols == 1 ? 0 : c;
            target(tr, tc) += full(r, c);
        }
    }
}

template <class F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F f) {
    if (!broadcastable(a, b)) throw std::invalid_argument("elementwise op: shape mismatch");
    int R = std::max(a.rows, b.rows), C = std::max(a.cols, b.cols);
    Tensor out(R, C);
    for (int r = 0; r < R; ++r) {
        int ar = a.rows == 1 ? 0 : r, br = b.rows == 1 ? 0 : r;
        for (int c = 0; c < C; ++c) {
            int ac = a.cols == 1 ? 0 : c, bc = b.cols == 1 ? 0 : c;
            out(r, c) = f(a(ar, ac), b(br, bc));
        }
    }
    return out;
}

// emit a binary elementwise node; dfa/dfb give local partials as a function of
// the two input values
template <class F, class DA, class DB>
Value binary_op(Value a, Value b, F f, DA dfa, DB dfb) {
    Tape& t = *a.tape;
    if (b.tape != a.tape) throw std::logic_error("op: values from different tapes");
    Tensor out = broadcast_apply(t.val(a.id), t.val(b.id), f);
    bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
    int aid = a.id, bid = b.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid, bid, dfa, dfb](Tape& tp, const Tensor& g) {
            const Tensor& av = tp.val(aid);
            const Tensor& bv = tp.val(bid);
            if (tp.requires_grad(aid)) {
                Tensor full = broadcast_apply(av, bv, dfa);
                for (int i = 0; i < g.size(); ++i) full.v[i] *= g.v[i];
                reduce_into(tp.grad_buf(aid), full);
            }
            if (tp.requires_grad(bid)) {
                Tensor full = broadcast_apply(av, bv, dfb);
                for (int i = 0; i < g.size(); ++i) full.v[i] *= g.v[i];
                reduce_into(tp.grad_buf(bid), full);
            }
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

} // namespace

// Full unary op with access to input and output node values in backward.
template <class F, class D>
static Value make_unary(Value a, F f, D df) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(av.rows, av.cols);
    for (int i = 0; i < av.size(); ++i) out.v[i] = f(av.v[i]);
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    // the output id equals the node emitted next
    struct Patch {
        int aid;
        int oid = -1;
        D df;
    };
    auto patch = std::make_shared<Patch>(Patch{aid, -1, df});
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [patch](Tape& tp, const Tensor& g) {
            const Tensor& av = tp.val(patch->aid);
            const Tensor& ov = tp.val(patch->oid);
            Tensor& ga = tp.grad_buf(patch->aid);
            for (int i = 0; i < g.size(); ++i)
                ga.v[i] += g.v[i] * patch->df(av.v[i], ov.v[i]);
        };
    }
    int oid = t.emit(std::move(out), rg, std::move(back));
    patch->oid = oid;
    return Value{&t, oid};
}

// ---------------------------------------------------------------------------
// arithmetic

Value add(Value a, Value b) {
    return binary_op(
        a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Value sub(Value a, Value b) {
    return binary_op(
        a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Value mul(Value a, Value b) {
    return binary_op(
        a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Value div(Value a, Value b) {
    return binary_op(
        a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Value neg(Value a) {
    return make_unary(
        a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Value add_const(Value a, double c) {
    return make_unary(
        a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Value mul_const(Value a, double c) {
    return make_unary(
        a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

// ---------------------------------------------------------------------------
// matmul with a deterministic static row split

static void gemm_accum(const Tensor& A, const Tensor& B, Tensor& C, bool transA, bool transB) {
    int nt = thread_budget();
    int rows = C.rows;
    auto run_block = [&](int r0, int r1) {
        if (r1 <= r0) return;
        auto cblk = emap(C).middleRows(r0, r1 - r0);
        if (!transA && !transB)
            cblk.noalias() += emap(A).middleRows(r0, r1 - r0) * emap(B);
        else if (!transA && transB)
            cblk.noalias() += emap(A).middleRows(r0, r1 - r0) * emap(B).transpose();
        else if (transA && !transB)
            cblk.noalias() += emap(A).transpose().middleRows(r0, r1 - r0) * emap(B);
        else
            cblk.noalias() += emap(A).transpose().middleRows(r0, r1 - r0) * emap(B).transpose();
    };
    if (nt <= 1 || rows < 256) {
        run_block(0, rows);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int k = 0; k < nt; ++k) {
        int r0 = int(int64_t(rows) * k / nt);
        int r1 = int(int64_t(rows) * (k + 1) / nt);
        run_block(r0, r1);
    }
}

Value matmul(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    const Tensor& bv = t.val(b.id);
    if (av.cols != bv.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Tensor out(av.rows, bv.cols, 0.0);
    gemm_accum(av, bv, out, false, false);
    bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
    int aid = a.id, bid = b.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid, bid](Tape& tp, const Tensor& g) {
            if (tp.requires_grad(aid)) gemm_accum(g, tp.val(bid), tp.grad_buf(aid), false, true);
            if (tp.requires_grad(bid)) gemm_accum(tp.val(aid), g, tp.grad_buf(bid), true, false);
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value transpose(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(av.cols, av.rows);
    for (int r = 0; r < av.rows; ++r)
        for (int c = 0; c < av.cols; ++c) out(c, r) = av(r, c);
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga(c, r) += g(r, c);
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

// ---------------------------------------------------------------------------
// reductions

Value sum(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    double s = 0.0;
    for (double x : av.v) s += x;
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            double gv = g.v[0];
            for (double& x : ga.v) x += gv;
        };
    }
    return Value{&t, t.emit(Tensor::scalar(s), rg, std::move(back))};
}

Value mean(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    int n = av.size();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    double s = 0.0;
    for (double x : av.v) s += x;
    s /= n;
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid, n](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            double gv = g.v[0] / n;
            for (double& x : ga.v) x += gv;
        };
    }
    return Value{&t, t.emit(Tensor::scalar(s), rg, std::move(back))};
}

Value sum_cols(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(av.rows, 1, 0.0);
    for (int r = 0; r < av.rows; ++r)
        for (int c = 0; c < av.cols; ++c) out(r, 0) += av(r, c);
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            for (int r = 0; r < ga.rows; ++r)
                for (int c = 0; c < ga.cols; ++c) ga(r, c) += g(r, 0);
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

// ---------------------------------------------------------------------------
// elementwise nonlinearities

Value abs(Value a) {
    return make_unary(
        a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Value relu(Value a) {
    return make_unary(
        a, [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Value exp(Value a) {
    return make_unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Value log(Value a) {
    return make_unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Value sin(Value a) {
    return make_unary(
        a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Value cos(Value a) {
    return make_unary(
        a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Value sqrt(Value a) {
    return make_unary(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Value sigmoid(Value a) {
    auto sg = [](double x) {
        if (x >= 0) {
            double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        double e = std::exp(x);
        return e / (1.0 + e);
    };
    return make_unary(a, sg, [](double, double y) { return y * (1.0 - y); });
}

Value softplus(Value a, double beta) {
    auto f = [beta](double x) {
        double bx = beta * x;
        if (bx > 34.0) return x; // log1p(exp(34)) == 34 to double precision
        return std::log1p(std::exp(bx)) / beta;
    };
    auto df = [beta](double x, double) {
        double bx = beta * x;
        if (bx >= 0) {
            double e = std::exp(-bx);
            return 1.0 / (1.0 + e);
        }
        double e = std::exp(bx);
        return e / (1.0 + e);
    };
    return make_unary(a, f, df);
}

Value clamp(Value a, double lo, double hi) {
    return make_unary(
        a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Value norm_rows(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < av.cols; ++c) s += av(r, c) * av(r, c);
        out(r, 0) = std::sqrt(s);
    }
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    struct Ctx {
        int aid, oid = -1;
    };
    auto ctx = std::make_shared<Ctx>(Ctx{aid});
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [ctx](Tape& tp, const Tensor& g) {
            const Tensor& av = tp.val(ctx->aid);
            const Tensor& ov = tp.val(ctx->oid);
            Tensor& ga = tp.grad_buf(ctx->aid);
            for (int r = 0; r < av.rows; ++r) {
                double n = ov(r, 0);
                if (n <= 0.0) continue; // zero-vector subgradient
                double s = g(r, 0) / n;
                for (int c = 0; c < av.cols; ++c) ga(r, c) += s * av(r, c);
            }
        };
    }
    int oid = t.emit(std::move(out), rg, std::move(back));
    ctx->oid = oid;
    return Value{&t, oid};
}

Value exclusive_cumprod_rows(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(av.rows, av.cols);
    for (int r = 0; r < av.rows; ++r) {
        double p = 1.0;
        for (int c = 0; c < av.cols; ++c) {
            out(r, c) = p;
            p *= av(r, c);
        }
    }
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        // dT(r,j)/da(r,k) for k<j is prod_{m<j, m != k} a(r,m); O(n^2) per row,
        // zero-safe (no division)
        back = [aid](Tape& tp, const Tensor& g) {
            const Tensor& av = tp.val(aid);
            Tensor& ga = tp.grad_buf(aid);
            int n = av.cols;
            std::vector<double> pre(n + 1);
            for (int r = 0; r < av.rows; ++r) {
                pre[0] = 1.0;
                for (int c = 0; c < n; ++c) pre[c + 1] = pre[c] * av(r, c);
                for (int k = 0; k < n; ++k) {
                    double acc = 0.0;
                    double suffix = 1.0; // prod_{k<m<j} a(r,m), grown as j advances
                    for (int j = k + 1; j < n; ++j) {
                        if (j > k + 1) suffix *= av(r, j - 1);
                        acc += g(r, j) * pre[k] * suffix;
                    }
                    ga(r, k) += acc;
                }
            }
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

// ---------------------------------------------------------------------------
// structural ops

Value concat_cols(std::span<const Value> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    Tape& t = *parts[0].tape;
    int rows = t.val(parts[0].id).rows;
    int cols = 0;
    bool rg = false;
    for (const Value& p : parts) {
        const Tensor& pv = t.val(p.id);
        if (pv.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += pv.cols;
        rg = rg || t.requires_grad(p.id);
    }
    Tensor out(rows, cols);
    int off = 0;
    std::vector<int> ids;
    std::vector<int> widths;
    for (const Value& p : parts) {
        const Tensor& pv = t.val(p.id);
        for (int r = 0; r < rows; ++r)
            std::memcpy(&out(r, off), pv.v.data() + size_t(r) * pv.cols, size_t(pv.cols) * sizeof(double));
        ids.push_back(p.id);
        widths.push_back(pv.cols);
        off += pv.cols;
    }
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [ids, widths](Tape& tp, const Tensor& g) {
            int off = 0;
            for (size_t i = 0; i < ids.size(); ++i) {
                if (tp.requires_grad(ids[i])) {
                    Tensor& ga = tp.grad_buf(ids[i]);
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < widths[i]; ++c) ga(r, c) += g(r, off + c);
                }
                off += widths[i];
            }
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value slice_cols(Value a, int c0, int c1) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    if (c0 < 0 || c1 > av.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    Tensor out(av.rows, c1 - c0);
    for (int r = 0; r < av.rows; ++r)
        std::memcpy(&out(r, 0), av.v.data() + size_t(r) * av.cols + c0, size_t(c1 - c0) * sizeof(double));
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid, c0](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga(r, c0 + c) += g(r, c);
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value gather_rows(Value a, std::vector<int> idx) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    Tensor out(int(idx.size()), av.cols);
    for (size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= av.rows) throw std::out_of_range("gather_rows: bad index");
        std::memcpy(&out(int(r), 0), av.v.data() + size_t(idx[r]) * av.cols, size_t(av.cols) * sizeof(double));
    }
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid, idx](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            for (size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < g.cols; ++c) ga(idx[r], c) += g(int(r), c);
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value reshape(Value a, int r, int c) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a.id);
    if (r * c != av.size()) throw std::invalid_argument("reshape: size mismatch");
    Tensor out(r, c);
    out.v = av.v;
    bool rg = t.requires_grad(a.id);
    int aid = a.id;
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [aid](Tape& tp, const Tensor& g) {
            Tensor& ga = tp.grad_buf(aid);
            for (int i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value stack_scalars(int r, int c, std::span<const Value> xs) {
    if (int(xs.size()) != r * c) throw std::invalid_argument("stack_scalars: count mismatch");
    Tape& t = *xs[0].tape;
    Tensor out(r, c);
    bool rg = false;
    std::vector<int> ids(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        out.v[i] = t.val(xs[i].id).item();
        ids[i] = xs[i].id;
        rg = rg || t.requires_grad(xs[i].id);
    }
    Tape::BackFn back = nullptr;
    if (rg) {
        back = [ids](Tape& tp, const Tensor& g) {
            for (size_t i = 0; i < ids.size(); ++i)
                if (tp.requires_grad(ids[i])) tp.grad_buf(ids[i]).v[0] += g.v[i];
        };
    }
    return Value{&t, t.emit(std::move(out), rg, std::move(back))};
}

Value detach(Value a) {
    Tape& t = *a.tape;
    return t.input(t.val(a.id), false);
}

} // namespace sls::ad
