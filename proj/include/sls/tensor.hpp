#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace sls::ad {

// Dense row-major 2-D tensor of doubles. Scalars are (1,1).
struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.v[0] = x;
        return t;
    }
    static Tensor from(int r, int c, std::initializer_list<double> xs) {
        Tensor t(r, c);
        if (int(xs.size()) != r * c) throw std::invalid_argument("Tensor::from: size mismatch");
        size_t i = 0;
        for (double x : xs) t.v[i++] = x;
        return t;
    }

    double& operator()(int r, int c) { return v[size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return v[size_t(r) * cols + c]; }

    int size() const { return rows * cols; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double item() const {
        if (!is_scalar()) throw std::logic_error("Tensor::item on non-scalar");
        return v[0];
    }
    bool all_finite() const;
};

class Tape;

// Lightweight handle to a node on a tape.
struct Value {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    int rows() const;
    int cols() const;
    const Tensor& val() const;
    double item() const { return val().item(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order (hence already
// topologically sorted); backward() walks them once in reverse.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete; // Value handles hold stable pointers into the tape
    Tape& operator=(const Tape&) = delete;

    Value input(Tensor t, bool requires_grad = false);
    Value constant(double x) { return input(Tensor::scalar(x), false); }
    Value constant(Tensor t) { return input(std::move(t), false); }

    const Tensor& val(int id) const { return nodes_[id].val; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    // gradient of the last backward() output w.r.t. node id (zeros if none flowed)
    const Tensor& grad(Value v) const;

    void backward(Value scalar_output);
    bool backward_done() const { return backward_done_; }

    size_t num_nodes() const { return nodes_.size(); }

    // --- internals used by the op implementations ---
    using BackFn = std::function<void(Tape&, const Tensor& gout)>;
    int emit(Tensor val, bool requires_grad, BackFn back);
    Tensor& grad_buf(int id); // lazily allocated, zero-initialized

private:
    struct Node {
        Tensor val;
        Tensor grad; // empty until touched during backward
        bool requires_grad = false;
        BackFn back; // null for leaves
    };
    std::vector<Node> nodes_;
    bool backward_done_ = false;
    Tensor zero_like_cache_;
};

// ---- primitive operations ----

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);
Value neg(Value a);
Value add_const(Value a, double c);
Value mul_const(Value a, double c);

Value matmul(Value a, Value b);
Value transpose(Value a);

Value sum(Value a);
Value mean(Value a);
Value sum_cols(Value a); // row-wise sum -> (m,1)

Value abs(Value a);
Value relu(Value a);
Value exp(Value a);
Value log(Value a);
Value sin(Value a);
Value cos(Value a);
Value sqrt(Value a);
Value sigmoid(Value a);
Value softplus(Value a, double beta);
Value clamp(Value a, double lo, double hi);
Value norm_rows(Value a); // row-wise L2 norm -> (m,1), zero-safe backward

// T(i,j) = prod_{k<j} a(i,k); used for volume-rendering transmittance
Value exclusive_cumprod_rows(Value a);

Value concat_cols(std::span<const Value> parts);
Value slice_cols(Value a, int c0, int c1); // [c0, c1)
Value gather_rows(Value a, std::vector<int> idx);
Value reshape(Value a, int r, int c);
Value stack_scalars(int r, int c, std::span<const Value> xs); // row-major fill
Value detach(Value a);

// operator sugar
inline Value operator+(Value a, Value b) { return add(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator*(Value a, Value b) { return mul(a, b); }
inline Value operator/(Value a, Value b) { return div(a, b); }
inline Value operator-(Value a) { return neg(a); }

// global thread budget (SLS_THREADS env var, default 1); used by the matmul
// kernel with a static row split so results are identical for any setting
int thread_budget();

} // namespace sls::ad
