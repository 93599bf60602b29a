#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sls/rng.hpp"
#include "sls/tensor.hpp"

namespace sls::fields {

// [x, sin(2^k x), cos(2^k x)] for k < freqs; 3 + 6*freqs channels for 3-D input
int encoded_dim(int input_dim, int freqs);
ad::Value positional_encode(ad::Value X, int freqs);

// Tape-level interface shared by the MLP field and analytic test fields.
// A "binding" lives on one tape; eval may be called multiple times and the
// trainable leaves accumulate gradients across uses.
class DiffSdf {
public:
    struct Eval {
        ad::Value sdf;      // (B,1)
        ad::Value feature;  // (B,F), only when requested
        ad::Value gradient; // (B,3) spatial gradient, only when requested
    };
    virtual Eval eval(ad::Value X, bool want_feature, bool want_gradient) const = 0;
    virtual ad::Tensor eval_raw(const ad::Tensor& X) const = 0;     // (B,1)
    virtual ad::Tensor gradient_raw(const ad::Tensor& X) const = 0; // (B,3)
    virtual int feature_dim() const = 0;
    virtual ~DiffSdf() = default;
};

class DiffColor {
public:
    // V must hold unit view directions; N and Feat may be invalid Values when
    // the implementation ignores them
    virtual ad::Value eval(ad::Value X, ad::Value V, ad::Value N, ad::Value Feat) const = 0;
    virtual ~DiffColor() = default;
};

struct SdfConfig {
    int hidden = 256;
    int n_hidden = 8; // hidden layers; the output layer is extra
    int skip_at = 4;  // hidden layer whose input re-concatenates the encoding; -1 disables
    int enc_freqs = 6;
    double softplus_beta = 100.0;
    int feature_dim = 256;
    double init_radius = 0.5;

    static SdfConfig desk() {
        SdfConfig c;
        c.hidden = 64;
        c.n_hidden = 4;
        c.skip_at = 2;
        c.feature_dim = 32;
        return c;
    }
};

class SdfNetwork {
public:
    explicit SdfNetwork(const SdfConfig& cfg);

    const SdfConfig& config() const { return cfg_; }

    // sphere-like start: f(x) ~ |x| - init_radius
    void geometric_init(Rng& rng);

    std::vector<ad::Tensor*> parameters();
    std::vector<const ad::Tensor*> parameters() const;

    class Binding : public DiffSdf {
    public:
        Eval eval(ad::Value X, bool want_feature, bool want_gradient) const override;
        ad::Tensor eval_raw(const ad::Tensor& X) const override;
        ad::Tensor gradient_raw(const ad::Tensor& X) const override;
        int feature_dim() const override { return net_->cfg_.feature_dim; }

        // leaves in parameters() order, for gradient readback
        const std::vector<ad::Value>& leaves() const { return leaves_; }

    private:
        friend class SdfNetwork;
        const SdfNetwork* net_ = nullptr;
        ad::Tape* tape_ = nullptr;
        std::vector<ad::Value> leaves_;
    };
    Binding bind(ad::Tape& tape, bool trainable) const;

    ad::Tensor eval_raw(const ad::Tensor& X) const;
    ad::Tensor gradient_raw(const ad::Tensor& X) const;

private:
    friend class Binding;
    SdfConfig cfg_;
    std::vector<ad::Tensor> weights_; // (in, out) per layer
    std::vector<ad::Tensor> biases_;  // (1, out)
    std::vector<int> layer_in_, layer_out_;
};

struct ColorConfig {
    int hidden = 256;
    int n_hidden = 4;
    int view_freqs = 4;
    int feature_dim = 256; // must match the sdf feature dim in idr mode
    enum class Inputs { XV, IDR } inputs = Inputs::IDR;

    static ColorConfig desk() {
        ColorConfig c;
        c.hidden = 64;
        c.n_hidden = 2;
        c.feature_dim = 32;
        return c;
    }
};

class ColorNetwork {
public:
    explicit ColorNetwork(const ColorConfig& cfg);

    const ColorConfig& config() const { return cfg_; }
    void init(Rng& rng);

    std::vector<ad::Tensor*> parameters();
    std::vector<const ad::Tensor*> parameters() const;

    class Binding : public DiffColor {
    public:
        ad::Value eval(ad::Value X, ad::Value V, ad::Value N, ad::Value Feat) const override;
        const std::vector<ad::Value>& leaves() const { return leaves_; }

    private:
        friend class ColorNetwork;
        const ColorNetwork* net_ = nullptr;
        ad::Tape* tape_ = nullptr;
        std::vector<ad::Value> leaves_;
    };
    Binding bind(ad::Tape& tape, bool trainable) const;

private:
    friend class Binding;
    ColorConfig cfg_;
    std::vector<ad::Tensor> weights_;
    std::vector<ad::Tensor> biases_;
};

// Analytic sphere SDF, |x - c| - r; exact fixture for render/loss tests.
class SphereSdf : public DiffSdf {
public:
    SphereSdf(ad::Tape& tape, double radius, double cx = 0, double cy = 0, double cz = 0)
        : tape_(&tape), r_(radius), cx_(cx), cy_(cy), cz_(cz) {}
    Eval eval(ad::Value X, bool want_feature, bool want_gradient) const override;
    ad::Tensor eval_raw(const ad::Tensor& X) const override;
    ad::Tensor gradient_raw(const ad::Tensor& X) const override;
    int feature_dim() const override { return 0; }

private:
    ad::Tape* tape_;
    double r_, cx_, cy_, cz_;
};

} // namespace sls::fields
