#include "sls/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sls::opt {

void adam_step(ad::Tensor& param, const ad::Tensor& grad, AdamState& state, double lr) {
    if (!param.same_shape(grad) || !param.same_shape(state.m))
        throw std::invalid_argument("adam_step: shape mismatch");
    if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
    state.step += 1;
    double b1 = state.beta1, b2 = state.beta2;
    double c1 = 1.0 - std::pow(b1, double(state.step));
    double c2 = 1.0 - std::pow(b2, double(state.step));
    for (int i = 0; i < param.size(); ++i) {
        double g = grad.v[i];
        state.m.v[i] = b1 * state.m.v[i] + (1.0 - b1) * g;
        state.v.v[i] = b2 * state.v.v[i] + (1.0 - b2) * g * g;
        double mhat = state.m.v[i] / c1;
        double vhat = state.v.v[i] / c2;
        param.v[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

LearningRates lr_schedule(int64_t iteration, const ScheduleConfig& cfg) {
    auto one = [&](double lo, double hi) {
        if (iteration < cfg.warmup_iterations)
            return hi * double(iteration) / double(cfg.warmup_iterations);
        double span = double(cfg.total_iterations - cfg.warmup_iterations);
        double u = span > 0 ? double(iteration - cfg.warmup_iterations) / span : 1.0;
        if (u > 1.0) u = 1.0;
        return lo + 0.5 * (hi - lo) * (1.0 + std::cos(3.14159265358979323846 * u));
    };
    return LearningRates{one(cfg.lr_mlp_min, cfg.lr_mlp_max), one(cfg.lr_pose_min, cfg.lr_pose_max)};
}

} // namespace sls::opt
