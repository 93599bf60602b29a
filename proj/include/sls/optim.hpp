#pragma once

#include "sls/tensor.hpp"

namespace sls::opt {

struct AdamState {
    ad::Tensor m, v; // first/second moments, shapes match the parameter
    int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState like(const ad::Tensor& p) {
        AdamState s;
        s.m = ad::Tensor(p.rows, p.cols, 0.0);
        s.v = ad::Tensor(p.rows, p.cols, 0.0);
        return s;
    }
};

// One bias-corrected Adam update in place. The step counter lives in the
// state; callers advance it by updating every parameter of a group together.
void adam_step(ad::Tensor& param, const ad::Tensor& grad, AdamState& state, double lr);

struct ScheduleConfig {
    int64_t total_iterations = 100000;
    int64_t warmup_iterations = 5000;
    double lr_mlp_max = 5.0e-4;
    double lr_mlp_min = 2.5e-5;
    double lr_pose_max = 1.0e-5;
    double lr_pose_min = 5.0e-7;
};

struct LearningRates {
    double mlp = 0.0;
    double pose = 0.0;
};

// Linear warmup from zero followed by half-cosine decay to the minima.
LearningRates lr_schedule(int64_t iteration, const ScheduleConfig& cfg);

} // namespace sls::opt
