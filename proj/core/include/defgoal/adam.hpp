#pragma once

#include "defgoal/tensor.hpp"

#include <vector>

namespace defgoal {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam moments, one pair per parameter tensor.
struct AdamState {
    AdamConfig config;
    long step_count = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState init(const std::vector<Tensor*>& params, const AdamConfig& config);
};

/// One in-place update. `grads` must mirror `params` in count and size.
void adam_step(std::vector<Tensor*>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state);

}  // namespace defgoal
