// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "degan/params.hpp"

namespace degan::train {

struct RmsPropConfig {
    double learning_rate = 1e-3;
    double rho = 0.9;
    double momentum = 0.0;
    double epsilon = 1e-8;

    bool operator==(const RmsPropConfig&) const = default;
};

/// Running mean of squared gradients (and momentum buffers when used), keyed
/// like the parameters. Entries are created zeroed on first use.
struct RmsPropState {
    std::map<std::string, Tensor> mean_square;
    std::map<std::string, Tensor> velocity;

    bool operator==(const RmsPropState&) const = default;
};

/// s <- rho s + (1 - rho) g^2;  p <- p - lr g / (sqrt(s) + eps).
/// With momentum m > 0 the step goes through v <- m v + g / (sqrt(s) + eps).
void rmsprop_step(ParamSet& params, const GradMap& grads, RmsPropState& state, const RmsPropConfig& config);

}  // namespace degan::train
