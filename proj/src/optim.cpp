// SPDX-License-Identifier: Apache-2.0
#include "degan/optim.hpp"

#include <cmath>

namespace degan::train {

void rmsprop_step(ParamSet& params, const GradMap& grads, RmsPropState& state, const RmsPropConfig& config) {
    if (grads.size() != params.tensors.size())
        throw std::invalid_argument("rmsprop: gradient keys do not match parameter keys");
    for (auto& [name, p] : params.tensors) {
        auto it = grads.find(name);
        if (it == grads.end()) throw std::invalid_argument("rmsprop: no gradient for parameter " + name);
        const Tensor& g = it->second;
        if (g.shape != p.shape)
            throw ShapeError("rmsprop: gradient for " + name + " has shape " + shape_str(g.shape) +
                             ", parameter has " + shape_str(p.shape));
        auto& s = state.mean_square.try_emplace(name, p.shape, 0.0).first->second;
        Tensor* v = nullptr;
        if (config.momentum != 0.0) v = &state.velocity.try_emplace(name, p.shape, 0.0).first->second;
        for (std::size_t k = 0; k < p.size(); ++k) {
            s[k] = config.rho * s[k] + (1.0 - config.rho) * g[k] * g[k];
            const double step = g[k] / (std::sqrt(s[k]) + config.epsilon);
            if (v) {
                (*v)[k] = config.momentum * (*v)[k] + step;
                p[k] -= config.learning_rate * (*v)[k];
            } else {
                p[k] -= config.learning_rate * step;
            }
        }
    }
}

}  // namespace degan::train
