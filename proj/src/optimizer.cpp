#include "reprog/optimizer.hpp"

#include <cmath>
#include <string>

#include "reprog/error.hpp"

namespace reprog {

OptimizerState OptimizerState::init(std::span<Tensor* const> params, AdamConfig config) {
    OptimizerState state;
    state.config = config;
    for (const Tensor* p : params) {
        state.first_moment.emplace_back(Tensor::zeros_like(*p));
        state.second_moment.emplace_back(Tensor::zeros_like(*p));
        state.slot_steps.push_back(0);
    }
    return state;
}

void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        fail(ErrorKind::dimension, "optimizer slot count: " + std::to_string(params.size()) + " params, " +
                                       std::to_string(grads.size()) + " grads, " +
                                       std::to_string(state.first_moment.size()) + " state slots");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i]) require_same_shape(*params[i], *grads[i], "optimizer gradient slot " + std::to_string(i));
        require_same_shape(*params[i], state.first_moment[i], "optimizer state slot " + std::to_string(i));
    }
    const auto& cfg = state.config;
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads[i]) continue;
        const std::uint64_t t = ++state.slot_steps[i];
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        auto& p = *params[i];
        const auto& g = *grads[i];
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            p[j] -= cfg.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
        }
    }
}

}  // namespace reprog
