#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reprog/tensor.hpp"

namespace reprog {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment state. Slots mirror the parameter list passed to `init`;
/// each slot keeps its own step count so a parameter skipped on some steps
/// (an absent task head) still gets correct bias correction.
struct OptimizerState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::vector<std::uint64_t> slot_steps;

    static OptimizerState init(std::span<Tensor* const> params, AdamConfig config);
};

/// One update. A null entry in `grads` leaves that parameter and its moments untouched.
void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, OptimizerState& state);

}  // namespace reprog
