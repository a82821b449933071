#pragma once

#include <cstddef>

#include "reprog/tensor.hpp"

// Plain forward kernels shared by the inference path and the tape ops.
namespace reprog::kernels {

Tensor relu(const Tensor& x);

/// x [C_in x T], kernel [C_out x C_in x K], bias [C_out] -> [C_out x T].
Tensor causal_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t dilation);

/// w [O x I], b [O], x [I] -> [O].
Tensor affine(const Tensor& w, const Tensor& b, const Tensor& x);

double mse(const Tensor& pred, const Tensor& target);

}  // namespace reprog::kernels
