#pragma once

// Serial nested-loop versions of the kernels in orient/kernels.hpp. They
// accumulate in double and follow the textbook definitions directly; tests
// and the benchmark compare the production kernels against them.

#include "orient/kernels.hpp"

namespace orient::reference {

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      kernels::ConvGeometry geom);
kernels::Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                                     kernels::ConvGeometry geom);

Tensor maxpool_forward(const Tensor& input, kernels::PoolGeometry geom);

Tensor lrn_forward(const Tensor& input, const kernels::LrnParams& params);

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

}  // namespace orient::reference
