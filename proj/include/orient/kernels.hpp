#pragma once

// Production numeric kernels. Data layout is (batch, channels, height, width),
// row-major. Convolution runs as patch-matrix products; the batch axis is
// split across OpenMP threads and every reduction over the batch is done in
// sample order, so results do not depend on the thread count.
//
// Plain nested-loop versions of the same maps live in orient/reference.hpp.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "orient/rng.hpp"
#include "orient/tensor.hpp"

namespace orient::kernels {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

struct PoolGeometry {
  std::size_t window = 2;
  std::size_t stride = 2;
};

/// Cross-channel normalization b = a / (k + alpha * sum a^2)^beta, the sum
/// running over channels [c - depth_radius, c + depth_radius] clamped to the
/// tensor. Radius 2 gives the five-channel window of the classic AlexNet setup.
struct LrnParams {
  std::size_t depth_radius = 2;
  float alpha = 1e-4F;
  float beta = 0.75F;
  float k = 2.0F;
  friend bool operator==(const LrnParams&, const LrnParams&) = default;
};

Shape conv2d_output_shape(const Shape& input, const Shape& weights, ConvGeometry geom);

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, ConvGeometry geom);

struct Conv2dGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                            ConvGeometry geom);

Shape maxpool_output_shape(const Shape& input, PoolGeometry geom);

struct MaxPoolResult {
  Tensor output;
  /// Linear index into the input of each output's winner (lowest index on ties).
  std::vector<std::uint32_t> argmax;
};

MaxPoolResult maxpool_forward(const Tensor& input, PoolGeometry geom);
Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, const Shape& input_shape);

Tensor lrn_forward(const Tensor& input, const LrnParams& params);
Tensor lrn_backward(const Tensor& grad_out, const Tensor& input, const LrnParams& params);

Tensor relu_forward(const Tensor& input);
/// Passes grad where input > 0; the subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor gaussian_noise(const Tensor& input, float sigma, Rng& rng);

/// out[N,M] = in[N,D] * weights[D,M] + bias[M]
Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct LinearGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights);

}  // namespace orient::kernels
