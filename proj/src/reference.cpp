#include "orient/reference.hpp"

#include <algorithm>
#include <cmath>

namespace orient::reference {

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      kernels::ConvGeometry geom) {
  const Shape out_shape = kernels::conv2d_output_shape(input.shape(), weights.shape(), geom);
  Tensor out(out_shape);
  const auto h = static_cast<long>(input.dim(2));
  const auto w = static_cast<long>(input.dim(3));
  const auto stride = static_cast<long>(geom.stride);
  const auto pad = static_cast<long>(geom.pad);
  for (std::size_t n = 0; n < out_shape[0]; ++n) {
    for (std::size_t o = 0; o < out_shape[1]; ++o) {
      for (std::size_t oy = 0; oy < out_shape[2]; ++oy) {
        for (std::size_t ox = 0; ox < out_shape[3]; ++ox) {
          double acc = bias[o];
          for (std::size_t c = 0; c < input.dim(1); ++c) {
            for (std::size_t i = 0; i < weights.dim(2); ++i) {
              for (std::size_t j = 0; j < weights.dim(3); ++j) {
                const long y = static_cast<long>(oy) * stride + static_cast<long>(i) - pad;
                const long x = static_cast<long>(ox) * stride + static_cast<long>(j) - pad;
                if (y < 0 || y >= h || x < 0 || x >= w) {
                  continue;
                }
                acc += static_cast<double>(input.at(n, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x))) *
                       weights.at(o, c, i, j);
              }
            }
          }
          out.at(n, o, oy, ox) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

kernels::Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                                     kernels::ConvGeometry geom) {
  const Shape out_shape = kernels::conv2d_output_shape(input.shape(), weights.shape(), geom);
  require_shape(grad_out, out_shape, "reference conv2d_backward");
  std::vector<double> gi(input.size(), 0.0);
  std::vector<double> gw(weights.size(), 0.0);
  std::vector<double> gb(weights.dim(0), 0.0);
  const std::size_t cin = input.dim(1);
  const std::size_t h = input.dim(2);
  const std::size_t w = input.dim(3);
  const std::size_t kh = weights.dim(2);
  const std::size_t kw = weights.dim(3);
  for (std::size_t n = 0; n < out_shape[0]; ++n) {
    for (std::size_t o = 0; o < out_shape[1]; ++o) {
      for (std::size_t oy = 0; oy < out_shape[2]; ++oy) {
        for (std::size_t ox = 0; ox < out_shape[3]; ++ox) {
          const double g = grad_out.at(n, o, oy, ox);
          gb[o] += g;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t i = 0; i < kh; ++i) {
              for (std::size_t j = 0; j < kw; ++j) {
                const long y = static_cast<long>(oy * geom.stride + i) - static_cast<long>(geom.pad);
                const long x = static_cast<long>(ox * geom.stride + j) - static_cast<long>(geom.pad);
                if (y < 0 || y >= static_cast<long>(h) || x < 0 || x >= static_cast<long>(w)) {
                  continue;
                }
                const std::size_t in_idx = ((n * cin + c) * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x);
                const std::size_t w_idx = ((o * cin + c) * kh + i) * kw + j;
                gw[w_idx] += g * input[in_idx];
                gi[in_idx] += g * weights[w_idx];
              }
            }
          }
        }
      }
    }
  }
  auto to_tensor = [](const Shape& shape, const std::vector<double>& values) {
    std::vector<float> data(values.begin(), values.end());
    return Tensor(shape, std::move(data));
  };
  return {to_tensor(input.shape(), gi), to_tensor(weights.shape(), gw), to_tensor({weights.dim(0)}, gb)};
}

Tensor maxpool_forward(const Tensor& input, kernels::PoolGeometry geom) {
  const Shape out_shape = kernels::maxpool_output_shape(input.shape(), geom);
  Tensor out(out_shape);
  for (std::size_t n = 0; n < out_shape[0]; ++n) {
    for (std::size_t c = 0; c < out_shape[1]; ++c) {
      for (std::size_t oy = 0; oy < out_shape[2]; ++oy) {
        for (std::size_t ox = 0; ox < out_shape[3]; ++ox) {
          float best = -INFINITY;
          for (std::size_t i = 0; i < geom.window; ++i) {
            for (std::size_t j = 0; j < geom.window; ++j) {
              best = std::max(best, input.at(n, c, oy * geom.stride + i, ox * geom.stride + j));
            }
          }
          out.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return out;
}

Tensor lrn_forward(const Tensor& input, const kernels::LrnParams& params) {
  Tensor out(input.shape());
  const long channels = static_cast<long>(input.dim(1));
  const long radius = static_cast<long>(params.depth_radius);
  for (std::size_t n = 0; n < input.dim(0); ++n) {
    for (long c = 0; c < channels; ++c) {
      for (std::size_t y = 0; y < input.dim(2); ++y) {
        for (std::size_t x = 0; x < input.dim(3); ++x) {
          double sum = 0.0;
          for (long j = std::max(0L, c - radius); j <= std::min(channels - 1, c + radius); ++j) {
            const double a = input.at(n, static_cast<std::size_t>(j), y, x);
            sum += a * a;
          }
          const double a = input.at(n, static_cast<std::size_t>(c), y, x);
          out.at(n, static_cast<std::size_t>(c), y, x) =
              static_cast<float>(a / std::pow(params.k + params.alpha * sum, static_cast<double>(params.beta)));
        }
      }
    }
  }
  return out;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  Tensor out({input.dim(0), weights.dim(1)});
  for (std::size_t r = 0; r < input.dim(0); ++r) {
    for (std::size_t m = 0; m < weights.dim(1); ++m) {
      double acc = bias[m];
      for (std::size_t d = 0; d < weights.dim(0); ++d) {
        acc += static_cast<double>(input[r * weights.dim(0) + d]) * weights[d * weights.dim(1) + m];
      }
      out[r * weights.dim(1) + m] = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace orient::reference
