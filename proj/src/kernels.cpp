#include "orient/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gemm.hpp"

namespace orient::kernels {

namespace {

// Samples processed per parallel wave in reductions over the batch. Partial
// results of a wave are folded into the total in sample order, which makes
// the sum independent of how many threads computed the partials.
constexpr std::size_t kReduceWave = 16;

struct ConvDims {
  std::size_t n, cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t oh, ow;
  std::size_t stride, pad;

  [[nodiscard]] std::size_t patch() const { return cin * kh * kw; }
  [[nodiscard]] std::size_t positions() const { return oh * ow; }
  [[nodiscard]] bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvDims conv_dims(const Shape& input, const Shape& weights, ConvGeometry geom) {
  if (input.size() != 4 || weights.size() != 4) {
    throw ShapeError("conv2d: input " + shape_string(input) + " and weights " + shape_string(weights) +
                     " must both be rank 4");
  }
  if (input[1] != weights[1]) {
    throw ShapeError("conv2d: input " + shape_string(input) + " has " + std::to_string(input[1]) +
                     " channels but weights " + shape_string(weights) + " expect " + std::to_string(weights[1]));
  }
  if (geom.stride == 0) {
    throw UsageError("conv2d: stride must be positive");
  }
  const std::size_t padded_h = input[2] + 2 * geom.pad;
  const std::size_t padded_w = input[3] + 2 * geom.pad;
  if (weights[2] > padded_h || weights[3] > padded_w) {
    throw ShapeError("conv2d: kernel " + shape_string(weights) + " larger than padded input " +
                     shape_string(input));
  }
  return {input[0],
          input[1],
          input[2],
          input[3],
          weights[0],
          weights[2],
          weights[3],
          (padded_h - weights[2]) / geom.stride + 1,
          (padded_w - weights[3]) / geom.stride + 1,
          geom.stride,
          geom.pad};
}

// col[(c*kh + i)*kw + j, oy*ow + ox] = input[c, oy*s + i - pad, ox*s + j - pad]
void im2col(const ConvDims& d, const float* image, float* col) {
  for (std::size_t c = 0; c < d.cin; ++c) {
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        float* row = col + ((c * d.kh + i) * d.kw + j) * d.positions();
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * d.stride + i) - static_cast<std::ptrdiff_t>(d.pad);
          float* out = row + oy * d.ow;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(out, out + d.ow, 0.0F);
            continue;
          }
          const float* src = image + (c * d.h + static_cast<std::size_t>(y)) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * d.stride + j) - static_cast<std::ptrdiff_t>(d.pad);
            out[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(d.w)) ? 0.0F : src[x];
          }
        }
      }
    }
  }
}

// Transposed layout: rows[oy*ow + ox, (c*kh + i)*kw + j]
void im2row(const ConvDims& d, const float* image, float* rows) {
  const std::size_t patch = d.patch();
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      float* out = rows + (oy * d.ow + ox) * patch;
      for (std::size_t c = 0; c < d.cin; ++c) {
        for (std::size_t i = 0; i < d.kh; ++i) {
          const auto y = static_cast<std::ptrdiff_t>(oy * d.stride + i) - static_cast<std::ptrdiff_t>(d.pad);
          for (std::size_t j = 0; j < d.kw; ++j) {
            const auto x = static_cast<std::ptrdiff_t>(ox * d.stride + j) - static_cast<std::ptrdiff_t>(d.pad);
            const bool inside = y >= 0 && y < static_cast<std::ptrdiff_t>(d.h) && x >= 0 &&
                                x < static_cast<std::ptrdiff_t>(d.w);
            *out++ = inside ? image[(c * d.h + static_cast<std::size_t>(y)) * d.w + static_cast<std::size_t>(x)]
                            : 0.0F;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvDims& d, const float* col, float* image) {
  for (std::size_t c = 0; c < d.cin; ++c) {
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        const float* row = col + ((c * d.kh + i) * d.kw + j) * d.positions();
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * d.stride + i) - static_cast<std::ptrdiff_t>(d.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.h)) {
            continue;
          }
          float* dst = image + (c * d.h + static_cast<std::size_t>(y)) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * d.stride + j) - static_cast<std::ptrdiff_t>(d.pad);
            if (x >= 0 && x < static_cast<std::ptrdiff_t>(d.w)) {
              dst[x] += row[oy * d.ow + ox];
            }
          }
        }
      }
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_cached(const Tensor& input, const char* what) {
  if (input.empty()) {
    throw UsageError(std::string(what) + ": no cached forward input; run forward first");
  }
}

}  // namespace

Shape conv2d_output_shape(const Shape& input, const Shape& weights, ConvGeometry geom) {
  const auto d = conv_dims(input, weights, geom);
  return {d.n, d.cout, d.oh, d.ow};
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, ConvGeometry geom) {
  const auto d = conv_dims(input.shape(), weights.shape(), geom);
  require_shape(bias, {d.cout}, "conv2d bias");
  Tensor out({d.n, d.cout, d.oh, d.ow});

  const std::size_t in_stride = d.cin * d.h * d.w;
  const std::size_t out_stride = d.cout * d.positions();
  const auto batch = static_cast<std::ptrdiff_t>(d.n);

#pragma omp parallel
  {
    std::vector<float> col(d.pointwise() ? 0 : d.patch() * d.positions());
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const float* image = input.raw() + static_cast<std::size_t>(n) * in_stride;
      float* dst = out.raw() + static_cast<std::size_t>(n) * out_stride;
      const float* patches = image;
      if (!d.pointwise()) {
        im2col(d, image, col.data());
        patches = col.data();
      }
      for (std::size_t o = 0; o < d.cout; ++o) {
        std::fill(dst + o * d.positions(), dst + (o + 1) * d.positions(), bias[o]);
      }
      detail::gemm_nn(d.cout, d.positions(), d.patch(), weights.raw(), patches, dst, true);
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                            ConvGeometry geom) {
  require_cached(input, "conv2d_backward");
  const auto d = conv_dims(input.shape(), weights.shape(), geom);
  require_shape(grad_out, {d.n, d.cout, d.oh, d.ow}, "conv2d_backward grad_out");

  Conv2dGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({d.cout})};
  const std::size_t in_stride = d.cin * d.h * d.w;
  const std::size_t out_stride = d.cout * d.positions();
  const std::size_t wsize = weights.size();

  std::vector<float> partial_w(kReduceWave * wsize);
  std::vector<float> partial_b(kReduceWave * d.cout);

  for (std::size_t wave = 0; wave < d.n; wave += kReduceWave) {
    const std::size_t count = std::min(kReduceWave, d.n - wave);
    const auto count_i = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel
    {
      std::vector<float> rows(d.patch() * d.positions());
      std::vector<float> col(d.patch() * d.positions());
#pragma omp for schedule(static)
      for (std::ptrdiff_t slot = 0; slot < count_i; ++slot) {
        const std::size_t n = wave + static_cast<std::size_t>(slot);
        const float* image = input.raw() + n * in_stride;
        const float* g = grad_out.raw() + n * out_stride;
        float* pw = partial_w.data() + static_cast<std::size_t>(slot) * wsize;
        float* pb = partial_b.data() + static_cast<std::size_t>(slot) * d.cout;

        im2row(d, image, rows.data());
        detail::gemm_nn(d.cout, d.patch(), d.positions(), g, rows.data(), pw, false);
        for (std::size_t o = 0; o < d.cout; ++o) {
          float acc = 0.0F;
          for (std::size_t p = 0; p < d.positions(); ++p) {
            acc += g[o * d.positions() + p];
          }
          pb[o] = acc;
        }

        detail::gemm_tn(d.patch(), d.positions(), d.cout, weights.raw(), g, col.data(), false);
        col2im_add(d, col.data(), grads.input.raw() + n * in_stride);
      }
    }
    const auto wsize_i = static_cast<std::ptrdiff_t>(wsize);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < wsize_i; ++i) {
      float acc = grads.weights[static_cast<std::size_t>(i)];
      for (std::size_t slot = 0; slot < count; ++slot) {
        acc += partial_w[slot * wsize + static_cast<std::size_t>(i)];
      }
      grads.weights[static_cast<std::size_t>(i)] = acc;
    }
    for (std::size_t o = 0; o < d.cout; ++o) {
      float acc = grads.bias[o];
      for (std::size_t slot = 0; slot < count; ++slot) {
        acc += partial_b[slot * d.cout + o];
      }
      grads.bias[o] = acc;
    }
  }
  return grads;
}

Shape maxpool_output_shape(const Shape& input, PoolGeometry geom) {
  if (input.size() != 4) {
    throw ShapeError("maxpool: expected rank-4 input, got " + shape_string(input));
  }
  if (geom.window == 0 || geom.stride == 0) {
    throw UsageError("maxpool: window and stride must be positive");
  }
  if (geom.window > input[2] || geom.window > input[3]) {
    throw ShapeError("maxpool: window " + std::to_string(geom.window) + " exceeds spatial extent of " +
                     shape_string(input));
  }
  return {input[0], input[1], (input[2] - geom.window) / geom.stride + 1,
          (input[3] - geom.window) / geom.stride + 1};
}

MaxPoolResult maxpool_forward(const Tensor& input, PoolGeometry geom) {
  const Shape out_shape = maxpool_output_shape(input.shape(), geom);
  if (input.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("maxpool: input too large for 32-bit argmax indices");
  }
  MaxPoolResult result{Tensor(out_shape), std::vector<std::uint32_t>(shape_volume(out_shape))};
  const std::size_t h = input.dim(2);
  const std::size_t w = input.dim(3);
  const std::size_t oh = out_shape[2];
  const std::size_t ow = out_shape[3];
  const auto planes = static_cast<std::ptrdiff_t>(out_shape[0] * out_shape[1]);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t plane = 0; plane < planes; ++plane) {
    const std::size_t in_base = static_cast<std::size_t>(plane) * h * w;
    const std::size_t out_base = static_cast<std::size_t>(plane) * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = in_base + (oy * geom.stride) * w + ox * geom.stride;
        float best_value = input[best];
        for (std::size_t i = 0; i < geom.window; ++i) {
          for (std::size_t j = 0; j < geom.window; ++j) {
            const std::size_t idx = in_base + (oy * geom.stride + i) * w + ox * geom.stride + j;
            if (input[idx] > best_value) {
              best_value = input[idx];
              best = idx;
            }
          }
        }
        result.output[out_base + oy * ow + ox] = best_value;
        result.argmax[out_base + oy * ow + ox] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, const Shape& input_shape) {
  if (grad_out.size() != argmax.size() || input_shape.size() != 4 || grad_out.rank() != 4 ||
      grad_out.dim(0) != input_shape[0] || grad_out.dim(1) != input_shape[1]) {
    throw ShapeError("maxpool_backward: grad " + shape_string(grad_out.shape()) +
                     " does not match recorded forward of " + shape_string(input_shape));
  }
  Tensor grad_in(input_shape);
  const std::size_t per_sample = grad_out.size() / grad_out.dim(0);
  const auto batch = static_cast<std::ptrdiff_t>(grad_out.dim(0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < batch; ++n) {
    const std::size_t begin = static_cast<std::size_t>(n) * per_sample;
    for (std::size_t i = begin; i < begin + per_sample; ++i) {
      grad_in[argmax[i]] += grad_out[i];
    }
  }
  return grad_in;
}

namespace {

// scale[c] = k + alpha * sum_{j in window(c)} a[j]^2 for one sample, all planes.
void lrn_scale(const LrnParams& p, std::size_t channels, std::size_t plane, const float* a, float* scale) {
  std::vector<float> squares(channels * plane);
  for (std::size_t i = 0; i < channels * plane; ++i) {
    squares[i] = a[i] * a[i];
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const std::size_t lo = c >= p.depth_radius ? c - p.depth_radius : 0;
    const std::size_t hi = std::min(channels - 1, c + p.depth_radius);
    float* s = scale + c * plane;
    std::fill(s, s + plane, 0.0F);
    for (std::size_t j = lo; j <= hi; ++j) {
      const float* sq = squares.data() + j * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        s[i] += sq[i];
      }
    }
    for (std::size_t i = 0; i < plane; ++i) {
      s[i] = p.k + p.alpha * s[i];
    }
  }
}

void check_lrn(const Tensor& input, const LrnParams& p) {
  require_rank(input, 4, "lrn input");
  if (!(p.alpha >= 0.0F) || !(p.beta > 0.0F) || !(p.k > 0.0F)) {
    throw UsageError("lrn: alpha must be >= 0 and beta, k positive");
  }
}

}  // namespace

Tensor lrn_forward(const Tensor& input, const LrnParams& params) {
  check_lrn(input, params);
  const std::size_t channels = input.dim(1);
  const std::size_t plane = input.dim(2) * input.dim(3);
  const std::size_t per_sample = channels * plane;
  Tensor out(input.shape());
  const auto batch = static_cast<std::ptrdiff_t>(input.dim(0));
#pragma omp parallel
  {
    std::vector<float> scale(per_sample);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const float* a = input.raw() + static_cast<std::size_t>(n) * per_sample;
      float* b = out.raw() + static_cast<std::size_t>(n) * per_sample;
      lrn_scale(params, channels, plane, a, scale.data());
      for (std::size_t i = 0; i < per_sample; ++i) {
        b[i] = a[i] * std::pow(scale[i], -params.beta);
      }
    }
  }
  return out;
}

// db_i/da_m = [i == m] s_i^-beta - 2 alpha beta a_i a_m s_i^(-beta-1) for m in window(i).
// Windows are symmetric, so the second term for input m sums over window(m).
Tensor lrn_backward(const Tensor& grad_out, const Tensor& input, const LrnParams& params) {
  require_cached(input, "lrn_backward");
  check_lrn(input, params);
  require_same_shape(grad_out, input, "lrn_backward");
  const std::size_t channels = input.dim(1);
  const std::size_t plane = input.dim(2) * input.dim(3);
  const std::size_t per_sample = channels * plane;
  Tensor grad_in(input.shape());
  const auto batch = static_cast<std::ptrdiff_t>(input.dim(0));
#pragma omp parallel
  {
    std::vector<float> scale(per_sample);
    std::vector<float> ratio(per_sample);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * per_sample;
      const float* a = input.raw() + base;
      const float* g = grad_out.raw() + base;
      float* out = grad_in.raw() + base;
      lrn_scale(params, channels, plane, a, scale.data());
      for (std::size_t i = 0; i < per_sample; ++i) {
        ratio[i] = g[i] * a[i] * std::pow(scale[i], -params.beta - 1.0F);
      }
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t lo = c >= params.depth_radius ? c - params.depth_radius : 0;
        const std::size_t hi = std::min(channels - 1, c + params.depth_radius);
        for (std::size_t i = 0; i < plane; ++i) {
          float acc = 0.0F;
          for (std::size_t j = lo; j <= hi; ++j) {
            acc += ratio[j * plane + i];
          }
          const std::size_t idx = c * plane + i;
          out[idx] = g[idx] * std::pow(scale[idx], -params.beta) - 2.0F * params.alpha * params.beta * a[idx] * acc;
        }
      }
    }
  }
  return grad_in;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0F ? input[i] : 0.0F;
  }
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
  require_cached(input, "relu_backward");
  require_same_shape(grad_out, input, "relu_backward");
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0F ? grad_out[i] : 0.0F;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] + b[i];
  }
  return out;
}

Tensor scale(const Tensor& a, float factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] * factor;
  }
  return out;
}

Tensor gaussian_noise(const Tensor& input, float sigma, Rng& rng) {
  if (sigma < 0.0F) {
    throw UsageError("gaussian_noise: sigma must be >= 0");
  }
  Tensor out = input;
  if (sigma == 0.0F) {
    return out;
  }
  std::normal_distribution<float> noise(0.0F, sigma);
  for (auto& v : out.data()) {
    v += noise(rng);
  }
  return out;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 2, "linear input");
  require_rank(weights, 2, "linear weights");
  if (input.dim(1) != weights.dim(0)) {
    throw ShapeError("linear: input " + shape_string(input.shape()) + " does not match weights " +
                     shape_string(weights.shape()));
  }
  const std::size_t rows = input.dim(0);
  const std::size_t in_features = weights.dim(0);
  const std::size_t out_features = weights.dim(1);
  require_shape(bias, {out_features}, "linear bias");
  Tensor out({rows, out_features});
  const auto rows_i = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows_i; ++r) {
    float* dst = out.raw() + static_cast<std::size_t>(r) * out_features;
    std::copy(bias.raw(), bias.raw() + out_features, dst);
    detail::gemm_nn(1, out_features, in_features, input.raw() + static_cast<std::size_t>(r) * in_features,
                    weights.raw(), dst, true);
  }
  return out;
}

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights) {
  require_cached(input, "linear_backward");
  require_rank(input, 2, "linear input");
  const std::size_t rows = input.dim(0);
  const std::size_t in_features = weights.dim(0);
  const std::size_t out_features = weights.dim(1);
  require_shape(grad_out, {rows, out_features}, "linear_backward grad_out");
  if (input.dim(1) != in_features) {
    throw ShapeError("linear_backward: input " + shape_string(input.shape()) + " does not match weights " +
                     shape_string(weights.shape()));
  }
  LinearGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({out_features})};

  // grad_input[r, d] = sum_m grad_out[r, m] * weights[d, m]
  const auto rows_i = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows_i; ++r) {
    const float* g = grad_out.raw() + static_cast<std::size_t>(r) * out_features;
    float* dst = grads.input.raw() + static_cast<std::size_t>(r) * in_features;
    for (std::size_t d = 0; d < in_features; ++d) {
      const float* wrow = weights.raw() + d * out_features;
      float acc = 0.0F;
      for (std::size_t m = 0; m < out_features; ++m) {
        acc += g[m] * wrow[m];
      }
      dst[d] = acc;
    }
  }

  // grad_weights[d, m] = sum_r input[r, d] * grad_out[r, m], rows folded in order.
  const auto in_i = static_cast<std::ptrdiff_t>(in_features);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < in_i; ++d) {
    float* dst = grads.weights.raw() + static_cast<std::size_t>(d) * out_features;
    for (std::size_t r = 0; r < rows; ++r) {
      const float x = input[r * in_features + static_cast<std::size_t>(d)];
      const float* g = grad_out.raw() + r * out_features;
      for (std::size_t m = 0; m < out_features; ++m) {
        dst[m] += x * g[m];
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t m = 0; m < out_features; ++m) {
      grads.bias[m] += grad_out[r * out_features + m];
    }
  }
  return grads;
}

}  // namespace orient::kernels
