#include "orient/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace orient {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::lrn: return "lrn";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::dropout: return "dropout";
    case LayerKind::softmax_xent: return "softmax_xent";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::conv, LayerKind::relu, LayerKind::maxpool, LayerKind::lrn,
                    LayerKind::fully_connected, LayerKind::dropout, LayerKind::softmax_xent}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  throw DataError("unknown layer kind '" + std::string(name) + "'");
}

ConvLayer::ConvLayer(std::string name, Tensor weights, Tensor bias, kernels::ConvGeometry geom)
    : Layer(LayerKind::conv, std::move(name)), geom_(geom) {
  require_rank(weights, 4, "conv weights");
  require_shape(bias, {weights.dim(0)}, "conv bias");
  params_.push_back({"weights", std::move(weights), {}, {}});
  params_.push_back({"bias", std::move(bias), {}, {}});
}

Tensor ConvLayer::forward(const Tensor& input, Mode /*mode*/, Rng& /*rng*/) {
  input_ = input;
  return infer(input);
}

Tensor ConvLayer::infer(const Tensor& input) const {
  return kernels::conv2d_forward(input, params_[0].value, params_[1].value, geom_);
}

Tensor ConvLayer::backward(const Tensor& grad_out) {
  auto grads = kernels::conv2d_backward(grad_out, input_, params_[0].value, geom_);
  params_[0].grad = std::move(grads.weights);
  params_[1].grad = std::move(grads.bias);
  return std::move(grads.input);
}

Tensor ReluLayer::forward(const Tensor& input, Mode /*mode*/, Rng& /*rng*/) {
  input_ = input;
  return kernels::relu_forward(input);
}

Tensor ReluLayer::infer(const Tensor& input) const { return kernels::relu_forward(input); }

Tensor ReluLayer::backward(const Tensor& grad_out) { return kernels::relu_backward(grad_out, input_); }

Tensor MaxPoolLayer::forward(const Tensor& input, Mode /*mode*/, Rng& /*rng*/) {
  auto result = kernels::maxpool_forward(input, geom_);
  input_shape_ = input.shape();
  argmax_ = std::move(result.argmax);
  return std::move(result.output);
}

Tensor MaxPoolLayer::infer(const Tensor& input) const { return kernels::maxpool_forward(input, geom_).output; }

Tensor MaxPoolLayer::backward(const Tensor& grad_out) {
  if (input_shape_.empty()) {
    throw UsageError("maxpool backward called before forward");
  }
  return kernels::maxpool_backward(grad_out, argmax_, input_shape_);
}

Tensor LrnLayer::forward(const Tensor& input, Mode /*mode*/, Rng& /*rng*/) {
  input_ = input;
  return kernels::lrn_forward(input, params_);
}

Tensor LrnLayer::infer(const Tensor& input) const { return kernels::lrn_forward(input, params_); }

Tensor LrnLayer::backward(const Tensor& grad_out) { return kernels::lrn_backward(grad_out, input_, params_); }

FullyConnectedLayer::FullyConnectedLayer(std::string name, Tensor weights, Tensor bias)
    : Layer(LayerKind::fully_connected, std::move(name)) {
  require_rank(weights, 2, "fully_connected weights");
  require_shape(bias, {weights.dim(1)}, "fully_connected bias");
  params_.push_back({"weights", std::move(weights), {}, {}});
  params_.push_back({"bias", std::move(bias), {}, {}});
}

namespace {

Tensor flatten(const Tensor& input) {
  if (input.rank() == 2) {
    return input;
  }
  const std::size_t batch = input.dim(0);
  return input.reshaped({batch, input.size() / batch});
}

}  // namespace

Tensor FullyConnectedLayer::forward(const Tensor& input, Mode /*mode*/, Rng& /*rng*/) {
  input_shape_ = input.shape();
  input_ = flatten(input);
  return kernels::linear_forward(input_, params_[0].value, params_[1].value);
}

Tensor FullyConnectedLayer::infer(const Tensor& input) const {
  return kernels::linear_forward(flatten(input), params_[0].value, params_[1].value);
}

Tensor FullyConnectedLayer::backward(const Tensor& grad_out) {
  auto grads = kernels::linear_backward(grad_out, input_, params_[0].value);
  params_[0].grad = std::move(grads.weights);
  params_[1].grad = std::move(grads.bias);
  return std::move(grads.input).reshaped(input_shape_);
}

DropoutLayer::DropoutLayer(std::string name, float rate) : Layer(LayerKind::dropout, std::move(name)), rate_(rate) {
  if (!(rate >= 0.0F && rate < 1.0F)) {
    throw UsageError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
}

Tensor DropoutLayer::forward(const Tensor& input, Mode mode, Rng& rng) {
  auto result = dropout_forward(input, rate_, mode, rng);
  mask_ = std::move(result.mask);
  return std::move(result.output);
}

Tensor DropoutLayer::backward(const Tensor& grad_out) {
  if (mask_.empty()) {
    return grad_out;
  }
  if (grad_out.shape() != mask_.shape()) {
    throw ShapeError("dropout backward: grad " + shape_string(grad_out.shape()) + " vs mask " +
                     shape_string(mask_.shape()));
  }
  Tensor out(grad_out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = grad_out[i] * mask_[i];
  }
  return out;
}

DropoutResult dropout_forward(const Tensor& input, float rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0F && rate < 1.0F)) {
    throw UsageError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::eval || rate == 0.0F) {
    return {input, Tensor{}};
  }
  const float keep_scale = 1.0F / (1.0F - rate);
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  DropoutResult result{Tensor(input.shape()), Tensor(input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) {
    const float m = keep(rng) ? keep_scale : 0.0F;
    result.mask[i] = m;
    result.output[i] = input[i] * m;
  }
  return result;
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax logits");
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.raw() + r * cols;
    float peak = z[0];
    for (std::size_t j = 0; j < cols; ++j) {
      if (std::isnan(z[j])) {
        throw NumericError("softmax: NaN logit in row " + std::to_string(r));
      }
      peak = std::max(peak, z[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      total += std::exp(static_cast<double>(z[j]) - peak);
    }
    for (std::size_t j = 0; j < cols; ++j) {
      out[r * cols + j] = static_cast<float>(std::exp(static_cast<double>(z[j]) - peak) / total);
    }
  }
  return out;
}

LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy logits");
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  if (labels.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                     " rows of logits");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= cols) {
      throw DataError("cross_entropy: label " + std::to_string(labels[r]) + " of sample " + std::to_string(r) +
                      " outside [0, " + std::to_string(cols) + ")");
    }
  }
  LossResult result{0.0, Tensor(logits.shape())};
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.raw() + r * cols;
    double peak = z[0];
    for (std::size_t j = 0; j < cols; ++j) {
      if (std::isnan(z[j])) {
        throw NumericError("cross_entropy: NaN logit in row " + std::to_string(r));
      }
      peak = std::max(peak, static_cast<double>(z[j]));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      total += std::exp(z[j] - peak);
    }
    const double log_total = std::log(total) + peak;
    const auto label = static_cast<std::size_t>(labels[r]);
    result.loss += (log_total - z[label]) * inv_rows;
    for (std::size_t j = 0; j < cols; ++j) {
      const double p = std::exp(z[j] - log_total);
      result.grad[r * cols + j] = static_cast<float>((p - (j == label ? 1.0 : 0.0)) * inv_rows);
    }
  }
  return result;
}

}  // namespace orient
