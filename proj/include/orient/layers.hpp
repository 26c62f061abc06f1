#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orient/kernels.hpp"
#include "orient/rng.hpp"
#include "orient/tensor.hpp"

namespace orient {

inline constexpr std::size_t kClassCount = 4;

enum class LayerKind { conv, relu, maxpool, lrn, fully_connected, dropout, softmax_xent };
enum class Mode { train, eval };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/// A trainable tensor with its gradient and momentum buffer. `grad` and
/// `velocity` stay empty until the first backward pass / optimizer step.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;
};

class Layer {
 public:
  Layer(LayerKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  [[nodiscard]] LayerKind kind() const { return kind_; }
  [[nodiscard]] const std::string& name() const { return name_; }

  /// Training-path forward; caches what backward needs.
  virtual Tensor forward(const Tensor& input, Mode mode, Rng& rng) = 0;
  /// Gradient w.r.t. this layer's input; fills parameter grads.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  /// Eval-mode forward with no cached state; safe to call concurrently.
  [[nodiscard]] virtual Tensor infer(const Tensor& input) const = 0;

  virtual std::span<Parameter> parameters() { return {}; }
  [[nodiscard]] virtual std::span<const Parameter> parameters() const { return {}; }

  float lr_multiplier = 1.0F;
  bool frozen = false;

 private:
  LayerKind kind_;
  std::string name_;
};

class ConvLayer final : public Layer {
 public:
  ConvLayer(std::string name, Tensor weights, Tensor bias, kernels::ConvGeometry geom);
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override;
  std::span<Parameter> parameters() override { return params_; }
  [[nodiscard]] std::span<const Parameter> parameters() const override { return params_; }
  [[nodiscard]] kernels::ConvGeometry geometry() const { return geom_; }

 private:
  std::vector<Parameter> params_;
  kernels::ConvGeometry geom_;
  Tensor input_;
};

class ReluLayer final : public Layer {
 public:
  explicit ReluLayer(std::string name) : Layer(LayerKind::relu, std::move(name)) {}
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override;

 private:
  Tensor input_;
};

class MaxPoolLayer final : public Layer {
 public:
  MaxPoolLayer(std::string name, kernels::PoolGeometry geom) : Layer(LayerKind::maxpool, std::move(name)), geom_(geom) {}
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override;

 private:
  kernels::PoolGeometry geom_;
  Shape input_shape_;
  std::vector<std::uint32_t> argmax_;
};

class LrnLayer final : public Layer {
 public:
  LrnLayer(std::string name, kernels::LrnParams params) : Layer(LayerKind::lrn, std::move(name)), params_(params) {}
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override;

 private:
  kernels::LrnParams params_;
  Tensor input_;
};

/// Dense layer; inputs of any rank are flattened to (batch, features).
class FullyConnectedLayer final : public Layer {
 public:
  FullyConnectedLayer(std::string name, Tensor weights, Tensor bias);
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override;
  std::span<Parameter> parameters() override { return params_; }
  [[nodiscard]] std::span<const Parameter> parameters() const override { return params_; }

 private:
  std::vector<Parameter> params_;
  Shape input_shape_;
  Tensor input_;
};

class DropoutLayer final : public Layer {
 public:
  DropoutLayer(std::string name, float rate);
  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out) override;
  [[nodiscard]] Tensor infer(const Tensor& input) const override { return input; }
  [[nodiscard]] float rate() const { return rate_; }

 private:
  float rate_;
  Tensor mask_;
};

// ---- functional forms --------------------------------------------------

inline Tensor fully_connected_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  return kernels::linear_forward(input, weights, bias);
}
inline kernels::LinearGrads fully_connected_backward(const Tensor& grad_out, const Tensor& input,
                                                     const Tensor& weights) {
  return kernels::linear_backward(grad_out, input, weights);
}

struct DropoutResult {
  Tensor output;
  /// Per-unit multiplier applied to the input: 0 or 1/(1-rate).
  Tensor mask;
};

/// Inverted dropout. Eval mode and rate 0 return the input unchanged.
DropoutResult dropout_forward(const Tensor& input, float rate, Mode mode, Rng& rng);

/// Row-wise softmax with max subtraction. Throws NumericError on NaN input.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d(mean loss)/d logits
};

/// Batch-mean cross-entropy of softmax(logits) against integer labels.
LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

}  // namespace orient
