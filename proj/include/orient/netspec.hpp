#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "orient/layers.hpp"

namespace orient {

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;

  // conv
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  // maxpool (uses stride above)
  std::size_t window = 0;
  // lrn
  kernels::LrnParams lrn{};
  // fully_connected
  std::size_t out_features = 0;
  // dropout
  float dropout_rate = 0.0F;

  bool frozen = false;
  float lr_multiplier = 1.0F;

  [[nodiscard]] bool has_parameters() const {
    return kind == LayerKind::conv || kind == LayerKind::fully_connected;
  }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::string name;
  std::array<std::size_t, 3> input_shape{3, 64, 64};  // channels, height, width
  std::size_t class_count = kClassCount;
  std::vector<LayerSpec> layers;

  [[nodiscard]] std::size_t input_side() const { return input_shape[1]; }
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Per-sample output shape of every layer (no batch axis). Throws ShapeError
/// naming the first layer that does not compose with its predecessor, or when
/// the network does not end in class_count outputs followed by softmax_xent.
std::vector<Shape> layer_output_shapes(const NetworkSpec& spec);

/// Index of the last conv layer that precedes every fully connected layer.
std::size_t last_conv_index(const NetworkSpec& spec);

struct PaperNetOptions {
  /// Drop fc7 and shrink fc6 to 1024 units (a reported, not adopted, variant).
  bool compact_fc = false;
};

/// Five conv layers (AlexNet hyperparameters, single group), LRN after conv1
/// and conv2, max-pool after conv1, conv2, conv5, fc6/fc7 of 4096 with
/// dropout 0.5, and a 4-way fc8. conv1-conv3 frozen; 256x256x3 input.
NetworkSpec build_paper_net(PaperNetOptions options = {});

struct DeskNetOptions {
  std::size_t input_side = 64;
  std::vector<std::size_t> widths{16, 32, 64};
  std::size_t fc_width = 128;
  /// Leading conv layers that stay frozen during fine-tuning.
  std::size_t frozen_convs = 1;
};

/// Reduced-width network with the same layer ordering as build_paper_net().
NetworkSpec build_desk_net(const DeskNetOptions& options = {});

std::string to_json(const NetworkSpec& spec, int indent = 2);
NetworkSpec network_spec_from_json(const std::string& text);

struct LayerParameters {
  std::string layer;
  Tensor weights;
  Tensor bias;
  friend bool operator==(const LayerParameters&, const LayerParameters&) = default;
};

/// One entry per parametric layer, in spec order.
using ParameterSet = std::vector<LayerParameters>;

/// Shapes every parametric layer expects.
ParameterSet expected_parameter_shapes(const NetworkSpec& spec);

/// weights ~ N(0, std^2), biases exactly 0.
ParameterSet init_weights(const NetworkSpec& spec, Rng& rng, float std);

std::size_t parameter_count(const ParameterSet& params);

/// Owns a layer stack built from a spec. The trailing softmax_xent entry of
/// the NetworkSpec is the loss head; forward() returns the logits that feed it.
class Network {
 public:
  Network(NetworkSpec spec, ParameterSet params);

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  [[nodiscard]] const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Layer* find_layer(const std::string& name);

  /// Training-path forward. When `outputs` is given it receives every
  /// layer's output, index-aligned with the layer stack.
  Tensor forward(const Tensor& batch, Mode mode, Rng& rng, std::vector<Tensor>* outputs = nullptr);

  /// Backpropagates d loss / d logits through layers [down_to, end) and
  /// returns the gradient w.r.t. the input of layer `down_to`.
  Tensor backward(const Tensor& grad_logits, std::size_t down_to = 0);

  /// Eval-mode forward without touching cached state.
  [[nodiscard]] Tensor infer(const Tensor& batch) const;

  /// Index of the lowest layer that has trainable parameters (layer_count()
  /// when everything is frozen).
  [[nodiscard]] std::size_t first_trainable_layer() const;

  [[nodiscard]] ParameterSet parameters() const;
  void set_parameters(const ParameterSet& params);

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---- checkpoints ----------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::uint64_t epoch = 0;
  std::uint64_t seed = 0;
  std::array<float, 3> mean_rgb{0.0F, 0.0F, 0.0F};
  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  NetworkSpec spec;
  ParameterSet params;
  TrainingMetadata meta;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};
class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class UnsupportedVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class TruncatedCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// Parameters or trunk layers that do not fit the target spec.
class CheckpointMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Layout: "ORNT", u32 version, u32 length + JSON {network, metadata},
/// u32 tensor count, then per tensor u32 rank, u32 dims, f32 values.
/// All integers and floats little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Network make_network(const Checkpoint& checkpoint);

}  // namespace orient
