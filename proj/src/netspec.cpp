#include "orient/netspec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <json.hpp>

namespace orient {

using nlohmann::json;

namespace {

LayerSpec conv(std::string name, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.name = std::move(name);
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec simple(LayerKind kind, std::string name) {
  LayerSpec s;
  s.kind = kind;
  s.name = std::move(name);
  return s;
}

LayerSpec pool(std::string name, std::size_t window, std::size_t stride) {
  LayerSpec s = simple(LayerKind::maxpool, std::move(name));
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec fc(std::string name, std::size_t out) {
  LayerSpec s = simple(LayerKind::fully_connected, std::move(name));
  s.out_features = out;
  return s;
}

LayerSpec dropout(std::string name, float rate) {
  LayerSpec s = simple(LayerKind::dropout, std::move(name));
  s.dropout_rate = rate;
  return s;
}

[[noreturn]] void compose_error(const LayerSpec& layer, const Shape& in, const std::string& why) {
  throw ShapeError("layer '" + layer.name + "' (" + std::string(to_string(layer.kind)) + ") cannot take input " +
                   shape_string(in) + ": " + why);
}

}  // namespace

std::vector<Shape> layer_output_shapes(const NetworkSpec& spec) {
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::softmax_xent) {
    throw ShapeError("network '" + spec.name + "' must end with a softmax_xent head");
  }
  Shape current{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
  if (shape_volume(current) == 0) {
    throw ShapeError("network input shape has a zero extent");
  }
  std::vector<Shape> shapes;
  bool seen_fc = false;
  for (const auto& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::conv: {
        if (current.size() != 3) {
          compose_error(layer, current, "conv needs a (channels, height, width) input");
        }
        if (seen_fc) {
          compose_error(layer, current, "conv after a fully connected layer");
        }
        if (layer.out_channels == 0 || layer.kernel == 0 || layer.stride == 0) {
          compose_error(layer, current, "out_channels, kernel and stride must be positive");
        }
        if (layer.kernel > current[1] + 2 * layer.pad || layer.kernel > current[2] + 2 * layer.pad) {
          compose_error(layer, current, "kernel larger than padded input");
        }
        current = {layer.out_channels, (current[1] + 2 * layer.pad - layer.kernel) / layer.stride + 1,
                   (current[2] + 2 * layer.pad - layer.kernel) / layer.stride + 1};
        break;
      }
      case LayerKind::maxpool: {
        if (current.size() != 3) {
          compose_error(layer, current, "maxpool needs a spatial input");
        }
        if (layer.window == 0 || layer.stride == 0) {
          compose_error(layer, current, "window and stride must be positive");
        }
        if (layer.window > current[1] || layer.window > current[2]) {
          compose_error(layer, current, "pooling window exceeds spatial extent");
        }
        current = {current[0], (current[1] - layer.window) / layer.stride + 1,
                   (current[2] - layer.window) / layer.stride + 1};
        break;
      }
      case LayerKind::lrn:
        if (current.size() != 3) {
          compose_error(layer, current, "lrn needs a spatial input");
        }
        break;
      case LayerKind::relu:
        break;
      case LayerKind::dropout:
        if (!(layer.dropout_rate >= 0.0F && layer.dropout_rate < 1.0F)) {
          compose_error(layer, current, "dropout rate outside [0, 1)");
        }
        break;
      case LayerKind::fully_connected:
        if (layer.out_features == 0) {
          compose_error(layer, current, "out_features must be positive");
        }
        seen_fc = true;
        current = {layer.out_features};
        break;
      case LayerKind::softmax_xent:
        if (&layer != &spec.layers.back()) {
          compose_error(layer, current, "softmax_xent must be the last layer");
        }
        if (current.size() != 1 || current[0] != spec.class_count) {
          compose_error(layer, current, "expected " + std::to_string(spec.class_count) + " class scores");
        }
        break;
    }
    shapes.push_back(current);
  }
  return shapes;
}

std::size_t last_conv_index(const NetworkSpec& spec) {
  std::size_t found = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::fully_connected) {
      break;
    }
    if (spec.layers[i].kind == LayerKind::conv) {
      found = i;
    }
  }
  if (found == spec.layers.size()) {
    throw ShapeError("network '" + spec.name + "' has no conv layer before its fully connected layers");
  }
  return found;
}

NetworkSpec build_paper_net(PaperNetOptions options) {
  NetworkSpec spec;
  spec.name = options.compact_fc ? "paper-compact-fc" : "paper";
  spec.input_shape = {3, 256, 256};
  auto& l = spec.layers;
  l.push_back(conv("conv1", 96, 11, 4, 0));
  l.push_back(simple(LayerKind::relu, "relu1"));
  l.push_back(simple(LayerKind::lrn, "norm1"));
  l.push_back(pool("pool1", 3, 2));
  l.push_back(conv("conv2", 256, 5, 1, 2));
  l.push_back(simple(LayerKind::relu, "relu2"));
  l.push_back(simple(LayerKind::lrn, "norm2"));
  l.push_back(pool("pool2", 3, 2));
  l.push_back(conv("conv3", 384, 3, 1, 1));
  l.push_back(simple(LayerKind::relu, "relu3"));
  l.push_back(conv("conv4", 384, 3, 1, 1));
  l.push_back(simple(LayerKind::relu, "relu4"));
  l.push_back(conv("conv5", 256, 3, 1, 1));
  l.push_back(simple(LayerKind::relu, "relu5"));
  l.push_back(pool("pool5", 3, 2));
  if (options.compact_fc) {
    l.push_back(fc("fc6", 1024));
    l.push_back(simple(LayerKind::relu, "relu6"));
    l.push_back(dropout("drop6", 0.5F));
  } else {
    l.push_back(fc("fc6", 4096));
    l.push_back(simple(LayerKind::relu, "relu6"));
    l.push_back(dropout("drop6", 0.5F));
    l.push_back(fc("fc7", 4096));
    l.push_back(simple(LayerKind::relu, "relu7"));
    l.push_back(dropout("drop7", 0.5F));
  }
  l.push_back(fc("fc8", kClassCount));
  l.push_back(simple(LayerKind::softmax_xent, "loss"));

  // conv1-3 stay intact; conv4/5 fine-tune at the global rate; the freshly
  // initialized fc layers run at 20x, i.e. 0.01 against the 5e-4 global rate.
  for (auto& layer : l) {
    if (layer.name == "conv1" || layer.name == "conv2" || layer.name == "conv3") {
      layer.frozen = true;
    } else if (layer.kind == LayerKind::fully_connected) {
      layer.lr_multiplier = 20.0F;
    }
  }
  layer_output_shapes(spec);
  return spec;
}

NetworkSpec build_desk_net(const DeskNetOptions& options) {
  if (options.input_side < 16) {
    throw ShapeError("desk net input side must be >= 16, got " + std::to_string(options.input_side));
  }
  if (options.widths.empty() || options.fc_width == 0) {
    throw ShapeError("desk net needs at least one conv width and a positive fc width");
  }
  NetworkSpec spec;
  spec.name = "desk";
  spec.input_shape = {3, options.input_side, options.input_side};
  auto& l = spec.layers;
  const std::size_t convs = options.widths.size();
  for (std::size_t i = 0; i < convs; ++i) {
    const std::string idx = std::to_string(i + 1);
    if (i == 0) {
      l.push_back(conv("conv1", options.widths[0], 5, 2, 2));
    } else {
      l.push_back(conv("conv" + idx, options.widths[i], 3, 1, 1));
    }
    l.back().frozen = i < options.frozen_convs;
    l.push_back(simple(LayerKind::relu, "relu" + idx));
    const bool early = i < 2 && i + 1 < convs;
    if (early) {
      l.push_back(simple(LayerKind::lrn, "norm" + idx));
    }
    if (early || i + 1 == convs) {
      l.push_back(pool("pool" + idx, 3, 2));
    }
  }
  l.push_back(fc("fc" + std::to_string(convs + 1), options.fc_width));
  l.push_back(simple(LayerKind::relu, "relu" + std::to_string(convs + 1)));
  l.push_back(dropout("drop" + std::to_string(convs + 1), 0.5F));
  l.push_back(fc("fc_out", kClassCount));
  l.push_back(simple(LayerKind::softmax_xent, "loss"));
  layer_output_shapes(spec);
  return spec;
}

namespace {

json layer_to_json(const LayerSpec& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  j["name"] = s.name;
  switch (s.kind) {
    case LayerKind::conv:
      j["out_channels"] = s.out_channels;
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["pad"] = s.pad;
      break;
    case LayerKind::maxpool:
      j["window"] = s.window;
      j["stride"] = s.stride;
      break;
    case LayerKind::lrn:
      j["depth_radius"] = s.lrn.depth_radius;
      j["alpha"] = s.lrn.alpha;
      j["beta"] = s.lrn.beta;
      j["k"] = s.lrn.k;
      break;
    case LayerKind::fully_connected:
      j["out_features"] = s.out_features;
      break;
    case LayerKind::dropout:
      j["rate"] = s.dropout_rate;
      break;
    default:
      break;
  }
  if (s.has_parameters()) {
    j["frozen"] = s.frozen;
    j["lr_multiplier"] = s.lr_multiplier;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.name = j.at("name").get<std::string>();
  s.out_channels = j.value("out_channels", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.stride = j.value("stride", std::size_t{1});
  s.pad = j.value("pad", std::size_t{0});
  s.window = j.value("window", std::size_t{0});
  s.lrn.depth_radius = j.value("depth_radius", s.lrn.depth_radius);
  s.lrn.alpha = j.value("alpha", s.lrn.alpha);
  s.lrn.beta = j.value("beta", s.lrn.beta);
  s.lrn.k = j.value("k", s.lrn.k);
  s.out_features = j.value("out_features", std::size_t{0});
  s.dropout_rate = j.value("rate", 0.0F);
  s.frozen = j.value("frozen", false);
  s.lr_multiplier = j.value("lr_multiplier", 1.0F);
  return s;
}

json spec_to_json(const NetworkSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["input_shape"] = spec.input_shape;
  j["class_count"] = spec.class_count;
  j["layers"] = json::array();
  for (const auto& layer : spec.layers) {
    j["layers"].push_back(layer_to_json(layer));
  }
  return j;
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.input_shape = j.at("input_shape").get<std::array<std::size_t, 3>>();
  spec.class_count = j.at("class_count").get<std::size_t>();
  for (const auto& layer : j.at("layers")) {
    spec.layers.push_back(layer_from_json(layer));
  }
  return spec;
}

}  // namespace

std::string to_json(const NetworkSpec& spec, int indent) { return spec_to_json(spec).dump(indent); }

NetworkSpec network_spec_from_json(const std::string& text) {
  try {
    auto spec = spec_from_json(json::parse(text));
    layer_output_shapes(spec);
    return spec;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed network spec JSON: ") + e.what());
  }
}

ParameterSet expected_parameter_shapes(const NetworkSpec& spec) {
  const auto shapes = layer_output_shapes(spec);
  ParameterSet params;
  Shape previous{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    if (layer.kind == LayerKind::conv) {
      params.push_back({layer.name, Tensor({layer.out_channels, previous[0], layer.kernel, layer.kernel}),
                        Tensor({layer.out_channels})});
    } else if (layer.kind == LayerKind::fully_connected) {
      params.push_back({layer.name, Tensor({shape_volume(previous), layer.out_features}),
                        Tensor({layer.out_features})});
    }
    previous = shapes[i];
  }
  return params;
}

ParameterSet init_weights(const NetworkSpec& spec, Rng& rng, float std) {
  if (!(std > 0.0F)) {
    throw UsageError("init_weights: std must be positive");
  }
  ParameterSet params = expected_parameter_shapes(spec);
  std::normal_distribution<float> normal(0.0F, std);
  for (auto& p : params) {
    for (auto& v : p.weights.data()) {
      v = normal(rng);
    }
  }
  return params;
}

std::size_t parameter_count(const ParameterSet& params) {
  std::size_t total = 0;
  for (const auto& p : params) {
    total += p.weights.size() + p.bias.size();
  }
  return total;
}

// ---- Network --------------------------------------------------------------

Network::Network(NetworkSpec spec, ParameterSet params) : spec_(std::move(spec)) {
  const auto expected = expected_parameter_shapes(spec_);
  if (params.size() != expected.size()) {
    throw CheckpointMismatchError("network '" + spec_.name + "' needs " + std::to_string(expected.size()) +
                                  " parameter blocks, got " + std::to_string(params.size()));
  }
  std::size_t next = 0;
  for (const auto& s : spec_.layers) {
    std::unique_ptr<Layer> layer;
    switch (s.kind) {
      case LayerKind::conv:
      case LayerKind::fully_connected: {
        auto& p = params[next];
        const auto& e = expected[next];
        ++next;
        if (p.weights.shape() != e.weights.shape() || p.bias.shape() != e.bias.shape()) {
          throw CheckpointMismatchError("layer '" + s.name + "' expects weights " + shape_string(e.weights.shape()) +
                                        " and bias " + shape_string(e.bias.shape()) + ", got " +
                                        shape_string(p.weights.shape()) + " and " + shape_string(p.bias.shape()));
        }
        if (s.kind == LayerKind::conv) {
          layer = std::make_unique<ConvLayer>(s.name, std::move(p.weights), std::move(p.bias),
                                              kernels::ConvGeometry{s.stride, s.pad});
        } else {
          layer = std::make_unique<FullyConnectedLayer>(s.name, std::move(p.weights), std::move(p.bias));
        }
        break;
      }
      case LayerKind::relu: layer = std::make_unique<ReluLayer>(s.name); break;
      case LayerKind::maxpool:
        layer = std::make_unique<MaxPoolLayer>(s.name, kernels::PoolGeometry{s.window, s.stride});
        break;
      case LayerKind::lrn: layer = std::make_unique<LrnLayer>(s.name, s.lrn); break;
      case LayerKind::dropout: layer = std::make_unique<DropoutLayer>(s.name, s.dropout_rate); break;
      case LayerKind::softmax_xent: continue;
    }
    layer->frozen = s.frozen;
    layer->lr_multiplier = s.lr_multiplier;
    layers_.push_back(std::move(layer));
  }
}

Layer* Network::find_layer(const std::string& name) {
  for (auto& layer : layers_) {
    if (layer->name() == name) {
      return layer.get();
    }
  }
  return nullptr;
}

namespace {

void check_batch(const NetworkSpec& spec, const Tensor& batch) {
  if (batch.rank() != 4 || batch.dim(1) != spec.input_shape[0] || batch.dim(2) != spec.input_shape[1] ||
      batch.dim(3) != spec.input_shape[2]) {
    throw DataError("network '" + spec.name + "' expects input (N, " + std::to_string(spec.input_shape[0]) + ", " +
                    std::to_string(spec.input_shape[1]) + ", " + std::to_string(spec.input_shape[2]) + "), got " +
                    shape_string(batch.shape()));
  }
}

}  // namespace

Tensor Network::forward(const Tensor& batch, Mode mode, Rng& rng, std::vector<Tensor>* outputs) {
  check_batch(spec_, batch);
  if (outputs != nullptr) {
    outputs->clear();
  }
  Tensor current = batch;
  for (auto& layer : layers_) {
    current = layer->forward(current, mode, rng);
    if (outputs != nullptr) {
      outputs->push_back(current);
    }
  }
  return current;
}

Tensor Network::backward(const Tensor& grad_logits, std::size_t down_to) {
  Tensor grad = grad_logits;
  for (std::size_t i = layers_.size(); i > down_to; --i) {
    grad = layers_[i - 1]->backward(grad);
  }
  return grad;
}

Tensor Network::infer(const Tensor& batch) const {
  check_batch(spec_, batch);
  Tensor current = batch;
  for (const auto& layer : layers_) {
    current = layer->infer(current);
  }
  return current;
}

std::size_t Network::first_trainable_layer() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i]->parameters().empty() && !layers_[i]->frozen) {
      return i;
    }
  }
  return layers_.size();
}

ParameterSet Network::parameters() const {
  ParameterSet out;
  for (const auto& layer : layers_) {
    const auto params = layer->parameters();
    if (!params.empty()) {
      out.push_back({layer->name(), params[0].value, params[1].value});
    }
  }
  return out;
}

void Network::set_parameters(const ParameterSet& params) {
  std::size_t next = 0;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    if (p.empty()) {
      continue;
    }
    if (next >= params.size() || params[next].weights.shape() != p[0].value.shape() ||
        params[next].bias.shape() != p[1].value.shape()) {
      throw CheckpointMismatchError("parameter block for layer '" + layer->name() + "' missing or misshapen");
    }
    p[0].value = params[next].weights;
    p[1].value = params[next].bias;
    for (auto& param : p) {
      param.grad = Tensor{};
      param.velocity = Tensor{};
    }
    ++next;
  }
}

// ---- checkpoint I/O -------------------------------------------------------

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'O', 'R', 'N', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto extent : t.shape()) {
    put_u32(out, static_cast<std::uint32_t>(extent));
  }
  for (float v : t.data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedCheckpointError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                                     std::to_string(pos_) + " (" + std::to_string(bytes_.size()) + " bytes total)");
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8U) |
           (static_cast<std::uint32_t>(b[2]) << 16U) | (static_cast<std::uint32_t>(b[3]) << 24U);
  }

  Tensor tensor() {
    const std::uint32_t rank = u32("tensor rank");
    if (rank == 0 || rank > 8) {
      throw CheckpointError("checkpoint tensor has invalid rank " + std::to_string(rank));
    }
    Shape shape;
    std::size_t volume = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t extent = u32("tensor shape");
      if (extent == 0) {
        throw CheckpointError("checkpoint tensor has a zero extent");
      }
      shape.push_back(extent);
      volume *= extent;
    }
    if (volume > (bytes_.size() - pos_) / 4) {
      throw TruncatedCheckpointError("checkpoint truncated inside a tensor of shape " + shape_string(shape));
    }
    std::vector<float> values(volume);
    for (auto& v : values) {
      v = std::bit_cast<float>(u32("tensor data"));
    }
    return {std::move(shape), std::move(values)};
  }

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  json header;
  header["network"] = spec_to_json(checkpoint.spec);
  header["metadata"] = {{"epoch", checkpoint.meta.epoch},
                        {"seed", checkpoint.meta.seed},
                        {"mean_rgb", checkpoint.meta.mean_rgb}};
  const std::string block = header.dump();

  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(block.size()));
  out.insert(out.end(), block.begin(), block.end());
  put_u32(out, static_cast<std::uint32_t>(checkpoint.params.size() * 2));
  for (const auto& p : checkpoint.params) {
    put_tensor(out, p.weights);
    put_tensor(out, p.bias);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader reader(bytes);
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw BadMagicError("not a checkpoint: missing ORNT magic bytes");
  }
  reader.take(kMagic.size(), "magic");
  const std::uint32_t version = reader.u32("version");
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint format version " + std::to_string(version) +
                                  " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t block_len = reader.u32("specification length");
  const auto block = reader.take(block_len, "specification block");

  Checkpoint checkpoint;
  try {
    const json header = json::parse(block.begin(), block.end());
    checkpoint.spec = spec_from_json(header.at("network"));
    const auto& meta = header.at("metadata");
    checkpoint.meta.epoch = meta.at("epoch").get<std::uint64_t>();
    checkpoint.meta.seed = meta.at("seed").get<std::uint64_t>();
    checkpoint.meta.mean_rgb = meta.at("mean_rgb").get<std::array<float, 3>>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint specification block is malformed: ") + e.what());
  }

  const auto expected = expected_parameter_shapes(checkpoint.spec);
  const std::uint32_t count = reader.u32("tensor count");
  if (count != expected.size() * 2) {
    throw CheckpointMismatchError("checkpoint holds " + std::to_string(count) + " tensors, spec needs " +
                                  std::to_string(expected.size() * 2));
  }
  for (const auto& e : expected) {
    LayerParameters p{e.layer, reader.tensor(), reader.tensor()};
    if (p.weights.shape() != e.weights.shape() || p.bias.shape() != e.bias.shape()) {
      throw CheckpointMismatchError("checkpoint tensors for layer '" + e.layer + "' have shapes " +
                                    shape_string(p.weights.shape()) + " / " + shape_string(p.bias.shape()) +
                                    ", spec expects " + shape_string(e.weights.shape()) + " / " +
                                    shape_string(e.bias.shape()));
    }
    checkpoint.params.push_back(std::move(p));
  }
  if (!reader.done()) {
    throw CheckpointError("checkpoint has trailing bytes after the last tensor");
  }
  return checkpoint;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError("failed writing checkpoint '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open checkpoint '" + path.string() + "'");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Network make_network(const Checkpoint& checkpoint) { return {checkpoint.spec, checkpoint.params}; }

}  // namespace orient
