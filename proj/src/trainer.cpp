#include "orient/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace orient {

using nlohmann::json;

TrainConfig TrainConfig::paper() { return {}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch_size = 32;
  c.global_lr_schedule = {{0, 0.01F}};
  c.max_epochs = 20;
  return c;
}

void TrainConfig::validate() const {
  if (!(momentum >= 0.0F && momentum < 1.0F)) {
    throw UsageError("momentum must lie in [0, 1), got " + std::to_string(momentum));
  }
  if (batch_size == 0) {
    throw UsageError("batch_size must be positive");
  }
  if (!(weight_decay >= 0.0F)) {
    throw UsageError("weight_decay must be non-negative");
  }
  if (global_lr_schedule.empty()) {
    throw UsageError("global_lr_schedule is empty");
  }
  if (global_lr_schedule.front().start_epoch != 0) {
    throw UsageError("global_lr_schedule must start at epoch 0");
  }
  for (std::size_t i = 0; i < global_lr_schedule.size(); ++i) {
    if (!(global_lr_schedule[i].rate > 0.0F) || !std::isfinite(global_lr_schedule[i].rate)) {
      throw UsageError("learning rates must be positive");
    }
    if (i > 0 && global_lr_schedule[i].start_epoch <= global_lr_schedule[i - 1].start_epoch) {
      throw UsageError("global_lr_schedule epochs must be strictly increasing");
    }
  }
  for (const auto& [name, mult] : layer_lr) {
    if (!(mult >= 0.0F)) {
      throw UsageError("layer_lr['" + name + "'] must be non-negative");
    }
  }
  if (max_epochs == 0) {
    throw UsageError("max_epochs must be positive");
  }
  if (plateau_patience == 0) {
    throw UsageError("plateau_patience must be positive");
  }
  if (!(init_std > 0.0F)) {
    throw UsageError("init_std must be positive");
  }
  if (!(stop_at_val_acc >= 0.0 && stop_at_val_acc <= 1.0)) {
    throw UsageError("stop_at_val_acc must lie in [0, 1]");
  }
}

std::string to_json(const TrainConfig& c, int indent) {
  json schedule = json::array();
  for (const auto& e : c.global_lr_schedule) {
    schedule.push_back({{"start_epoch", e.start_epoch}, {"rate", e.rate}});
  }
  json layer_lr = json::object();
  for (const auto& [name, mult] : c.layer_lr) {
    layer_lr[name] = mult;
  }
  const json j{
      {"momentum", c.momentum},
      {"batch_size", c.batch_size},
      {"weight_decay", c.weight_decay},
      {"global_lr_schedule", schedule},
      {"layer_lr", layer_lr},
      {"max_epochs", c.max_epochs},
      {"plateau_patience", c.plateau_patience},
      {"plateau_threshold", c.plateau_threshold},
      {"seed", c.seed},
      {"init_std", c.init_std},
      {"augment", c.augment},
      {"augment_params",
       {{"brightness_delta", c.augment_params.brightness_delta},
        {"contrast_min", c.augment_params.contrast_min},
        {"contrast_max", c.augment_params.contrast_max},
        {"noise_sigma_max", c.augment_params.noise_sigma_max}}},
      {"stop_at_val_acc", c.stop_at_val_acc},
  };
  return j.dump(indent);
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    j.at(key).get_to(out);
  }
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  TrainConfig c = base;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) {
      throw DataError("train config must be a JSON object");
    }
    static const std::vector<std::string> known{"momentum",     "batch_size",       "weight_decay", "global_lr_schedule",
                                                "layer_lr",     "max_epochs",       "plateau_patience",
                                                "plateau_threshold", "seed",        "init_std",     "augment",
                                                "augment_params", "stop_at_val_acc"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw DataError("unknown train config field '" + key + "'");
      }
    }
    read_field(j, "momentum", c.momentum);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "weight_decay", c.weight_decay);
    if (j.contains("global_lr_schedule")) {
      c.global_lr_schedule.clear();
      for (const auto& e : j.at("global_lr_schedule")) {
        c.global_lr_schedule.push_back({e.at("start_epoch").get<std::size_t>(), e.at("rate").get<float>()});
      }
    }
    if (j.contains("layer_lr")) {
      c.layer_lr.clear();
      for (const auto& [name, mult] : j.at("layer_lr").items()) {
        c.layer_lr[name] = mult.get<float>();
      }
    }
    read_field(j, "max_epochs", c.max_epochs);
    read_field(j, "plateau_patience", c.plateau_patience);
    read_field(j, "plateau_threshold", c.plateau_threshold);
    read_field(j, "seed", c.seed);
    read_field(j, "init_std", c.init_std);
    read_field(j, "augment", c.augment);
    if (j.contains("augment_params")) {
      const auto& a = j.at("augment_params");
      read_field(a, "brightness_delta", c.augment_params.brightness_delta);
      read_field(a, "contrast_min", c.augment_params.contrast_min);
      read_field(a, "contrast_max", c.augment_params.contrast_max);
      read_field(a, "noise_sigma_max", c.augment_params.noise_sigma_max);
    }
    read_field(j, "stop_at_val_acc", c.stop_at_val_acc);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed train config: ") + e.what());
  }
  return c;
}

float lr_at_epoch(const std::vector<ScheduleEntry>& schedule, std::size_t epoch) {
  if (schedule.empty()) {
    throw UsageError("lr_at_epoch: empty schedule");
  }
  float rate = schedule.front().rate;
  for (const auto& e : schedule) {
    if (e.start_epoch <= epoch) {
      rate = e.rate;
    }
  }
  return rate;
}

void sgd_step(Network& net, float lr_global, const TrainConfig& config, std::size_t batch_index) {
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    Layer& layer = net.layer(li);
    if (layer.frozen) {
      continue;
    }
    for (auto& p : layer.parameters()) {
      if (p.grad.empty()) {
        continue;
      }
      if (!p.grad.all_finite()) {
        throw NumericError("non-finite gradient in layer '" + layer.name() + "' (" + p.name + ") at batch " +
                           std::to_string(batch_index));
      }
    }
  }
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    Layer& layer = net.layer(li);
    if (layer.frozen) {
      continue;
    }
    const float lr = lr_global * layer.lr_multiplier;
    const float decay = config.weight_decay;
    const float mu = config.momentum;
    for (auto& p : layer.parameters()) {
      if (p.grad.empty()) {
        continue;
      }
      if (p.velocity.empty()) {
        p.velocity = Tensor::zeros_like(p.value);
      }
      float* w = p.value.raw();
      float* v = p.velocity.raw();
      const float* g = p.grad.raw();
      const std::size_t n = p.value.size();
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = mu * v[i] - lr * (g[i] + decay * w[i]);
        w[i] += v[i];
      }
    }
  }
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,lr,train_loss,val_loss,val_acc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << '\n';
  }
  return out.str();
}

std::optional<std::size_t> epochs_to_reach(const std::vector<EpochRecord>& history, double threshold) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].val_acc >= threshold) {
      return i + 1;
    }
  }
  return std::nullopt;
}

Tensor make_batch(const Dataset& dataset, std::span<const std::size_t> indices, const std::array<float, 3>& mean_rgb,
                  std::size_t side) {
  Tensor batch({indices.size(), 3, side, side});
  const auto count = static_cast<std::ptrdiff_t>(indices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    batch.set_slice(k, preprocess(dataset.images.at(indices[k]), mean_rgb, side));
  }
  return batch;
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kAugmentStream = 0x4155474dULL;
constexpr std::uint64_t kDropoutStream = 0x44524f50ULL;
constexpr std::uint64_t kInitStream = 0x494e4954ULL;

struct ValScore {
  double loss = 0.0;
  double acc = 0.0;
};

ValScore score(const Network& net, const Dataset& data, const std::array<float, 3>& mean, std::size_t batch_size) {
  const std::size_t side = net.spec().input_side();
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = net.infer(make_batch(data, idx, mean, side));
    const std::span<const int> labels(data.labels.data() + start, end - start);
    const LossResult lr = cross_entropy_loss(logits, labels);
    loss_sum += lr.loss * static_cast<double>(end - start);
    for (std::size_t r = 0; r < end - start; ++r) {
      const float* row = logits.raw() + r * kClassCount;
      const auto pred = static_cast<int>(std::max_element(row, row + kClassCount) - row);
      if (pred == labels[r]) {
        ++correct;
      }
    }
  }
  const auto n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

void check_dataset(const Dataset& d, const char* what) {
  if (d.size() == 0) {
    throw DataError(std::string(what) + " set is empty");
  }
  if (d.labels.size() != d.images.size()) {
    throw DataError(std::string(what) + " set has mismatched image and label counts");
  }
}

}  // namespace

TrainResult train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
  config.validate();
  check_dataset(train_set, "training");
  check_dataset(val_set, "validation");
  layer_output_shapes(net.spec());
  for (const auto& [name, mult] : config.layer_lr) {
    Layer* layer = net.find_layer(name);
    if (layer == nullptr) {
      throw UsageError("layer_lr names unknown layer '" + name + "'");
    }
    layer->lr_multiplier = mult;
  }

  const std::array<float, 3> mean = compute_mean_rgb(train_set);
  const std::size_t side = net.spec().input_side();
  const std::size_t down_to = net.first_trainable_layer();

  TrainResult result;
  result.best = Checkpoint{net.spec(), net.parameters(), {0, config.seed, mean}};
  double best_val = std::numeric_limits<double>::infinity();
  std::optional<Checkpoint> last_good;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t batch_counter = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const float lr = lr_at_epoch(config.global_lr_schedule, epoch);
    Rng shuffle_rng = make_stream(config.seed ^ kShuffleStream, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t n = end - start;
      Tensor batch({n, 3, side, side});
      std::vector<int> labels(n);
      const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const std::size_t sample = order[start + k];
        const Tensor& img = train_set.images[sample];
        if (config.augment) {
          Rng rng = make_stream(config.seed ^ kAugmentStream, epoch, sample);
          batch.set_slice(k, preprocess(augment(img, rng, config.augment_params), mean, side));
        } else {
          batch.set_slice(k, preprocess(img, mean, side));
        }
        labels[k] = train_set.labels[sample];
      }

      Rng dropout_rng = make_stream(config.seed ^ kDropoutStream, epoch, start);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_counter);
      LossResult loss;
      try {
        loss = cross_entropy_loss(net.forward(batch, Mode::train, dropout_rng), labels);
      } catch (const NumericError& e) {
        throw TrainingAbortedError(std::string(e.what()) + " at " + where, last_good);
      }
      if (!std::isfinite(loss.loss)) {
        throw TrainingAbortedError("non-finite training loss at " + where, last_good);
      }
      net.backward(loss.grad, down_to);
      try {
        sgd_step(net, lr, config, batch_counter);
      } catch (const NumericError& e) {
        throw TrainingAbortedError(e.what(), last_good);
      }
      loss_sum += loss.loss * static_cast<double>(n);
      ++batch_counter;
    }

    ValScore val;
    try {
      val = score(net, val_set, mean, config.batch_size);
    } catch (const NumericError& e) {
      throw TrainingAbortedError(std::string(e.what()) + " during validation at epoch " + std::to_string(epoch),
                                 last_good);
    }
    if (!std::isfinite(val.loss)) {
      throw TrainingAbortedError("non-finite validation loss at epoch " + std::to_string(epoch), last_good);
    }
    result.history.push_back({epoch, lr, loss_sum / static_cast<double>(train_set.size()), val.loss, val.acc});
    last_good = Checkpoint{net.spec(), net.parameters(), {epoch, config.seed, mean}};

    if (val.loss < best_val - config.plateau_threshold) {
      best_val = val.loss;
      result.best_epoch = epoch;
      result.best = *last_good;
    } else if (epoch - result.best_epoch >= config.plateau_patience) {
      result.stopped_on_plateau = true;
      break;
    }
    if (config.stop_at_val_acc > 0.0 && val.acc >= config.stop_at_val_acc) {
      result.reached_target = true;
      break;
    }
  }
  result.final_params = net.parameters();
  return result;
}

NetworkSpec unfrozen(NetworkSpec spec) {
  for (auto& l : spec.layers) {
    l.frozen = false;
  }
  return spec;
}

ParameterSet transfer_trunk(const Checkpoint& base, const NetworkSpec& target, Rng& rng, float std) {
  ParameterSet params = init_weights(target, rng, std);
  std::size_t pi = 0;
  for (const auto& layer : target.layers) {
    if (!layer.has_parameters()) {
      continue;
    }
    auto& p = params[pi++];
    if (layer.kind != LayerKind::conv) {
      continue;
    }
    const auto it = std::find_if(base.params.begin(), base.params.end(),
                                 [&](const LayerParameters& b) { return b.layer == layer.name; });
    if (it == base.params.end()) {
      throw CheckpointMismatchError("base checkpoint has no conv layer '" + layer.name + "'");
    }
    if (it->weights.shape() != p.weights.shape() || it->bias.shape() != p.bias.shape()) {
      throw CheckpointMismatchError("conv layer '" + layer.name + "' expects weights " +
                                    shape_string(p.weights.shape()) + ", base has " +
                                    shape_string(it->weights.shape()));
    }
    p.weights = it->weights;
    p.bias = it->bias;
  }
  return params;
}

TrainResult finetune_workflow(const Checkpoint& base, const NetworkSpec& target, const Dataset& train_set,
                              const Dataset& val_set, const TrainConfig& config) {
  config.validate();
  Rng rng = make_stream(config.seed ^ kInitStream);
  Network net(target, transfer_trunk(base, target, rng, config.init_std));
  return train(net, train_set, val_set, config);
}

}  // namespace orient
