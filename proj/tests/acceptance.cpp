// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "orient/evaluator.hpp"
#include "orient/imageio.hpp"
#include "orient/kernels.hpp"
#include "orient/parallel.hpp"
#include "orient/reference.hpp"
#include "orient/saliency.hpp"
#include "orient/trainer.hpp"
#include "test_util.hpp"

using namespace orient;
using orient::testing::max_abs_diff;
using orient::testing::numeric_grad;
using orient::testing::project;
using orient::testing::projection_tensor;
using orient::testing::random_projection;
using orient::testing::random_tensor;
using orient::testing::relative_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) {
    ++failures;
  }
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// ---- gradient checks -----------------------------------------------------

// Worst relative error between backward() and central differences of a random
// projection of the output, over the input and every parameter.
double layer_grad_error(Layer& layer, Tensor x, Rng& rng, float eps, std::uint64_t mask_seed) {
  Rng fwd(mask_seed);
  const Tensor y0 = layer.forward(x, Mode::train, fwd);
  const auto r = random_projection(y0.size(), rng);
  const auto loss = [&] {
    Rng again(mask_seed);
    return project(layer.forward(x, Mode::train, again), r);
  };
  Rng again(mask_seed);
  layer.forward(x, Mode::train, again);
  const Tensor gx = layer.backward(projection_tensor(y0.shape(), r));
  std::vector<Tensor> grads;
  for (const Parameter& p : layer.parameters()) {
    grads.push_back(p.grad);
  }
  double worst = relative_error(gx, numeric_grad(x, loss, eps));
  std::size_t i = 0;
  for (Parameter& p : layer.parameters()) {
    worst = std::max(worst, relative_error(grads[i++], numeric_grad(p.value, loss, eps)));
  }
  return worst;
}

// Values spaced 0.01 apart in shuffled order, so no pooling window holds two
// entries within a finite-difference step of each other.
Tensor distinct_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = -1.0F + 0.01F * static_cast<float>(order[i]);
  }
  return t;
}

Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t = random_tensor(std::move(shape), rng, 0.1F, 1.0F);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.data()) {
    if (sign(rng)) {
      v = -v;
    }
  }
  return t;
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  constexpr int kInstances = 20;
  Rng rng(11);
  std::map<std::string, double> worst;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t n = pick(rng, 1, 2);
    const std::size_t c = pick(rng, 1, 3);
    const std::size_t h = pick(rng, 4, 7);
    const std::size_t w = pick(rng, 4, 7);
    const auto seed = static_cast<std::uint64_t>(100 + i);
    {
      const std::size_t k = pick(rng, 1, 3);
      const std::size_t oc = pick(rng, 1, 3);
      const kernels::ConvGeometry g{pick(rng, 1, 2), pick(rng, 0, 1)};
      ConvLayer layer("conv", random_tensor({oc, c, k, k}, rng), random_tensor({oc}, rng), g);
      worst["conv"] = std::max(worst["conv"], layer_grad_error(layer, random_tensor({n, c, h, w}, rng), rng, 1e-3F, seed));
    }
    {
      ReluLayer layer("relu");
      worst["relu"] = std::max(worst["relu"], layer_grad_error(layer, away_from_zero({n, c, h, w}, rng), rng, 1e-3F, seed));
    }
    {
      const std::size_t win = pick(rng, 2, 3);
      MaxPoolLayer layer("pool", {win, pick(rng, 1, win)});
      worst["maxpool"] =
          std::max(worst["maxpool"], layer_grad_error(layer, distinct_tensor({n, c, h, w}, rng), rng, 1e-3F, seed));
    }
    {
      LrnLayer layer("lrn", kernels::LrnParams{});
      const std::size_t lc = pick(rng, 3, 8);
      worst["lrn"] = std::max(
          worst["lrn"], layer_grad_error(layer, random_tensor({n, lc, 3, 3}, rng, -30.0F, 30.0F), rng, 1e-2F, seed));
    }
    {
      const std::size_t in = c * h * w;
      const std::size_t out = pick(rng, 1, 6);
      FullyConnectedLayer layer("fc", random_tensor({in, out}, rng), random_tensor({out}, rng));
      worst["fully_connected"] =
          std::max(worst["fully_connected"], layer_grad_error(layer, random_tensor({n, c, h, w}, rng), rng, 1e-3F, seed));
    }
    {
      DropoutLayer layer("drop", 0.5F);
      worst["dropout"] =
          std::max(worst["dropout"], layer_grad_error(layer, random_tensor({n, c, h, w}, rng), rng, 1e-3F, seed));
    }
    {
      const std::size_t batch = pick(rng, 1, 5);
      Tensor logits = random_tensor({batch, 4}, rng, -3.0F, 3.0F);
      std::vector<int> labels(batch);
      for (auto& l : labels) {
        l = static_cast<int>(pick(rng, 0, 3));
      }
      const Tensor g = cross_entropy_loss(logits, labels).grad;
      const auto loss = [&] { return cross_entropy_loss(logits, labels).loss; };
      worst["softmax_xent"] = std::max(worst["softmax_xent"], relative_error(g, numeric_grad(logits, loss, 1e-3F)));
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 30.0;
  std::string detail;
  for (const auto& [kind, err] : worst) {
    ok = ok && err < 1e-3;
    detail += kind + "=" + fmt(err, 6) + " ";
  }
  return {ok, std::to_string(kInstances) + " instances per kind, max rel err " + detail + "(< 1e-3), " + fmt(secs, 1) +
                  " s (< 30 s)"};
}

// ---- kernels against serial oracles --------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(12);
  float conv_worst = 0.0F;
  float pool_worst = 0.0F;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = pick(rng, 1, 3);
    const std::size_t c = pick(rng, 1, 6);
    const std::size_t k = pick(rng, 1, 5);
    const std::size_t pad = pick(rng, 0, 2);
    const std::size_t stride = pick(rng, 1, 3);
    const std::size_t h = pick(rng, k, 20);
    const std::size_t w = pick(rng, k, 20);
    const std::size_t oc = pick(rng, 1, 8);
    const Tensor x = random_tensor({n, c, h, w}, rng);
    const Tensor wt = random_tensor({oc, c, k, k}, rng);
    const Tensor b = random_tensor({oc}, rng);
    const kernels::ConvGeometry g{stride, pad};
    const Tensor fast = kernels::conv2d_forward(x, wt, b, g);
    const Tensor slow = reference::conv2d_forward(x, wt, b, g);
    if (fast.shape() != slow.shape()) {
      return {false, "conv shape mismatch " + shape_string(fast.shape()) + " vs " + shape_string(slow.shape())};
    }
    conv_worst = std::max(conv_worst, max_abs_diff(fast, slow));

    const std::size_t win = pick(rng, 1, std::min<std::size_t>(4, std::min(h, w)));
    const kernels::PoolGeometry pg{win, pick(rng, 1, win + 1)};
    const Tensor pf = kernels::maxpool_forward(x, pg).output;
    const Tensor ps = reference::maxpool_forward(x, pg);
    if (pf.shape() != ps.shape()) {
      return {false, "maxpool shape mismatch"};
    }
    pool_worst = std::max(pool_worst, max_abs_diff(pf, ps));
  }
  const double secs = seconds_since(t0);
  const bool ok = conv_worst <= 1e-5F && pool_worst <= 1e-5F && secs < 60.0;
  return {ok, "100 random shapes, conv max diff " + fmt(conv_worst, 8) + ", maxpool max diff " + fmt(pool_worst, 8) +
                  " (<= 1e-5), " + fmt(secs, 2) + " s (< 60 s)"};
}

// ---- rotation group and EXIF ---------------------------------------------

Outcome rotation_group() {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const Tensor x = random_tensor({3, pick(rng, 1, 12), pick(rng, 1, 12)}, rng, 0.0F, 255.0F);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        if (rotate_image(rotate_image(x, a), b) != rotate_image(x, (a + b) % 4)) {
          return {false, "composition failed for a=" + std::to_string(a) + " b=" + std::to_string(b)};
        }
      }
      if (rotate_image(rotate_image(x, a), OrientationLabel(a).correction()) != x) {
        return {false, "correction does not invert rotation " + std::to_string(a)};
      }
    }
  }
  Rng scene_rng = make_stream(13, 1);
  const Tensor upright = synth_scene(scene_rng, 64, OrientationLabel(0)).image;
  double worst = 0.0;
  for (const int tag : {1, 3, 6, 8}) {
    const auto theta = exif_to_theta(tag);
    if (!theta) {
      return {false, "tag " + std::to_string(tag) + " unmapped"};
    }
    const Tensor stored = rotate_image(upright, *theta);
    const auto bytes = encode_bytes(stored, ImageFormat::jpeg, {tag, 95});
    const ImageFile f = decode_bytes(bytes);
    if (f.exif_orientation != tag) {
      return {false, "tag " + std::to_string(tag) + " did not survive encoding"};
    }
    const Tensor shown = rotate_image(f.pixels, exif_to_theta(*f.exif_orientation)->correction());
    if (shown.shape() != upright.shape()) {
      return {false, "tag " + std::to_string(tag) + " corrected to wrong shape"};
    }
    double mad = 0.0;
    for (std::size_t i = 0; i < shown.size(); ++i) {
      mad += std::abs(shown[i] - upright[i]);
    }
    worst = std::max(worst, mad / static_cast<double>(shown.size()));
  }
  const bool ok = worst < 3.0;
  return {ok, "composition bit-exact on 50 images x 16 pairs; EXIF 1/3/6/8 restore upright, worst mean abs diff " +
                  fmt(worst, 3) + " (JPEG, < 3)"};
}

// ---- spot values -----------------------------------------------------------

Outcome spot_values() {
  const Tensor zeros({1, 4}, 0.0F);
  const Tensor p = softmax(zeros);
  double worst_p = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    worst_p = std::max(worst_p, std::abs(static_cast<double>(p[i]) - 0.25));
  }
  const std::vector<int> label{2};
  const double loss = cross_entropy_loss(zeros, label).loss;
  const double loss_err = std::abs(loss - std::log(4.0));
  Rng rng(14);
  double shift_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Tensor z = random_tensor({3, 4}, rng, -5.0F, 5.0F);
    Tensor shifted = z;
    const float c = std::uniform_real_distribution<float>(-50.0F, 50.0F)(rng);
    for (auto& v : shifted.data()) {
      v += c;
    }
    shift_err = std::max(shift_err, static_cast<double>(max_abs_diff(softmax(z), softmax(shifted))));
  }
  const bool ok = worst_p <= 1e-6 && loss_err <= 1e-6 && shift_err <= 1e-6;
  return {ok, "softmax(0) dev " + fmt(worst_p, 9) + ", loss-ln4 " + fmt(loss_err, 9) + ", shift dev " +
                  fmt(shift_err, 9) + " (all <= 1e-6)"};
}

// ---- shared training fixtures ----------------------------------------------

constexpr std::size_t kSide = 64;

Dataset expanded(std::uint64_t seed, std::size_t sources) {
  return materialize(expand_manifest(synthetic_sources(seed, sources, kSide)), default_loader(), kSide);
}

struct Data {
  Dataset train;
  Dataset val;
  Dataset test;
  DatasetManifest upright_test;
};

const Data& data() {
  static const Data d = [] {
    Data out;
    out.train = expanded(101, 500);
    out.val = expanded(202, 100);
    out.upright_test = synthetic_sources(303, 400, kSide);
    Rng rng = make_stream(303, 1);
    out.test = materialize(sample_protocol(out.upright_test, Protocol::bal4, rng), default_loader(), kSide);
    return out;
  }();
  return d;
}

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
  double test_acc = 0.0;
  double seconds = 0.0;
};

std::vector<SeedRun>& learning_runs() {
  static std::vector<SeedRun> runs;
  return runs;
}

TrainResult train_scratch(const Dataset& tr, const Dataset& va, const TrainConfig& config) {
  const NetworkSpec spec = unfrozen(build_desk_net());
  Rng rng = make_stream(config.seed);
  Network net(spec, init_weights(spec, rng, config.init_std));
  return train(net, tr, va, config);
}

Outcome desk_learning() {
  const Data& d = data();
  std::vector<double> accs;
  std::string detail;
  bool within_epochs = true;
  for (const std::uint64_t seed : {1, 2, 3}) {
    TrainConfig config = TrainConfig::desk();
    config.seed = seed;
    const auto t0 = Clock::now();
    SeedRun run{seed, train_scratch(d.train, d.val, config), 0.0, 0.0};
    run.seconds = seconds_since(t0);
    run.test_acc = evaluate(Predictor(run.result.best), d.test, "bal4").accuracy;
    within_epochs = within_epochs && run.result.history.size() <= 20;
    accs.push_back(run.test_acc);
    detail += "seed " + std::to_string(seed) + " acc " + fmt(run.test_acc) + " in " +
              std::to_string(run.result.history.size()) + " epochs, " + fmt(run.seconds, 1) + " s; ";
    learning_runs().push_back(std::move(run));
  }
  const double med = median3(accs);
  return {med >= 0.95 && within_epochs,
          "median BAL4 test acc " + fmt(med) + " (>= 0.95, <= 20 epochs) on " + std::to_string(d.test.size()) +
              " held-out images; " + detail};
}

// ---- protocol bias ---------------------------------------------------------

Outcome protocol_bias() {
  const DatasetManifest sources = synthetic_sources(404, 1000, kSide);
  const std::vector<Protocol> protocols{Protocol::orig3, Protocol::bal4};
  const Classifier always_zero = [](const Tensor&) { return 0; };
  const auto base = compare_protocols(always_zero, sources, default_loader(), protocols, 7);
  const bool base_ok = std::abs(base[0].accuracy - 0.72) <= 0.01 && base[1].accuracy == 0.25;
  if (learning_runs().empty()) {
    return {false, "no trained model available"};
  }
  const Predictor model(learning_runs().front().result.best);
  const auto m = compare_protocols(model, sources, default_loader(), protocols, 7);
  const double gap = m[1].accuracy - m[0].accuracy;
  return {base_ok && gap <= 0.02, "always-0 orig3 " + fmt(base[0].accuracy) + " (0.72 +- 0.01), bal4 " +
                                      fmt(base[1].accuracy) + " (= 0.25); model orig3 " + fmt(m[0].accuracy) +
                                      ", bal4 " + fmt(m[1].accuracy) + ", bal4-orig3 " + fmt(gap) + " (<= 0.02)"};
}

// ---- fine-tuning -------------------------------------------------------------

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin(),
                                              [](float x, float y) { return std::bit_cast<std::uint32_t>(x) ==
                                                                            std::bit_cast<std::uint32_t>(y); });
}

Outcome fine_tuning() {
  const Data& d = data();
  const NetworkSpec target = build_desk_net();
  const NetworkSpec pre_spec = unfrozen(target);
  const Dataset shapes = synth_shape_dataset(7, 2000, kSide);
  const Dataset shapes_val = synth_shape_dataset(8, 400, kSide);
  TrainConfig pc = TrainConfig::desk();
  pc.global_lr_schedule = {{0, 0.005F}};
  pc.max_epochs = 12;
  pc.seed = 5;
  Rng r0 = make_stream(5);
  Network pre_net(pre_spec, init_weights(pre_spec, r0, 0.03F));
  const TrainResult pre = train(pre_net, shapes, shapes_val, pc);

  std::size_t frozen = 0;
  for (const auto& l : target.layers) {
    if (l.frozen) {
      ++frozen;
    }
  }
  int wins = 0;
  bool frozen_ok = true;
  std::string detail;
  for (const std::uint64_t seed : {1, 2, 3}) {
    TrainConfig c = TrainConfig::desk();
    c.global_lr_schedule = {{0, 1e-3F}};
    c.max_epochs = 20;
    c.seed = seed;
    c.stop_at_val_acc = 0.95;
    const TrainResult ft = finetune_workflow(pre.best, target, d.train, d.val, c);
    for (std::size_t i = 0; i < ft.final_params.size(); ++i) {
      const auto& p = ft.final_params[i];
      const auto it = std::find_if(target.layers.begin(), target.layers.end(),
                                   [&](const LayerSpec& l) { return l.name == p.layer; });
      if (it != target.layers.end() && it->frozen) {
        frozen_ok = frozen_ok && same_bits(p.weights, pre.best.params[i].weights) &&
                    same_bits(p.bias, pre.best.params[i].bias);
      }
    }
    const TrainResult sc = train_scratch(d.train, d.val, c);
    const auto e_ft = epochs_to_reach(ft.history, 0.95);
    const auto e_sc = epochs_to_reach(sc.history, 0.95);
    if (e_ft && (!e_sc || *e_ft < *e_sc)) {
      ++wins;
    }
    detail += "seed " + std::to_string(seed) + " ft " + (e_ft ? std::to_string(*e_ft) : "never") + " vs scratch " +
              (e_sc ? std::to_string(*e_sc) : "never") + "; ";
  }
  return {frozen_ok && frozen > 0 && wins >= 2,
          std::to_string(frozen) + " frozen layers bit-unchanged: " + (frozen_ok ? "yes" : "no") +
              "; epochs to 0.95 val acc " + detail + "fine-tune faster in " + std::to_string(wins) + "/3 (>= 2)"};
}

// ---- checkpoint integrity -----------------------------------------------------

Outcome checkpoint_integrity() {
  if (learning_runs().empty()) {
    return {false, "no trained model available"};
  }
  const Checkpoint& ck = learning_runs().front().result.best;
  const auto path = std::filesystem::temp_directory_path() / "orient_acceptance.ornt";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  const Predictor a(ck);
  const Predictor b(back);
  Rng rng(15);
  std::size_t identical = 0;
  for (int i = 0; i < 50; ++i) {
    const Tensor img = random_tensor({3, kSide, kSide}, rng, 0.0F, 255.0F);
    const Prediction pa = a.predict(img);
    const Prediction pb = b.predict(img);
    bool same = pa.label == pb.label;
    for (std::size_t c = 0; c < 4; ++c) {
      same = same && std::bit_cast<std::uint32_t>(pa.probabilities[c]) == std::bit_cast<std::uint32_t>(pb.probabilities[c]);
    }
    identical += same ? 1 : 0;
  }
  return {identical == 50, std::to_string(identical) + "/50 predictions bit-identical after save/load"};
}

// ---- saliency -----------------------------------------------------------------

Outcome saliency_focus() {
  if (learning_runs().empty()) {
    return {false, "no trained model available"};
  }
  const DatasetManifest& sources = data().upright_test;
  std::vector<double> masses;
  bool shapes_ok = true;
  std::string detail;
  for (const SeedRun& run : learning_runs()) {
    Network net = make_network(run.result.best);
    double total_mass = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      const Tensor img = default_loader()(sources.entries[i].path);
      const SaliencyMap m = grad_cam(net, preprocess(img, run.result.best.meta.mean_rgb, kSide));
      shapes_ok = shapes_ok && m.normalized.shape() == Shape{kSide, kSide} && m.raw.shape().size() == 2;
      double sum = 0.0;
      double band = 0.0;
      for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
          const double v = m.normalized[y * kSide + x];
          shapes_ok = shapes_ok && v >= 0.0;
          sum += v;
          if (y >= kSide / 4 && y < 3 * kSide / 4) {
            band += v;
          }
        }
      }
      if (sum > 0.0) {
        total_mass += band / sum;
        ++counted;
      }
    }
    const double mass = counted ? total_mass / static_cast<double>(counted) : 0.0;
    masses.push_back(mass);
    detail += "seed " + std::to_string(run.seed) + " " + fmt(mass) + "; ";
  }
  const double med = median3(masses);
  return {shapes_ok && med >= 0.60, std::string("maps non-negative and input-sized: ") + (shapes_ok ? "yes" : "no") +
                                        "; central-band mass over 100 upright images " + detail + "median " +
                                        fmt(med) + " (>= 0.60)"};
}

// ---- determinism ----------------------------------------------------------------

Outcome determinism() {
  const int saved = num_threads();
  set_num_threads(1);
  const Dataset tr = expanded(505, 60);
  const Dataset va = expanded(606, 20);
  TrainConfig c = TrainConfig::desk();
  c.max_epochs = 3;
  c.seed = 9;
  std::string csv[2];
  std::vector<std::uint8_t> bytes[2];
  for (int run = 0; run < 2; ++run) {
    const TrainResult r = train_scratch(tr, va, c);
    csv[run] = history_csv(r.history);
    bytes[run] = serialize_checkpoint(r.best);
  }
  set_num_threads(saved);
  const bool ok = csv[0] == csv[1] && bytes[0] == bytes[1];
  return {ok, std::string("single-threaded repeat: history CSV ") + (csv[0] == csv[1] ? "identical" : "differs") +
                  ", checkpoint (" + std::to_string(bytes[0].size()) + " bytes) " +
                  (bytes[0] == bytes[1] ? "identical" : "differs")};
}

}  // namespace

int main() {
  configure_threads_from_env();
  report("gradient_correctness", gradient_correctness);
  report("oracle_equivalence", oracle_equivalence);
  report("rotation_group", rotation_group);
  report("spot_values", spot_values);
  report("desk_learning", desk_learning);
  report("protocol_bias", protocol_bias);
  report("fine_tuning", fine_tuning);
  report("checkpoint_integrity", checkpoint_integrity);
  report("saliency_focus", saliency_focus);
  report("determinism", determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
