#include "orient/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "orient/evaluator.hpp"
#include "orient/imageio.hpp"
#include "orient/parallel.hpp"
#include "orient/saliency.hpp"
#include "orient/trainer.hpp"

namespace orient::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kTopCommands{"dataset", "train", "eval", "compare", "predict", "correct", "explain"};
const std::vector<std::string> kDatasetCommands{"build", "synth"};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read '" + path.string() + "'");
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
}

/// Index just past the invoked subcommand tokens, and the path itself.
std::pair<std::size_t, std::vector<std::string>> locate_subcommand(const std::vector<std::string>& args) {
  std::vector<std::string> path;
  std::size_t i = 0;
  for (; i < args.size(); ++i) {
    if (args[i] == "--config") {
      ++i;
      continue;
    }
    if (std::find(kTopCommands.begin(), kTopCommands.end(), args[i]) != kTopCommands.end()) {
      path.push_back(args[i]);
      ++i;
      break;
    }
  }
  if (!path.empty() && path.front() == "dataset") {
    for (; i < args.size(); ++i) {
      if (std::find(kDatasetCommands.begin(), kDatasetCommands.end(), args[i]) != kDatasetCommands.end()) {
        path.push_back(args[i]);
        ++i;
        break;
      }
    }
  }
  return {path.empty() ? 0 : i, path};
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::string scalar_token(const json& v) {
  if (v.is_string()) {
    return v.get<std::string>();
  }
  return v.dump();
}

void expand_object(const json& obj, const std::vector<std::string>& path, std::size_t level,
                   const std::vector<std::string>& args, std::vector<std::string>& out) {
  for (const auto& [raw_key, value] : obj.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.is_object()) {
      if (level < path.size() && raw_key == path[level]) {
        expand_object(value, path, level + 1, args, out);
      }
      continue;
    }
    const std::string flag = "--" + key;
    if (key == "config" || flag_given(args, flag)) {
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) {
        out.push_back(flag);
      }
    } else if (value.is_array()) {
      out.push_back(flag);
      for (const auto& e : value) {
        out.push_back(scalar_token(e));
      }
    } else if (!value.is_null()) {
      out.push_back(flag);
      out.push_back(scalar_token(value));
    }
  }
}

}  // namespace

std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_text,
                                      const std::vector<std::string>& subcommand_path) {
  json config;
  try {
    config = json::parse(config_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!config.is_object()) {
    throw UsageError("config file must hold a JSON object");
  }
  std::vector<std::string> extra;
  expand_object(config, subcommand_path, 0, args, extra);

  const auto [insert_at, path] = locate_subcommand(args);
  std::vector<std::string> merged(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(insert_at));
  merged.insert(merged.end(), extra.begin(), extra.end());
  merged.insert(merged.end(), args.begin() + static_cast<std::ptrdiff_t>(insert_at), args.end());
  return merged;
}

namespace {

struct Globals {
  bool json = false;
  bool dry_run = false;
  std::string config;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  const Globals& g;
};

ImageLoader loader_for(const fs::path& manifest_path) { return default_loader(manifest_path.parent_path()); }

bool is_uri(const std::string& p) { return p.rfind("synth:", 0) == 0; }

std::string rebase(const std::string& path, const fs::path& from_dir, const fs::path& to_dir) {
  if (is_uri(path) || fs::path(path).is_absolute()) {
    return path;
  }
  const fs::path abs = fs::absolute(from_dir / path).lexically_normal();
  return fs::absolute(to_dir).lexically_normal().empty() ? abs.string()
                                                         : abs.lexically_relative(fs::absolute(to_dir)).string();
}

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ppm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::array<float, 3> mean_of_sources(const DatasetManifest& m, const ImageLoader& loader) {
  std::vector<std::string> paths;
  for (const auto& e : m.entries) {
    paths.push_back(e.path);
  }
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  std::array<double, 3> sum{};
  double pixels = 0.0;
  for (const auto& p : paths) {
    const Tensor img = loader(p);
    const std::size_t plane = img.dim(1) * img.dim(2);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        sum[c] += img[c * plane + i];
      }
    }
    pixels += static_cast<double>(plane);
  }
  if (pixels == 0.0) {
    return {0.0F, 0.0F, 0.0F};
  }
  return {static_cast<float>(sum[0] / pixels), static_cast<float>(sum[1] / pixels),
          static_cast<float>(sum[2] / pixels)};
}

void print_mean(std::ostream& out, const std::array<float, 3>& m) {
  out << "mean_rgb " << m[0] << ' ' << m[1] << ' ' << m[2] << '\n';
}

// ---- dataset ------------------------------------------------------------------

struct SynthArgs {
  std::size_t count = 0;
  std::size_t side = 64;
  std::uint64_t seed = 1;
  std::string out;
  std::string images_dir;
};

int cmd_synth(const SynthArgs& a, const Io& io) {
  if (a.side < 32) {
    throw UsageError("--side must be at least 32");
  }
  if (a.count == 0) {
    throw UsageError("--count must be positive");
  }
  DatasetManifest m = synthetic_sources(a.seed, a.count, a.side);
  const fs::path out_path(a.out);
  const ImageLoader synth = default_loader();
  if (!a.images_dir.empty()) {
    const fs::path dir(a.images_dir);
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const fs::path file = dir / ("scene_" + std::to_string(i) + ".ppm");
      if (!io.g.dry_run) {
        fs::create_directories(dir);
        encode(file, synth(m.entries[i].path));
      }
      m.entries[i].path = rebase(file.string(), fs::current_path(), out_path.parent_path());
    }
  }
  if (io.g.dry_run) {
    io.out << "would write " << m.size() << " upright synthetic sources to " << a.out << '\n';
    return kExitOk;
  }
  m.mean_rgb = mean_of_sources(m, loader_for(out_path));
  save_manifest(out_path, m);
  if (io.g.json) {
    io.out << json{{"manifest", a.out}, {"entries", m.size()}, {"mean_rgb", m.mean_rgb}}.dump() << '\n';
  } else {
    io.out << "wrote " << m.size() << " sources to " << a.out << '\n';
    print_mean(io.out, m.mean_rgb);
  }
  return kExitOk;
}

struct BuildArgs {
  std::string sources;
  std::string mode = "expand";
  std::optional<std::size_t> count;
  std::uint64_t seed = 1;
  std::size_t skip = 0;
  std::optional<std::size_t> take;
  std::string out;
  std::string tag;
};

int cmd_build(const BuildArgs& a, const Io& io) {
  const fs::path src(a.sources);
  const fs::path out_path(a.out);
  DatasetManifest sources;
  fs::path src_dir;
  if (fs::is_directory(src)) {
    src_dir = src;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(src)) {
      if (e.is_regular_file() && has_image_extension(e.path())) {
        files.push_back(e.path().filename().string());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      sources.entries.push_back({f, OrientationLabel(0)});
    }
    sources.source = src.filename().string();
  } else {
    src_dir = src.parent_path();
    sources = load_manifest(src);
    const auto counts = sources.class_counts();
    if (counts[1] + counts[2] + counts[3] > 0) {
      throw DataError("source manifest '" + a.sources + "' must list upright images (theta 0) only");
    }
  }
  if (!a.tag.empty()) {
    sources.source = a.tag;
  }
  if (a.skip > sources.size()) {
    throw CapacityError("--skip " + std::to_string(a.skip) + " exceeds the " + std::to_string(sources.size()) +
                        " available sources");
  }
  std::vector<ManifestEntry> kept(sources.entries.begin() + static_cast<std::ptrdiff_t>(a.skip),
                                  sources.entries.end());
  if (a.take) {
    if (*a.take > kept.size()) {
      throw CapacityError("--take " + std::to_string(*a.take) + " needs " + std::to_string(*a.take - kept.size()) +
                          " more sources than remain");
    }
    kept.resize(*a.take);
  }
  for (auto& e : kept) {
    e.path = rebase(e.path, src_dir, out_path.parent_path());
  }
  sources.entries = std::move(kept);

  DatasetManifest result;
  if (a.mode == "expand") {
    result = expand_manifest(sources);
  } else {
    Rng rng = make_stream(a.seed);
    result = sample_protocol(sources, protocol_from_string(a.mode), rng, a.count);
  }
  result.source = sources.source;
  const auto counts = result.class_counts();
  if (io.g.dry_run) {
    io.out << "would write " << result.size() << " entries (" << counts[0] << '/' << counts[1] << '/' << counts[2]
           << '/' << counts[3] << ") to " << a.out << '\n';
    return kExitOk;
  }
  result.mean_rgb = mean_of_sources(result, loader_for(out_path));
  save_manifest(out_path, result);
  if (io.g.json) {
    io.out << json{{"manifest", a.out}, {"entries", result.size()}, {"class_counts", counts},
                   {"mean_rgb", result.mean_rgb}}
                  .dump()
           << '\n';
  } else {
    io.out << "wrote " << result.size() << " entries to " << a.out << " (per class " << counts[0] << '/' << counts[1]
           << '/' << counts[2] << '/' << counts[3] << ")\n";
    print_mean(io.out, result.mean_rgb);
  }
  return kExitOk;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string train;
  std::string val;
  std::string out;
  std::string history;
  std::string net = "desk";
  std::string init;
  std::string train_config;
  std::size_t side = 64;
  std::vector<std::size_t> widths{16, 32, 64};
  std::size_t fc_width = 128;
  std::size_t frozen_convs = 1;
  bool compact_fc = false;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  float lr = 0.0F;
  float momentum = 0.0F;
  float weight_decay = 0.0F;
  float init_std = 0.0F;
  std::uint64_t seed = 0;
  std::size_t patience = 0;
  double stop_at_acc = 0.0;
  bool no_augment = false;
  std::map<std::string, CLI::Option*> opts;
};

bool given(const TrainArgs& a, const std::string& name) {
  const auto it = a.opts.find(name);
  return it != a.opts.end() && it->second->count() > 0;
}

int cmd_train(const TrainArgs& a, const Io& io) {
  NetworkSpec spec;
  if (a.net == "paper") {
    spec = build_paper_net({a.compact_fc});
  } else if (a.net == "desk") {
    spec = build_desk_net({a.side, a.widths, a.fc_width, a.frozen_convs});
  } else {
    throw UsageError("--net must be 'desk' or 'paper'");
  }
  layer_output_shapes(spec);

  const TrainConfig base = a.net == "paper" ? TrainConfig::paper() : TrainConfig::desk();
  TrainConfig config = a.train_config.empty() ? base : train_config_from_json(read_text(a.train_config), base);
  if (given(a, "epochs")) config.max_epochs = a.epochs;
  if (given(a, "batch-size")) config.batch_size = a.batch_size;
  if (given(a, "lr")) config.global_lr_schedule = {{0, a.lr}};
  if (given(a, "momentum")) config.momentum = a.momentum;
  if (given(a, "weight-decay")) config.weight_decay = a.weight_decay;
  if (given(a, "init-std")) config.init_std = a.init_std;
  if (given(a, "seed")) config.seed = a.seed;
  if (given(a, "patience")) config.plateau_patience = a.patience;
  if (given(a, "stop-at-acc")) config.stop_at_val_acc = a.stop_at_acc;
  if (a.no_augment) config.augment = false;
  config.validate();

  const fs::path train_path(a.train);
  const fs::path val_path(a.val);
  const DatasetManifest train_m = load_manifest(train_path);
  const DatasetManifest val_m = load_manifest(val_path);
  if (train_m.size() == 0 || val_m.size() == 0) {
    throw DataError("training and validation manifests must be non-empty");
  }
  std::optional<Checkpoint> base_ckpt;
  if (!a.init.empty()) {
    base_ckpt = load_checkpoint(a.init);
  }
  if (io.g.dry_run) {
    io.out << "would train '" << spec.name << "' on " << train_m.size() << " samples (validation " << val_m.size()
           << ") for up to " << config.max_epochs << " epochs"
           << (base_ckpt ? ", conv trunk from " + a.init : std::string(", from scratch")) << '\n';
    return kExitOk;
  }

  const std::size_t side = spec.input_side();
  Dataset train_d = materialize(train_m, loader_for(train_path), side);
  Dataset val_d = materialize(val_m, loader_for(val_path), side);
  TrainResult result;
  if (base_ckpt) {
    result = finetune_workflow(*base_ckpt, spec, train_d, val_d, config);
  } else {
    const NetworkSpec scratch = unfrozen(spec);
    Rng rng = make_stream(config.seed);
    Network net(scratch, init_weights(scratch, rng, config.init_std));
    result = train(net, train_d, val_d, config);
  }
  save_checkpoint(a.out, result.best);
  if (!a.history.empty()) {
    write_text(a.history, history_csv(result.history));
  }
  const auto& best = result.history.at(result.best_epoch);
  if (io.g.json) {
    io.out << json{{"checkpoint", a.out},
                   {"epochs_run", result.history.size()},
                   {"best_epoch", result.best_epoch},
                   {"best_val_loss", best.val_loss},
                   {"best_val_acc", best.val_acc},
                   {"stopped_on_plateau", result.stopped_on_plateau}}
                  .dump()
           << '\n';
  } else {
    for (const auto& r : result.history) {
      io.out << "epoch " << r.epoch << "  lr " << r.lr << "  train_loss " << r.train_loss << "  val_loss "
             << r.val_loss << "  val_acc " << r.val_acc << '\n';
    }
    io.out << "best epoch " << result.best_epoch << " (val_acc " << best.val_acc << "), saved " << a.out << '\n';
  }
  return kExitOk;
}

// ---- eval / compare -------------------------------------------------------------

void print_report_details(std::ostream& out, const EvalReport& r) {
  out << "samples " << r.n_samples << "  accuracy " << r.accuracy << '\n';
  out << "recall";
  for (const auto& v : r.recall) {
    out << "  " << (v ? std::to_string(*v) : std::string("-"));
  }
  out << "\nconfusion (rows true 0/90/180/270, columns predicted)\n";
  for (const auto& row : r.confusion) {
    for (std::size_t c = 0; c < 4; ++c) {
      out << (c > 0 ? " " : "") << row[c];
    }
    out << '\n';
  }
}

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string protocol = "bal4";
  std::string tag;
  std::string report;
};

int cmd_eval(const EvalArgs& a, const Io& io) {
  const Protocol protocol = protocol_from_string(a.protocol);
  const Checkpoint ckpt = load_checkpoint(a.model);
  const fs::path mpath(a.manifest);
  const DatasetManifest m = load_manifest(mpath);
  if (io.g.dry_run) {
    io.out << "would evaluate " << m.size() << " samples under " << to_string(protocol) << '\n';
    return kExitOk;
  }
  const Predictor predictor(ckpt);
  const EvalReport r = evaluate(predictor, m, loader_for(mpath), protocol, a.tag.empty() ? m.source : a.tag);
  if (!a.report.empty()) {
    write_text(a.report, to_json(r) + "\n");
  }
  if (io.g.json) {
    io.out << to_json(r, -1) << '\n';
  } else {
    const std::vector<EvalReport> one{r};
    io.out << report_render(one);
    print_report_details(io.out, r);
  }
  return kExitOk;
}

struct CompareArgs {
  std::string model;
  std::string baseline;
  std::string sources;
  std::vector<std::string> protocols{"bal4", "orig3", "bal3"};
  std::optional<std::size_t> count;
  std::uint64_t seed = 1;
  std::string csv;
  std::string tag;
};

int cmd_compare(const CompareArgs& a, const Io& io) {
  if (a.model.empty() == a.baseline.empty()) {
    throw UsageError("compare needs exactly one of --model or --baseline");
  }
  if (!a.baseline.empty() && a.baseline != "always0") {
    throw UsageError("--baseline supports only 'always0'");
  }
  std::vector<Protocol> protocols;
  for (const auto& p : a.protocols) {
    protocols.push_back(protocol_from_string(p));
  }
  const fs::path spath(a.sources);
  DatasetManifest sources = load_manifest(spath);
  if (!a.tag.empty()) {
    sources.source = a.tag;
  }
  std::optional<Checkpoint> ckpt;
  if (!a.model.empty()) {
    ckpt = load_checkpoint(a.model);
  }
  if (io.g.dry_run) {
    io.out << "would compare " << protocols.size() << " protocols over " << sources.size() << " sources\n";
    return kExitOk;
  }
  std::vector<EvalReport> reports;
  if (ckpt) {
    const Predictor predictor(*ckpt);
    reports = compare_protocols(predictor, sources, loader_for(spath), protocols, a.seed, a.count);
  } else {
    const Classifier always0 = [](const Tensor&) { return 0; };
    reports = compare_protocols(always0, sources, loader_for(spath), protocols, a.seed, a.count);
  }
  if (!a.csv.empty()) {
    write_text(a.csv, report_csv(reports));
  }
  if (io.g.json) {
    json arr = json::array();
    for (const auto& r : reports) {
      arr.push_back(json::parse(to_json(r)));
    }
    io.out << arr.dump() << '\n';
  } else {
    io.out << report_render(reports);
  }
  return kExitOk;
}

// ---- predict / correct / explain ---------------------------------------------------

json prediction_json(const std::string& path, const Prediction& p) {
  return {{"path", path},
          {"theta", p.label.theta()},
          {"degrees", p.label.degrees()},
          {"probabilities", p.probabilities}};
}

struct PredictArgs {
  std::string model;
  std::vector<std::string> images;
};

int cmd_predict(const PredictArgs& a, const Io& io) {
  const Predictor predictor(load_checkpoint(a.model));
  int status = kExitOk;
  for (const auto& path : a.images) {
    try {
      const ImageFile file = decode(path);
      io.out << prediction_json(path, predictor.predict(file.pixels)).dump() << '\n';
    } catch (const DataError& e) {
      io.err << path << ": " << e.what() << '\n';
      status = kExitData;
    }
  }
  return status;
}

struct CorrectArgs {
  std::string model;
  std::vector<std::string> images;
  std::string out_dir;
  bool in_place = false;
};

int cmd_correct(const CorrectArgs& a, const Io& io) {
  if (!io.g.dry_run && a.in_place == !a.out_dir.empty()) {
    throw UsageError("correct needs exactly one of --in-place or --out-dir (or --dry-run)");
  }
  const Predictor predictor(load_checkpoint(a.model));
  std::size_t done = 0;
  std::size_t failed = 0;
  for (const auto& path : a.images) {
    try {
      const ImageFile file = decode(path);
      const Prediction p = predictor.predict(file.pixels);
      json line = prediction_json(path, p);
      if (!io.g.dry_run) {
        const fs::path in(path);
        if (a.in_place) {
          if (p.label.theta() != 0) {
            const fs::path tmp = in.parent_path() / (in.stem().string() + ".orient-tmp" + in.extension().string());
            const CorrectionResult r = correct_file(in, tmp, p.label);
            fs::rename(tmp, in);
            line["recompressed"] = r.recompressed;
          }
          line["output"] = path;
        } else {
          fs::create_directories(a.out_dir);
          const fs::path target = fs::path(a.out_dir) / in.filename();
          const CorrectionResult r = correct_file(in, target, p.label);
          line["output"] = target.string();
          line["recompressed"] = r.recompressed;
        }
      }
      ++done;
      if (io.g.json) {
        io.out << line.dump() << '\n';
      } else {
        io.out << path << "  theta " << p.label.theta() << " (" << p.label.degrees() << " deg)";
        if (line.contains("output")) {
          io.out << "  -> " << line["output"].get<std::string>();
        }
        if (line.value("recompressed", false)) {
          io.out << "  [recompressed]";
        }
        io.out << '\n';
      }
    } catch (const Error& e) {
      io.err << path << ": " << e.what() << '\n';
      ++failed;
    } catch (const fs::filesystem_error& e) {
      io.err << path << ": " << e.what() << '\n';
      ++failed;
    }
  }
  if (!io.g.json) {
    io.out << (io.g.dry_run ? "classified " : "corrected ") << done << " of " << a.images.size() << " files";
    if (failed > 0) {
      io.out << " (" << failed << " failed)";
    }
    io.out << '\n';
  }
  return failed > 0 ? kExitData : kExitOk;
}

struct ExplainArgs {
  std::string model;
  std::string image;
  std::string out;
  std::string csv;
  float alpha = 0.5F;
  int target = -1;
};

int cmd_explain(const ExplainArgs& a, const Io& io) {
  if (!(a.alpha >= 0.0F && a.alpha <= 1.0F)) {
    throw UsageError("--alpha must lie in [0, 1]");
  }
  if (a.target < -1 || a.target > 3) {
    throw UsageError("--target must be 0..3");
  }
  if (!a.out.empty()) {
    format_from_extension(a.out);
  }
  const Checkpoint ckpt = load_checkpoint(a.model);
  Network net = make_network(ckpt);
  const ImageFile file = decode(a.image);
  const Tensor input = preprocess(file.pixels, ckpt.meta.mean_rgb, net.spec().input_side());
  const std::optional<OrientationLabel> target =
      a.target >= 0 ? std::optional<OrientationLabel>(OrientationLabel(a.target)) : std::nullopt;
  const SaliencyMap map = grad_cam(net, input, target);
  if (!io.g.dry_run) {
    if (!a.out.empty()) {
      encode(a.out, render_overlay(file.pixels, map, a.alpha));
    }
    if (!a.csv.empty()) {
      write_text(a.csv, map_csv(map.raw));
    }
  }
  if (io.g.json) {
    io.out << json{{"path", a.image},
                   {"target", map.target.theta()},
                   {"map_height", map.raw.dim(0)},
                   {"map_width", map.raw.dim(1)},
                   {"overlay", io.g.dry_run ? std::string() : a.out}}
                  .dump()
           << '\n';
  } else {
    io.out << a.image << "  target theta " << map.target.theta() << "  map " << map.raw.dim(0) << 'x'
           << map.raw.dim(1);
    if (!io.g.dry_run && !a.out.empty()) {
      io.out << "  -> " << a.out;
    }
    io.out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  configure_threads_from_env();

  CLI::App app{"Detect and correct photo orientation with a convolutional network", "orientnet"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  app.add_flag("--dry-run", g.dry_run, "Validate and report without writing files");
  app.add_option("--config", g.config, "JSON file with default flag values");

  auto* dataset = app.add_subcommand("dataset", "Build manifests and synthetic data");
  dataset->require_subcommand(1);

  SynthArgs synth_a;
  auto* synth = dataset->add_subcommand("synth", "Generate upright synthetic scenes");
  synth->add_option("--count", synth_a.count, "Number of scenes")->required();
  synth->add_option("--side", synth_a.side, "Image side in pixels");
  synth->add_option("--seed", synth_a.seed, "Generator seed");
  synth->add_option("--out", synth_a.out, "Output manifest (.jsonl)")->required();
  synth->add_option("--images-dir", synth_a.images_dir, "Write PPM files here instead of synth: references");

  BuildArgs build_a;
  auto* build = dataset->add_subcommand("build", "Expand or protocol-sample upright sources");
  build->add_option("--sources", build_a.sources, "Upright manifest or image directory")->required();
  build->add_option("--mode", build_a.mode, "expand | bal4 | orig3 | bal3");
  build->add_option("--count", build_a.count, "Samples to draw (protocol modes)");
  build->add_option("--seed", build_a.seed, "Sampling seed");
  build->add_option("--skip", build_a.skip, "Ignore the first N sources");
  build->add_option("--take", build_a.take, "Use only N sources after --skip");
  build->add_option("--tag", build_a.tag, "Dataset tag");
  build->add_option("--out", build_a.out, "Output manifest")->required();

  TrainArgs train_a;
  auto* train_cmd = app.add_subcommand("train", "Train a network");
  train_cmd->add_option("--train", train_a.train, "Training manifest")->required();
  train_cmd->add_option("--val", train_a.val, "Validation manifest")->required();
  train_cmd->add_option("--out", train_a.out, "Checkpoint to write")->required();
  train_cmd->add_option("--history", train_a.history, "Per-epoch CSV");
  train_cmd->add_option("--net", train_a.net, "desk | paper");
  train_cmd->add_option("--init", train_a.init, "Base checkpoint whose conv trunk is fine-tuned");
  train_cmd->add_option("--train-config", train_a.train_config, "TrainConfig JSON");
  train_cmd->add_option("--side", train_a.side, "Desk net input side");
  train_cmd->add_option("--widths", train_a.widths, "Desk net conv widths");
  train_cmd->add_option("--fc-width", train_a.fc_width, "Desk net hidden fc width");
  train_cmd->add_option("--frozen-convs", train_a.frozen_convs, "Desk net conv layers frozen when fine-tuning");
  train_cmd->add_flag("--compact-fc", train_a.compact_fc, "Paper net: single 1024-wide fc layer");
  train_a.opts["epochs"] = train_cmd->add_option("--epochs", train_a.epochs, "Maximum epochs");
  train_a.opts["batch-size"] = train_cmd->add_option("--batch-size", train_a.batch_size, "Mini-batch size");
  train_a.opts["lr"] = train_cmd->add_option("--lr", train_a.lr, "Constant global learning rate");
  train_a.opts["momentum"] = train_cmd->add_option("--momentum", train_a.momentum, "SGD momentum");
  train_a.opts["weight-decay"] = train_cmd->add_option("--weight-decay", train_a.weight_decay, "Weight decay");
  train_a.opts["init-std"] = train_cmd->add_option("--init-std", train_a.init_std, "Initial weight std");
  train_a.opts["seed"] = train_cmd->add_option("--seed", train_a.seed, "Training seed");
  train_a.opts["patience"] = train_cmd->add_option("--patience", train_a.patience, "Plateau patience (epochs)");
  train_a.opts["stop-at-acc"] =
      train_cmd->add_option("--stop-at-acc", train_a.stop_at_acc, "Stop once validation accuracy reaches this");
  train_cmd->add_flag("--no-augment", train_a.no_augment, "Disable training augmentation");

  EvalArgs eval_a;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval->add_option("--model", eval_a.model, "Checkpoint")->required();
  eval->add_option("--manifest", eval_a.manifest, "Test manifest")->required();
  eval->add_option("--protocol", eval_a.protocol, "bal4 | orig3 | bal3");
  eval->add_option("--tag", eval_a.tag, "Dataset tag for the report");
  eval->add_option("--report", eval_a.report, "Write the JSON report here");

  CompareArgs compare_a;
  auto* compare = app.add_subcommand("compare", "Accuracy table across evaluation protocols");
  compare->add_option("--model", compare_a.model, "Checkpoint");
  compare->add_option("--baseline", compare_a.baseline, "Built-in classifier instead of a model (always0)");
  compare->add_option("--sources", compare_a.sources, "Upright source manifest")->required();
  compare->add_option("--protocols", compare_a.protocols, "Protocols to compare");
  compare->add_option("--count", compare_a.count, "Samples per protocol");
  compare->add_option("--seed", compare_a.seed, "Sampling seed");
  compare->add_option("--csv", compare_a.csv, "Write the table as CSV");
  compare->add_option("--tag", compare_a.tag, "Dataset column name");

  PredictArgs predict_a;
  auto* predict_cmd = app.add_subcommand("predict", "Print orientation and probabilities as JSON");
  predict_cmd->add_option("--model", predict_a.model, "Checkpoint")->required();
  predict_cmd->add_option("images", predict_a.images, "Image files")->required();

  CorrectArgs correct_a;
  auto* correct = app.add_subcommand("correct", "Rotate images back upright");
  correct->add_option("--model", correct_a.model, "Checkpoint")->required();
  correct->add_option("images", correct_a.images, "Image files")->required();
  correct->add_option("--out-dir", correct_a.out_dir, "Write corrected copies here");
  correct->add_flag("--in-place", correct_a.in_place, "Overwrite the inputs");

  ExplainArgs explain_a;
  auto* explain = app.add_subcommand("explain", "Grad-CAM overlay for one image");
  explain->add_option("--model", explain_a.model, "Checkpoint")->required();
  explain->add_option("image", explain_a.image, "Image file")->required();
  explain->add_option("--out", explain_a.out, "Overlay image (.png, .ppm, .jpg)");
  explain->add_option("--csv", explain_a.csv, "Raw map as CSV");
  explain->add_option("--alpha", explain_a.alpha, "Overlay opacity in [0, 1]");
  explain->add_option("--target", explain_a.target, "Class to explain (default: predicted)");

  for (auto* sub : {dataset, synth, build, train_cmd, eval, compare, predict_cmd, correct, explain}) {
    sub->fallthrough();
  }

  try {
    std::vector<std::string> args = raw_args;
    const auto cfg = std::find(args.begin(), args.end(), "--config");
    if (cfg != args.end() && cfg + 1 != args.end()) {
      args = merge_config(args, read_text(*(cfg + 1)), locate_subcommand(args).second);
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    const Io io{out, err, g};
    if (synth->parsed()) return cmd_synth(synth_a, io);
    if (build->parsed()) return cmd_build(build_a, io);
    if (train_cmd->parsed()) return cmd_train(train_a, io);
    if (eval->parsed()) return cmd_eval(eval_a, io);
    if (compare->parsed()) return cmd_compare(compare_a, io);
    if (predict_cmd->parsed()) return cmd_predict(predict_a, io);
    if (correct->parsed()) return cmd_correct(correct_a, io);
    if (explain->parsed()) return cmd_explain(explain_a, io);
    err << app.help();
    return kExitUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace orient::cli
