#include "orient/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace orient {

using nlohmann::json;

std::vector<Prediction> predict_batch(const Network& net, std::span<const Tensor> images,
                                      const std::array<float, 3>& mean_rgb, std::size_t batch_size) {
  const std::size_t side = net.spec().input_side();
  std::vector<Prediction> out(images.size());
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, images.size() - start);
    Tensor batch({n, 3, side, side});
    for (std::size_t k = 0; k < n; ++k) {
      batch.set_slice(k, preprocess(images[start + k], mean_rgb, side));
    }
    const Tensor probs = softmax(net.infer(batch));
    for (std::size_t k = 0; k < n; ++k) {
      Prediction& p = out[start + k];
      const float* row = probs.raw() + k * kClassCount;
      std::copy(row, row + kClassCount, p.probabilities.begin());
      p.label = OrientationLabel(static_cast<int>(std::max_element(row, row + kClassCount) - row));
    }
  }
  return out;
}

Prediction predict(const Network& net, const Tensor& image, const std::array<float, 3>& mean_rgb) {
  return predict_batch(net, std::span<const Tensor>(&image, 1), mean_rgb).front();
}

Predictor::Predictor(const Checkpoint& checkpoint) : net_(make_network(checkpoint)), mean_rgb_(checkpoint.meta.mean_rgb) {}

std::array<std::size_t, 4> EvalReport::class_counts() const {
  std::array<std::size_t, 4> counts{};
  for (std::size_t t = 0; t < 4; ++t) {
    counts[t] = std::accumulate(confusion[t].begin(), confusion[t].end(), std::size_t{0});
  }
  return counts;
}

std::string to_json(const EvalReport& r, int indent) {
  json recall = json::array();
  for (const auto& v : r.recall) {
    recall.push_back(v ? json(*v) : json(nullptr));
  }
  json confusion = json::array();
  for (const auto& row : r.confusion) {
    confusion.push_back(row);
  }
  const json j{{"protocol", r.protocol}, {"dataset", r.dataset}, {"n_samples", r.n_samples},
               {"accuracy", r.accuracy}, {"recall", recall},     {"confusion", confusion}};
  return j.dump(indent);
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.protocol = j.at("protocol").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& v = j.at("recall").at(i);
      r.recall[i] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      for (std::size_t k = 0; k < 4; ++k) {
        r.confusion[i][k] = j.at("confusion").at(i).at(k).get<std::size_t>();
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

EvalReport tally(std::span<const int> truth, std::span<const int> predicted, std::string protocol,
                 std::string dataset) {
  if (truth.size() != predicted.size()) {
    throw UsageError("tally: truth and prediction counts differ");
  }
  if (truth.empty()) {
    throw DataError("cannot evaluate an empty test set");
  }
  EvalReport r;
  r.protocol = std::move(protocol);
  r.dataset = std::move(dataset);
  r.n_samples = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] > 3 || predicted[i] < 0 || predicted[i] > 3) {
      throw DataError("label out of range at sample " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  std::size_t trace = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    trace += r.confusion[t][t];
    const std::size_t row = std::accumulate(r.confusion[t].begin(), r.confusion[t].end(), std::size_t{0});
    if (row > 0) {
      r.recall[t] = static_cast<double>(r.confusion[t][t]) / static_cast<double>(row);
    }
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(r.n_samples);
  return r;
}

EvalReport evaluate(const Predictor& predictor, const Dataset& dataset, std::string_view protocol) {
  const auto preds = predictor.predict(dataset.images);
  std::vector<int> predicted(preds.size());
  std::transform(preds.begin(), preds.end(), predicted.begin(), [](const Prediction& p) { return p.label.theta(); });
  return tally(dataset.labels, predicted, std::string(protocol), dataset.tag);
}

EvalReport evaluate(const Classifier& classifier, const Dataset& dataset, std::string_view protocol) {
  std::vector<int> predicted(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    predicted[i] = classifier(dataset.images[i]);
  }
  return tally(dataset.labels, predicted, std::string(protocol), dataset.tag);
}

EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest, const ImageLoader& loader,
                    Protocol protocol, std::string dataset) {
  if (manifest.size() == 0) {
    throw DataError("cannot evaluate an empty manifest");
  }
  Dataset data = materialize(manifest, loader, predictor.network().spec().input_side());
  data.tag = dataset.empty() ? manifest.source : std::move(dataset);
  return evaluate(predictor, data, to_string(protocol));
}

namespace {

template <typename Scorer>
std::vector<EvalReport> compare_with(const Scorer& scorer, std::size_t side, const DatasetManifest& sources,
                                     const ImageLoader& loader, std::span<const Protocol> protocols,
                                     std::uint64_t seed, std::optional<std::size_t> count) {
  std::vector<EvalReport> reports;
  for (const Protocol p : protocols) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(p) + 1);
    const DatasetManifest sampled = sample_protocol(sources, p, rng, count);
    Dataset data = materialize(sampled, loader, side);
    data.tag = sources.source;
    reports.push_back(evaluate(scorer, data, to_string(p)));
  }
  return reports;
}

}  // namespace

std::vector<EvalReport> compare_protocols(const Predictor& predictor, const DatasetManifest& sources,
                                          const ImageLoader& loader, std::span<const Protocol> protocols,
                                          std::uint64_t seed, std::optional<std::size_t> count) {
  return compare_with(predictor, predictor.network().spec().input_side(), sources, loader, protocols, seed, count);
}

std::vector<EvalReport> compare_protocols(const Classifier& classifier, const DatasetManifest& sources,
                                          const ImageLoader& loader, std::span<const Protocol> protocols,
                                          std::uint64_t seed, std::optional<std::size_t> count) {
  const std::size_t side = sources.size() > 0 ? loader(sources.entries.front().path).dim(1) : 0;
  return compare_with(classifier, side, sources, loader, protocols, seed, count);
}

namespace {

std::string percent(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::round(accuracy * 10000.0) / 100.0);
  return buf;
}

struct Grid {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<std::string>> cells;
};

Grid build_grid(std::span<const EvalReport> reports) {
  Grid g;
  auto index = [](std::vector<std::string>& v, const std::string& key) {
    const auto it = std::find(v.begin(), v.end(), key);
    if (it != v.end()) {
      return static_cast<std::size_t>(it - v.begin());
    }
    v.push_back(key);
    return v.size() - 1;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pos;
  for (const auto& r : reports) {
    const std::size_t ri = index(g.rows, r.protocol);
    const std::size_t ci = index(g.cols, r.dataset.empty() ? std::string("dataset") : r.dataset);
    pos.emplace_back(ri, ci);
  }
  g.cells.assign(g.rows.size(), std::vector<std::string>(g.cols.size(), "-"));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    g.cells[pos[i].first][pos[i].second] = percent(reports[i].accuracy);
  }
  return g;
}

}  // namespace

std::string report_render(std::span<const EvalReport> reports) {
  const Grid g = build_grid(reports);
  std::size_t first = std::string("protocol").size();
  for (const auto& r : g.rows) {
    first = std::max(first, r.size());
  }
  std::vector<std::size_t> widths;
  for (std::size_t c = 0; c < g.cols.size(); ++c) {
    std::size_t w = std::max<std::size_t>(g.cols[c].size(), 6);
    for (const auto& row : g.cells) {
      w = std::max(w, row[c].size());
    }
    widths.push_back(w);
  }
  std::ostringstream out;
  auto pad_right = [&](const std::string& s, std::size_t w) { out << s << std::string(w - s.size(), ' '); };
  auto pad_left = [&](const std::string& s, std::size_t w) { out << std::string(w - s.size(), ' ') << s; };
  pad_right("protocol", first);
  for (std::size_t c = 0; c < g.cols.size(); ++c) {
    out << "  ";
    pad_left(g.cols[c], widths[c]);
  }
  out << '\n';
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    pad_right(g.rows[r], first);
    for (std::size_t c = 0; c < g.cols.size(); ++c) {
      out << "  ";
      pad_left(g.cells[r][c], widths[c]);
    }
    out << '\n';
  }
  return out.str();
}

std::string report_csv(std::span<const EvalReport> reports) {
  const Grid g = build_grid(reports);
  std::ostringstream out;
  out << "protocol";
  for (const auto& c : g.cols) {
    out << ',' << c;
  }
  out << '\n';
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    out << g.rows[r];
    for (const auto& cell : g.cells[r]) {
      out << ',' << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace orient
