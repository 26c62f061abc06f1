#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orient/datapipe.hpp"
#include "orient/netspec.hpp"

namespace orient {

struct Prediction {
  OrientationLabel label;
  std::array<float, 4> probabilities{};
};

/// Label and class probabilities for a raw (3, H, W) image in [0, 255]. The
/// image is resized to the network side when needed and mean-subtracted.
Prediction predict(const Network& net, const Tensor& image, const std::array<float, 3>& mean_rgb);

/// Batched form; results follow input order.
std::vector<Prediction> predict_batch(const Network& net, std::span<const Tensor> images,
                                      const std::array<float, 3>& mean_rgb, std::size_t batch_size = 64);

/// A loaded checkpoint ready for inference.
class Predictor {
 public:
  explicit Predictor(const Checkpoint& checkpoint);

  [[nodiscard]] Prediction predict(const Tensor& image) const { return orient::predict(net_, image, mean_rgb_); }
  [[nodiscard]] std::vector<Prediction> predict(std::span<const Tensor> images) const {
    return predict_batch(net_, images, mean_rgb_);
  }
  [[nodiscard]] const Network& network() const { return net_; }
  [[nodiscard]] const std::array<float, 3>& mean_rgb() const { return mean_rgb_; }

 private:
  Network net_;
  std::array<float, 3> mean_rgb_;
};

using ConfusionMatrix = std::array<std::array<std::size_t, 4>, 4>;

struct EvalReport {
  std::string protocol;
  std::string dataset;
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  /// Recall per true class; nullopt when the class has no samples.
  std::array<std::optional<double>, 4> recall{};
  /// Rows: true class, columns: predicted class.
  ConfusionMatrix confusion{};

  [[nodiscard]] std::array<std::size_t, 4> class_counts() const;
};

std::string to_json(const EvalReport& report, int indent = 2);
EvalReport eval_report_from_json(const std::string& text);

/// Builds a report from aligned truth/prediction label lists.
EvalReport tally(std::span<const int> truth, std::span<const int> predicted, std::string protocol,
                 std::string dataset);

/// Any image -> label function; used for baselines such as "always 0".
using Classifier = std::function<int(const Tensor& image)>;

EvalReport evaluate(const Predictor& predictor, const Dataset& dataset, std::string_view protocol);
EvalReport evaluate(const Classifier& classifier, const Dataset& dataset, std::string_view protocol);
/// Materializes the manifest, then scores every entry; no sample is rejected.
EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest, const ImageLoader& loader,
                    Protocol protocol, std::string dataset = {});

/// Resamples the same upright pool once per protocol (stream keyed by seed
/// and protocol) and evaluates each resampling.
std::vector<EvalReport> compare_protocols(const Predictor& predictor, const DatasetManifest& sources,
                                          const ImageLoader& loader, std::span<const Protocol> protocols,
                                          std::uint64_t seed, std::optional<std::size_t> count = std::nullopt);
std::vector<EvalReport> compare_protocols(const Classifier& classifier, const DatasetManifest& sources,
                                          const ImageLoader& loader, std::span<const Protocol> protocols,
                                          std::uint64_t seed, std::optional<std::size_t> count = std::nullopt);

/// Protocol x dataset accuracy grid, rows and columns in first-seen order.
/// Cells hold accuracy x 100 with two decimals; missing cells print "-".
std::string report_render(std::span<const EvalReport> reports);
std::string report_csv(std::span<const EvalReport> reports);

}  // namespace orient
