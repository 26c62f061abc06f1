#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orient/rng.hpp"
#include "orient/tensor.hpp"

namespace orient {

/// Clockwise quarter turns applied to the upright image:
/// 0 -> 0 deg, 1 -> 90 deg, 2 -> 180 deg, 3 -> 270 deg.
class OrientationLabel {
 public:
  constexpr OrientationLabel() = default;
  explicit OrientationLabel(int theta);

  [[nodiscard]] constexpr int theta() const { return theta_; }
  [[nodiscard]] constexpr int degrees() const { return theta_ * 90; }
  /// Rotation (clockwise quarter turns) that brings the image back upright.
  [[nodiscard]] OrientationLabel correction() const { return OrientationLabel((4 - theta_) % 4); }

  friend constexpr auto operator<=>(const OrientationLabel&, const OrientationLabel&) = default;

 private:
  int theta_ = 0;
};

/// Exact clockwise rotation of a (channels, height, width) tensor by
/// `quarter_turns` * 90 degrees. Odd turns swap height and width.
Tensor rotate_image(const Tensor& image, int quarter_turns);
inline Tensor rotate_image(const Tensor& image, OrientationLabel theta) { return rotate_image(image, theta.theta()); }

// ---- manifests --------------------------------------------------------------

/// `path` names an upright source image; the sample is that image rotated
/// clockwise by `label`.
struct ManifestEntry {
  std::string path;
  OrientationLabel label;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::array<float, 3> mean_rgb{0.0F, 0.0F, 0.0F};
  std::string source;

  [[nodiscard]] std::size_t size() const { return entries.size(); }
  [[nodiscard]] std::array<std::size_t, 4> class_counts() const;
};

/// Four entries (one per orientation) for every upright entry.
DatasetManifest expand_manifest(const DatasetManifest& upright);

/// One JSON object per line: {"path": "...", "theta": 0..3}. mean_rgb and
/// source go to the sidecar `<path>.meta.json`.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::filesystem::path manifest_sidecar_path(const std::filesystem::path& path);

// ---- evaluation protocols ----------------------------------------------------

enum class Protocol { bal4, orig3, bal3 };

std::string_view to_string(Protocol protocol);
Protocol protocol_from_string(std::string_view name);

/// Per-class sample counts for `total` draws under a protocol. BAL4 splits
/// evenly; ORIG3 is 72/14/14 over 0/90/270 deg; BAL3 is 34/33/33. Rounding
/// leaves every class within one sample of its exact share.
std::array<std::size_t, 4> protocol_counts(Protocol protocol, std::size_t total);

/// Assigns orientations to upright sources according to a protocol. Each
/// source is used at most once. `count` defaults to every source.
DatasetManifest sample_protocol(const DatasetManifest& sources, Protocol protocol, Rng& rng,
                                std::optional<std::size_t> count = std::nullopt);

// ---- pixels -----------------------------------------------------------------

struct AugmentParams {
  float brightness_delta = 32.0F;  // uniform in [-delta, delta], 0-255 scale
  float contrast_min = 0.8F;
  float contrast_max = 1.2F;
  float noise_sigma_max = 10.0F;  // sigma uniform in [0, max]

  static AugmentParams identity() { return {0.0F, 1.0F, 1.0F, 0.0F}; }
  friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

/// pixel' = clamp(contrast * (pixel - mean) + mean + brightness + noise, 0, 255),
/// with `mean` the per-channel image mean. Never crops or flips.
Tensor augment(const Tensor& image, Rng& rng, const AugmentParams& params);

/// Half-pixel-centred bilinear resize of a (channels, height, width) tensor.
Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);

/// Resizes (aspect-distorting, no crop) to side x side when needed and
/// subtracts the per-channel mean. Input must have 3 channels.
Tensor preprocess(const Tensor& image, const std::array<float, 3>& mean_rgb, std::size_t side);

// ---- synthetic data ------------------------------------------------------------

struct LabeledImage {
  Tensor image;  // (3, side, side), integer values in [0, 255]
  OrientationLabel label;
};

/// Upright outdoor-like scene (bright sky gradient over the top third, dark
/// textured ground over the bottom third, random shapes between), rotated
/// clockwise by `theta`.
LabeledImage synth_scene(Rng& rng, std::size_t side, OrientationLabel theta);

inline constexpr int kShapeClasses = 4;

/// Auxiliary task image: one shape (0 disk, 1 square, 2 triangle, 3 ring) on
/// a noisy background. Used to pre-train conv trunks.
Tensor synth_shape(Rng& rng, std::size_t side, int shape_class);

/// Manifest of `count` upright synthetic scenes addressed by `synth:` URIs.
DatasetManifest synthetic_sources(std::uint64_t seed, std::size_t count, std::size_t side);

// ---- materialized datasets -------------------------------------------------------

/// Decoded samples at network resolution, raw [0, 255] pixels (no mean
/// subtraction, no augmentation).
struct Dataset {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::string tag;

  [[nodiscard]] std::size_t size() const { return images.size(); }
};

/// Maps a manifest path to upright (3, H, W) pixels.
using ImageLoader = std::function<Tensor(const std::string& path)>;

/// Handles `synth:scene/<side>/<seed>/<index>` URIs and decodes anything else
/// relative to `base_dir`.
ImageLoader default_loader(std::filesystem::path base_dir = {});

Dataset materialize(const DatasetManifest& manifest, const ImageLoader& loader, std::size_t side);

/// Balanced shape-classification set for trunk pre-training.
Dataset synth_shape_dataset(std::uint64_t seed, std::size_t count, std::size_t side);

std::array<float, 3> compute_mean_rgb(const Dataset& dataset);

}  // namespace orient
