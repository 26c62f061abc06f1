#include "orient/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "orient/imageio.hpp"

namespace orient {

using nlohmann::json;

OrientationLabel::OrientationLabel(int theta) : theta_(theta) {
  if (theta < 0 || theta > 3) {
    throw DataError("orientation label must be in {0,1,2,3}, got " + std::to_string(theta));
  }
}

Tensor rotate_image(const Tensor& image, int quarter_turns) {
  require_rank(image, 3, "rotate_image");
  const int turns = ((quarter_turns % 4) + 4) % 4;
  const std::size_t channels = image.dim(0);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (turns == 0) {
    return image;
  }
  const bool swap = turns % 2 == 1;
  Tensor out({channels, swap ? w : h, swap ? h : w});
  const std::size_t oh = out.dim(1);
  const std::size_t ow = out.dim(2);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t sy = 0;
        std::size_t sx = 0;
        switch (turns) {
          case 1:  // clockwise: out[y][x] = in[h-1-x][y]
            sy = h - 1 - x;
            sx = y;
            break;
          case 2:
            sy = h - 1 - y;
            sx = w - 1 - x;
            break;
          default:  // 270 clockwise: out[y][x] = in[x][w-1-y]
            sy = x;
            sx = w - 1 - y;
            break;
        }
        out.at(c, y, x) = image.at(c, sy, sx);
      }
    }
  }
  return out;
}

// ---- manifests --------------------------------------------------------------

std::array<std::size_t, 4> DatasetManifest::class_counts() const {
  std::array<std::size_t, 4> counts{};
  for (const auto& e : entries) {
    ++counts[static_cast<std::size_t>(e.label.theta())];
  }
  return counts;
}

DatasetManifest expand_manifest(const DatasetManifest& upright) {
  DatasetManifest out;
  out.mean_rgb = upright.mean_rgb;
  out.source = upright.source;
  out.entries.reserve(upright.entries.size() * 4);
  for (std::size_t i = 0; i < upright.entries.size(); ++i) {
    const auto& e = upright.entries[i];
    if (e.label.theta() != 0) {
      throw DataError("expand_manifest: entry " + std::to_string(i) + " ('" + e.path + "') is labelled " +
                      std::to_string(e.label.degrees()) + " deg; sources must be upright");
    }
    for (int theta = 0; theta < 4; ++theta) {
      out.entries.push_back({e.path, OrientationLabel(theta)});
    }
  }
  return out;
}

std::filesystem::path manifest_sidecar_path(const std::filesystem::path& path) {
  return path.string() + ".meta.json";
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError("cannot write manifest '" + path.string() + "'");
  }
  for (const auto& e : manifest.entries) {
    out << json{{"path", e.path}, {"theta", e.label.theta()}}.dump() << '\n';
  }
  std::ofstream meta(manifest_sidecar_path(path), std::ios::trunc);
  meta << json{{"mean_rgb", manifest.mean_rgb}, {"source", manifest.source}}.dump(2) << '\n';
  if (!out || !meta) {
    throw DataError("failed writing manifest '" + path.string() + "'");
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open manifest '" + path.string() + "'");
  }
  DatasetManifest manifest;
  manifest.source = path.filename().string();
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto j = json::parse(line);
      ManifestEntry e{j.at("path").get<std::string>(), OrientationLabel(j.at("theta").get<int>())};
      if (!seen.emplace(e.path, e.label.theta()).second) {
        throw DataError("duplicate entry");
      }
      manifest.entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto sidecar = manifest_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream meta_in(sidecar);
    try {
      const auto meta = json::parse(meta_in);
      manifest.mean_rgb = meta.value("mean_rgb", manifest.mean_rgb);
      manifest.source = meta.value("source", manifest.source);
    } catch (const json::exception& e) {
      throw DataError(sidecar.string() + ": " + e.what());
    }
    for (float v : manifest.mean_rgb) {
      if (!std::isfinite(v)) {
        throw DataError(sidecar.string() + ": mean_rgb must be finite");
      }
    }
  }
  return manifest;
}

// ---- protocols ----------------------------------------------------------------

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::bal4: return "bal4";
    case Protocol::orig3: return "orig3";
    case Protocol::bal3: return "bal3";
  }
  return "unknown";
}

Protocol protocol_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto p : {Protocol::bal4, Protocol::orig3, Protocol::bal3}) {
    if (to_string(p) == lower) {
      return p;
    }
  }
  throw UsageError("unknown protocol '" + std::string(name) + "' (expected bal4, orig3 or bal3)");
}

std::array<std::size_t, 4> protocol_counts(Protocol protocol, std::size_t total) {
  auto share = [total](double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  };
  std::array<std::size_t, 4> counts{};
  switch (protocol) {
    case Protocol::bal4:
      for (std::size_t c = 0; c < 4; ++c) {
        counts[c] = total / 4 + (c < total % 4 ? 1 : 0);
      }
      break;
    case Protocol::orig3:
      counts[0] = share(0.72);
      counts[1] = std::min(share(0.14), total - counts[0]);
      counts[3] = total - counts[0] - counts[1];
      break;
    case Protocol::bal3:
      counts[0] = share(0.34);
      counts[1] = std::min(share(0.33), total - counts[0]);
      counts[3] = total - counts[0] - counts[1];
      break;
  }
  return counts;
}

DatasetManifest sample_protocol(const DatasetManifest& sources, Protocol protocol, Rng& rng,
                                std::optional<std::size_t> count) {
  for (std::size_t i = 0; i < sources.entries.size(); ++i) {
    if (sources.entries[i].label.theta() != 0) {
      throw DataError("sample_protocol: source " + std::to_string(i) + " ('" + sources.entries[i].path +
                      "') is not upright");
    }
  }
  const std::size_t available = sources.entries.size();
  const std::size_t wanted = count.value_or(available);
  const std::size_t classes = protocol == Protocol::bal4 ? 4 : 3;
  if (wanted > available) {
    throw CapacityError("protocol " + std::string(to_string(protocol)) + " needs " + std::to_string(wanted) +
                        " upright sources but only " + std::to_string(available) + " are available (short by " +
                        std::to_string(wanted - available) + ")");
  }
  if (wanted < classes) {
    throw CapacityError("protocol " + std::string(to_string(protocol)) + " needs at least " +
                        std::to_string(classes) + " sources, got " + std::to_string(wanted));
  }

  std::vector<std::size_t> order(available);
  for (std::size_t i = 0; i < available; ++i) {
    order[i] = i;
  }
  std::shuffle(order.begin(), order.end(), rng);

  const auto counts = protocol_counts(protocol, wanted);
  DatasetManifest out;
  out.mean_rgb = sources.mean_rgb;
  out.source = sources.source;
  std::size_t next = 0;
  for (int theta = 0; theta < 4; ++theta) {
    for (std::size_t k = 0; k < counts[static_cast<std::size_t>(theta)]; ++k) {
      out.entries.push_back({sources.entries[order[next++]].path, OrientationLabel(theta)});
    }
  }
  // Interleave classes so a prefix of the manifest is not single-class.
  std::shuffle(out.entries.begin(), out.entries.end(), rng);
  return out;
}

// ---- pixels ---------------------------------------------------------------------

Tensor augment(const Tensor& image, Rng& rng, const AugmentParams& params) {
  require_rank(image, 3, "augment");
  if (!(params.brightness_delta >= 0.0F) || !(params.contrast_min > 0.0F) ||
      !(params.contrast_max >= params.contrast_min) || !(params.noise_sigma_max >= 0.0F)) {
    throw UsageError("augment: parameters out of range");
  }
  std::uniform_real_distribution<float> brightness_dist(-params.brightness_delta, params.brightness_delta);
  std::uniform_real_distribution<float> contrast_dist(params.contrast_min, params.contrast_max);
  std::uniform_real_distribution<float> sigma_dist(0.0F, params.noise_sigma_max);
  const float brightness = params.brightness_delta > 0.0F ? brightness_dist(rng) : 0.0F;
  const float contrast = params.contrast_max > params.contrast_min ? contrast_dist(rng) : params.contrast_min;
  const float sigma = params.noise_sigma_max > 0.0F ? sigma_dist(rng) : 0.0F;

  const std::size_t channels = image.dim(0);
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor out(image.shape());
  std::normal_distribution<float> noise(0.0F, sigma > 0.0F ? sigma : 1.0F);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      sum += image[c * plane + i];
    }
    const auto mean = static_cast<float>(sum / static_cast<double>(plane));
    for (std::size_t i = 0; i < plane; ++i) {
      const float p = image[c * plane + i];
      // contrast*(p - mean) + mean, written so contrast == 1 leaves p exact
      float v = p + (contrast - 1.0F) * (p - mean) + brightness;
      if (sigma > 0.0F) {
        v += noise(rng);
      }
      out[c * plane + i] = std::clamp(v, 0.0F, 255.0F);
    }
  }
  return out;
}

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
  require_rank(image, 3, "resize_bilinear");
  if (height == 0 || width == 0) {
    throw UsageError("resize_bilinear: target extents must be positive");
  }
  const std::size_t channels = image.dim(0);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (h == height && w == width) {
    return image;
  }
  Tensor out({channels, height, width});
  auto source_coord = [](std::size_t dst, std::size_t src_extent, std::size_t dst_extent) {
    const double scale = static_cast<double>(src_extent) / static_cast<double>(dst_extent);
    const double pos = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    return std::clamp(pos, 0.0, static_cast<double>(src_extent - 1));
  };
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = source_coord(y, h, height);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const auto fy = static_cast<float>(sy - static_cast<double>(y0));
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = source_coord(x, w, width);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const auto fx = static_cast<float>(sx - static_cast<double>(x0));
      for (std::size_t c = 0; c < channels; ++c) {
        const float a = image.at(c, y0, x0);
        const float b = image.at(c, y0, x1);
        const float d = image.at(c, y1, x0);
        const float e = image.at(c, y1, x1);
        const float top = a + (b - a) * fx;
        const float bottom = d + (e - d) * fx;
        out.at(c, y, x) = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

Tensor preprocess(const Tensor& image, const std::array<float, 3>& mean_rgb, std::size_t side) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DataError("preprocess: expected a 3-channel (3, H, W) image, got " + shape_string(image.shape()));
  }
  Tensor out = resize_bilinear(image, side, side);
  const std::size_t plane = side * side;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] -= mean_rgb[c];
    }
  }
  return out;
}

// ---- synthetic data ---------------------------------------------------------------

namespace {

float uniform(Rng& rng, float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng); }

void quantize(Tensor& image) {
  for (auto& v : image.data()) {
    v = std::clamp(std::round(v), 0.0F, 255.0F);
  }
}

struct Rgb {
  float r, g, b;
};

void put(Tensor& img, std::size_t y, std::size_t x, Rgb c) {
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

}  // namespace

LabeledImage synth_scene(Rng& rng, std::size_t side, OrientationLabel theta) {
  if (side < 32) {
    throw UsageError("synth_scene: side must be >= 32, got " + std::to_string(side));
  }
  Tensor img({3, side, side});
  const std::size_t sky_end = side / 3;
  const std::size_t ground_begin = side - side / 3;
  std::normal_distribution<float> grain(0.0F, 1.0F);

  // sky: vertical brightness gradient, blue-ish or sunset tint
  const float top = uniform(rng, 205.0F, 250.0F);
  const float bottom = uniform(rng, 155.0F, top - 15.0F);
  const bool sunset = std::bernoulli_distribution(0.25)(rng);
  const Rgb tint = sunset ? Rgb{1.0F, uniform(rng, 0.65F, 0.85F), uniform(rng, 0.5F, 0.8F)}
                          : Rgb{uniform(rng, 0.55F, 0.9F), uniform(rng, 0.75F, 0.95F), 1.0F};
  for (std::size_t y = 0; y < sky_end; ++y) {
    const float t = static_cast<float>(y) / static_cast<float>(sky_end - 1);
    const float level = top + (bottom - top) * t;
    for (std::size_t x = 0; x < side; ++x) {
      const float n = 2.0F * grain(rng);
      put(img, y, x, {level * tint.r + n, level * tint.g + n, level * tint.b + n});
    }
  }

  // middle band: flat mid-tone backdrop
  const float mid = uniform(rng, 80.0F, 150.0F);
  const Rgb backdrop{mid * uniform(rng, 0.8F, 1.1F), mid * uniform(rng, 0.8F, 1.1F), mid * uniform(rng, 0.8F, 1.1F)};
  for (std::size_t y = sky_end; y < ground_begin; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const float n = 3.0F * grain(rng);
      put(img, y, x, {backdrop.r + n, backdrop.g + n, backdrop.b + n});
    }
  }

  // ground: dark, green or brown, with per-pixel texture and row streaks
  const float base = uniform(rng, 30.0F, 75.0F);
  const bool grass = std::bernoulli_distribution(0.5)(rng);
  const Rgb soil = grass ? Rgb{0.7F, 1.0F, 0.55F} : Rgb{1.0F, 0.8F, 0.6F};
  for (std::size_t y = ground_begin; y < side; ++y) {
    const float streak = 6.0F * grain(rng);
    for (std::size_t x = 0; x < side; ++x) {
      const float n = 10.0F * grain(rng) + streak;
      put(img, y, x, {base * soil.r + n, base * soil.g + n, base * soil.b + n});
    }
  }

  // random shapes confined to the middle band
  const int shapes = std::uniform_int_distribution<int>(2, 5)(rng);
  const auto s = static_cast<float>(side);
  for (int k = 0; k < shapes; ++k) {
    const Rgb color{uniform(rng, 0.0F, 255.0F), uniform(rng, 0.0F, 255.0F), uniform(rng, 0.0F, 255.0F)};
    const float cy = uniform(rng, static_cast<float>(sky_end), static_cast<float>(ground_begin));
    const float cx = uniform(rng, 0.0F, s);
    const float ry = uniform(rng, s / 24.0F, s / 7.0F);
    const float rx = uniform(rng, s / 24.0F, s / 5.0F);
    const bool ellipse = std::bernoulli_distribution(0.5)(rng);
    for (std::size_t y = sky_end; y < ground_begin; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const float dy = (static_cast<float>(y) + 0.5F - cy) / ry;
        const float dx = (static_cast<float>(x) + 0.5F - cx) / rx;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0F : std::abs(dx) <= 1.0F && std::abs(dy) <= 1.0F;
        if (inside) {
          put(img, y, x, color);
        }
      }
    }
  }

  quantize(img);
  return {rotate_image(img, theta), theta};
}

Tensor synth_shape(Rng& rng, std::size_t side, int shape_class) {
  if (shape_class < 0 || shape_class >= kShapeClasses) {
    throw DataError("synth_shape: class must be in [0, " + std::to_string(kShapeClasses) + ")");
  }
  if (side < 16) {
    throw UsageError("synth_shape: side must be >= 16");
  }
  Tensor img({3, side, side});
  std::normal_distribution<float> grain(0.0F, 1.0F);
  const Rgb bg{uniform(rng, 40.0F, 215.0F), uniform(rng, 40.0F, 215.0F), uniform(rng, 40.0F, 215.0F)};
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const float n = 12.0F * grain(rng);
      put(img, y, x, {bg.r + n, bg.g + n, bg.b + n});
    }
  }
  // foreground shifted well away from the background brightness
  const float shift = std::bernoulli_distribution(0.5)(rng) ? 1.0F : -1.0F;
  const float amount = uniform(rng, 70.0F, 120.0F);
  auto away = [&](float v) {
    const float moved = v + shift * amount;
    return (moved < 0.0F || moved > 255.0F) ? v - shift * amount : moved;
  };
  const Rgb fg{away(bg.r), away(bg.g), away(bg.b)};

  const auto s = static_cast<float>(side);
  const float radius = uniform(rng, s / 6.0F, s / 3.5F);
  const float cy = uniform(rng, radius, s - radius);
  const float cx = uniform(rng, radius, s - radius);
  const float angle = uniform(rng, 0.0F, 2.0F * std::numbers::pi_v<float>);
  const float ca = std::cos(angle);
  const float sa = std::sin(angle);

  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const float dy = static_cast<float>(y) + 0.5F - cy;
      const float dx = static_cast<float>(x) + 0.5F - cx;
      const float u = ca * dx + sa * dy;
      const float v = -sa * dx + ca * dy;
      const float d2 = dx * dx + dy * dy;
      bool inside = false;
      switch (shape_class) {
        case 0: inside = d2 <= radius * radius; break;
        case 1: inside = std::abs(u) <= 0.8F * radius && std::abs(v) <= 0.8F * radius; break;
        case 2: {
          // equilateral triangle: three half-planes at 120 degree steps
          inside = true;
          for (int k = 0; k < 3 && inside; ++k) {
            const float phi = 2.0F * std::numbers::pi_v<float> * static_cast<float>(k) / 3.0F;
            inside = std::cos(phi) * u + std::sin(phi) * v <= 0.5F * radius;
          }
          break;
        }
        default: inside = d2 <= radius * radius && d2 >= 0.3F * radius * radius; break;
      }
      if (inside) {
        put(img, y, x, fg);
      }
    }
  }
  quantize(img);
  return img;
}

DatasetManifest synthetic_sources(std::uint64_t seed, std::size_t count, std::size_t side) {
  DatasetManifest manifest;
  manifest.source = "synthetic-scenes/seed" + std::to_string(seed);
  manifest.entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    manifest.entries.push_back({"synth:scene/" + std::to_string(side) + "/" + std::to_string(seed) + "/" +
                                    std::to_string(i),
                                OrientationLabel(0)});
  }
  return manifest;
}

// ---- datasets ----------------------------------------------------------------------

namespace {

Tensor load_synthetic(const std::string& uri) {
  // synth:scene/<side>/<seed>/<index>
  constexpr std::string_view prefix = "synth:scene/";
  std::istringstream parts(uri.substr(prefix.size()));
  std::string token;
  std::vector<std::uint64_t> fields;
  while (std::getline(parts, token, '/')) {
    try {
      std::size_t used = 0;
      fields.push_back(std::stoull(token, &used));
      if (used != token.size()) {
        throw DataError("trailing characters");
      }
    } catch (const std::exception&) {
      throw DataError("malformed synthetic image URI '" + uri + "'");
    }
  }
  if (fields.size() != 3) {
    throw DataError("malformed synthetic image URI '" + uri + "' (expected synth:scene/<side>/<seed>/<index>)");
  }
  Rng rng = make_stream(fields[1], fields[2]);
  return synth_scene(rng, fields[0], OrientationLabel(0)).image;
}

}  // namespace

ImageLoader default_loader(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const std::string& path) -> Tensor {
    if (path.rfind("synth:scene/", 0) == 0) {
      return load_synthetic(path);
    }
    std::filesystem::path file(path);
    if (file.is_relative() && !base.empty()) {
      file = base / file;
    }
    return decode(file).pixels;
  };
}

Dataset materialize(const DatasetManifest& manifest, const ImageLoader& loader, std::size_t side) {
  std::vector<std::string> unique_paths;
  std::unordered_map<std::string, std::size_t> index_of;
  for (const auto& e : manifest.entries) {
    if (index_of.emplace(e.path, unique_paths.size()).second) {
      unique_paths.push_back(e.path);
    }
  }

  std::vector<Tensor> upright(unique_paths.size());
  std::vector<std::string> errors(unique_paths.size());
  const auto count = static_cast<std::ptrdiff_t>(unique_paths.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      upright[idx] = loader(unique_paths[idx]);
      if (upright[idx].rank() != 3 || upright[idx].dim(0) != 3) {
        errors[idx] = "'" + unique_paths[idx] + "' is not a 3-channel image";
      }
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) {
      throw DataError(err);
    }
  }

  Dataset dataset;
  dataset.tag = manifest.source;
  dataset.images.resize(manifest.entries.size());
  dataset.labels.resize(manifest.entries.size());
  const auto entries = static_cast<std::ptrdiff_t>(manifest.entries.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < entries; ++i) {
    const auto& e = manifest.entries[static_cast<std::size_t>(i)];
    const Tensor& source = upright[index_of.at(e.path)];
    dataset.images[static_cast<std::size_t>(i)] = resize_bilinear(rotate_image(source, e.label), side, side);
    dataset.labels[static_cast<std::size_t>(i)] = e.label.theta();
  }
  return dataset;
}

Dataset synth_shape_dataset(std::uint64_t seed, std::size_t count, std::size_t side) {
  Dataset dataset;
  dataset.tag = "synthetic-shapes/seed" + std::to_string(seed);
  dataset.images.resize(count);
  dataset.labels.resize(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    Rng rng = make_stream(seed, 0x5EA9E5ULL, idx);
    const int cls = static_cast<int>(idx % kShapeClasses);
    dataset.images[idx] = synth_shape(rng, side, cls);
    dataset.labels[idx] = cls;
  }
  return dataset;
}

std::array<float, 3> compute_mean_rgb(const Dataset& dataset) {
  std::array<double, 3> sums{};
  std::size_t pixels = 0;
  for (const auto& img : dataset.images) {
    if (img.rank() != 3 || img.dim(0) != 3) {
      throw DataError("compute_mean_rgb: expected (3, H, W) images");
    }
    const std::size_t plane = img.dim(1) * img.dim(2);
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        s += img[c * plane + i];
      }
      sums[c] += s;
    }
    pixels += plane;
  }
  if (pixels == 0) {
    throw DataError("compute_mean_rgb: empty dataset");
  }
  return {static_cast<float>(sums[0] / static_cast<double>(pixels)),
          static_cast<float>(sums[1] / static_cast<double>(pixels)),
          static_cast<float>(sums[2] / static_cast<double>(pixels))};
}

}  // namespace orient
