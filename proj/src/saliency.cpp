#include "orient/saliency.hpp"

#include <algorithm>
#include <sstream>

namespace orient {

std::size_t grad_cam_layer(const NetworkSpec& spec) {
  const std::size_t conv = last_conv_index(spec);
  if (conv + 1 < spec.layers.size() && spec.layers[conv + 1].kind == LayerKind::relu) {
    return conv + 1;
  }
  return conv;
}

SaliencyMap grad_cam(Network& net, const Tensor& input, std::optional<OrientationLabel> target) {
  const NetworkSpec& spec = net.spec();
  const std::size_t feature = grad_cam_layer(spec);
  require_shape(input, {spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]}, "grad_cam input");

  Rng unused(0);
  std::vector<Tensor> outputs;
  const Tensor logits = net.forward(input.reshaped({1, input.dim(0), input.dim(1), input.dim(2)}), Mode::eval,
                                    unused, &outputs);
  if (!target) {
    const float* row = logits.raw();
    target = OrientationLabel(static_cast<int>(std::max_element(row, row + kClassCount) - row));
  }

  Tensor seed({1, kClassCount});
  seed[static_cast<std::size_t>(target->theta())] = 1.0F;
  const Tensor grad = net.backward(seed, feature + 1);
  const Tensor& acts = outputs[feature];

  const std::size_t channels = acts.dim(1);
  const std::size_t h = acts.dim(2);
  const std::size_t w = acts.dim(3);
  const std::size_t plane = h * w;
  Tensor raw({h, w});
  for (std::size_t k = 0; k < channels; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      sum += grad[k * plane + i];
    }
    const auto alpha = static_cast<float>(sum / static_cast<double>(plane));
    for (std::size_t i = 0; i < plane; ++i) {
      raw[i] += alpha * acts[k * plane + i];
    }
  }
  for (auto& v : raw.data()) {
    v = std::max(v, 0.0F);
  }

  Tensor up = resize_bilinear(raw.reshaped({1, h, w}), spec.input_shape[1], spec.input_shape[2]);
  const auto [lo, hi] = std::minmax_element(up.data().begin(), up.data().end());
  const float min = *lo;
  const float range = *hi - *lo;
  for (auto& v : up.data()) {
    v = range > 0.0F ? (v - min) / range : 0.0F;
  }
  return {std::move(raw), std::move(up).reshaped({spec.input_shape[1], spec.input_shape[2]}), *target};
}

std::array<float, 3> heat_color(float value) {
  const float t = std::clamp(value, 0.0F, 1.0F);
  return {255.0F * t, 0.0F, 255.0F * (1.0F - t)};
}

Tensor render_overlay(const Tensor& image, const SaliencyMap& map, float alpha) {
  if (!(alpha >= 0.0F && alpha <= 1.0F)) {
    throw UsageError("overlay alpha must lie in [0, 1]");
  }
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DataError("overlay needs a (3, H, W) image, got " + shape_string(image.shape()));
  }
  require_rank(map.normalized, 2, "saliency map");
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  Tensor heat = map.normalized;
  if (heat.dim(0) != h || heat.dim(1) != w) {
    heat = resize_bilinear(heat.reshaped({1, heat.dim(0), heat.dim(1)}), h, w).reshaped({h, w});
  }
  Tensor out(image.shape());
  const float keep = 1.0F - alpha;
  for (std::size_t i = 0; i < h * w; ++i) {
    const auto color = heat_color(heat[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = keep * image[c * h * w + i] + alpha * color[c];
      out[c * h * w + i] = std::clamp(v, 0.0F, 255.0F);
    }
  }
  return out;
}

std::string map_csv(const Tensor& map) {
  require_rank(map, 2, "map_csv");
  std::ostringstream out;
  out.precision(7);
  for (std::size_t r = 0; r < map.dim(0); ++r) {
    for (std::size_t c = 0; c < map.dim(1); ++c) {
      if (c > 0) {
        out << ',';
      }
      out << map[r * map.dim(1) + c];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace orient
