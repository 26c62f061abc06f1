#pragma once

#include <optional>
#include <string>

#include "orient/datapipe.hpp"
#include "orient/netspec.hpp"

namespace orient {

struct SaliencyMap {
  Tensor raw;         // (h', w') at the feature-map resolution, values >= 0
  Tensor normalized;  // (H, W) at input resolution, values in [0, 1]
  OrientationLabel target;
};

/// Index of the layer whose output Grad-CAM weighs: the ReLU directly after
/// the last conv layer, or that conv layer when no ReLU follows it.
std::size_t grad_cam_layer(const NetworkSpec& spec);

/// Gradient-weighted class activation map of the logit for `target` (the
/// predicted class when absent). `input` is a preprocessed (3, H, W) tensor
/// matching the network input. Leaves gradient buffers of `net` populated.
SaliencyMap grad_cam(Network& net, const Tensor& input, std::optional<OrientationLabel> target = std::nullopt);

/// Blue (0) to red (1) colour for a normalized saliency value, 0-255 scale.
std::array<float, 3> heat_color(float value);

/// (1 - alpha) * image + alpha * heat_color(map), clamped to [0, 255]. The
/// map is resized to the image when their extents differ.
Tensor render_overlay(const Tensor& image, const SaliencyMap& map, float alpha);

/// Rows of comma-separated values of a 2-D tensor.
std::string map_csv(const Tensor& map);

}  // namespace orient
