#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "orient/errors.hpp"

namespace orient {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float32 array. Image and activation tensors use
/// (batch, channels, height, width) order.
///
/// A default-constructed Tensor is "empty" (rank 0, no storage) and is used
/// as the not-yet-computed marker for cached activations. Every constructed
/// tensor has all extents >= 1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0F);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t rank() const { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const;
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  [[nodiscard]] std::span<float> data() { return data_; }
  [[nodiscard]] std::span<const float> data() const { return data_; }
  [[nodiscard]] float* raw() { return data_.data(); }
  [[nodiscard]] const float* raw() const { return data_.data(); }
  [[nodiscard]] const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // 4-D accessors (n, c, h, w).
  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  [[nodiscard]] float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  // 3-D accessors (c, h, w).
  float& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  [[nodiscard]] float at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  /// Same storage, new shape of equal volume.
  [[nodiscard]] Tensor reshaped(Shape shape) const&;
  [[nodiscard]] Tensor reshaped(Shape shape) &&;

  /// Copy of sample `n` along the leading axis, with the leading axis dropped.
  [[nodiscard]] Tensor slice(std::size_t n) const;
  /// Writes `sample` (shape == shape()[1:]) into position `n` of the leading axis.
  void set_slice(std::size_t n, const Tensor& sample);

  void fill(float value);
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Stacks equally-shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> items);

void require_shape(const Tensor& t, const Shape& expected, const char* what);
void require_rank(const Tensor& t, std::size_t rank, const char* what);

}  // namespace orient
