#include "orient/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace orient {

std::size_t shape_volume(const Shape& shape) {
  if (shape.empty()) {
    return 0;
  }
  std::size_t volume = 1;
  for (auto extent : shape) {
    volume *= extent;
  }
  return volume;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) {
      out << 'x';
    }
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) {
    throw ShapeError("tensor shape must have at least one axis");
  }
  for (auto extent : shape) {
    if (extent == 0) {
      throw ShapeError("tensor extents must be >= 1, got " + shape_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_volume(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " needs " + std::to_string(shape_volume(shape_)) +
                     " values, got " + std::to_string(data_.size()));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  check_extents(shape);
  if (shape_volume(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

Tensor Tensor::slice(std::size_t n) const {
  if (rank() < 2 || n >= shape_[0]) {
    throw ShapeError("slice " + std::to_string(n) + " out of range for " + shape_string(shape_));
  }
  Shape inner(shape_.begin() + 1, shape_.end());
  const std::size_t stride = shape_volume(inner);
  std::vector<float> values(data_.begin() + static_cast<std::ptrdiff_t>(n * stride),
                            data_.begin() + static_cast<std::ptrdiff_t>((n + 1) * stride));
  return {std::move(inner), std::move(values)};
}

void Tensor::set_slice(std::size_t n, const Tensor& sample) {
  Shape inner(shape_.begin() + 1, shape_.end());
  if (rank() < 2 || n >= shape_[0] || sample.shape() != inner) {
    throw ShapeError("cannot place " + shape_string(sample.shape()) + " into slot " + std::to_string(n) +
                     " of " + shape_string(shape_));
  }
  std::copy(sample.data_.begin(), sample.data_.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(n * sample.size()));
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) {
    throw ShapeError("cannot stack zero tensors");
  }
  Shape shape{items.size()};
  shape.insert(shape.end(), items.front().shape().begin(), items.front().shape().end());
  Tensor out(shape);
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.set_slice(i, items[i]);
  }
  return out;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + shape_string(expected) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

}  // namespace orient
