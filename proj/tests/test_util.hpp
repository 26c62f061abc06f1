#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "orient/rng.hpp"
#include "orient/tensor.hpp"

namespace orient::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, float lo = -1.0F, float hi = 1.0F) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> dist(lo, hi);
  for (auto& v : t.data()) {
    v = dist(rng);
  }
  return t;
}

/// Projection weights used to turn a tensor-valued map into a scalar loss.
inline std::vector<double> random_projection(std::size_t n, Rng& rng) {
  std::vector<double> r(n);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : r) {
    v = dist(rng);
  }
  return r;
}

inline double project(const Tensor& y, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += r[i] * static_cast<double>(y[i]);
  }
  return s;
}

inline Tensor projection_tensor(const Shape& shape, const std::vector<double>& r) {
  Tensor g(shape);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = static_cast<float>(r[i]);
  }
  return g;
}

/// Central differences of `loss` with respect to every element of `x`. The
/// step actually taken (after float rounding) is used as the denominator.
inline std::vector<double> numeric_grad(Tensor& x, const std::function<double()>& loss, float eps = 1e-3F) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float orig = x[i];
    const float hi = orig + eps;
    const float lo = orig - eps;
    x[i] = hi;
    const double fp = loss();
    x[i] = lo;
    const double fm = loss();
    x[i] = orig;
    g[i] = (fp - fm) / (static_cast<double>(hi) - static_cast<double>(lo));
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, tiny).
inline double relative_error(const Tensor& analytic, const std::vector<double>& numeric) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i];
    diff += (a - numeric[i]) * (a - numeric[i]);
    na += a * a;
    nb += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
  float m = 0.0F;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace orient::testing
