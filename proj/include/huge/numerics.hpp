#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "huge/core.hpp"

namespace huge {

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  MatrixX<Scalar> out = a * b;
  return out;
}

/// uᵀv / (max(|u|,eps) max(|v|,eps)), clamped to [-1, 1].
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedU>& u,
                                            const Eigen::MatrixBase<DerivedV>& v,
                                            typename DerivedU::Scalar eps = 1e-8) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
  const Scalar nu = std::max(u.norm(), eps);
  const Scalar nv = std::max(v.norm(), eps);
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// log(1 + exp(-x)) without overflow for any finite x.
template <typename T>
T softplus_neg(T x) {
  if (x >= T(0)) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

/// d/dx log(1 + exp(-x)) = -1 / (1 + exp(x)).
template <typename T>
T softplus_neg_derivative(T x) {
  if (x >= T(0)) {
    const T e = std::exp(-x);
    return -e / (T(1) + e);
  }
  return T(-1) / (T(1) + std::exp(x));
}

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(Index size)
      : first_moment(Vector::Zero(size)), second_moment(Vector::Zero(size)) {}
};

/// One bias-corrected Adam update of params in place.
void adam_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, AdamState& state,
               double lr, const AdamOptions& options = {});

/// Central differences (f(θ+h e_k) - f(θ-h e_k)) / 2h for every coordinate.
/// Throws NumericalError if the loss is non-finite at any probe point.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& loss_fn,
                            const Vector& params, double h = 1e-5);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw.
/// Independent of the standard library's distribution implementation, so
/// seeded streams reproduce across toolchains.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller on uniform01.
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

/// 64-bit FNV-1a; used for config and file fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace huge
