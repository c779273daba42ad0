#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "huge/core.hpp"
#include "huge/graph.hpp"
#include "huge/numerics.hpp"

namespace huge {

enum class Metric { halo, euclidean, cosine, ahr };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

namespace detail {
template <typename DerivedA, typename DerivedB>
void check_pair(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("attribute dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  if (!a.allFinite() || !b.allFinite()) throw ValidationError("non-finite attribute value");
}
}  // namespace detail

/// Numerator and squared denominator of HALO, kept apart so the
/// constant-norm monotonicity check can hold the denominator fixed.
template <typename T>
struct HaloParts {
  T numerator;
  T denominator;
  T value() const { return numerator / denominator; }
};

template <typename DerivedA, typename DerivedB>
HaloParts<typename DerivedA::Scalar> halo_parts(const Eigen::MatrixBase<DerivedA>& xi,
                                                const Eigen::MatrixBase<DerivedB>& xj,
                                                typename DerivedA::Scalar eps) {
  using Scalar = typename DerivedA::Scalar;
  detail::check_pair(xi, xj);
  const auto gap = (xi - xj).cwiseAbs().eval();
  const auto ri = gap.cwiseProduct(xi).eval();
  const auto rj = gap.cwiseProduct(xj).eval();
  const Scalar num = (ri - rj).norm();
  const Scalar den = std::sqrt(ri.squaredNorm() + rj.squaredNorm() + eps);
  return {num, den};
}

/// Harmonic label-free heterophily of one edge. Rescales both attribute
/// vectors by their element-wise absolute gap, then takes the normalized
/// Euclidean distance of the rescaled pair. Range [0, sqrt(3)).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar halo_edge(const Eigen::MatrixBase<DerivedA>& xi,
                                    const Eigen::MatrixBase<DerivedB>& xj,
                                    typename DerivedA::Scalar eps = 1e-12) {
  return halo_parts(xi, xj, eps).value();
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_edge(const Eigen::MatrixBase<DerivedA>& xi,
                                         const Eigen::MatrixBase<DerivedB>& xj) {
  detail::check_pair(xi, xj);
  return (xi - xj).norm();
}

/// Negated cosine similarity, in [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_edge(const Eigen::MatrixBase<DerivedA>& xi,
                                      const Eigen::MatrixBase<DerivedB>& xj,
                                      typename DerivedA::Scalar eps = 1e-12) {
  detail::check_pair(xi, xj);
  return -cosine_similarity(xi, xj, eps);
}

/// Fraction of coordinates that differ (exact floating comparison).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar ahr_edge(const Eigen::MatrixBase<DerivedA>& xi,
                                   const Eigen::MatrixBase<DerivedB>& xj) {
  using Scalar = typename DerivedA::Scalar;
  detail::check_pair(xi, xj);
  if (xi.size() == 0) return Scalar(0);
  const auto differing = (xi.array() != xj.array()).count();
  return static_cast<Scalar>(differing) / static_cast<Scalar>(xi.size());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar edge_heterophily(Metric metric, const Eigen::MatrixBase<DerivedA>& xi,
                                           const Eigen::MatrixBase<DerivedB>& xj,
                                           typename DerivedA::Scalar eps = 1e-12) {
  switch (metric) {
    case Metric::halo: return halo_edge(xi, xj, eps);
    case Metric::euclidean: return euclidean_edge(xi, xj);
    case Metric::cosine: return cosine_edge(xi, xj, eps);
    case Metric::ahr: return ahr_edge(xi, xj);
  }
  throw ValidationError("unknown metric");
}

/// Per directed edge slot (aligned with col_indices) and per node values.
struct HeterophilyField {
  std::vector<double> edge_values;
  Vector node_values;
  Metric metric = Metric::halo;
  double eps = 1e-12;
  Index isolated_nodes = 0;
};

/// Node value = mean of incident edge values; isolated nodes get 0.
HeterophilyField node_heterophily(const AttributedGraph& g, Metric metric, double eps = 1e-12);

/// Signature of node_heterophily, so callers (the trainer) can accept a
/// substitute provider.
using HeterophilyProvider =
    std::function<HeterophilyField(const AttributedGraph&, Metric, double)>;

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  std::string detail;
  /// Example offending pair, when one was found.
  std::vector<double> example_x;
  std::vector<double> example_y;
  double example_value = 0.0;
};

struct PropertyReport {
  Metric metric = Metric::halo;
  std::int64_t trials = 0;
  std::int64_t dim = 0;
  std::uint64_t seed = 0;
  double eps = 1e-12;
  PropertyResult boundedness;
  PropertyResult minimal_agreement;
  PropertyResult monotonicity;
  PropertyResult equal_attribute_tolerance;
  /// Sign disagreement rate of the unrestricted derivative (no constant-norm
  /// relaxation). Informational; HALO is expected to fail this.
  double unrelaxed_monotonicity_disagreement = 0.0;

  bool all_passed() const {
    return boundedness.passed && minimal_agreement.passed && monotonicity.passed &&
           equal_attribute_tolerance.passed;
  }
};

/// Randomized counter-example search for boundedness, minimal agreement,
/// monotonicity and equal attribute tolerance. dim = 0 samples dimensions
/// uniformly from [2, 64]. Findings are returned, never thrown.
PropertyReport check_properties(Metric metric, std::int64_t trials, std::int64_t dim,
                                std::uint64_t seed, double eps = 1e-12);

std::string to_json(const PropertyReport& report, int indent = 2);

}  // namespace huge
