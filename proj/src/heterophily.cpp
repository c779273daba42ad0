#include "huge/heterophily.hpp"

#include <algorithm>
#include <random>

#include <json.hpp>

namespace huge {

Metric parse_metric(const std::string& name) {
  if (name == "halo") return Metric::halo;
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  if (name == "ahr") return Metric::ahr;
  throw ValidationError("unknown heterophily metric '" + name +
                        "' (expected halo, euclidean, cosine or ahr)");
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::halo: return "halo";
    case Metric::euclidean: return "euclidean";
    case Metric::cosine: return "cosine";
    case Metric::ahr: return "ahr";
  }
  return "unknown";
}

HeterophilyField node_heterophily(const AttributedGraph& g, Metric metric, double eps) {
  HeterophilyField field;
  field.metric = metric;
  field.eps = eps;
  const Index n = g.num_nodes();
  const auto& offsets = g.row_offsets();
  const auto& cols = g.col_indices();
  field.edge_values.assign(cols.size(), 0.0);
  field.node_values = Vector::Zero(n);

  for (Index i = 0; i < n; ++i) {
    for (Index slot = offsets[i]; slot < offsets[i + 1]; ++slot) {
      const Index j = cols[slot];
      if (j < i) continue;
      const double value = edge_heterophily(metric, g.attribute_row(i), g.attribute_row(j), eps);
      field.edge_values[slot] = value;
      const auto back = neighbors(g, j);
      const auto pos = std::lower_bound(back.begin(), back.end(), i) - back.begin();
      field.edge_values[offsets[j] + pos] = value;
    }
  }
  for (Index i = 0; i < n; ++i) {
    const Index deg = offsets[i + 1] - offsets[i];
    if (deg == 0) {
      ++field.isolated_nodes;
      continue;
    }
    double sum = 0.0;
    for (Index slot = offsets[i]; slot < offsets[i + 1]; ++slot) sum += field.edge_values[slot];
    field.node_values[i] = sum / static_cast<double>(deg);
  }
  return field;
}

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kBoundSlack = 1e-9;
constexpr double kAgreementSlack = 1e-9;
constexpr double kToleranceDrift = 1e-12;
constexpr double kMonotoneBand = 1e-6;
// Stand-in for "any fixed bound" when a metric declares none.
constexpr double kProbeBound = 1e6;

struct Bounds {
  double lower;
  double upper;
};

Bounds declared_bounds(Metric metric) {
  switch (metric) {
    case Metric::halo: return {0.0, kSqrt3 + kBoundSlack};
    case Metric::euclidean: return {0.0, kProbeBound};
    case Metric::cosine: return {-1.0, 1.0};
    case Metric::ahr: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

double minimum_value(Metric metric) { return metric == Metric::cosine ? -1.0 : 0.0; }

class PairSampler {
 public:
  PairSampler(std::uint64_t seed, std::int64_t dim) : rng_(seed), dim_(dim) {}

  Index next_dim() {
    if (dim_ > 0) return dim_;
    return 2 + static_cast<Index>(uniform_index(rng_, 63));
  }

  // Entries at a log-uniform scale in [1e-3, 1e6]; a third of the vectors are
  // nonnegative, as count-like attributes are.
  Vector vector(Index d) { return vector(d, std::pow(10.0, uniform(rng_, -3.0, 6.0))); }

  Vector vector(Index d, double scale) {
    Vector v(d);
    const bool nonnegative = uniform01(rng_) < 1.0 / 3.0;
    for (Index k = 0; k < d; ++k) {
      const double z = standard_normal(rng_);
      v[k] = scale * (nonnegative ? std::abs(z) : z);
    }
    return v;
  }

  // A vector distinct from x: either one coordinate nudged, every
  // coordinate jittered, or a parallel copy at a different norm.
  Vector distinct_from(const Vector& x) {
    Vector y = x;
    const double kind = uniform01(rng_);
    const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-3);
    if (kind < 1.0 / 3.0) {
      const Index k = static_cast<Index>(uniform_index(rng_, x.size()));
      const double rel = std::pow(10.0, uniform(rng_, -3.0, 0.0));
      y[k] += (uniform01(rng_) < 0.5 ? -1.0 : 1.0) * rel * std::max(std::abs(x[k]), 1e-3 * scale);
    } else if (kind < 2.0 / 3.0) {
      for (Index k = 0; k < x.size(); ++k) y[k] += 0.1 * scale * standard_normal(rng_);
    } else {
      y *= uniform(rng_, 1.5, 10.0);
    }
    return y;
  }

  double scalar() { return std::pow(10.0, uniform(rng_, -3.0, 6.0)) * standard_normal(rng_); }

 private:
  std::mt19937_64 rng_;
  std::int64_t dim_;
};

void record(PropertyResult& r, const Vector& x, const Vector& y, double value,
            const std::string& detail) {
  if (r.violations == 0) {
    r.example_x.assign(x.data(), x.data() + x.size());
    r.example_y.assign(y.data(), y.data() + y.size());
    r.example_value = value;
    r.detail = detail;
  }
  ++r.violations;
  r.passed = false;
}

PropertyResult check_boundedness(Metric metric, std::int64_t trials, PairSampler& sampler,
                                 double eps) {
  PropertyResult r;
  r.name = "boundedness";
  const Bounds b = declared_bounds(metric);
  for (std::int64_t t = 0; t < trials; ++t) {
    const Index d = sampler.next_dim();
    Vector x = sampler.vector(d);
    Vector y = sampler.vector(d);
    if (t % 4 == 0) {
      // Extreme-scale probe: both endpoints at the top of the scale range.
      x = sampler.vector(d, 1e6);
      y = sampler.vector(d, 1e6);
    }
    const double h = edge_heterophily(metric, x, y, eps);
    ++r.checks;
    if (!(h >= b.lower && h <= b.upper)) record(r, x, y, h, "value outside tested bounds");
  }
  if (r.passed) r.detail = "all values within tested bounds";
  return r;
}

PropertyResult check_minimal_agreement(Metric metric, std::int64_t trials, PairSampler& sampler,
                                       double eps) {
  PropertyResult r;
  r.name = "minimal_agreement";
  const double c_min = minimum_value(metric);
  for (std::int64_t t = 0; t < trials; ++t) {
    const Index d = sampler.next_dim();
    const Vector x = sampler.vector(d);
    const double same = edge_heterophily(metric, x, x, eps);
    ++r.checks;
    if (std::abs(same - c_min) > kAgreementSlack) {
      record(r, x, x, same, "identical vectors did not reach the minimum");
    }
    const Vector y = sampler.distinct_from(x);
    if (y == x) continue;
    const double diff = edge_heterophily(metric, x, y, eps);
    ++r.checks;
    if (diff <= c_min + kAgreementSlack) {
      record(r, x, y, diff, "distinct vectors reached the minimum");
    }
  }
  if (r.passed) r.detail = "minimum reached exactly on identical pairs only";
  return r;
}

struct MonotoneCounts {
  std::int64_t unrelaxed_checks = 0;
  std::int64_t unrelaxed_bad = 0;
};

PropertyResult check_monotonicity(Metric metric, std::int64_t trials, PairSampler& sampler,
                                  double eps, MonotoneCounts& counts) {
  PropertyResult r;
  r.name = "monotonicity";
  for (std::int64_t t = 0; t < trials; ++t) {
    const Index d = sampler.next_dim();
    Vector x = sampler.vector(d);
    Vector y = sampler.vector(d);
    if (metric == Metric::halo) {
      // Constant-norm pairs.
      const double nx = x.norm();
      const double ny = y.norm();
      if (ny > 0.0) y *= nx / ny;
    }
    const double gap_scale = std::max((x - y).cwiseAbs().maxCoeff(), 1.0);
    const double frozen_den = halo_parts(x, y, eps).denominator;
    for (Index k = 0; k < d; ++k) {
      const double gap = x[k] - y[k];
      if (std::abs(gap) < kMonotoneBand * gap_scale) continue;
      const double step = 1e-2 * std::abs(gap);
      Vector up = x;
      Vector down = x;
      up[k] += step;
      down[k] -= step;
      const double full =
          (edge_heterophily(metric, up, y, eps) - edge_heterophily(metric, down, y, eps)) /
          (2.0 * step);
      double slope = full;
      if (metric == Metric::halo) {
        // Rescaled norms held at their value at (x, y). The squared numerator
        // is a sum over coordinates, so its change under a move of x_k is the
        // change of term k alone; differencing the full vector would lose
        // small-gap terms to rounding.
        const Vector yk = y.segment(k, 1);
        const double n_up = halo_parts(Vector(up.segment(k, 1)), yk, eps).numerator;
        const double n_down = halo_parts(Vector(down.segment(k, 1)), yk, eps).numerator;
        const double num = halo_parts(x, y, eps).numerator;
        slope = (n_up * n_up - n_down * n_down) / (2.0 * step * 2.0 * num * frozen_den);
      }
      const double expected = gap > 0.0 ? 1.0 : -1.0;
      ++counts.unrelaxed_checks;
      if (!(full * expected > 0.0)) ++counts.unrelaxed_bad;
      ++r.checks;
      if (!(slope * expected > 0.0)) {
        record(r, x, y, slope,
               "derivative sign disagrees with attribute gap at coordinate " + std::to_string(k));
      }
    }
  }
  if (r.passed) {
    r.detail = metric == Metric::halo
                   ? "sign agreement on every coordinate with rescaled norms held constant"
                   : "sign agreement on every coordinate";
  }
  return r;
}

PropertyResult check_equal_attribute_tolerance(Metric metric, std::int64_t trials,
                                               PairSampler& sampler, double eps) {
  PropertyResult r;
  r.name = "equal_attribute_tolerance";
  for (std::int64_t t = 0; t < trials; ++t) {
    const Index d = sampler.next_dim();
    const Vector x = sampler.vector(d);
    const Vector y = sampler.vector(d);
    const double shared = sampler.scalar();
    Vector xa(d + 1);
    Vector ya(d + 1);
    xa << x, shared;
    ya << y, shared;
    const double before = edge_heterophily(metric, x, y, eps);
    const double after = edge_heterophily(metric, xa, ya, eps);
    ++r.checks;
    if (std::abs(after - before) > kToleranceDrift * std::max(1.0, std::abs(before))) {
      record(r, xa, ya, after - before, "appending a shared coordinate changed the value");
    }
  }
  if (r.passed) r.detail = "invariant to appended shared coordinates";
  return r;
}

nlohmann::json to_json_value(const PropertyResult& r) {
  nlohmann::json j = {{"passed", r.passed},
                      {"checks", r.checks},
                      {"violations", r.violations},
                      {"detail", r.detail}};
  if (!r.passed) {
    j["example"] = {{"x", r.example_x}, {"y", r.example_y}, {"value", r.example_value}};
  }
  return j;
}

}  // namespace

PropertyReport check_properties(Metric metric, std::int64_t trials, std::int64_t dim,
                                std::uint64_t seed, double eps) {
  if (trials <= 0) throw ValidationError("check_properties: trials must be positive");
  if (dim < 0) throw ValidationError("check_properties: dim must be nonnegative");
  PropertyReport report;
  report.metric = metric;
  report.trials = trials;
  report.dim = dim;
  report.seed = seed;
  report.eps = eps;

  // Independent streams per property so each check is reproducible alone.
  PairSampler bound_sampler(seed * 4 + 0, dim);
  PairSampler agree_sampler(seed * 4 + 1, dim);
  PairSampler mono_sampler(seed * 4 + 2, dim);
  PairSampler tol_sampler(seed * 4 + 3, dim);

  report.boundedness = check_boundedness(metric, trials, bound_sampler, eps);
  report.minimal_agreement = check_minimal_agreement(metric, trials, agree_sampler, eps);
  MonotoneCounts counts;
  report.monotonicity = check_monotonicity(metric, trials, mono_sampler, eps, counts);
  report.unrelaxed_monotonicity_disagreement =
      counts.unrelaxed_checks ? static_cast<double>(counts.unrelaxed_bad) /
                                    static_cast<double>(counts.unrelaxed_checks)
                              : 0.0;
  report.equal_attribute_tolerance =
      check_equal_attribute_tolerance(metric, trials, tol_sampler, eps);
  return report;
}

std::string to_json(const PropertyReport& report, int indent) {
  nlohmann::json j = {
      {"metric", to_string(report.metric)},
      {"trials", report.trials},
      {"dim", report.dim},
      {"seed", report.seed},
      {"eps", report.eps},
      {"all_passed", report.all_passed()},
      {"properties",
       {{"boundedness", to_json_value(report.boundedness)},
        {"minimal_agreement", to_json_value(report.minimal_agreement)},
        {"monotonicity", to_json_value(report.monotonicity)},
        {"equal_attribute_tolerance", to_json_value(report.equal_attribute_tolerance)}}},
      {"unrelaxed_monotonicity_disagreement", report.unrelaxed_monotonicity_disagreement},
  };
  return j.dump(indent);
}

}  // namespace huge
