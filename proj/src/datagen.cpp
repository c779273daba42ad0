#include "huge/datagen.hpp"

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <json.hpp>

#include "huge/numerics.hpp"

namespace huge {

namespace {

constexpr int kBenignClusters = 4;
constexpr double kClusterSpread = 2.0;
constexpr double kNoise = 1.0;
constexpr double kFraudShift = 6.0;
constexpr int kMaxProposals = 100;

Vector gaussian(std::mt19937_64& rng, Index d, double scale) {
  Vector v(d);
  for (Index k = 0; k < d; ++k) v[k] = scale * standard_normal(rng);
  return v;
}

}  // namespace

void SynthSpec::validate() const {
  if (n < 2) throw ValidationError("synth: n must be >= 2");
  if (d < 1) throw ValidationError("synth: d must be >= 1");
  if (!(fraud_fraction > 0.0 && fraud_fraction < 0.5)) {
    throw ValidationError("synth: fraud_fraction must lie in (0, 0.5)");
  }
  if (static_cast<double>(n) * fraud_fraction < 2.0) {
    throw ValidationError("synth: expected fraud count n * fraud_fraction is below 2");
  }
  if (!(avg_degree >= 1.0)) throw ValidationError("synth: avg_degree must be >= 1");
  if (!(avg_degree < static_cast<double>(n))) throw ValidationError("synth: avg_degree must be < n");
  if (!(camouflage >= 0.0 && camouflage <= 1.0)) {
    throw ValidationError("synth: camouflage must lie in [0, 1]");
  }
  if (!(heterophilic_wiring >= 0.0 && heterophilic_wiring <= 1.0)) {
    throw ValidationError("synth: heterophilic_wiring must lie in [0, 1]");
  }
}

std::string SynthSpec::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["fraud_fraction"] = fraud_fraction;
  j["avg_degree"] = avg_degree;
  j["camouflage"] = camouflage;
  j["heterophilic_wiring"] = heterophilic_wiring;
  j["d"] = d;
  j["seed"] = seed;
  return j.dump(indent);
}

SynthSpec synth_spec_from_json(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
  SynthSpec s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key == "n") s.n = it->get<Index>();
      else if (key == "fraud_fraction") s.fraud_fraction = it->get<double>();
      else if (key == "avg_degree") s.avg_degree = it->get<double>();
      else if (key == "camouflage") s.camouflage = it->get<double>();
      else if (key == "heterophilic_wiring") s.heterophilic_wiring = it->get<double>();
      else if (key == "d") s.d = it->get<Index>();
      else if (key == "seed") s.seed = it->get<std::uint64_t>();
      else throw ValidationError("unknown synth spec key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth spec value has the wrong type: ") + e.what());
  }
  return s;
}

AttributedGraph generate(const SynthSpec& spec) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32), 0x5f47u};
  std::mt19937_64 rng(seq);
  const Index n = spec.n;
  const Index d = spec.d;

  const auto n_fraud = static_cast<Index>(std::llround(static_cast<double>(n) * spec.fraud_fraction));
  std::vector<int> labels(n, 0);
  for (Index i = 0; i < n_fraud; ++i) labels[i] = 1;
  shuffle(labels, rng);

  std::vector<Vector> centers;
  Vector benign_mean = Vector::Zero(d);
  for (int k = 0; k < kBenignClusters; ++k) {
    centers.push_back(gaussian(rng, d, kClusterSpread));
    benign_mean += centers.back() / kBenignClusters;
  }
  Vector shift = gaussian(rng, d, 1.0);
  shift /= shift.norm();
  const Vector fraud_center = benign_mean + (1.0 - spec.camouflage) * kFraudShift * shift;

  Matrix x(n, d);
  std::vector<Index> benign;
  for (Index i = 0; i < n; ++i) {
    const Vector noise = gaussian(rng, d, kNoise);
    if (labels[i] == 1) {
      x.row(i) = (fraud_center + noise).transpose();
    } else {
      const auto k = uniform_index(rng, kBenignClusters);
      x.row(i) = (centers[k] + noise).transpose();
      benign.push_back(i);
    }
  }

  // Acceptance exp(-|xi - xj|^2 / tau^2); same-cluster pairs sit near
  // 2 d noise^2 in squared distance.
  const double tau2 = 4.0 * kNoise * kNoise * static_cast<double>(d);
  auto similar_partner = [&](Index i, bool benign_only) {
    Index best = -1;
    double best_dist = 0.0;
    for (int t = 0; t < kMaxProposals; ++t) {
      Index j;
      if (benign_only) {
        j = benign[uniform_index(rng, benign.size())];
      } else {
        j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      }
      if (j == i) continue;
      const double dist = (x.row(i) - x.row(j)).squaredNorm();
      if (uniform01(rng) < std::exp(-dist / tau2)) return j;
      if (best < 0 || dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    return best;
  };

  const double half = spec.avg_degree / 2.0;
  const double half_floor = std::floor(half);
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(static_cast<std::size_t>(static_cast<double>(n) * (half + 1.0)));
  for (Index i = 0; i < n; ++i) {
    const int stubs =
        static_cast<int>(half_floor) + (uniform01(rng) < half - half_floor ? 1 : 0);
    for (int s = 0; s < stubs; ++s) {
      Index j;
      if (labels[i] == 1 && uniform01(rng) < spec.heterophilic_wiring) {
        j = benign[uniform_index(rng, benign.size())];
      } else {
        j = similar_partner(i, labels[i] == 0);
      }
      if (j >= 0 && j != i) edges.emplace_back(i, j);
    }
  }
  return AttributedGraph::from_edges(edges, std::move(x), std::move(labels));
}

}  // namespace huge
