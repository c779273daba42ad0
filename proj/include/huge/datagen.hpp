#pragma once

#include <cstdint>
#include <string>

#include "huge/graph.hpp"

namespace huge {

/// Planted-fraud graph: benign nodes from a few Gaussian clusters with
/// homophilic wiring, fraud nodes from one shifted cluster that connect to
/// benign nodes to hide.
struct SynthSpec {
  Index n = 2000;
  double fraud_fraction = 0.05;
  double avg_degree = 10.0;
  /// 0 keeps the fraud cluster at its shifted center, 1 puts it on the
  /// benign mean.
  double camouflage = 0.5;
  /// Fraction of each fraud node's edges that go to random benign nodes.
  double heterophilic_wiring = 0.8;
  Index d = 16;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json(int indent = -1) const;
};

/// Unknown keys are rejected; missing keys keep the defaults above.
SynthSpec synth_spec_from_json(const std::string& json);

/// Fraud count is round(n * fraud_fraction), placed at shuffled positions.
/// Deterministic in spec (including seed).
AttributedGraph generate(const SynthSpec& spec);

}  // namespace huge
