#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "huge/core.hpp"
#include "huge/datagen.hpp"
#include "huge/graph.hpp"
#include "huge/trainer.hpp"

namespace huge {

/// Mann-Whitney AUROC with average ranks for tied scores. Throws
/// ValidationError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: Σ_k ΔRecall_k · Precision_k over descending distinct
/// score thresholds, each tie block taken at once.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct Variant {
  std::string name;
  TrainConfig config;
  /// Score nodes by their raw node heterophily instead of training.
  bool heterophily_only = false;
};

/// Table rows for the ablation: metric swaps, no alignment, no GNN branch.
std::vector<Variant> ablation_variants(const TrainConfig& base);

struct SeedResult {
  std::uint64_t seed = 0;
  double auroc = 0.0;
  double auprc = 0.0;
  Vector scores;
  std::vector<double> epoch_losses;
};

struct ScoreReport {
  std::string dataset;
  std::string variant;
  std::string metric;
  std::string config_hash;
  std::vector<SeedResult> runs;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  double auprc_mean = 0.0;
  double auprc_std = 0.0;
};

/// Trains and scores every (variant, seed) cell and aggregates mean and
/// population std per variant. Cells run on up to `threads` workers; each
/// cell is sequential, so results do not depend on the thread count.
std::vector<ScoreReport> run_matrix(const AttributedGraph& g, std::span<const Variant> variants,
                                    std::span<const std::uint64_t> seeds,
                                    const std::string& dataset = "graph", int threads = 1);

/// Merges reports sharing a variant name (runs concatenated) and recomputes
/// the aggregates.
std::vector<ScoreReport> summarize(std::span<const ScoreReport> reports,
                                   const std::string& dataset);

struct Suite {
  std::string name;
  SynthSpec graph;
  TrainConfig config;
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;
};

/// "desk": HUGE against the raw node-HALO score. "ablation": the
/// ablation_variants rows. Both on n=2000 planted-fraud graphs, 50 epochs.
Suite make_suite(const std::string& name);

struct SuiteResult {
  std::vector<ScoreReport> per_graph;
  std::vector<ScoreReport> summary;
};

/// Each seed s gets its own synthetic graph (generated with seed s) and a
/// training run with seed s; every variant of that seed sees the same graph.
SuiteResult run_suite(const Suite& suite, int threads = 1);

std::string reports_to_json(std::span<const ScoreReport> reports, int indent = 2);
/// dataset,variant,seed,auroc,auprc rows with a header line.
std::string reports_to_csv(std::span<const ScoreReport> reports);

}  // namespace huge
