#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "huge/encoder.hpp"
#include "huge/graph.hpp"
#include "huge/heterophily.hpp"
#include "huge/losses.hpp"

namespace huge {

struct TrainConfig {
  std::int64_t epochs = 300;
  std::int64_t batch_size = 8192;
  double alpha = 0.5;
  double lr = 0.0005;
  std::uint64_t seed = 0;
  double eps_halo = 1e-12;
  std::int64_t d_e = 128;
  Metric metric = Metric::halo;
  /// false drops the GNN branch entirely (L = L_rank).
  bool use_gnn = true;
  std::string optimizer = "adam";

  void validate() const;
  /// Canonical JSON (fixed key order); the config hash is taken over this.
  std::string to_json() const;
  /// Hex FNV-1a of to_json().
  std::string hash() const;
};

/// Fields present in json override those of base.
TrainConfig config_from_json(const std::string& json, const TrainConfig& base = {});

struct EpochRecord {
  std::int64_t epoch = 0;
  LossBreakdown mean;  // per-batch values averaged over the epoch
  std::int64_t batches = 0;
  double seconds = 0.0;
};

struct TrainLog {
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  Index isolated_nodes = 0;
  std::int64_t empty_minus_batches = 0;
  std::string checkpoint;

  /// One JSON object per epoch.
  std::string to_jsonl() const;
};

struct TrainResult {
  EncoderParams params;
  TrainLog log;
  HeterophilyField heterophily;
};

/// Mini-batch training: heterophily once, seeded init, then per epoch a
/// seeded permutation split into batches (the last one may be short), each
/// followed by one Adam step. Identical inputs give bitwise-identical output.
/// Throws NumericalError on a non-finite loss, with the batch in the message.
TrainResult train(const AttributedGraph& g, const TrainConfig& cfg,
                  const HeterophilyProvider& heterophily = node_heterophily);

/// Per-epoch node order: a seeded permutation of 0..n-1 cut into batches.
std::vector<std::vector<Index>> epoch_batches(Index n, std::int64_t batch_size,
                                              std::uint64_t seed, std::int64_t epoch);

/// Scores with full-graph neighborhoods. Throws ShapeError if the attribute
/// dimension does not match the encoder.
Vector infer(const EncoderParams& params, const AttributedGraph& g);

/// "node_id,score" CSV with original node ids, in dense node order.
void write_scores_csv(const std::filesystem::path& path, const AttributedGraph& g,
                      const Vector& scores, const std::string& column = "score");

}  // namespace huge
