#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "huge/core.hpp"
#include "huge/graph.hpp"
#include "huge/numerics.hpp"

namespace huge {

/// Norm floor for embedding cosines.
inline constexpr double kCosineEps = 1e-8;
/// Floor applied to rescaled similarities before any logarithm.
inline constexpr double kSimilarityFloor = 1e-8;

/// Learnable weights: a two-layer MLP (ReLU between the layers, linear
/// output) and one mean-aggregation GNN layer with a linear projection.
struct EncoderParams {
  Matrix w1;  // d x d_e
  RowVector b1;
  Matrix w2;  // d_e x d_e
  RowVector b2;
  Matrix wg;  // d_e x d_e
  RowVector bg;

  Index input_dim() const noexcept { return w1.rows(); }
  Index embed_dim() const noexcept { return w1.cols(); }
  Index size() const noexcept;

  static EncoderParams zeros(Index input_dim, Index embed_dim);
  /// He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)); zero biases.
  static EncoderParams init(Index input_dim, Index embed_dim, std::uint64_t seed);

  /// Concatenation in the order w1, b1, w2, b2, wg, bg (row-major).
  Vector flatten() const;
  void assign(const Eigen::Ref<const Vector>& flat);
  bool all_finite() const;
};

/// Adjacency view shared by the full graph and batch subgraphs.
struct CsrView {
  std::span<const Index> offsets;
  std::span<const Index> cols;

  Index num_rows() const noexcept { return static_cast<Index>(offsets.size()) - 1; }
  std::span<const Index> neighbors(Index i) const {
    return cols.subspan(offsets[i], offsets[i + 1] - offsets[i]);
  }
};

inline CsrView csr_view(const AttributedGraph& g) {
  return {g.row_offsets(), g.col_indices()};
}
inline CsrView csr_view(const Subgraph& sub) { return {sub.row_offsets, sub.col_indices}; }

struct MlpActivations {
  Matrix pre_hidden;  // X W1 + b1
  Matrix hidden;      // ReLU(pre_hidden)
  Matrix embedding;   // hidden W2 + b2
};

MlpActivations mlp_forward_cached(const EncoderParams& params, const Matrix& x);
/// E = ReLU(X W1 + b1) W2 + b2.
Matrix mlp_forward(const EncoderParams& params, const Matrix& x);

/// Row-wise mean over each node's closed neighborhood N(i) ∪ {i}.
Matrix mean_aggregate(const Matrix& emb, const CsrView& adj);
/// ē_i = mean_{j ∈ N(i) ∪ {i}} e_j · Wg + bg.
Matrix gnn_forward(const EncoderParams& params, const Matrix& emb, const CsrView& adj);

/// s_i = -mean_j cos(e_i, e_j) over the given neighbors; 0 with none.
double local_inconsistency(const Matrix& emb, Index center, std::span<const Index> neighbor_rows);

/// Mean negative cosine between batch row i and the batch members that are
/// neither i nor neighbors of i. neighbors_of_i holds sorted global ids,
/// batch_ids the global id of each row of batch_emb. Absent when that set
/// is empty.
std::optional<double> non_neighbor_score(const Matrix& batch_emb, Index i,
                                         std::span<const Index> batch_ids,
                                         std::span<const Index> neighbors_of_i);

/// (cos(u, v) + 1) / 2 clamped to [kSimilarityFloor, 1].
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar rescaled_similarity(const Eigen::MatrixBase<DerivedU>& u,
                                              const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  const Scalar c = cosine_similarity(u, v, Scalar(kCosineEps));
  return std::clamp((c + Scalar(1)) / Scalar(2), Scalar(kSimilarityFloor), Scalar(1));
}

/// Final per-node fraud scores: MLP embeddings scored against full-graph
/// neighborhoods. Higher is more suspicious.
Vector final_fraud_scores(const EncoderParams& params, const AttributedGraph& g);

/// Forward state of one embedding branch over a batch subgraph.
struct BranchState {
  Matrix embedding;  // one row per subgraph node
  Vector norm;
  Matrix unit;  // embedding rows divided by max(norm, kCosineEps)
  /// Cosine per (batch row, neighbor) slot, aligned with Subgraph::col_indices
  /// for the first batch_size rows.
  Vector pair_cos;
  Vector pair_sim;  // rescaled similarity per slot
  Vector score;     // local inconsistency per batch row
  std::vector<std::optional<double>> score_neg;
  std::vector<Index> non_neighbor_count;
};

/// Everything one training step needs, computed from (params, graph, batch).
struct BatchContext {
  std::vector<Index> batch;
  Subgraph sub;
  Matrix x;
  MlpActivations mlp_cache;
  BranchState mlp;
  bool use_gnn = true;
  Matrix aggregated;  // mean over closed local neighborhoods of MLP embeddings
  BranchState gnn;

  Index batch_size() const noexcept { return sub.batch_size; }
  Index num_pairs() const noexcept { return sub.row_offsets[sub.batch_size]; }
};

BatchContext build_batch_context(const EncoderParams& params, const AttributedGraph& g,
                                 std::span<const Index> batch, bool use_gnn = true);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config_json = "{}";
};

/// Writes the JSON checkpoint format documented in README.md.
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const CheckpointMeta& meta);
EncoderParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace huge
