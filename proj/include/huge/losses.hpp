#pragma once

#include <optional>
#include <span>
#include <vector>

#include "huge/core.hpp"
#include "huge/encoder.hpp"
#include "huge/heterophily.hpp"

namespace huge {

struct LossBreakdown {
  double l_rank_plus = 0.0;
  double l_rank_minus = 0.0;
  double l_rank = 0.0;
  double l_rank_plus_bar = 0.0;
  double l_rank_minus_bar = 0.0;
  double l_rank_bar = 0.0;
  double l_align = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  /// Branches whose batch had no node with a non-neighbor (L⁻ set to 0).
  int empty_minus = 0;
};

/// Heterophily-ordered pairwise ranking loss over every ordered pair (i, j)
/// of the batch, diagonal included:
///   1/|B|² Σ_i Σ_j ( [h_j > h_i] (s_i - s_j) + log(1 + exp(-(s_i - s_j))) ).
/// Writes d loss / d s into grad when given.
double rank_loss_plus(const Eigen::Ref<const Vector>& s, const Eigen::Ref<const Vector>& h,
                      Vector* grad = nullptr);

/// Mean over nodes with a non-neighbor score of (x + log(1 + exp(-x))),
/// x = s_i - s⁻_i. Returns 0 and sets *empty when no node qualifies.
double rank_loss_minus(const Eigen::Ref<const Vector>& s,
                       std::span<const std::optional<double>> s_neg, Vector* grad_s = nullptr,
                       Vector* grad_neg = nullptr, bool* empty = nullptr);

/// KL-style alignment of neighbor similarity rows. Row i of both tables is
/// values[offsets[i] .. offsets[i+1]). The GNN table is a constant target:
/// only grad_mlp is produced. Rows with no entries are skipped, and the
/// outer mean runs over the remaining rows.
double align_loss(std::span<const Index> offsets, const Eigen::Ref<const Vector>& sim_mlp,
                  const Eigen::Ref<const Vector>& sim_gnn, Vector* grad_mlp = nullptr);

/// Heterophily values of the batch rows, in batch order.
Vector batch_heterophily(const BatchContext& ctx, const HeterophilyField& h);

/// L = L_rank + L̄_rank + α L_align, with L_rank = (L⁺ + L⁻) / 2 per branch.
/// Without the GNN branch only L_rank remains.
LossBreakdown total_loss(const BatchContext& ctx, const HeterophilyField& h, double alpha);

/// Analytic gradient of total_loss with respect to every parameter. The GNN
/// similarities inside L_align are stop-gradient targets.
EncoderParams backward(const BatchContext& ctx, const HeterophilyField& h, double alpha,
                       const EncoderParams& params);

}  // namespace huge
