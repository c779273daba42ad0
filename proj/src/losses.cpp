#include "huge/losses.hpp"

#include <cmath>

namespace huge {

double rank_loss_plus(const Eigen::Ref<const Vector>& s, const Eigen::Ref<const Vector>& h,
                      Vector* grad) {
  if (s.size() != h.size()) throw ShapeError("rank_loss_plus: score/heterophily length mismatch");
  const Index b = s.size();
  if (b == 0) throw ShapeError("rank_loss_plus: empty batch");
  const double scale = 1.0 / (static_cast<double>(b) * static_cast<double>(b));
  if (grad) grad->setZero(b);

  // Diagonal pairs contribute log 2 each and no gradient.
  double sum = static_cast<double>(b) * std::log(2.0);
  for (Index i = 0; i < b; ++i) {
    for (Index j = i + 1; j < b; ++j) {
      const double x = s[i] - s[j];
      // One exp serves both orderings: log(1+e^{-x}) and log(1+e^{x}).
      const double e = std::exp(-std::abs(x));
      const double l1 = std::log1p(e);
      const double sp_x = std::max(-x, 0.0) + l1;
      const double sp_neg_x = std::max(x, 0.0) + l1;
      const double ind_ij = h[j] > h[i] ? 1.0 : 0.0;
      const double ind_ji = h[i] > h[j] ? 1.0 : 0.0;
      sum += ind_ij * x + sp_x + ind_ji * (-x) + sp_neg_x;
      if (grad) {
        // sigma(x) and sigma(-x) from the shared exponential.
        const double sig_pos = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        const double sig_neg = 1.0 - sig_pos;
        const double dx = ind_ij - ind_ji - sig_neg + sig_pos;
        (*grad)[i] += scale * dx;
        (*grad)[j] -= scale * dx;
      }
    }
  }
  return scale * sum;
}

double rank_loss_minus(const Eigen::Ref<const Vector>& s,
                       std::span<const std::optional<double>> s_neg, Vector* grad_s,
                       Vector* grad_neg, bool* empty) {
  if (static_cast<Index>(s_neg.size()) != s.size()) {
    throw ShapeError("rank_loss_minus: score/non-neighbor length mismatch");
  }
  const Index b = s.size();
  if (grad_s) grad_s->setZero(b);
  if (grad_neg) grad_neg->setZero(b);
  Index present = 0;
  for (const auto& v : s_neg) present += v.has_value();
  if (empty) *empty = present == 0;
  if (present == 0) return 0.0;

  const double scale = 1.0 / static_cast<double>(present);
  double sum = 0.0;
  for (Index i = 0; i < b; ++i) {
    if (!s_neg[i]) continue;
    const double x = s[i] - *s_neg[i];
    sum += x + softplus_neg(x);
    // d/dx (x + log(1 + e^{-x})) = 1 / (1 + e^{-x}).
    const double dx = 1.0 + softplus_neg_derivative(x);
    if (grad_s) (*grad_s)[i] = scale * dx;
    if (grad_neg) (*grad_neg)[i] = -scale * dx;
  }
  return scale * sum;
}

double align_loss(std::span<const Index> offsets, const Eigen::Ref<const Vector>& sim_mlp,
                  const Eigen::Ref<const Vector>& sim_gnn, Vector* grad_mlp) {
  if (offsets.empty()) throw ShapeError("align_loss: empty offsets");
  if (sim_mlp.size() != sim_gnn.size() || offsets.back() != sim_mlp.size()) {
    throw ShapeError("align_loss: similarity tables do not match");
  }
  const Index rows = static_cast<Index>(offsets.size()) - 1;
  if (grad_mlp) grad_mlp->setZero(sim_mlp.size());
  Index counted = 0;
  for (Index i = 0; i < rows; ++i) counted += offsets[i + 1] > offsets[i];
  if (counted == 0) return 0.0;

  const double outer = 1.0 / static_cast<double>(counted);
  double sum = 0.0;
  for (Index i = 0; i < rows; ++i) {
    const Index deg = offsets[i + 1] - offsets[i];
    if (deg == 0) continue;
    const double inner = 1.0 / static_cast<double>(deg);
    double row = 0.0;
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
      const double t = std::clamp(sim_gnn[k], kSimilarityFloor, 1.0);
      const double m = std::clamp(sim_mlp[k], kSimilarityFloor, 1.0);
      row += t * (std::log(t) - std::log(m));
      if (grad_mlp && sim_mlp[k] > kSimilarityFloor && sim_mlp[k] < 1.0) {
        (*grad_mlp)[k] = -outer * inner * t / m;
      }
    }
    sum += inner * row;
  }
  return outer * sum;
}

Vector batch_heterophily(const BatchContext& ctx, const HeterophilyField& h) {
  Vector out(ctx.batch_size());
  for (Index p = 0; p < ctx.batch_size(); ++p) out[p] = h.node_values[ctx.batch[p]];
  return out;
}

LossBreakdown total_loss(const BatchContext& ctx, const HeterophilyField& h, double alpha) {
  LossBreakdown out;
  out.alpha = alpha;
  const Vector hb = batch_heterophily(ctx, h);
  bool empty = false;

  out.l_rank_plus = rank_loss_plus(ctx.mlp.score, hb);
  out.l_rank_minus = rank_loss_minus(ctx.mlp.score, ctx.mlp.score_neg, nullptr, nullptr, &empty);
  out.empty_minus += empty;
  out.l_rank = 0.5 * (out.l_rank_plus + out.l_rank_minus);

  if (ctx.use_gnn) {
    out.l_rank_plus_bar = rank_loss_plus(ctx.gnn.score, hb);
    out.l_rank_minus_bar =
        rank_loss_minus(ctx.gnn.score, ctx.gnn.score_neg, nullptr, nullptr, &empty);
    out.empty_minus += empty;
    out.l_rank_bar = 0.5 * (out.l_rank_plus_bar + out.l_rank_minus_bar);
    const std::span<const Index> offsets(ctx.sub.row_offsets.data(), ctx.batch_size() + 1);
    out.l_align = align_loss(offsets, ctx.mlp.pair_sim, ctx.gnn.pair_sim);
  }
  out.total = out.l_rank + out.l_rank_bar + alpha * out.l_align;
  return out;
}

namespace {

// Gradient with respect to the unit rows of one branch from d/ds, d/ds⁻ and
// d/d(pair cosine).
Matrix unit_gradient(const BranchState& st, const Subgraph& sub, const Vector& d_score,
                     const Vector& d_score_neg, const Vector& d_pair_extra) {
  const Index b = sub.batch_size;
  const Matrix& u = st.unit;
  Matrix du = Matrix::Zero(u.rows(), u.cols());

  // Neighbor cosines: score term plus any per-slot term (alignment).
  for (Index p = 0; p < b; ++p) {
    const auto nbrs = sub.neighbors(p);
    if (nbrs.empty()) continue;
    const double per_slot = -d_score[p] / static_cast<double>(nbrs.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Index slot = sub.row_offsets[p] + static_cast<Index>(k);
      const Index q = nbrs[k];
      const double raw = u.row(p).dot(u.row(q));
      if (raw < -1.0 || raw > 1.0) continue;
      const double g = per_slot + d_pair_extra[slot];
      du.row(p) += g * u.row(q);
      du.row(q) += g * u.row(p);
    }
  }

  // Non-neighbor cosines. With w_p = -(d/ds⁻_p) / K_p and S_p the
  // non-neighbor set, dU_p = Σ_{q ∈ S_p} (w_p + w_q) U_q.
  Vector w = Vector::Zero(b);
  for (Index p = 0; p < b; ++p) {
    if (st.score_neg[p]) w[p] = -d_score_neg[p] / static_cast<double>(st.non_neighbor_count[p]);
  }
  const RowVector total = u.topRows(b).colwise().sum();
  const RowVector weighted = w.transpose() * u.topRows(b);
  for (Index p = 0; p < b; ++p) {
    if (!st.score_neg[p]) continue;
    RowVector plain = total - u.row(p);
    RowVector scaled = weighted - w[p] * u.row(p);
    for (Index q : sub.neighbors(p)) {
      if (q >= b) continue;
      plain -= u.row(q);
      scaled -= w[q] * u.row(q);
    }
    du.row(p) += w[p] * plain + scaled;
  }
  return du;
}

// Back through row normalization U = E / max(|E|, eps).
Matrix embedding_gradient(const BranchState& st, const Matrix& du) {
  Matrix de(du.rows(), du.cols());
  for (Index r = 0; r < du.rows(); ++r) {
    const double n = st.norm[r];
    if (n > kCosineEps) {
      de.row(r) = (du.row(r) - du.row(r).dot(st.unit.row(r)) * st.unit.row(r)) / n;
    } else {
      de.row(r) = du.row(r) / kCosineEps;
    }
  }
  return de;
}

struct BranchGrads {
  Vector d_score;
  Vector d_score_neg;
};

BranchGrads rank_gradients(const BranchState& st, const Vector& hb) {
  BranchGrads g;
  Vector plus;
  Vector minus_s;
  rank_loss_plus(st.score, hb, &plus);
  rank_loss_minus(st.score, st.score_neg, &minus_s, &g.d_score_neg);
  g.d_score = 0.5 * (plus + minus_s);
  g.d_score_neg *= 0.5;
  return g;
}

}  // namespace

EncoderParams backward(const BatchContext& ctx, const HeterophilyField& h, double alpha,
                       const EncoderParams& params) {
  const Index pairs = ctx.num_pairs();
  const Vector hb = batch_heterophily(ctx, h);
  EncoderParams grad = EncoderParams::zeros(params.input_dim(), params.embed_dim());

  const BranchGrads mlp_g = rank_gradients(ctx.mlp, hb);
  Vector mlp_pair_extra = Vector::Zero(pairs);
  Matrix d_emb;

  if (ctx.use_gnn) {
    const std::span<const Index> offsets(ctx.sub.row_offsets.data(), ctx.batch_size() + 1);
    Vector d_sim;
    align_loss(offsets, ctx.mlp.pair_sim, ctx.gnn.pair_sim, &d_sim);
    for (Index k = 0; k < pairs; ++k) {
      const double rescaled = (ctx.mlp.pair_cos[k] + 1.0) / 2.0;
      if (rescaled > kSimilarityFloor && rescaled < 1.0) {
        mlp_pair_extra[k] = alpha * d_sim[k] * 0.5;
      }
    }

    const BranchGrads gnn_g = rank_gradients(ctx.gnn, hb);
    const Matrix d_unit_gnn =
        unit_gradient(ctx.gnn, ctx.sub, gnn_g.d_score, gnn_g.d_score_neg, Vector::Zero(pairs));
    const Matrix d_gnn = embedding_gradient(ctx.gnn, d_unit_gnn);

    grad.wg = ctx.aggregated.transpose() * d_gnn;
    grad.bg = d_gnn.colwise().sum();
    const Matrix d_agg = d_gnn * params.wg.transpose();

    // Scatter through the closed-neighborhood mean.
    d_emb = Matrix::Zero(d_agg.rows(), d_agg.cols());
    const CsrView adj = csr_view(ctx.sub);
    for (Index r = 0; r < d_agg.rows(); ++r) {
      const auto nbrs = adj.neighbors(r);
      const RowVector share = d_agg.row(r) / static_cast<double>(nbrs.size() + 1);
      d_emb.row(r) += share;
      for (Index q : nbrs) d_emb.row(q) += share;
    }
  } else {
    d_emb = Matrix::Zero(ctx.mlp.embedding.rows(), ctx.mlp.embedding.cols());
  }

  const Matrix d_unit_mlp =
      unit_gradient(ctx.mlp, ctx.sub, mlp_g.d_score, mlp_g.d_score_neg, mlp_pair_extra);
  d_emb += embedding_gradient(ctx.mlp, d_unit_mlp);

  // MLP: E = H W2 + b2, H = ReLU(Z1), Z1 = X W1 + b1.
  const auto& cache = ctx.mlp_cache;
  grad.w2 = cache.hidden.transpose() * d_emb;
  grad.b2 = d_emb.colwise().sum();
  Matrix d_pre = d_emb * params.w2.transpose();
  d_pre = d_pre.cwiseProduct((cache.pre_hidden.array() > 0.0).cast<double>().matrix());
  grad.w1 = ctx.x.transpose() * d_pre;
  grad.b1 = d_pre.colwise().sum();
  return grad;
}

}  // namespace huge
