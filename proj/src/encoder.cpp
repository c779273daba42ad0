#include "huge/encoder.hpp"

#include <fstream>
#include <random>

#include <json.hpp>

namespace huge {

Index EncoderParams::size() const noexcept {
  return w1.size() + b1.size() + w2.size() + b2.size() + wg.size() + bg.size();
}

EncoderParams EncoderParams::zeros(Index input_dim, Index embed_dim) {
  if (input_dim <= 0 || embed_dim <= 0) throw ShapeError("encoder dimensions must be positive");
  EncoderParams p;
  p.w1 = Matrix::Zero(input_dim, embed_dim);
  p.b1 = RowVector::Zero(embed_dim);
  p.w2 = Matrix::Zero(embed_dim, embed_dim);
  p.b2 = RowVector::Zero(embed_dim);
  p.wg = Matrix::Zero(embed_dim, embed_dim);
  p.bg = RowVector::Zero(embed_dim);
  return p;
}

EncoderParams EncoderParams::init(Index input_dim, Index embed_dim, std::uint64_t seed) {
  EncoderParams p = zeros(input_dim, embed_dim);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows()));
    for (Index k = 0; k < w.size(); ++k) w.data()[k] = uniform(rng, -bound, bound);
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.wg);
  return p;
}

Vector EncoderParams::flatten() const {
  Vector flat(size());
  Index at = 0;
  auto put = [&](const auto& m) {
    std::copy(m.data(), m.data() + m.size(), flat.data() + at);
    at += m.size();
  };
  put(w1);
  put(b1);
  put(w2);
  put(b2);
  put(wg);
  put(bg);
  return flat;
}

void EncoderParams::assign(const Eigen::Ref<const Vector>& flat) {
  if (flat.size() != size()) throw ShapeError("flat parameter vector has wrong length");
  Index at = 0;
  auto take = [&](auto& m) {
    std::copy(flat.data() + at, flat.data() + at + m.size(), m.data());
    at += m.size();
  };
  take(w1);
  take(b1);
  take(w2);
  take(b2);
  take(wg);
  take(bg);
}

bool EncoderParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         wg.allFinite() && bg.allFinite();
}

MlpActivations mlp_forward_cached(const EncoderParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) +
                     " columns, encoder expects " + std::to_string(params.input_dim()));
  }
  MlpActivations act;
  act.pre_hidden = x * params.w1;
  act.pre_hidden.rowwise() += params.b1;
  act.hidden = act.pre_hidden.cwiseMax(0.0);
  act.embedding = act.hidden * params.w2;
  act.embedding.rowwise() += params.b2;
  return act;
}

Matrix mlp_forward(const EncoderParams& params, const Matrix& x) {
  return mlp_forward_cached(params, x).embedding;
}

Matrix mean_aggregate(const Matrix& emb, const CsrView& adj) {
  if (emb.rows() != adj.num_rows()) throw ShapeError("embedding rows != adjacency rows");
  Matrix out(emb.rows(), emb.cols());
  for (Index i = 0; i < emb.rows(); ++i) {
    RowVector acc = emb.row(i);
    const auto nbrs = adj.neighbors(i);
    for (Index j : nbrs) acc += emb.row(j);
    out.row(i) = acc / static_cast<double>(nbrs.size() + 1);
  }
  return out;
}

Matrix gnn_forward(const EncoderParams& params, const Matrix& emb, const CsrView& adj) {
  if (emb.cols() != params.wg.rows()) throw ShapeError("gnn_forward: embedding width mismatch");
  Matrix out = mean_aggregate(emb, adj) * params.wg;
  out.rowwise() += params.bg;
  return out;
}

double local_inconsistency(const Matrix& emb, Index center,
                           std::span<const Index> neighbor_rows) {
  if (neighbor_rows.empty()) return 0.0;
  double sum = 0.0;
  for (Index j : neighbor_rows) sum += cosine_similarity(emb.row(center), emb.row(j), kCosineEps);
  return -sum / static_cast<double>(neighbor_rows.size());
}

std::optional<double> non_neighbor_score(const Matrix& batch_emb, Index i,
                                         std::span<const Index> batch_ids,
                                         std::span<const Index> neighbors_of_i) {
  if (static_cast<Index>(batch_ids.size()) != batch_emb.rows()) {
    throw ShapeError("non_neighbor_score: batch ids and embedding rows differ");
  }
  double sum = 0.0;
  Index count = 0;
  for (Index q = 0; q < batch_emb.rows(); ++q) {
    if (q == i) continue;
    if (std::binary_search(neighbors_of_i.begin(), neighbors_of_i.end(), batch_ids[q])) continue;
    sum += cosine_similarity(batch_emb.row(i), batch_emb.row(q), kCosineEps);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return -sum / static_cast<double>(count);
}

namespace {

void unit_rows(const Matrix& emb, Vector& norm, Matrix& unit) {
  norm = emb.rowwise().norm();
  unit = emb;
  for (Index r = 0; r < emb.rows(); ++r) unit.row(r) /= std::max(norm[r], kCosineEps);
}

void fill_branch(BranchState& st, Matrix emb, const Subgraph& sub) {
  st.embedding = std::move(emb);
  unit_rows(st.embedding, st.norm, st.unit);
  const Index b = sub.batch_size;
  const Index pairs = sub.row_offsets[b];
  st.pair_cos.resize(pairs);
  st.pair_sim.resize(pairs);
  st.score.resize(b);
  st.score_neg.assign(b, std::nullopt);
  st.non_neighbor_count.assign(b, 0);

  for (Index p = 0; p < b; ++p) {
    const auto nbrs = sub.neighbors(p);
    double sum = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Index slot = sub.row_offsets[p] + static_cast<Index>(k);
      const double c = std::clamp(st.unit.row(p).dot(st.unit.row(nbrs[k])), -1.0, 1.0);
      st.pair_cos[slot] = c;
      st.pair_sim[slot] = std::clamp((c + 1.0) / 2.0, kSimilarityFloor, 1.0);
      sum += c;
    }
    st.score[p] = nbrs.empty() ? 0.0 : -sum / static_cast<double>(nbrs.size());
  }

  // Non-neighbor scores via the batch total of unit rows, minus self and
  // in-batch neighbors.
  const RowVector total = st.unit.topRows(b).colwise().sum();
  for (Index p = 0; p < b; ++p) {
    const auto up = st.unit.row(p);
    double sum = up.dot(total) - up.squaredNorm();
    Index excluded = 1;
    for (Index q : sub.neighbors(p)) {
      if (q >= b) continue;
      sum -= up.dot(st.unit.row(q));
      ++excluded;
    }
    const Index count = b - excluded;
    st.non_neighbor_count[p] = count;
    if (count > 0) st.score_neg[p] = -sum / static_cast<double>(count);
  }
}

}  // namespace

Vector final_fraud_scores(const EncoderParams& params, const AttributedGraph& g) {
  const Matrix emb = mlp_forward(params, g.attributes());
  Vector norm;
  Matrix unit;
  unit_rows(emb, norm, unit);
  Vector scores = Vector::Zero(g.num_nodes());
  for (Index i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = neighbors(g, i);
    if (nbrs.empty()) continue;
    double sum = 0.0;
    for (Index j : nbrs) sum += std::clamp(unit.row(i).dot(unit.row(j)), -1.0, 1.0);
    scores[i] = -sum / static_cast<double>(nbrs.size());
  }
  return scores;
}

BatchContext build_batch_context(const EncoderParams& params, const AttributedGraph& g,
                                 std::span<const Index> batch, bool use_gnn) {
  if (g.dim() != params.input_dim()) {
    throw ShapeError("graph attribute dimension " + std::to_string(g.dim()) +
                     " != encoder input dimension " + std::to_string(params.input_dim()));
  }
  BatchContext ctx;
  ctx.batch.assign(batch.begin(), batch.end());
  ctx.sub = neighbor_closure_subgraph(g, batch);
  ctx.use_gnn = use_gnn;
  ctx.x.resize(ctx.sub.size(), g.dim());
  for (Index r = 0; r < ctx.sub.size(); ++r) ctx.x.row(r) = g.attribute_row(ctx.sub.nodes[r]);

  ctx.mlp_cache = mlp_forward_cached(params, ctx.x);
  fill_branch(ctx.mlp, ctx.mlp_cache.embedding, ctx.sub);
  if (use_gnn) {
    ctx.aggregated = mean_aggregate(ctx.mlp.embedding, csr_view(ctx.sub));
    Matrix gnn = ctx.aggregated * params.wg;
    gnn.rowwise() += params.bg;
    fill_branch(ctx.gnn, std::move(gnn), ctx.sub);
  }
  return ctx;
}

namespace {

nlohmann::ordered_json tensor_json(const auto& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

template <typename M>
void read_tensor(const nlohmann::json& j, const char* name, M& out, Index rows, Index cols) {
  if (!j.contains(name)) throw ValidationError(std::string("checkpoint missing tensor ") + name);
  const auto& t = j.at(name);
  if (t.at("rows").get<Index>() != rows || t.at("cols").get<Index>() != cols) {
    throw ShapeError(std::string("checkpoint tensor ") + name + " has unexpected shape");
  }
  const auto data = t.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw ShapeError(std::string("checkpoint tensor ") + name + " has wrong element count");
  }
  std::copy(data.begin(), data.end(), out.data());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const CheckpointMeta& meta) {
  nlohmann::ordered_json j;
  j["format"] = "huge-checkpoint";
  j["version"] = 1;
  j["input_dim"] = params.input_dim();
  j["embed_dim"] = params.embed_dim();
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["config"] = nlohmann::ordered_json::parse(meta.config_json);
  j["tensors"] = {{"w1", tensor_json(params.w1)}, {"b1", tensor_json(params.b1)},
                  {"w2", tensor_json(params.w2)}, {"b2", tensor_json(params.b2)},
                  {"wg", tensor_json(params.wg)}, {"bg", tensor_json(params.bg)}};
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

EncoderParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "huge-checkpoint" || j.value("version", 0) != 1) {
    throw ValidationError("unsupported checkpoint format in " + path.string());
  }
  const Index d = j.at("input_dim").get<Index>();
  const Index de = j.at("embed_dim").get<Index>();
  EncoderParams p = EncoderParams::zeros(d, de);
  const auto& t = j.at("tensors");
  read_tensor(t, "w1", p.w1, d, de);
  read_tensor(t, "b1", p.b1, 1, de);
  read_tensor(t, "w2", p.w2, de, de);
  read_tensor(t, "b2", p.b2, 1, de);
  read_tensor(t, "wg", p.wg, de, de);
  read_tensor(t, "bg", p.bg, 1, de);
  if (!p.all_finite()) throw ValidationError("checkpoint contains non-finite weights");
  if (meta) {
    meta->seed = j.value("seed", std::uint64_t{0});
    meta->config_hash = j.value("config_hash", "");
    meta->config_json = j.contains("config") ? j.at("config").dump() : "{}";
  }
  return p;
}

}  // namespace huge
