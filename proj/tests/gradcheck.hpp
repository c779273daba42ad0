#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "huge/encoder.hpp"
#include "huge/heterophily.hpp"
#include "huge/losses.hpp"
#include "huge/numerics.hpp"
#include "oracles.hpp"

namespace gradcheck {

struct Instance {
  huge::AttributedGraph graph;
  oracle::Graph plain;
  std::vector<huge::Index> batch;
  huge::EncoderParams params;
  huge::HeterophilyField field;
};

/// Random graph with n nodes, edge probability p, N(0,1) attributes and a
/// batch of the first b nodes of a permutation. Parameters are He weights
/// plus U(-0.1, 0.1) biases: with zero biases a node whose hidden units are
/// all inactive has a zero embedding, where the guarded cosine bends on a
/// 1e-8 scale that no finite-difference step can resolve.
inline Instance make_instance(std::uint64_t seed, int n = 30, int d = 8, int de = 8, int b = 10,
                              double p = 0.2) {
  std::mt19937_64 rng(seed * 7919 + 11);
  Instance inst;
  huge::Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) x(i, k) = huge::standard_normal(rng);
  std::vector<std::pair<huge::Index, huge::Index>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (huge::uniform01(rng) < p) edges.emplace_back(i, j);
  inst.graph = huge::AttributedGraph::from_edges(edges, x);
  inst.plain.adj.resize(n);
  inst.plain.x.assign(n, oracle::Vec(d));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) inst.plain.x[i][k] = x(i, k);
  for (auto [u, v] : edges) {
    inst.plain.adj[u].insert(static_cast<int>(v));
    inst.plain.adj[v].insert(static_cast<int>(u));
  }
  std::vector<huge::Index> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  huge::shuffle(order, rng);
  inst.batch.assign(order.begin(), order.begin() + b);
  inst.params = huge::EncoderParams::init(d, de, seed);
  for (auto* bias : {&inst.params.b1, &inst.params.b2, &inst.params.bg})
    for (huge::Index k = 0; k < bias->size(); ++k) (*bias)[k] = huge::uniform(rng, -0.1, 0.1);
  inst.field = huge::node_heterophily(inst.graph, huge::Metric::halo, 1e-12);
  return inst;
}

struct Result {
  huge::Vector analytic;
  huge::Vector numeric;
  /// max_k |a_k - f_k| / max(|a_k|, |f_k|, floor), floor = 1e-6 max_k |f_k|.
  double max_relative_error = 0.0;
};

inline Result run(const Instance& inst, double alpha = 0.5, bool use_gnn = true, double h = 1e-5) {
  const auto ctx = huge::build_batch_context(inst.params, inst.graph, inst.batch, use_gnn);
  Result r;
  r.analytic = huge::backward(ctx, inst.field, alpha, inst.params).flatten();

  std::vector<int> batch(inst.batch.begin(), inst.batch.end());
  oracle::Vec hb;
  for (int i : batch) hb.push_back(inst.field.node_values[i]);
  const auto d = static_cast<std::size_t>(inst.params.input_dim());
  const auto de = static_cast<std::size_t>(inst.params.embed_dim());
  const huge::Vector base = inst.params.flatten();
  // Stop-gradient: the alignment target is frozen at the base parameters.
  const auto frozen = oracle::forward(oracle::unpack(std::span(base.data(), base.size()), d, de),
                                      inst.plain, batch)
                          .gnn.sim;
  auto loss = [&](const huge::Vector& theta) {
    return oracle::total_loss(oracle::unpack(std::span(theta.data(), theta.size()), d, de),
                              inst.plain, batch, hb, alpha, use_gnn, frozen);
  };
  r.numeric = huge::finite_diff_gradient(loss, base, h);
  const double floor = 1e-6 * r.numeric.cwiseAbs().maxCoeff();
  for (huge::Index k = 0; k < base.size(); ++k) {
    const double a = r.analytic[k];
    const double f = r.numeric[k];
    const double denom = std::max({std::abs(a), std::abs(f), floor});
    if (denom > 0.0) r.max_relative_error = std::max(r.max_relative_error, std::abs(a - f) / denom);
  }
  return r;
}

}  // namespace gradcheck
