#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "huge/trainer.hpp"
#include "testutil.hpp"

using namespace huge;

namespace {

AttributedGraph random_graph(std::uint64_t seed, Index n, Index d, double avg_degree) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Index, Index>> edges;
  const auto m = static_cast<Index>(avg_degree * static_cast<double>(n) / 2.0);
  for (Index k = 0; k < m; ++k) {
    const auto u = static_cast<Index>(uniform_index(rng, n));
    const auto v = static_cast<Index>(uniform_index(rng, n));
    if (u != v) edges.emplace_back(u, v);
  }
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = standard_normal(rng);
  return AttributedGraph::from_edges(edges, x);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 16;
  c.d_e = 8;
  c.lr = 0.01;
  c.seed = 5;
  return c;
}

double median_epoch_seconds(const TrainLog& log) {
  std::vector<double> t;
  for (const auto& e : log.epochs) t.push_back(e.seconds);
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config defaults and validation") {
  const TrainConfig c;
  CHECK(c.lr == 0.0005);
  CHECK(c.epochs == 300);
  CHECK(c.batch_size == 8192);
  CHECK(c.alpha == 0.5);
  CHECK(c.optimizer == "adam");
  TrainConfig bad = c;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.optimizer = "sgd";
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.lr = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("config JSON round trip and overrides") {
  TrainConfig c = small_config();
  c.metric = Metric::ahr;
  c.use_gnn = false;
  const TrainConfig back = config_from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  const TrainConfig partial = config_from_json(R"({"epochs": 7})", c);
  CHECK(partial.epochs == 7);
  CHECK(partial.batch_size == c.batch_size);
  CHECK(partial.hash() != c.hash());
  CHECK_THROWS_AS(config_from_json(R"({"epoch": 7})"), ValidationError);
  CHECK_THROWS_AS(config_from_json("{"), ParseError);
  CHECK_THROWS_AS(config_from_json(R"({"epochs": "many"})"), ValidationError);
}

TEST_CASE("training rejects zero epochs") {
  TrainConfig c = small_config();
  c.epochs = 0;
  CHECK_THROWS_AS(train(random_graph(1, 30, 3, 4), c), ValidationError);
}

TEST_CASE("epoch batches form a seeded partition") {
  const auto b = epoch_batches(100, 30, 7, 0);
  REQUIRE(b.size() == 4);
  CHECK(b.back().size() == 10);
  std::vector<Index> all;
  for (const auto& v : b) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end());
  std::vector<Index> expect(100);
  std::iota(expect.begin(), expect.end(), Index{0});
  CHECK(all == expect);
  CHECK(epoch_batches(100, 30, 7, 0) == b);
  CHECK(epoch_batches(100, 30, 7, 1) != b);
  CHECK(epoch_batches(100, 500, 7, 0).size() == 1);
}

TEST_CASE("a batch at least as large as the graph gives one step per epoch") {
  TrainConfig c = small_config();
  c.batch_size = 1000;
  const auto r = train(random_graph(2, 40, 3, 4), c);
  REQUIRE(r.log.epochs.size() == 3);
  for (const auto& e : r.log.epochs) CHECK(e.batches == 1);
}

TEST_CASE("training is bitwise deterministic") {
  const auto g = random_graph(3, 60, 4, 5);
  const auto a = train(g, small_config());
  const auto b = train(g, small_config());
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.log.epochs.back().mean.total == b.log.epochs.back().mean.total);
  TrainConfig other = small_config();
  other.seed = 6;
  CHECK(train(g, other).params.flatten() != a.params.flatten());
}

TEST_CASE("heterophily is computed once per run") {
  int calls = 0;
  HeterophilyProvider counting = [&](const AttributedGraph& g, Metric m, double eps) {
    ++calls;
    return node_heterophily(g, m, eps);
  };
  TrainConfig c = small_config();
  c.epochs = 4;
  const auto g = random_graph(4, 50, 3, 4);
  const auto counted = train(g, c, counting);
  CHECK(calls == 1);
  CHECK(counted.params.flatten() == train(g, c).params.flatten());
}

TEST_CASE("batch scores always use the full graph") {
  // Shrinking the batch changes which pairs are compared but not the
  // neighborhood each batch node is scored against.
  const auto g = random_graph(5, 50, 3, 6);
  const auto p = EncoderParams::init(3, 8, 1);
  const Matrix e = mlp_forward(p, g.attributes());
  for (const auto& batch : epoch_batches(50, 7, 3, 0)) {
    const auto ctx = build_batch_context(p, g, batch);
    for (Index b = 0; b < ctx.batch_size(); ++b)
      CHECK(std::abs(ctx.mlp.score[b] - local_inconsistency(e, batch[b], neighbors(g, batch[b]))) <
            1e-14);
  }
}

TEST_CASE("log records one line per epoch") {
  const auto r = train(random_graph(6, 40, 3, 4), small_config());
  const std::string jl = r.log.to_jsonl();
  CHECK(std::count(jl.begin(), jl.end(), '\n') == 3);
  CHECK(jl.find("\"total\"") != std::string::npos);
}

TEST_CASE("inference checks the attribute dimension and is permutation equivariant") {
  const auto g = random_graph(7, 40, 3, 4);
  const auto r = train(g, small_config());
  CHECK_THROWS_AS(infer(r.params, random_graph(7, 40, 4, 4)), ShapeError);
  const Vector s = infer(r.params, g);
  CHECK(s == final_fraud_scores(r.params, g));

  std::mt19937_64 rng(8);
  std::vector<Index> perm(40);
  std::iota(perm.begin(), perm.end(), Index{0});
  shuffle(perm, rng);
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < 40; ++i)
    for (Index j : neighbors(g, i))
      if (i < j) edges.emplace_back(perm[i], perm[j]);
  Matrix px(40, 3);
  for (Index i = 0; i < 40; ++i) px.row(perm[i]) = g.attributes().row(i);
  const Vector ps = infer(r.params, AttributedGraph::from_edges(edges, px));
  for (Index i = 0; i < 40; ++i) CHECK(std::abs(ps[perm[i]] - s[i]) < 1e-14);
}

TEST_CASE("scores CSV keeps original ids") {
  testutil::TempDir dir;
  const std::pair<Index, Index> e[] = {{0, 1}};
  auto g = AttributedGraph::from_edges(e, Matrix::Ones(2, 2));
  write_scores_csv(dir / "s.csv", g, Vector::Zero(2));
  CHECK(testutil::read_text(dir / "s.csv").rfind("node_id,score\n0,", 0) == 0);
  CHECK_THROWS_AS(write_scores_csv(dir / "t.csv", g, Vector::Zero(3)), ShapeError);
}

TEST_CASE("epoch time grows about linearly with graph size") {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 64;
  c.d_e = 16;
  c.seed = 1;
  const auto small = train(random_graph(9, 2000, 16, 10), c);
  const auto large = train(random_graph(9, 4000, 16, 10), c);
  const double ratio = median_epoch_seconds(large.log) / median_epoch_seconds(small.log);
  MESSAGE("epoch time ratio for doubled n: " << ratio);
  CHECK(ratio <= 2.5);
}

}  // TEST_SUITE
