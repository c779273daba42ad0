#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "huge/eval.hpp"
#include "oracles.hpp"

using namespace huge;

namespace {

struct Instance {
  std::vector<double> s;
  std::vector<int> y;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, int levels) {
  Instance inst;
  do {
    inst.s.clear();
    inst.y.clear();
    for (std::size_t i = 0; i < n; ++i) {
      inst.s.push_back(levels > 0 ? static_cast<double>(uniform_index(rng, levels))
                                  : standard_normal(rng));
      inst.y.push_back(uniform01(rng) < 0.3 ? 1 : 0);
    }
  } while (std::count(inst.y.begin(), inst.y.end(), 1) == 0 ||
           std::count(inst.y.begin(), inst.y.end(), 0) == 0);
  return inst;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("metric examples") {
  const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
  const std::vector<int> y{1, 1, 0, 0};
  CHECK(auroc(s, y) == 1.0);
  CHECK(auprc(s, y) == 1.0);
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  CHECK(auroc(flat, y) == 0.5);
  CHECK(auprc(flat, y) == 0.5);
  const std::vector<double> s3{0.9, 0.8, 0.1};
  const std::vector<int> y3{0, 1, 0};
  CHECK(auprc(s3, y3) == 0.5);
  CHECK(auroc(s3, y3) == 0.5);
}

TEST_CASE("metric input validation") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(auroc(s, std::vector<int>{1, 1}), ValidationError);
  CHECK_THROWS_AS(auprc(s, std::vector<int>{0, 0}), ValidationError);
  CHECK_THROWS_AS(auroc(s, std::vector<int>{0, 2}), ValidationError);
  CHECK_THROWS_AS(auroc(s, std::vector<int>{0, 1, 1}), ShapeError);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, std::nan("")}, std::vector<int>{0, 1}),
                  ValidationError);
}

TEST_CASE("metrics equal the brute-force oracles exactly") {
  std::mt19937_64 rng(40);
  for (int t = 0; t < 60; ++t) {
    const auto inst = random_instance(rng, 2 + uniform_index(rng, 300), t % 3 == 0 ? 0 : 1 + t % 7);
    CHECK(auroc(inst.s, inst.y) == oracle::auroc(inst.s, inst.y));
    CHECK(auprc(inst.s, inst.y) == oracle::auprc(inst.s, inst.y));
  }
}

TEST_CASE("metrics are invariant to strictly increasing transforms") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; ++t) {
    const auto inst = random_instance(rng, 100, t % 2 ? 0 : 5);
    std::vector<double> cubed, expd;
    for (double v : inst.s) {
      cubed.push_back(v * v * v + 2.0 * v);
      expd.push_back(std::exp(v / 4.0));
    }
    CHECK(auroc(cubed, inst.y) == auroc(inst.s, inst.y));
    CHECK(auprc(cubed, inst.y) == auprc(inst.s, inst.y));
    CHECK(auroc(expd, inst.y) == auroc(inst.s, inst.y));
  }
}

TEST_CASE("negating scores mirrors AUROC") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 30; ++t) {
    const auto inst = random_instance(rng, 80, t % 2 ? 0 : 4);
    std::vector<double> neg;
    for (double v : inst.s) neg.push_back(-v);
    CHECK(std::abs(auroc(inst.s, inst.y) + auroc(neg, inst.y) - 1.0) < 1e-12);
  }
}

TEST_CASE("random scores give AP near the prevalence") {
  std::mt19937_64 rng(43);
  double acc = 0.0;
  const int reps = 40;
  for (int t = 0; t < reps; ++t) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
      s.push_back(uniform01(rng));
      y.push_back(i % 10 == 0 ? 1 : 0);
    }
    acc += auprc(s, y);
  }
  CHECK(std::abs(acc / reps - 0.1) < 0.02);
}

TEST_CASE("ablation rows") {
  TrainConfig base;
  base.seed = 3;
  const auto v = ablation_variants(base);
  std::vector<std::string> names;
  for (const auto& x : v) names.push_back(x.name);
  CHECK(names == std::vector<std::string>{"w/ HALO", "w/ Euc. Dist.", "w/ Cos. Dist.", "w/ AHR",
                                          "w/o Alignment", "w/o GNN"});
  CHECK(v[1].config.metric == Metric::euclidean);
  CHECK(v[2].config.metric == Metric::cosine);
  CHECK(v[3].config.metric == Metric::ahr);
  CHECK(v[4].config.alpha == 0.0);
  CHECK_FALSE(v[5].config.use_gnn);
  for (const auto& x : v) {
    CHECK(x.config.d_e == base.d_e);
    CHECK_FALSE(x.heterophily_only);
  }
}

TEST_CASE("run_matrix: one seed gives zero spread and threads do not change results") {
  SynthSpec spec;
  spec.n = 200;
  spec.d = 6;
  spec.seed = 2;
  const auto g = generate(spec);
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 64;
  c.d_e = 8;
  c.lr = 0.005;
  std::vector<Variant> variants = ablation_variants(c);
  variants.push_back({"HALO score", c, true});
  const std::uint64_t one[] = {4};
  const auto r1 = run_matrix(g, variants, one, "tiny", 1);
  REQUIRE(r1.size() == variants.size());
  for (const auto& r : r1) {
    CHECK(r.runs.size() == 1);
    CHECK(r.auroc_std == 0.0);
    CHECK(r.auroc_mean == r.runs[0].auroc);
    CHECK(r.dataset == "tiny");
  }
  const auto r4 = run_matrix(g, variants, one, "tiny", 4);
  for (std::size_t k = 0; k < r1.size(); ++k) {
    CHECK(r1[k].runs[0].scores == r4[k].runs[0].scores);
  }
  const auto h = node_heterophily(g, Metric::halo);
  CHECK(r1.back().runs[0].scores == h.node_values);
  CHECK(r1.back().runs[0].auroc == auroc(std::span<const double>(h.node_values.data(), 200),
                                         *g.labels()));
}

TEST_CASE("aggregation uses the population standard deviation") {
  ScoreReport a;
  a.variant = "v";
  SeedResult x, y;
  x.seed = 0;
  x.auroc = 0.6;
  x.auprc = 0.2;
  y.seed = 1;
  y.auroc = 0.8;
  y.auprc = 0.4;
  a.runs = {x};
  ScoreReport b = a;
  b.runs = {y};
  const ScoreReport both[] = {a, b};
  const auto s = summarize(both, "d");
  REQUIRE(s.size() == 1);
  CHECK(s[0].auroc_mean == doctest::Approx(0.7));
  CHECK(s[0].auroc_std == doctest::Approx(0.1));
  CHECK(s[0].auprc_std == doctest::Approx(0.1));
  const std::string csv = reports_to_csv(s);
  CHECK(csv.rfind("dataset,variant,seed,auroc,auprc\n", 0) == 0);
  CHECK(csv.find("d,v,0,0.600000,0.200000") != std::string::npos);
  CHECK(reports_to_json(s).find("\"auroc_std\"") != std::string::npos);
}

TEST_CASE("suites") {
  const auto desk = make_suite("desk");
  CHECK(desk.variants.size() == 2);
  CHECK(desk.seeds.size() == 5);
  CHECK(desk.config.epochs == 50);
  CHECK(desk.graph.n == 2000);
  CHECK(make_suite("ablation").variants.size() == 6);
  CHECK_THROWS_AS(make_suite("imagenet"), ValidationError);
}

}  // TEST_SUITE
