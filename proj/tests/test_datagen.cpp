#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "huge/datagen.hpp"
#include "huge/eval.hpp"
#include "huge/heterophily.hpp"
#include "testutil.hpp"

using namespace huge;

namespace {

double halo_auroc(const AttributedGraph& g) {
  const auto h = node_heterophily(g, Metric::halo);
  return auroc(std::span<const double>(h.node_values.data(), h.node_values.size()), *g.labels());
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("spec validation and JSON") {
  SynthSpec s;
  s.validate();
  SynthSpec bad = s;
  bad.n = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s;
  bad.fraud_fraction = 0.0001;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s;
  bad.camouflage = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  s.n = 321;
  s.seed = 9;
  const auto back = synth_spec_from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK_THROWS_AS(synth_spec_from_json(R"({"nodes": 5})"), ValidationError);
}

TEST_CASE("generation is deterministic") {
  SynthSpec s;
  s.n = 300;
  s.seed = 4;
  testutil::TempDir dir;
  write_edge_list(generate(s), dir / "a.txt");
  write_edge_list(generate(s), dir / "b.txt");
  write_attributes(generate(s), dir / "a.csv");
  write_attributes(generate(s), dir / "b.csv");
  CHECK(testutil::read_text(dir / "a.txt") == testutil::read_text(dir / "b.txt"));
  CHECK(testutil::read_text(dir / "a.csv") == testutil::read_text(dir / "b.csv"));
  s.seed = 5;
  write_edge_list(generate(s), dir / "c.txt");
  CHECK(testutil::read_text(dir / "a.txt") != testutil::read_text(dir / "c.txt"));
}

TEST_CASE("shape, labels and average degree") {
  SynthSpec s;
  s.n = 1000;
  s.d = 7;
  const auto g = generate(s);
  g.validate();
  CHECK(g.num_nodes() == 1000);
  CHECK(g.dim() == 7);
  REQUIRE(g.labels().has_value());
  CHECK(std::count(g.labels()->begin(), g.labels()->end(), 1) == 50);
  const double deg = 2.0 * static_cast<double>(g.num_edges()) / 1000.0;
  CHECK(deg > 0.7 * s.avg_degree);
  CHECK(deg < 1.1 * s.avg_degree);
}

TEST_CASE("prevalence stays within 20 percent of the target") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec s;
    s.n = 500 + 37 * static_cast<Index>(seed);
    s.fraud_fraction = 0.03 + 0.005 * static_cast<double>(seed);
    s.seed = seed;
    const auto g = generate(s);
    const double frac = static_cast<double>(std::count(g.labels()->begin(), g.labels()->end(), 1)) /
                        static_cast<double>(s.n);
    CHECK(std::abs(frac - s.fraud_fraction) <= 0.2 * s.fraud_fraction);
  }
}

TEST_CASE("an easy configuration is well separated") {
  SynthSpec s;
  s.camouflage = 0.0;
  s.heterophilic_wiring = 1.0;
  s.seed = 1;
  const auto g = generate(s);
  const auto h = node_heterophily(g, Metric::halo);
  double fraud = 0.0, benign = 0.0;
  int nf = 0;
  for (Index i = 0; i < g.num_nodes(); ++i) {
    if ((*g.labels())[i] == 1) {
      fraud += h.node_values[i];
      ++nf;
    } else {
      benign += h.node_values[i];
    }
  }
  CHECK(fraud / nf > benign / static_cast<double>(g.num_nodes() - nf));
  CHECK(halo_auroc(g) > 0.95);
}

TEST_CASE("camouflage does not make detection easier") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double prev = 1.0;
    for (double cam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      SynthSpec s;
      s.n = 1000;
      s.camouflage = cam;
      s.seed = seed;
      const double a = halo_auroc(generate(s));
      CHECK_MESSAGE(a <= prev + 0.05, "seed " << seed << " camouflage " << cam);
      prev = a;
    }
  }
}

}  // TEST_SUITE
