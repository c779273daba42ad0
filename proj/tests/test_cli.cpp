#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sstream>

#include "huge/cli.hpp"
#include "huge/encoder.hpp"
#include "testutil.hpp"

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = huge::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
  return nlohmann::json::parse(testutil::read_text(p));
}

/// Small labelled graph written through the synth subcommand.
void synth(const testutil::TempDir& dir, const std::string& n = "120") {
  const auto r = cli({"synth", "--n", n, "--d", "4", "--seed", "3", "--out-dir", dir.path().string()});
  REQUIRE(r.code == 0);
}

std::vector<std::string> graph_flags(const testutil::TempDir& dir) {
  return {"--edges", (dir / "edges.txt").string(), "--attrs", (dir / "attributes.csv").string()};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("identical attributes give zero heterophily") {
  testutil::TempDir dir;
  testutil::write_text(dir / "e.txt", "0 1\n");
  testutil::write_text(dir / "x.csv", "1,2,3\n1,2,3\n");
  const auto r = cli({"heterophily", "--edges", (dir / "e.txt").string(), "--attrs",
                      (dir / "x.csv").string(), "--out-dir", (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(testutil::read_text(dir / "out" / "heterophily.csv") == "node_id,heterophily\n0,0\n1,0\n");
  CHECK(std::filesystem::exists(dir / "out" / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "out" / "node_map.csv"));
}

TEST_CASE("cosine property check reports the minimal-agreement failure") {
  testutil::TempDir dir;
  const auto r = cli({"heterophily", "--metric", "cosine", "--check-properties", "--trials", "300",
                      "--out-dir", dir.path().string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("fails  minimal_agreement") != std::string::npos);
  const auto props = read_json(dir / "properties.json");
  CHECK(props["properties"]["minimal_agreement"]["passed"] == false);
}

TEST_CASE("usage and input errors exit with 2") {
  testutil::TempDir dir;
  synth(dir);
  CHECK(cli(cat({"heterophily", "--metric", "hamming", "--out-dir", (dir / "o").string()},
                graph_flags(dir)))
            .code == 2);
  CHECK(cli({"heterophily", "--edges", (dir / "edges.txt").string(), "--attrs",
             (dir / "nope.csv").string(), "--out-dir", (dir / "o").string()})
            .code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"reproduce", "--suite", "imagenet", "--out-dir", (dir / "o").string()}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("train, score and eval pipeline") {
  testutil::TempDir dir;
  synth(dir);
  const std::string t = (dir / "t").string();
  const auto tr = cli(cat({"train", "--epochs", "1", "--batch-size", "64", "--d-e", "8", "--seed", "2",
                           "--out-dir", t},
                          graph_flags(dir)));
  REQUIRE(tr.code == 0);
  const std::string jl = testutil::read_text(dir / "t" / "train_log.jsonl");
  CHECK(std::count(jl.begin(), jl.end(), '\n') == 1);
  huge::CheckpointMeta meta;
  huge::load_checkpoint(dir / "t" / "checkpoint.json", &meta);
  CHECK(read_json(dir / "t" / "manifest.json")["config_hash"] == meta.config_hash);
  CHECK(meta.seed == 2);

  const std::string ck = (dir / "t" / "checkpoint.json").string();
  REQUIRE(cli(cat({"score", "--checkpoint", ck, "--out-dir", (dir / "s1").string()}, graph_flags(dir)))
              .code == 0);
  REQUIRE(cli(cat({"score", "--checkpoint", ck, "--out-dir", (dir / "s2").string()}, graph_flags(dir)))
              .code == 0);
  CHECK(testutil::read_text(dir / "s1" / "scores.csv") ==
        testutil::read_text(dir / "s2" / "scores.csv"));

  const auto ev = cli({"eval", "--scores", (dir / "s1" / "scores.csv").string(), "--labels",
                       (dir / "labels.txt").string(), "--out-dir", (dir / "e").string()});
  REQUIRE(ev.code == 0);
  const auto metrics = read_json(dir / "e" / "metrics.json");
  CHECK(metrics["n"] == 120);
  CHECK(metrics["auroc"].get<double>() >= 0.0);

  testutil::TempDir other;
  const auto wide = cli({"synth", "--n", "120", "--d", "5", "--out-dir", other.path().string()});
  REQUIRE(wide.code == 0);
  CHECK(cli({"score", "--checkpoint", ck, "--edges", (other / "edges.txt").string(), "--attrs",
             (other / "attributes.csv").string(), "--out-dir", (dir / "s3").string()})
            .code == 2);
}

TEST_CASE("scores are reported under the original node ids") {
  testutil::TempDir dir;
  testutil::write_text(dir / "e.txt", "500 7\n7 12\n");
  testutil::write_text(dir / "x.csv", "1,0\n0,1\n1,1\n");
  testutil::write_text(dir / "cfg.json", R"({"epochs": 1, "batch_size": 4, "d_e": 4})");
  const std::vector<std::string> g{"--edges", (dir / "e.txt").string(), "--attrs",
                                   (dir / "x.csv").string()};
  REQUIRE(cli(cat({"train", "--config", (dir / "cfg.json").string(), "--out-dir", (dir / "t").string()}, g))
              .code == 0);
  REQUIRE(cli(cat({"score", "--checkpoint", (dir / "t" / "checkpoint.json").string(), "--out-dir",
                   (dir / "s").string()},
                  g))
              .code == 0);
  const std::string scores = testutil::read_text(dir / "s" / "scores.csv");
  CHECK(scores.find("\n7,") != std::string::npos);
  CHECK(scores.find("\n12,") != std::string::npos);
  CHECK(scores.find("\n500,") != std::string::npos);
  CHECK(testutil::read_text(dir / "s" / "node_map.csv") == "node_id,index\n7,0\n12,1\n500,2\n");
}

TEST_CASE("eval on perfect and single-class inputs") {
  testutil::TempDir dir;
  testutil::write_text(dir / "s.csv", "node_id,score\n0,0.9\n1,0.1\n2,0.8\n");
  testutil::write_text(dir / "y.txt", "1\n0\n1\n");
  const auto ok = cli({"eval", "--scores", (dir / "s.csv").string(), "--labels",
                       (dir / "y.txt").string(), "--out-dir", dir.path().string()});
  REQUIRE(ok.code == 0);
  const auto m = read_json(dir / "metrics.json");
  CHECK(m["auroc"] == 1.0);
  CHECK(m["auprc"] == 1.0);
  testutil::write_text(dir / "ones.txt", "1\n1\n1\n");
  CHECK(cli({"eval", "--scores", (dir / "s.csv").string(), "--labels", (dir / "ones.txt").string(),
             "--out-dir", dir.path().string()})
            .code == 2);
}

TEST_CASE("synth writes a loadable graph and records its spec") {
  testutil::TempDir dir;
  synth(dir, "150");
  for (const char* f : {"edges.txt", "attributes.csv", "labels.txt", "synth_spec.json", "manifest.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(read_json(dir / "synth_spec.json")["n"] == 150);
  CHECK(cli({"synth", "--fraud-fraction", "0.9", "--out-dir", dir.path().string()}).code == 2);
}

TEST_CASE("HUGE_OUT_DIR is the fallback output directory") {
  testutil::TempDir dir;
  ::setenv("HUGE_OUT_DIR", (dir / "env").c_str(), 1);
  const auto r = cli({"synth", "--n", "100", "--d", "3"});
  ::unsetenv("HUGE_OUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "env" / "edges.txt"));
}

TEST_CASE("the installed binary behaves like the library entry point") {
  testutil::TempDir dir;
  const std::string cmd = std::string(HUGE_CLI_PATH) + " synth --n 100 --d 3 --out-dir " +
                          dir.path().string() + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(std::filesystem::exists(dir / "labels.txt"));
  const std::string bad = std::string(HUGE_CLI_PATH) + " heterophily --metric nope --check-properties" +
                          " --out-dir " + dir.path().string() + " 2> /dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}

}  // TEST_SUITE
