#include "huge/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "huge/datagen.hpp"
#include "huge/encoder.hpp"
#include "huge/eval.hpp"
#include "huge/graph.hpp"
#include "huge/heterophily.hpp"
#include "huge/trainer.hpp"

namespace huge::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Options {
  std::string edges;
  std::string attrs;
  std::string labels;
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
};

class Manifest {
 public:
  Manifest(std::string subcommand, const Options& opt)
      : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    j_["config"] = ojson::object();
    j_["config_hash"] = nullptr;
    j_["seed"] = opt.seed;
    j_["threads"] = opt.threads;
    j_["inputs"] = ojson::object();
    j_["outputs"] = ojson::array();
  }

  void input(const std::string& path) {
    if (path.empty()) return;
    j_["inputs"][path] = hex64(fnv1a(read_file(path)));
  }
  void output(const fs::path& path) { j_["outputs"].push_back(path.string()); }
  void config(const std::string& json, const std::string& hash) {
    j_["config"] = ojson::parse(json);
    j_["config_hash"] = hash;
  }
  ojson& extra() { return j_; }

  void write(const fs::path& dir) {
    j_["versions"] = {{"huge", kVersion},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"compiler", __VERSION__}};
    j_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_atomic(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  ojson j_;
  std::chrono::steady_clock::time_point start_;
};

fs::path resolve_out_dir(const Options& opt) {
  fs::path dir;
  if (!opt.out_dir.empty()) {
    dir = opt.out_dir;
  } else if (const char* env = std::getenv("HUGE_OUT_DIR"); env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = "huge_out";
  }
  fs::create_directories(dir);
  return dir;
}

AttributedGraph load_from(const Options& opt, Manifest& manifest) {
  if (opt.edges.empty() || opt.attrs.empty()) {
    throw ValidationError("--edges and --attrs are required");
  }
  GraphFiles files{opt.edges, opt.attrs, std::nullopt};
  if (!opt.labels.empty()) files.labels = fs::path(opt.labels);
  AttributedGraph g = load_graph(files);
  manifest.input(opt.edges);
  manifest.input(opt.attrs);
  manifest.input(opt.labels);
  return g;
}

void write_node_map(const AttributedGraph& g, const fs::path& path) {
  std::string s = "node_id,index\n";
  for (Index i = 0; i < g.num_nodes(); ++i) {
    s += std::to_string(g.node_ids()[i]) + "," + std::to_string(i) + "\n";
  }
  write_atomic(path, s);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_edge_heterophily(const AttributedGraph& g, const HeterophilyField& f,
                            const fs::path& path) {
  std::string s = "src,dst,heterophily\n";
  const auto& off = g.row_offsets();
  const auto& col = g.col_indices();
  for (Index i = 0; i < g.num_nodes(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) {
      if (col[k] <= i) continue;
      s += std::to_string(g.node_ids()[i]) + "," + std::to_string(g.node_ids()[col[k]]) + "," +
           fmt17(f.edge_values[k]) + "\n";
    }
  }
  write_atomic(path, s);
}

// "node_id,<name>" with a header row; values kept in file order.
std::vector<double> read_scores_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> scores;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line.rfind("node_id,", 0) != 0) {
        throw ParseError("scores file " + path.string() + " lacks a node_id header", lineno);
      }
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("malformed score row in " + path.string(), lineno);
    }
    const std::string value = line.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      throw ParseError("malformed score value in " + path.string(), lineno);
    }
    if (std::isnan(v)) throw ValidationError("NaN score at line " + std::to_string(lineno));
    scores.push_back(v);
  }
  return scores;
}

void add_graph_flags(CLI::App* sub, Options& opt) {
  sub->add_option("--edges", opt.edges, "Edge list: one 'src dst' pair per line");
  sub->add_option("--attrs", opt.attrs, "Node attributes: headerless numeric CSV");
  sub->add_option("--labels", opt.labels, "Optional 0/1 labels, one per line");
}

void add_run_flags(CLI::App* sub, Options& opt) {
  sub->add_option("--out-dir", opt.out_dir, "Output directory (default $HUGE_OUT_DIR or huge_out)");
  sub->add_option("--seed", opt.seed, "Random seed");
  sub->add_option("--threads", opt.threads, "Worker cap")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised graph fraud detection with heterophily-guided ranking", "huge"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options opt;

  auto* het = app.add_subcommand("heterophily", "Node heterophily and metric property checks");
  std::string metric_name = "halo";
  double eps = 1e-12;
  bool check = false;
  std::int64_t trials = 10000;
  Index dim = 0;
  add_graph_flags(het, opt);
  add_run_flags(het, opt);
  het->add_option("--metric", metric_name, "halo | euclidean | cosine | ahr");
  het->add_option("--eps", eps, "Denominator guard");
  het->add_flag("--check-properties", check, "Run the randomized property suite");
  het->add_option("--trials", trials, "Random pairs per property")->check(CLI::PositiveNumber);
  het->add_option("--dim", dim, "Attribute dimension for the property suite (0: random 2..64)");

  auto* trn = app.add_subcommand("train", "Train the encoder and write a checkpoint");
  add_graph_flags(trn, opt);
  add_run_flags(trn, opt);
  trn->add_option("--config", opt.config, "JSON config file; flags override its values");
  std::int64_t epochs = 0, batch_size = 0, d_e = 0;
  double alpha = 0.0, lr = 0.0, eps_halo = 0.0;
  std::string train_metric;
  bool use_gnn = true;
  auto* o_epochs = trn->add_option("--epochs", epochs);
  auto* o_batch = trn->add_option("--batch-size", batch_size);
  auto* o_alpha = trn->add_option("--alpha", alpha);
  auto* o_lr = trn->add_option("--lr", lr);
  auto* o_de = trn->add_option("--d-e", d_e, "Embedding width");
  auto* o_eps = trn->add_option("--eps", eps_halo, "Heterophily denominator guard");
  auto* o_metric = trn->add_option("--metric", train_metric, "Heterophily metric for ranking");
  auto* o_gnn = trn->add_option("--use-gnn", use_gnn, "true | false");
  auto* o_seed = trn->get_option("--seed");

  auto* sco = app.add_subcommand("score", "Score nodes with a trained checkpoint");
  std::string checkpoint;
  add_graph_flags(sco, opt);
  add_run_flags(sco, opt);
  sco->add_option("--checkpoint", checkpoint, "checkpoint.json from train")->required();

  auto* evl = app.add_subcommand("eval", "AUROC and AUPRC of a scores file");
  std::string scores_path;
  evl->add_option("--scores", scores_path, "node_id,score CSV")->required();
  evl->add_option("--labels", opt.labels, "0/1 labels in the same node order")->required();
  add_run_flags(evl, opt);

  auto* syn = app.add_subcommand("synth", "Generate a planted-fraud graph");
  std::string spec_path;
  SynthSpec flags_spec;
  syn->add_option("--spec", spec_path, "JSON synth spec; flags override its values");
  add_run_flags(syn, opt);
  auto* o_n = syn->add_option("--n", flags_spec.n);
  auto* o_ff = syn->add_option("--fraud-fraction", flags_spec.fraud_fraction);
  auto* o_deg = syn->add_option("--avg-degree", flags_spec.avg_degree);
  auto* o_cam = syn->add_option("--camouflage", flags_spec.camouflage);
  auto* o_wire = syn->add_option("--heterophilic-wiring", flags_spec.heterophilic_wiring);
  auto* o_d = syn->add_option("--d", flags_spec.d);
  auto* o_syn_seed = syn->get_option("--seed");

  auto* rep = app.add_subcommand("reproduce", "Run a synthetic evaluation suite");
  std::string suite_name;
  std::vector<std::uint64_t> suite_seeds;
  std::int64_t suite_epochs = 0;
  rep->add_option("--suite", suite_name, "desk | ablation")->required();
  auto* o_seeds = rep->add_option("--seeds", suite_seeds, "Override the seed list");
  auto* o_sepochs = rep->add_option("--epochs", suite_epochs, "Override the epoch count");
  add_run_flags(rep, opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (het->parsed()) {
      const Metric metric = parse_metric(metric_name);
      if (opt.edges.empty() && !check) {
        throw ValidationError("give --edges/--attrs, --check-properties, or both");
      }
      const fs::path dir = resolve_out_dir(opt);
      Manifest m("heterophily", opt);
      m.extra()["metric"] = to_string(metric);
      m.extra()["eps"] = eps;
      if (!opt.edges.empty() || !opt.attrs.empty()) {
        const AttributedGraph g = load_from(opt, m);
        const HeterophilyField f = node_heterophily(g, metric, eps);
        write_scores_csv(dir / "heterophily.csv", g, f.node_values, "heterophily");
        write_edge_heterophily(g, f, dir / "edge_heterophily.csv");
        write_node_map(g, dir / "node_map.csv");
        m.output(dir / "heterophily.csv");
        m.output(dir / "edge_heterophily.csv");
        m.output(dir / "node_map.csv");
        out << "nodes " << g.num_nodes() << ", edges " << g.num_edges() << ", isolated "
            << f.isolated_nodes << "\n";
      }
      if (check) {
        const PropertyReport r = check_properties(metric, trials, dim, opt.seed, eps);
        write_atomic(dir / "properties.json", to_json(r, 2) + "\n");
        m.output(dir / "properties.json");
        for (const auto* p : {&r.boundedness, &r.minimal_agreement, &r.equal_attribute_tolerance,
                              &r.monotonicity}) {
          out << (p->passed ? "holds  " : "fails  ") << p->name << " (" << p->violations << "/"
              << p->checks << " violations)\n";
        }
      }
      m.write(dir);
      return kExitOk;
    }

    if (trn->parsed()) {
      TrainConfig cfg;
      if (!opt.config.empty()) cfg = config_from_json(read_file(opt.config), cfg);
      if (o_epochs->count()) cfg.epochs = epochs;
      if (o_batch->count()) cfg.batch_size = batch_size;
      if (o_alpha->count()) cfg.alpha = alpha;
      if (o_lr->count()) cfg.lr = lr;
      if (o_de->count()) cfg.d_e = d_e;
      if (o_eps->count()) cfg.eps_halo = eps_halo;
      if (o_metric->count()) cfg.metric = parse_metric(train_metric);
      if (o_gnn->count()) cfg.use_gnn = use_gnn;
      if (o_seed->count()) cfg.seed = opt.seed;
      cfg.validate();
      opt.seed = cfg.seed;

      const fs::path dir = resolve_out_dir(opt);
      Manifest m("train", opt);
      m.input(opt.config);
      const AttributedGraph g = load_from(opt, m);
      m.config(cfg.to_json(), cfg.hash());

      TrainResult res = train(g, cfg);
      save_checkpoint(dir / "checkpoint.json", res.params,
                      CheckpointMeta{cfg.seed, cfg.hash(), cfg.to_json()});
      res.log.checkpoint = (dir / "checkpoint.json").string();
      write_atomic(dir / "train_log.jsonl", res.log.to_jsonl());
      write_node_map(g, dir / "node_map.csv");
      m.output(dir / "checkpoint.json");
      m.output(dir / "train_log.jsonl");
      m.output(dir / "node_map.csv");
      m.extra()["isolated_nodes"] = res.log.isolated_nodes;
      m.extra()["empty_minus_batches"] = res.log.empty_minus_batches;
      m.write(dir);
      const auto& last = res.log.epochs.back();
      out << "epoch " << last.epoch << " loss " << last.mean.total << "\n";
      return kExitOk;
    }

    if (sco->parsed()) {
      const fs::path dir = resolve_out_dir(opt);
      Manifest m("score", opt);
      CheckpointMeta meta;
      const EncoderParams params = load_checkpoint(checkpoint, &meta);
      m.input(checkpoint);
      m.config(meta.config_json, meta.config_hash);
      const AttributedGraph g = load_from(opt, m);
      const Vector scores = infer(params, g);
      write_scores_csv(dir / "scores.csv", g, scores);
      write_node_map(g, dir / "node_map.csv");
      m.output(dir / "scores.csv");
      m.output(dir / "node_map.csv");
      m.write(dir);
      out << "scored " << g.num_nodes() << " nodes\n";
      return kExitOk;
    }

    if (evl->parsed()) {
      const std::vector<double> scores = read_scores_csv(scores_path);
      const std::vector<int> labels = load_labels(opt.labels);
      if (scores.size() != labels.size()) {
        throw ShapeError("scores file has " + std::to_string(scores.size()) + " rows but labels has " +
                         std::to_string(labels.size()));
      }
      const double roc = auroc(scores, labels);
      const double pr = auprc(scores, labels);
      const fs::path dir = resolve_out_dir(opt);
      Manifest m("eval", opt);
      m.input(scores_path);
      m.input(opt.labels);
      std::size_t positives = 0;
      for (int y : labels) positives += static_cast<std::size_t>(y);
      ojson metrics = {{"n", scores.size()}, {"positives", positives}, {"auroc", roc}, {"auprc", pr}};
      write_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
      m.output(dir / "metrics.json");
      m.write(dir);
      out << "auroc " << fmt17(roc) << "\nauprc " << fmt17(pr) << "\n";
      return kExitOk;
    }

    if (syn->parsed()) {
      SynthSpec spec;
      if (!spec_path.empty()) spec = synth_spec_from_json(read_file(spec_path));
      if (o_n->count()) spec.n = flags_spec.n;
      if (o_ff->count()) spec.fraud_fraction = flags_spec.fraud_fraction;
      if (o_deg->count()) spec.avg_degree = flags_spec.avg_degree;
      if (o_cam->count()) spec.camouflage = flags_spec.camouflage;
      if (o_wire->count()) spec.heterophilic_wiring = flags_spec.heterophilic_wiring;
      if (o_d->count()) spec.d = flags_spec.d;
      if (o_syn_seed->count()) spec.seed = opt.seed;
      opt.seed = spec.seed;
      const AttributedGraph g = generate(spec);
      const fs::path dir = resolve_out_dir(opt);
      Manifest m("synth", opt);
      m.input(spec_path);
      m.extra()["spec"] = ojson::parse(spec.to_json());
      write_edge_list(g, dir / "edges.txt");
      write_attributes(g, dir / "attributes.csv");
      write_labels(g, dir / "labels.txt");
      write_atomic(dir / "synth_spec.json", spec.to_json(2) + "\n");
      for (const char* f : {"edges.txt", "attributes.csv", "labels.txt", "synth_spec.json"}) {
        m.output(dir / f);
      }
      m.write(dir);
      std::size_t fraud = 0;
      for (int y : *g.labels()) fraud += static_cast<std::size_t>(y);
      out << "nodes " << g.num_nodes() << ", edges " << g.num_edges() << ", fraud " << fraud
          << "\n";
      return kExitOk;
    }

    if (rep->parsed()) {
      Suite suite = make_suite(suite_name);
      if (o_seeds->count()) suite.seeds = suite_seeds;
      if (o_sepochs->count()) {
        suite.config.epochs = suite_epochs;
        for (auto& v : suite.variants) v.config.epochs = suite_epochs;
      }
      suite.config.validate();
      const fs::path dir = resolve_out_dir(opt);
      Manifest m("reproduce", opt);
      m.config(suite.config.to_json(), suite.config.hash());
      m.extra()["suite"] = suite.name;
      m.extra()["graph"] = ojson::parse(suite.graph.to_json());
      m.extra()["seeds"] = suite.seeds;
      const SuiteResult res = run_suite(suite, opt.threads);
      ojson report;
      report["suite"] = suite.name;
      report["summary"] = ojson::parse(reports_to_json(res.summary, -1));
      report["per_graph"] = ojson::parse(reports_to_json(res.per_graph, -1));
      write_atomic(dir / "report.json", report.dump(2) + "\n");
      write_atomic(dir / "report.csv", reports_to_csv(res.per_graph));
      m.output(dir / "report.json");
      m.output(dir / "report.csv");
      m.write(dir);
      char line[160];
      for (const auto& r : res.summary) {
        std::snprintf(line, sizeof(line), "%-16s AUROC %.4f±%.4f  AUPRC %.4f±%.4f\n",
                      r.variant.c_str(), r.auroc_mean, r.auroc_std, r.auprc_mean, r.auprc_std);
        out << line;
      }
      return kExitOk;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace huge::cli
