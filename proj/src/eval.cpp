#include "huge/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace huge {

namespace {

struct ClassCounts {
  Index positives = 0;
  Index negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  ClassCounts c;
  for (int y : labels) {
    if (y == 1) ++c.positives;
    else if (y == 0) ++c.negatives;
    else throw ValidationError("labels must be 0 or 1");
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw ValidationError("ranking metrics need at least one positive and one negative label");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ValidationError("score is NaN");
  }
  return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

void aggregate(ScoreReport& rep) {
  const double k = static_cast<double>(rep.runs.size());
  rep.auroc_mean = rep.auprc_mean = rep.auroc_std = rep.auprc_std = 0.0;
  for (const auto& r : rep.runs) {
    rep.auroc_mean += r.auroc / k;
    rep.auprc_mean += r.auprc / k;
  }
  for (const auto& r : rep.runs) {
    rep.auroc_std += (r.auroc - rep.auroc_mean) * (r.auroc - rep.auroc_mean) / k;
    rep.auprc_std += (r.auprc - rep.auprc_mean) * (r.auprc - rep.auprc_mean) / k;
  }
  rep.auroc_std = std::sqrt(rep.auroc_std);
  rep.auprc_std = std::sqrt(rep.auprc_std);
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const ClassCounts c = check_inputs(scores, labels);
  const auto idx = order_by_score(scores, false);
  double rank_sum = 0.0;
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t stop = start + 1;
    while (stop < idx.size() && scores[idx[stop]] == scores[idx[start]]) ++stop;
    // Ranks start+1 .. stop share their average.
    const double avg_rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[idx[k]] == 1) rank_sum += avg_rank;
    }
    start = stop;
  }
  const double n1 = static_cast<double>(c.positives);
  const double n0 = static_cast<double>(c.negatives);
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const ClassCounts c = check_inputs(scores, labels);
  const auto idx = order_by_score(scores, true);
  const double total_pos = static_cast<double>(c.positives);
  Index tp = 0;
  Index fp = 0;
  double ap = 0.0;
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t stop = start + 1;
    while (stop < idx.size() && scores[idx[stop]] == scores[idx[start]]) ++stop;
    Index block_tp = 0;
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[idx[k]] == 1) ++block_tp;
      else ++fp;
    }
    tp += block_tp;
    if (block_tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += (static_cast<double>(block_tp) / total_pos) * precision;
    }
    start = stop;
  }
  return ap;
}

std::vector<Variant> ablation_variants(const TrainConfig& base) {
  std::vector<Variant> out;
  auto with = [&](const std::string& name, auto edit) {
    Variant v{name, base, false};
    edit(v.config);
    out.push_back(v);
  };
  with("w/ HALO", [](TrainConfig& c) { c.metric = Metric::halo; });
  with("w/ Euc. Dist.", [](TrainConfig& c) { c.metric = Metric::euclidean; });
  with("w/ Cos. Dist.", [](TrainConfig& c) { c.metric = Metric::cosine; });
  with("w/ AHR", [](TrainConfig& c) { c.metric = Metric::ahr; });
  with("w/o Alignment", [](TrainConfig& c) {
    c.metric = Metric::halo;
    c.alpha = 0.0;
  });
  with("w/o GNN", [](TrainConfig& c) {
    c.metric = Metric::halo;
    c.use_gnn = false;
  });
  return out;
}

std::vector<ScoreReport> run_matrix(const AttributedGraph& g, std::span<const Variant> variants,
                                    std::span<const std::uint64_t> seeds,
                                    const std::string& dataset, int threads) {
  if (!g.labels()) throw ValidationError("run_matrix needs ground-truth labels");
  if (seeds.empty()) throw ValidationError("run_matrix needs at least one seed");
  const auto& labels = *g.labels();
  const std::size_t cells = variants.size() * seeds.size();
  std::vector<SeedResult> results(cells);
  std::vector<std::exception_ptr> errors(cells);

  auto run_cell = [&](std::size_t cell) {
    const Variant& v = variants[cell / seeds.size()];
    SeedResult r;
    r.seed = seeds[cell % seeds.size()];
    if (v.heterophily_only) {
      r.scores = node_heterophily(g, v.config.metric, v.config.eps_halo).node_values;
    } else {
      TrainConfig cfg = v.config;
      cfg.seed = r.seed;
      TrainResult trained = train(g, cfg);
      for (const auto& e : trained.log.epochs) r.epoch_losses.push_back(e.mean.total);
      r.scores = infer(trained.params, g);
    }
    const std::span<const double> s(r.scores.data(), static_cast<std::size_t>(r.scores.size()));
    r.auroc = auroc(s, labels);
    r.auprc = auprc(s, labels);
    results[cell] = std::move(r);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      try {
        run_cell(cell);
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(cells)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ScoreReport> reports;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    ScoreReport rep;
    rep.dataset = dataset;
    rep.variant = variants[vi].name;
    rep.metric = to_string(variants[vi].config.metric);
    rep.config_hash = variants[vi].config.hash();
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      rep.runs.push_back(std::move(results[vi * seeds.size() + si]));
    }
    aggregate(rep);
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<ScoreReport> summarize(std::span<const ScoreReport> reports,
                                   const std::string& dataset) {
  std::vector<ScoreReport> out;
  for (const auto& r : reports) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ScoreReport& o) { return o.variant == r.variant; });
    if (it == out.end()) {
      ScoreReport copy = r;
      copy.dataset = dataset;
      out.push_back(std::move(copy));
    } else {
      it->runs.insert(it->runs.end(), r.runs.begin(), r.runs.end());
    }
  }
  for (auto& r : out) aggregate(r);
  return out;
}

Suite make_suite(const std::string& name) {
  Suite s;
  s.name = name;
  s.graph.n = 2000;
  s.graph.d = 16;
  s.graph.fraud_fraction = 0.05;
  s.graph.camouflage = 0.5;
  s.graph.heterophilic_wiring = 0.8;
  s.graph.avg_degree = 10.0;
  s.config.epochs = 50;
  s.config.lr = 0.0005;
  s.config.alpha = 0.5;
  s.config.batch_size = 512;
  s.seeds = {0, 1, 2, 3, 4};
  if (name == "desk") {
    s.variants.push_back({"HUGE", s.config, false});
    s.variants.push_back({"HALO score", s.config, true});
  } else if (name == "ablation") {
    s.variants = ablation_variants(s.config);
  } else {
    throw ValidationError("unknown suite '" + name + "' (expected desk or ablation)");
  }
  return s;
}

SuiteResult run_suite(const Suite& suite, int threads) {
  SuiteResult out;
  for (std::uint64_t seed : suite.seeds) {
    SynthSpec spec = suite.graph;
    spec.seed = seed;
    const AttributedGraph g = generate(spec);
    const std::uint64_t one[] = {seed};
    auto reports = run_matrix(g, suite.variants, one, "synth-" + std::to_string(seed), threads);
    for (auto& r : reports) out.per_graph.push_back(std::move(r));
  }
  out.summary = summarize(out.per_graph, suite.name);
  return out;
}

std::string reports_to_json(std::span<const ScoreReport> reports, int indent) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    std::vector<std::uint64_t> seeds;
    for (const auto& s : r.runs) {
      runs.push_back({{"seed", s.seed}, {"auroc", s.auroc}, {"auprc", s.auprc}});
      seeds.push_back(s.seed);
    }
    rows.push_back({{"dataset", r.dataset},
                    {"variant", r.variant},
                    {"metric", r.metric},
                    {"config_hash", r.config_hash},
                    {"seeds", seeds},
                    {"auroc_mean", r.auroc_mean},
                    {"auroc_std", r.auroc_std},
                    {"auprc_mean", r.auprc_mean},
                    {"auprc_std", r.auprc_std},
                    {"runs", runs}});
  }
  return rows.dump(indent);
}

std::string reports_to_csv(std::span<const ScoreReport> reports) {
  std::string out = "dataset,variant,seed,auroc,auprc\n";
  char buf[128];
  for (const auto& r : reports) {
    for (const auto& s : r.runs) {
      std::snprintf(buf, sizeof(buf), ",%llu,%.6f,%.6f\n",
                    static_cast<unsigned long long>(s.seed), s.auroc, s.auprc);
      out += r.dataset + "," + r.variant + buf;
    }
  }
  return out;
}

}  // namespace huge
