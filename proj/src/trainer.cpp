#include "huge/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace huge {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("lr must be > 0");
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  if (!(eps_halo > 0.0)) throw ValidationError("eps_halo must be > 0");
  if (d_e < 1) throw ValidationError("d_e must be >= 1");
  if (optimizer != "adam") throw ValidationError("unsupported optimizer '" + optimizer + "'");
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["alpha"] = alpha;
  j["lr"] = lr;
  j["seed"] = seed;
  j["eps_halo"] = eps_halo;
  j["d_e"] = d_e;
  j["metric"] = to_string(metric);
  j["use_gnn"] = use_gnn;
  j["optimizer"] = optimizer;
  return j.dump();
}

std::string TrainConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json())));
  return buf;
}

TrainConfig config_from_json(const std::string& json, const TrainConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  TrainConfig cfg = base;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key == "epochs") cfg.epochs = it->get<std::int64_t>();
      else if (key == "batch_size") cfg.batch_size = it->get<std::int64_t>();
      else if (key == "alpha") cfg.alpha = it->get<double>();
      else if (key == "lr") cfg.lr = it->get<double>();
      else if (key == "seed") cfg.seed = it->get<std::uint64_t>();
      else if (key == "eps_halo") cfg.eps_halo = it->get<double>();
      else if (key == "d_e") cfg.d_e = it->get<std::int64_t>();
      else if (key == "metric") cfg.metric = parse_metric(it->get<std::string>());
      else if (key == "use_gnn") cfg.use_gnn = it->get<bool>();
      else if (key == "optimizer") cfg.optimizer = it->get<std::string>();
      else throw ValidationError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config value has the wrong type: ") + e.what());
  }
  return cfg;
}

namespace {

nlohmann::ordered_json breakdown_json(const LossBreakdown& l) {
  return {{"l_rank_plus", l.l_rank_plus},     {"l_rank_minus", l.l_rank_minus},
          {"l_rank", l.l_rank},               {"l_rank_plus_bar", l.l_rank_plus_bar},
          {"l_rank_minus_bar", l.l_rank_minus_bar}, {"l_rank_bar", l.l_rank_bar},
          {"l_align", l.l_align},             {"total", l.total},
          {"alpha", l.alpha}};
}

void accumulate(LossBreakdown& acc, const LossBreakdown& l) {
  acc.l_rank_plus += l.l_rank_plus;
  acc.l_rank_minus += l.l_rank_minus;
  acc.l_rank += l.l_rank;
  acc.l_rank_plus_bar += l.l_rank_plus_bar;
  acc.l_rank_minus_bar += l.l_rank_minus_bar;
  acc.l_rank_bar += l.l_rank_bar;
  acc.l_align += l.l_align;
  acc.total += l.total;
  acc.empty_minus += l.empty_minus;
}

void scale(LossBreakdown& acc, double f) {
  acc.l_rank_plus *= f;
  acc.l_rank_minus *= f;
  acc.l_rank *= f;
  acc.l_rank_plus_bar *= f;
  acc.l_rank_minus_bar *= f;
  acc.l_rank_bar *= f;
  acc.l_align *= f;
  acc.total *= f;
}

[[noreturn]] void numerical_failure(const BatchContext& ctx, const LossBreakdown& l,
                                    std::int64_t epoch, const char* what) {
  std::ostringstream msg;
  msg << what << " at epoch " << epoch << "; loss " << breakdown_json(l).dump()
      << "; batch of " << ctx.batch.size() << " nodes [";
  for (std::size_t k = 0; k < ctx.batch.size() && k < 32; ++k) msg << (k ? "," : "") << ctx.batch[k];
  if (ctx.batch.size() > 32) msg << ",...";
  msg << "]";
  throw NumericalError(msg.str());
}

}  // namespace

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["batches"] = e.batches;
    j["loss"] = breakdown_json(e.mean);
    j["seconds"] = e.seconds;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::vector<Index>> epoch_batches(Index n, std::int64_t batch_size,
                                              std::uint64_t seed, std::int64_t epoch) {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0xba7c4u};
  std::mt19937_64 rng(seq);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  shuffle(order, rng);
  std::vector<std::vector<Index>> out;
  for (Index start = 0; start < n; start += batch_size) {
    const Index stop = std::min<Index>(n, start + batch_size);
    out.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return out;
}

TrainResult train(const AttributedGraph& g, const TrainConfig& cfg,
                  const HeterophilyProvider& heterophily) {
  cfg.validate();
  if (g.num_nodes() == 0) throw ValidationError("cannot train on an empty graph");
  TrainResult result;
  result.log.config = cfg;
  result.heterophily = heterophily(g, cfg.metric, cfg.eps_halo);
  result.log.isolated_nodes = result.heterophily.isolated_nodes;

  EncoderParams params = EncoderParams::init(g.dim(), cfg.d_e, cfg.seed);
  AdamState adam(params.size());
  Vector flat = params.flatten();

  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.mean.alpha = cfg.alpha;
    for (const auto& batch : epoch_batches(g.num_nodes(), cfg.batch_size, cfg.seed, epoch)) {
      const BatchContext ctx = build_batch_context(params, g, batch, cfg.use_gnn);
      const LossBreakdown loss = total_loss(ctx, result.heterophily, cfg.alpha);
      if (!std::isfinite(loss.total)) numerical_failure(ctx, loss, epoch, "non-finite loss");
      const EncoderParams grad = backward(ctx, result.heterophily, cfg.alpha, params);
      if (!grad.all_finite()) numerical_failure(ctx, loss, epoch, "non-finite gradient");
      adam_step(flat, grad.flatten(), adam, cfg.lr);
      params.assign(flat);
      accumulate(record.mean, loss);
      result.log.empty_minus_batches += loss.empty_minus;
      ++record.batches;
    }
    scale(record.mean, 1.0 / static_cast<double>(record.batches));
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(record);
  }
  result.params = std::move(params);
  return result;
}

Vector infer(const EncoderParams& params, const AttributedGraph& g) {
  if (g.dim() != params.input_dim()) {
    throw ShapeError("graph attribute dimension " + std::to_string(g.dim()) +
                     " does not match checkpoint input dimension " +
                     std::to_string(params.input_dim()));
  }
  return final_fraud_scores(params, g);
}

void write_scores_csv(const std::filesystem::path& path, const AttributedGraph& g,
                      const Vector& scores, const std::string& column) {
  if (scores.size() != g.num_nodes()) throw ShapeError("score count != node count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "node_id," << column << '\n';
  char buf[64];
  for (Index i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", scores[i]);
    out << g.node_ids()[i] << ',' << buf << '\n';
  }
}

}  // namespace huge
