#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bidlab/experiment.hpp"
#include "bidlab/io.hpp"

namespace bidlab {

struct Scenario {
  ValuationCurve curve;
  std::unique_ptr<Adversary> adversary;
  std::map<std::string, double> instance_params;
  std::string name;
};

inline double param_or(const json& params, const char* key, double def) {
  return params.contains(key) ? params.at(key).get<double>() : def;
}

// Builds the bidder's curve and the adversary for one replication.
inline Scenario build_scenario(const ExperimentConfig& cfg, std::uint64_t adv_seed) {
  Scenario sc;
  const json& a = cfg.adversary;
  const json params = a.value("params", json::object());
  auto own_curve = [&]() {
    if (!cfg.values) throw std::invalid_argument("adversary needs 'values' for the bidder");
    return ValuationCurve(*cfg.values, cfg.gamma);
  };
  auto replay = [&](BenchmarkInstance inst) {
    sc.curve = cfg.values ? own_curve() : inst.curve;
    sc.instance_params = inst.params;
    sc.name = inst.name;
    sc.adversary = std::make_unique<ReplayAdversary>(std::move(inst.history));
  };
  if (a.contains("instance_file")) {
    std::filesystem::path p = a.at("instance_file").get<std::string>();
    if (p.is_relative()) p = cfg.base_dir / p;
    replay(load_instance(p));
    return sc;
  }
  const std::string kind = a.at("kind").get<std::string>();
  if (kind == "pouf_tight_m1") {
    replay(gen_pouf_tight_m1(param_or(params, "delta", 0.5)));
  } else if (kind == "pouf_tight_general") {
    replay(gen_pouf_tight_general(static_cast<int>(param_or(params, "m", 1)), param_or(params, "delta", 0.5),
                                  static_cast<int>(param_or(params, "N", 4))));
  } else if (kind == "mmbar_tight") {
    replay(gen_mmbar_tight(static_cast<int>(param_or(params, "m_prime", 2)), param_or(params, "delta", 0.5),
                           static_cast<int>(param_or(params, "N", 4))));
  } else if (kind == "cumulative_impossibility") {
    replay(gen_cumulative_impossibility(param_or(params, "epsilon", 0.5), cfg.learner.T));
  } else if (kind == "regret_lb") {
    const double delta = param_or(params, "delta", regret_lb_delta(cfg.learner.T));
    const auto lb = gen_regret_lb(cfg.learner.M, delta);
    const bool P = params.value("scenario", std::string("P")) != "Q";
    sc.curve = lb.curve;
    sc.name = "regret_lb";
    sc.instance_params = {{"delta", delta}};
    sc.adversary = std::make_unique<StochasticAdversary>(regret_lb_law(lb, P), adv_seed);
  } else if (kind == "stochastic") {
    if (cfg.K < 1) throw std::invalid_argument("stochastic adversary needs K");
    const int M = cfg.values ? static_cast<int>(cfg.values->size()) : cfg.learner.M;
    if (M < 1) throw std::invalid_argument("stochastic adversary needs M or values");
    const auto law_seed = static_cast<std::uint64_t>(param_or(params, "instance_seed", 1));
    auto law = gen_stochastic_benchmark(M, cfg.K, static_cast<int>(param_or(params, "n_profiles", 4)), law_seed);
    if (cfg.values) law.curve = own_curve();
    sc.curve = law.curve;
    sc.name = "stochastic";
    sc.adversary = std::make_unique<StochasticAdversary>(std::move(law), adv_seed);
  } else if (kind == "price_squeeze") {
    if (cfg.K < 1) throw std::invalid_argument("price_squeeze adversary needs K");
    sc.curve = own_curve();
    sc.name = "price_squeeze";
    sc.adversary = std::make_unique<PriceSqueezeAdversary>(cfg.K, adv_seed, param_or(params, "gap", 1e-3),
                                                           param_or(params, "base_hi", 1.0));
  } else {
    throw std::invalid_argument("unknown adversary kind: " + kind);
  }
  return sc;
}

struct ReplicationResult {
  std::string trace;
  double value = 0, payment = 0, hindsight_opt = 0, regret = 0;
  double expected_value = 0, expected_opt = 0, pseudo_regret = 0;
  bool has_expected = false;
  int rows_V_lt_P = 0;
  int window_violations = 0;
  double min_window_surplus = 0;
  double eta = 0;
  int M = 0;
  std::vector<CompetingBids> history;
  std::map<std::string, double> instance_params;
  ValuationCurve curve;
};

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Sums over every window of T0 consecutive rounds, each taken oldest first.
inline std::pair<int, double> window_check(const std::vector<double>& surplus, std::optional<int> T0) {
  int bad = 0;
  double lo = std::numeric_limits<double>::infinity();
  const std::size_t n = surplus.size();
  if (!T0) {
    double s = 0.0;
    for (double d : surplus) {
      s += d;
      lo = std::min(lo, s);
      bad += s < 0.0;
    }
    return {bad, n ? lo : 0.0};
  }
  const auto w = static_cast<std::size_t>(*T0);
  for (std::size_t end = 1; end <= n; ++end) {
    const std::size_t begin = end > w ? end - w : 0;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += surplus[i];
    lo = std::min(lo, s);
    bad += s < 0.0;
  }
  return {bad, n ? lo : 0.0};
}

inline ReplicationResult run_replication(const ExperimentConfig& cfg, std::uint64_t rep) {
  ReplicationResult out;
  LearnerConfig lc = cfg.learner;
  lc.seed = derive_seed(cfg.learner.seed, rep, 1);
  Scenario sc = build_scenario(cfg, derive_seed(cfg.learner.seed, rep, 2));
  const bool contextual = !cfg.contexts.empty();
  std::vector<ValuationCurve> curves = contextual ? cfg.contexts : std::vector<ValuationCurve>{sc.curve};
  lc.M = static_cast<int>(curves.front().M());
  if (cfg.learner.M > 0 && cfg.learner.M != lc.M)
    throw std::invalid_argument("M = " + std::to_string(cfg.learner.M) + " differs from the curve length " +
                                std::to_string(lc.M));
  lc.m = std::min(lc.m, lc.M);
  out.M = lc.M;

  std::unique_ptr<Learner> learner;
  ContextualLearner* ctx_learner = nullptr;
  if (contextual) {
    auto cl = std::make_unique<ContextualLearner>(curves, lc, lc.mode == LearnerMode::ContextualAdversarial);
    ctx_learner = cl.get();
    learner = std::move(cl);
  } else {
    learner = make_learner(sc.curve, lc);
  }
  out.eta = learner->eta();
  std::mt19937_64 ctx_rng(derive_seed(cfg.learner.seed, rep, 3));
  std::discrete_distribution<std::size_t> ctx_pick(cfg.context_probs.begin(), cfg.context_probs.end());

  std::vector<LayeredDag> acc;
  std::vector<std::vector<double>> cum;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    acc.emplace_back(lc.M, lc.m);
    cum.emplace_back(acc.back().num_edges(), 0.0);
  }
  const StochasticInstance* law = contextual ? nullptr : sc.adversary->law();
  std::vector<double> mu0;
  if (law) mu0 = expected_round_weights(acc[0], *law, sc.curve, 0.0, lc.policy);

  std::string& tr = out.trace;
  tr = "t,strategy_text,x,p,V,P,delta_t,cum_value,cum_regret\n";
  std::vector<RoundRecord> past;
  std::vector<double> surplus;
  for (int t = 1; t <= lc.T; ++t) {
    std::size_t ctx = 0;
    if (contextual) ctx = ctx_pick(ctx_rng);
    CompetingBids c = sc.adversary->next(past);
    RoundRecord r = contextual ? ctx_learner->round(ctx, c) : learner->play(c);
    out.value += r.outcome.V;
    out.payment += r.outcome.P;
    if (r.outcome.V < r.outcome.P) ++out.rows_V_lt_P;
    surplus.push_back(r.outcome.V - r.outcome.P);
    const auto w = round_weights(acc[ctx], c, curves[ctx], 0.0, lc.policy);
    for (std::size_t e = 0; e < w.size(); ++e) cum[ctx][e] += w[e];
    if (law) {
      const auto p = learner->last_marginals();
      const auto mu = r.delta == 0.0 ? mu0 : expected_round_weights(acc[0], *law, sc.curve, r.delta, lc.policy);
      for (std::size_t e = 0; e < p.size(); ++e) out.expected_value += p[e] * mu[e];
    }
    double best = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) best += max_weight_path(acc[i], cum[i]).weight;
    tr += std::to_string(t) + "," + r.strategy.to_string() + "," + std::to_string(r.outcome.x) + "," +
          fmt_num(r.outcome.p) + "," + fmt_num(r.outcome.V) + "," + fmt_num(r.outcome.P) + "," + fmt_num(r.delta) +
          "," + fmt_num(out.value) + "," + fmt_num(best - out.value) + "\n";
    if (t == lc.T) out.hindsight_opt = best;
    out.history.push_back(c);
    past.push_back(std::move(r));
  }
  out.regret = out.hindsight_opt - out.value;
  if (law) {
    out.has_expected = true;
    out.expected_opt = lc.T * max_weight_path(acc[0], mu0).weight;
    out.pseudo_regret = out.expected_opt - out.expected_value;
  }
  const auto [bad, lo] = window_check(surplus, lc.mode == LearnerMode::ShiftedWindow ? cfg.learner.T0 : 1);
  out.window_violations = bad;
  out.min_window_surplus = lo;
  out.instance_params = sc.instance_params;
  out.curve = curves.front();
  return out;
}

// Replications are independent; results land in their own slot, so the
// merged output does not depend on the thread count.
inline std::vector<ReplicationResult> run_replications(const ExperimentConfig& cfg, int replications, int threads) {
  std::vector<ReplicationResult> res(static_cast<std::size_t>(replications));
  std::vector<std::exception_ptr> errs(res.size());
  threads = std::max(1, std::min(threads, replications));
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int r = w; r < replications; r += threads) {
        try {
          res[static_cast<std::size_t>(r)] = run_replication(cfg, static_cast<std::uint64_t>(r));
        } catch (...) {
          errs[static_cast<std::size_t>(r)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return res;
}

inline json summarize(const ExperimentConfig& cfg, const std::vector<ReplicationResult>& res) {
  json s;
  s["config_hash"] = config_hash(cfg);
  s["seed"] = cfg.learner.seed;
  s["mode"] = to_string(cfg.learner.mode);
  s["M"] = res.front().M;
  s["m"] = std::min(cfg.learner.m, res.front().M);
  s["T"] = cfg.learner.T;
  s["eta"] = res.front().eta;
  s["replications"] = res.size();
  json reps = json::array();
  double mv = 0, mp = 0, mr = 0, mpr = 0;
  for (const auto& r : res) {
    json j{{"value", r.value},
           {"payment", r.payment},
           {"hindsight_opt", r.hindsight_opt},
           {"regret", r.regret},
           {"rows_V_lt_P", r.rows_V_lt_P},
           {"window_violations", r.window_violations},
           {"min_window_surplus", r.min_window_surplus}};
    if (r.has_expected) {
      j["expected_value"] = r.expected_value;
      j["pseudo_regret"] = r.pseudo_regret;
    }
    reps.push_back(j);
    mv += r.value;
    mp += r.payment;
    mr += r.regret;
    mpr += r.pseudo_regret;
  }
  const double n = static_cast<double>(res.size());
  s["value"] = mv / n;
  s["payment"] = mp / n;
  s["regret"] = mr / n;
  if (res.front().has_expected) s["pseudo_regret"] = mpr / n;
  s["per_replication"] = reps;
  if (cfg.contexts.empty()) {
    const auto rich = richness_ratio(res.front().history, res.front().curve, std::min(cfg.learner.m, res.front().M));
    s["lambda"] = rich.lambda;
    s["alpha"] = rich.alpha;
    s["alpha_is_lower_bound"] = rich.alpha_is_lower_bound;
    s["achieved_ratio"] = rich.denominator > 0 ? res.front().hindsight_opt / rich.denominator : 0.0;
  }
  if (!res.front().instance_params.empty()) s["instance"] = res.front().instance_params;
  return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

inline json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int replications = 1,
                           int threads = 1) {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  std::filesystem::create_directories(out_dir);
  const auto res = run_replications(cfg, replications, threads);
  json files = json::array();
  for (std::size_t r = 0; r < res.size(); ++r) {
    const std::string name = r == 0 ? "trace.csv" : "trace_rep" + std::to_string(r) + ".csv";
    write_text(out_dir / name, res[r].trace);
    files.push_back(name);
  }
  json summary = summarize(cfg, res);
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  json manifest{{"config_hash", config_hash(cfg)},
                {"seed", cfg.learner.seed},
                {"replications", replications},
                {"config", cfg.canonical},
                {"artifacts", files}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace bidlab
