#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidlab/auction.hpp"
#include "bidlab/dag.hpp"

namespace bidlab {

enum class LearnerMode { FullInfo, Bandit, AdaptiveBandit, ContextualStochastic, ContextualAdversarial, ShiftedWindow };

inline const char* to_string(LearnerMode m) {
  switch (m) {
    case LearnerMode::FullInfo: return "full_info";
    case LearnerMode::Bandit: return "bandit";
    case LearnerMode::AdaptiveBandit: return "adaptive";
    case LearnerMode::ContextualStochastic: return "contextual_stochastic";
    case LearnerMode::ContextualAdversarial: return "contextual_adversarial";
    case LearnerMode::ShiftedWindow: return "shifted";
  }
  return "?";
}

inline LearnerMode parse_mode(const std::string& s) {
  if (s == "full_info") return LearnerMode::FullInfo;
  if (s == "bandit") return LearnerMode::Bandit;
  if (s == "adaptive") return LearnerMode::AdaptiveBandit;
  if (s == "contextual_stochastic") return LearnerMode::ContextualStochastic;
  if (s == "contextual_adversarial") return LearnerMode::ContextualAdversarial;
  if (s == "shifted") return LearnerMode::ShiftedWindow;
  throw std::invalid_argument("unknown mode: " + s);
}

struct LearnerConfig {
  LearnerMode mode = LearnerMode::FullInfo;
  int M = 1;
  int m = 1;
  int T = 1;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<double> theta;
  std::optional<double> delta_conf;
  std::optional<int> T0;  // unset: unbounded window
  std::uint64_t seed = 0;
  TiePolicy policy = TiePolicy::FavorBidder;
};

inline std::size_t dag_edge_count(int M, int m) { return LayeredDag(M, m).num_edges(); }

inline double default_eta(LearnerMode mode, int M, int m, int T) {
  const double dM = M, dm = m, dT = std::max(T, 1), lM = std::log(static_cast<double>(M));
  switch (mode) {
    case LearnerMode::Bandit: return std::sqrt(lM / (dm * dT)) / (dM * dM);
    case LearnerMode::ContextualStochastic: return std::sqrt(dm * lM / dT) / dM;
    case LearnerMode::AdaptiveBandit: {
      const double E = static_cast<double>(dag_edge_count(M, m));
      return std::sqrt(dm * lM / ((dm + 1.0) * E * dT)) / (2.0 * dM);
    }
    default: return std::sqrt(8.0 * dm * lM / dT) / dM;
  }
}

struct AdaptiveParams {
  double eta, lambda, theta;
};

// Exploration rate, learning rate and bias of the adaptive learner, kept
// consistent through lambda = 2 eta (m+1) M |E|.
inline AdaptiveParams adaptive_params(const LearnerConfig& cfg, std::size_t num_edges) {
  const double dM = cfg.M, dm = cfg.m, dT = std::max(cfg.T, 1), E = static_cast<double>(num_edges);
  const double scale = 2.0 * (dm + 1.0) * dM * E;
  double lambda, eta;
  if (cfg.lambda && cfg.eta) {
    lambda = *cfg.lambda;
    eta = *cfg.eta;
    if (std::abs(lambda - eta * scale) > 1e-9)
      throw std::invalid_argument("lambda must equal 2 eta (m+1) M |E|");
  } else if (cfg.lambda) {
    lambda = *cfg.lambda;
    eta = lambda / scale;
  } else if (cfg.eta) {
    eta = *cfg.eta;
    lambda = eta * scale;
  } else {
    lambda = std::sqrt(dm * (dm + 1.0) * E * std::log(dM) / dT);
    if (!(lambda > 0.0) || lambda > 0.5) lambda = 0.5;
    eta = lambda / scale;
  }
  if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("lambda must lie in (0, 1]");
  const double dconf = cfg.delta_conf.value_or(1.0 / dT);
  double theta = cfg.theta.value_or(dM * std::sqrt((dm + 1.0) * std::log(E / dconf) / (dT * E)));
  if (!cfg.theta) theta = std::min(theta, dM);
  if (!(theta > 0.0) || theta > dM) throw std::invalid_argument("theta must lie in (0, M]");
  return {eta, lambda, theta};
}

struct RoundRecord {
  MUniformStrategy strategy;
  Path path;
  RoundOutcome outcome;
  double delta = 0.0;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual RoundRecord play(const CompetingBids& c) = 0;
  // Edge marginals of the law the last played path was drawn from.
  virtual std::vector<double> last_marginals() const = 0;
  virtual const LayeredDag& current_dag() const = 0;
  virtual const ValuationCurve& curve() const = 0;
  virtual double eta() const = 0;
};

class FullInfoLearner : public Learner {
 public:
  FullInfoLearner(ValuationCurve curve, const LearnerConfig& cfg)
      : curve_(std::move(curve)), cfg_(cfg), dag_(cfg.M, cfg.m), rng_(cfg.seed),
        prev_(dag_.num_edges(), 0.0) {
    if (static_cast<int>(curve_.M()) != cfg.M) throw std::invalid_argument("curve length differs from M");
    eta_ = cfg.eta.value_or(default_eta(LearnerMode::FullInfo, cfg.M, cfg.m, cfg.T));
  }

  MUniformStrategy choose() {
    update_probabilities(dag_, eta_, prev_);
    path_ = sample_path(dag_, rng_);
    return path_to_strategy(dag_, path_, curve_);
  }

  RoundOutcome observe(const MUniformStrategy& s, const CompetingBids& c) {
    const RoundOutcome o = clear_auction(s, c, curve_, cfg_.policy);
    prev_ = round_weights(dag_, c, curve_, 0.0, cfg_.policy);
    return o;
  }

  RoundRecord play(const CompetingBids& c) override {
    MUniformStrategy s = choose();
    RoundOutcome o = observe(s, c);
    return {std::move(s), path_, o, 0.0};
  }

  std::pair<MUniformStrategy, RoundOutcome> full_info_round(const CompetingBids& c) {
    RoundRecord r = play(c);
    return {r.strategy, r.outcome};
  }

  std::vector<double> last_marginals() const override { return edge_marginals(dag_); }
  const LayeredDag& current_dag() const override { return dag_; }
  const ValuationCurve& curve() const override { return curve_; }
  double eta() const override { return eta_; }
  const std::vector<double>& pending_weights() const { return prev_; }

 private:
  ValuationCurve curve_;
  LearnerConfig cfg_;
  LayeredDag dag_;
  std::mt19937_64 rng_;
  std::vector<double> prev_;
  Path path_;
  double eta_ = 0.0;
};

struct BanditFeedback {
  int x = 0;
  double P = 0.0;
};

// w_hat(e) = wbar(e) - (wbar(e) - w(e)) / p(e) on the played path, wbar(e) off it.
inline std::vector<double> bandit_estimate(const LayeredDag& dag, const std::vector<double>& marginals,
                                           const Path& played, int x, const ValuationCurve& curve) {
  const auto w = path_weights_from_allocation(dag, played, x, curve);
  std::vector<double> est = dag.wbar();
  for (int e : dag.path_edges(played)) {
    const auto ei = static_cast<std::size_t>(e);
    est[ei] = est[ei] - (est[ei] - w[ei]) / marginals[ei];
  }
  return est;
}

class BanditLearner : public Learner {
 public:
  BanditLearner(ValuationCurve curve, const LearnerConfig& cfg)
      : curve_(std::move(curve)), cfg_(cfg), dag_(cfg.M, cfg.m), rng_(cfg.seed),
        prev_(dag_.num_edges(), 0.0) {
    if (static_cast<int>(curve_.M()) != cfg.M) throw std::invalid_argument("curve length differs from M");
    eta_ = cfg.eta.value_or(default_eta(LearnerMode::Bandit, cfg.M, cfg.m, cfg.T));
  }

  MUniformStrategy choose() {
    update_probabilities(dag_, eta_, prev_);
    marg_ = edge_marginals(dag_);
    path_ = sample_path(dag_, rng_);
    return path_to_strategy(dag_, path_, curve_);
  }

  // Only the allocation of the submitted strategy is used.
  void bandit_round(const BanditFeedback& fb) { prev_ = bandit_estimate(dag_, marg_, path_, fb.x, curve_); }

  RoundRecord play(const CompetingBids& c) override {
    MUniformStrategy s = choose();
    const RoundOutcome o = clear_auction(s, c, curve_, cfg_.policy);
    bandit_round({o.x, o.P});
    return {std::move(s), path_, o, 0.0};
  }

  std::vector<double> last_marginals() const override { return marg_; }
  const LayeredDag& current_dag() const override { return dag_; }
  const ValuationCurve& curve() const override { return curve_; }
  double eta() const override { return eta_; }
  const std::vector<double>& last_estimate() const { return prev_; }

 private:
  ValuationCurve curve_;
  LearnerConfig cfg_;
  LayeredDag dag_;
  std::mt19937_64 rng_;
  std::vector<double> prev_, marg_;
  Path path_;
  double eta_ = 0.0;
};

struct CoveringPathSet {
  std::vector<Path> paths;
};

// One path per layer edge (l-1, j) -> (l, j'): climb to (l-1, j) along the
// diagonal z_i = j - (l-1) + i, take the edge, then go straight to d.
inline CoveringPathSet build_covering_set(const LayeredDag& dag) {
  std::set<Path> seen;
  CoveringPathSet out;
  for (const DagEdge& ed : dag.edges()) {
    if (ed.to_sink) continue;
    const DagNode& a = dag.node(ed.from);
    const DagNode& b = dag.node(ed.to);
    const int l = b.layer;
    Path p{dag.source()};
    for (int i = 1; i < l; ++i) p.push_back(dag.node_index(i, a.j - (l - 1) + i));
    p.push_back(ed.to);
    p.push_back(dag.sink());
    if (seen.insert(p).second) out.paths.push_back(p);
  }
  return out;
}

class AdaptiveLearner : public Learner {
 public:
  AdaptiveLearner(ValuationCurve curve, const LearnerConfig& cfg)
      : curve_(std::move(curve)), cfg_(cfg), dag_(cfg.M, cfg.m), rng_(cfg.seed),
        prev_(dag_.num_edges(), 0.0) {
    if (static_cast<int>(curve_.M()) != cfg.M) throw std::invalid_argument("curve length differs from M");
    params_ = adaptive_params(cfg, dag_.num_edges());
    cover_ = build_covering_set(dag_);
    cover_share_.assign(dag_.num_edges(), 0.0);
    for (const Path& p : cover_.paths)
      for (int e : dag_.path_edges(p)) cover_share_[static_cast<std::size_t>(e)] += 1.0;
    for (double& v : cover_share_) v /= static_cast<double>(cover_.paths.size());
  }

  MUniformStrategy choose() {
    // The weight-pushing state is updated every round; exploration only
    // changes which law the path is drawn from.
    update_probabilities(dag_, params_.eta, prev_);
    const auto base = edge_marginals(dag_);
    marg_.resize(base.size());
    for (std::size_t e = 0; e < base.size(); ++e)
      marg_[e] = (1.0 - params_.lambda) * base[e] + params_.lambda * cover_share_[e];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(rng_) < params_.lambda) {
      std::uniform_int_distribution<std::size_t> pick(0, cover_.paths.size() - 1);
      path_ = cover_.paths[pick(rng_)];
    } else {
      path_ = sample_path(dag_, rng_);
    }
    return path_to_strategy(dag_, path_, curve_);
  }

  // w_hat(e) = w(e) 1{e on path} / p(e) + theta / p(e)
  void adaptive_round(const BanditFeedback& fb) {
    const auto w = path_weights_from_allocation(dag_, path_, fb.x, curve_);
    std::vector<double> on(dag_.num_edges(), 0.0);
    for (int e : dag_.path_edges(path_)) on[static_cast<std::size_t>(e)] = 1.0;
    for (std::size_t e = 0; e < prev_.size(); ++e) prev_[e] = (w[e] * on[e] + params_.theta) / marg_[e];
  }

  RoundRecord play(const CompetingBids& c) override {
    MUniformStrategy s = choose();
    const RoundOutcome o = clear_auction(s, c, curve_, cfg_.policy);
    adaptive_round({o.x, o.P});
    return {std::move(s), path_, o, 0.0};
  }

  std::vector<double> last_marginals() const override { return marg_; }
  const LayeredDag& current_dag() const override { return dag_; }
  const ValuationCurve& curve() const override { return curve_; }
  double eta() const override { return params_.eta; }
  const AdaptiveParams& params() const { return params_; }
  const CoveringPathSet& covering_set() const { return cover_; }

 private:
  ValuationCurve curve_;
  LearnerConfig cfg_;
  LayeredDag dag_;
  std::mt19937_64 rng_;
  std::vector<double> prev_, marg_, cover_share_;
  AdaptiveParams params_{};
  CoveringPathSet cover_;
  Path path_;
};

// One DAG per context. Stochastic contexts update every copy each round with
// that copy's own weights; adversarial contexts touch only the observed copy.
class ContextualLearner : public Learner {
 public:
  ContextualLearner(std::vector<ValuationCurve> contexts, const LearnerConfig& cfg, bool adversarial)
      : contexts_(std::move(contexts)), cfg_(cfg), adversarial_(adversarial), rng_(cfg.seed) {
    if (contexts_.empty()) throw std::invalid_argument("no contexts");
    for (const auto& c : contexts_) {
      if (static_cast<int>(c.M()) != cfg.M) throw std::invalid_argument("context curve length differs from M");
      dags_.emplace_back(cfg.M, cfg.m);
      prev_.emplace_back(dags_.back().num_edges(), 0.0);
    }
    const LearnerMode def = adversarial ? LearnerMode::FullInfo : LearnerMode::ContextualStochastic;
    eta_ = cfg.eta.value_or(default_eta(def, cfg.M, cfg.m, cfg.T));
  }

  std::size_t num_contexts() const { return contexts_.size(); }

  std::size_t context_index(const ValuationCurve& v) const {
    for (std::size_t i = 0; i < contexts_.size(); ++i)
      if (contexts_[i] == v) return i;
    throw std::invalid_argument("unknown context");
  }

  void set_context(std::size_t i) {
    if (i >= contexts_.size()) throw std::invalid_argument("unknown context");
    ctx_ = i;
  }

  RoundRecord round(std::size_t ctx, const CompetingBids& c) {
    set_context(ctx);
    if (adversarial_) {
      update_probabilities(dags_[ctx], eta_, prev_[ctx]);
    } else {
      for (std::size_t i = 0; i < dags_.size(); ++i) update_probabilities(dags_[i], eta_, prev_[i]);
    }
    path_ = sample_path(dags_[ctx], rng_);
    MUniformStrategy s = path_to_strategy(dags_[ctx], path_, contexts_[ctx]);
    const RoundOutcome o = clear_auction(s, c, contexts_[ctx], cfg_.policy);
    if (adversarial_) {
      prev_[ctx] = round_weights(dags_[ctx], c, contexts_[ctx], 0.0, cfg_.policy);
    } else {
      for (std::size_t i = 0; i < dags_.size(); ++i)
        prev_[i] = round_weights(dags_[i], c, contexts_[i], 0.0, cfg_.policy);
    }
    return {std::move(s), path_, o, 0.0};
  }

  MUniformStrategy contextual_stochastic_round(const ValuationCurve& context, const CompetingBids& c) {
    if (adversarial_) throw std::logic_error("learner was built for adversarial contexts");
    return round(context_index(context), c).strategy;
  }

  MUniformStrategy contextual_adversarial_round(const ValuationCurve& context, const CompetingBids& c) {
    if (!adversarial_) throw std::logic_error("learner was built for stochastic contexts");
    return round(context_index(context), c).strategy;
  }

  RoundRecord play(const CompetingBids& c) override { return round(ctx_, c); }
  std::vector<double> last_marginals() const override { return edge_marginals(dags_[ctx_]); }
  const LayeredDag& current_dag() const override { return dags_[ctx_]; }
  const LayeredDag& dag(std::size_t i) const { return dags_.at(i); }
  const ValuationCurve& curve() const override { return contexts_[ctx_]; }
  double eta() const override { return eta_; }

 private:
  std::vector<ValuationCurve> contexts_;
  LearnerConfig cfg_;
  bool adversarial_;
  std::mt19937_64 rng_;
  std::vector<LayeredDag> dags_;
  std::vector<std::vector<double>> prev_;
  std::size_t ctx_ = 0;
  Path path_;
  double eta_ = 0.0;
};

// Bids are raised by delta_t = (1/M) * (surplus V - P over the previous
// T0 - 1 rounds), so any window of T0 rounds keeps a nonnegative surplus.
class ShiftedWindowLearner : public Learner {
 public:
  ShiftedWindowLearner(ValuationCurve curve, const LearnerConfig& cfg)
      : curve_(std::move(curve)), cfg_(cfg), dag_(cfg.M, cfg.m), rng_(cfg.seed),
        prev_(dag_.num_edges(), 0.0) {
    if (static_cast<int>(curve_.M()) != cfg.M) throw std::invalid_argument("curve length differs from M");
    if (cfg.T0 && *cfg.T0 < 1) throw std::invalid_argument("T0 must be >= 1");
    eta_ = cfg.eta.value_or(default_eta(LearnerMode::FullInfo, cfg.M, cfg.m, cfg.T));
    margin_ = 1e-9 * static_cast<double>(cfg.M) * curve_.w(1);
  }

  // Surplus over the rounds the next bid may borrow against, summed oldest first.
  double window_surplus() const {
    if (!cfg_.T0) return running_;
    double s = 0.0;
    for (double d : window_) s += d;
    return s;
  }

  double current_delta() const {
    const double s = window_surplus();
    const double slack = s - margin_ - 1e-12 * std::abs(s);
    return slack > 0.0 ? slack / static_cast<double>(cfg_.M) : 0.0;
  }

  RoundRecord play(const CompetingBids& c) override {
    const double delta = current_delta();
    update_probabilities(dag_, eta_, prev_);
    path_ = sample_path(dag_, rng_);
    MUniformStrategy s = path_to_strategy(dag_, path_, curve_, delta);
    const RoundOutcome o = clear_auction(s, c, curve_, cfg_.policy);
    prev_ = round_weights(dag_, c, curve_, delta, cfg_.policy);
    const double d = o.V - o.P;
    if (cfg_.T0) {
      if (*cfg_.T0 > 1) {
        window_.push_back(d);
        while (static_cast<int>(window_.size()) > *cfg_.T0 - 1) window_.pop_front();
      }
    } else {
      running_ += d;
    }
    return {std::move(s), path_, o, delta};
  }

  RoundRecord shifted_window_round(const CompetingBids& c) { return play(c); }

  std::vector<double> last_marginals() const override { return edge_marginals(dag_); }
  const LayeredDag& current_dag() const override { return dag_; }
  const ValuationCurve& curve() const override { return curve_; }
  double eta() const override { return eta_; }

 private:
  ValuationCurve curve_;
  LearnerConfig cfg_;
  LayeredDag dag_;
  std::mt19937_64 rng_;
  std::vector<double> prev_;
  std::deque<double> window_;
  double running_ = 0.0;
  double margin_ = 0.0;
  Path path_;
  double eta_ = 0.0;
};

inline std::unique_ptr<Learner> make_learner(const ValuationCurve& curve, const LearnerConfig& cfg) {
  switch (cfg.mode) {
    case LearnerMode::FullInfo: return std::make_unique<FullInfoLearner>(curve, cfg);
    case LearnerMode::Bandit: return std::make_unique<BanditLearner>(curve, cfg);
    case LearnerMode::AdaptiveBandit: return std::make_unique<AdaptiveLearner>(curve, cfg);
    case LearnerMode::ContextualStochastic:
      return std::make_unique<ContextualLearner>(std::vector<ValuationCurve>{curve}, cfg, false);
    case LearnerMode::ContextualAdversarial:
      return std::make_unique<ContextualLearner>(std::vector<ValuationCurve>{curve}, cfg, true);
    case LearnerMode::ShiftedWindow: return std::make_unique<ShiftedWindowLearner>(curve, cfg);
  }
  throw std::invalid_argument("unknown mode");
}

}  // namespace bidlab
