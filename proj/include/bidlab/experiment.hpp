#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "bidlab/auction.hpp"
#include "bidlab/dag.hpp"
#include "bidlab/instances.hpp"
#include "bidlab/learners.hpp"

namespace bidlab {

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual int K() const = 0;
  // Competing bids for the next round, chosen before the bidder's strategy
  // for that round is known.
  virtual CompetingBids next(const std::vector<RoundRecord>& past) = 0;
  // i.i.d. adversaries expose their round law for exact expectations.
  virtual const StochasticInstance* law() const { return nullptr; }
};

class ReplayAdversary : public Adversary {
 public:
  explicit ReplayAdversary(std::vector<CompetingBids> history) : history_(std::move(history)) {
    if (history_.empty()) throw std::invalid_argument("empty history");
  }
  int K() const override { return history_.front().K(); }
  CompetingBids next(const std::vector<RoundRecord>& past) override {
    return history_[past.size() % history_.size()];
  }

 private:
  std::vector<CompetingBids> history_;
};

class StochasticAdversary : public Adversary {
 public:
  StochasticAdversary(StochasticInstance law, std::uint64_t seed)
      : law_(std::move(law)), rng_(seed), pick_(law_.probs.begin(), law_.probs.end()) {}
  int K() const override { return law_.K; }
  CompetingBids next(const std::vector<RoundRecord>&) override { return law_.profiles[pick_(rng_)]; }
  const StochasticInstance* law() const override { return &law_; }

 private:
  StochasticInstance law_;
  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> pick_;
};

// After a round where the bidder won, every competing bid sits just above the
// bidder's lowest winning bid; otherwise a fresh random profile is drawn.
class PriceSqueezeAdversary : public Adversary {
 public:
  PriceSqueezeAdversary(int K, std::uint64_t seed, double gap = 1e-3, double base_hi = 1.0)
      : K_(K), rng_(seed), gap_(gap), base_hi_(base_hi) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
  }
  int K() const override { return K_; }
  CompetingBids next(const std::vector<RoundRecord>& past) override {
    if (!past.empty() && past.back().outcome.x > 0) {
      const double b = past.back().strategy.unit_bid(past.back().outcome.x);
      return CompetingBids(std::vector<double>(static_cast<std::size_t>(K_), b + gap_), K_);
    }
    std::uniform_real_distribution<double> u(0.0, base_hi_);
    std::vector<double> bids(static_cast<std::size_t>(K_));
    for (double& x : bids) x = u(rng_);
    return CompetingBids(bids, K_);
  }

 private:
  int K_;
  std::mt19937_64 rng_;
  double gap_, base_hi_;
};

inline StochasticInstance regret_lb_law(const RegretLbInstance& lb, bool scenario_P) {
  StochasticInstance law;
  law.curve = lb.curve;
  law.K = lb.club.K();
  law.profiles = {lb.club, lb.diamond};
  const double pc = scenario_P ? lb.p_club_P : lb.p_club_Q;
  law.probs = {pc, 1.0 - pc};
  return law;
}

// Per-edge expected weights under a finite round law.
inline std::vector<double> expected_round_weights(const LayeredDag& dag, const StochasticInstance& law,
                                                  const ValuationCurve& curve, double shift = 0.0,
                                                  TiePolicy policy = TiePolicy::FavorBidder) {
  std::vector<double> mu(dag.num_edges(), 0.0);
  for (std::size_t i = 0; i < law.profiles.size(); ++i) {
    const auto w = round_weights(dag, law.profiles[i], curve, shift, policy);
    for (std::size_t e = 0; e < mu.size(); ++e) mu[e] += law.probs[i] * w[e];
  }
  return mu;
}

struct RunOptions {
  bool keep_rounds = true;
  bool track_expected = false;  // needs an adversary with a round law
  std::function<void(const RoundRecord&, const CompetingBids&)> on_round;
};

struct RunSummary {
  double value = 0.0;
  double payment = 0.0;
  double hindsight_opt = 0.0;     // best fixed safe strategy on the realized history
  double regret = 0.0;            // hindsight_opt - value
  double expected_value = 0.0;    // sum of per-round conditional expectations
  double expected_opt = 0.0;      // T * best expected per-round value
  double pseudo_regret = 0.0;
  std::vector<RoundRecord> rounds;
  std::vector<CompetingBids> history;
};

inline RunSummary run_learner(Learner& learner, Adversary& adv, int T, const RunOptions& opt = {}) {
  RunSummary out;
  const ValuationCurve& curve = learner.curve();
  LayeredDag acc(learner.current_dag().M(), learner.current_dag().m());
  std::vector<double> cum(acc.num_edges(), 0.0);
  const StochasticInstance* law = adv.law();
  if (opt.track_expected && !law) throw std::invalid_argument("expected values need an i.i.d. adversary");
  std::vector<double> mu0;
  if (opt.track_expected) mu0 = expected_round_weights(acc, *law, curve);
  std::vector<RoundRecord> past;
  for (int t = 0; t < T; ++t) {
    CompetingBids c = adv.next(past);
    RoundRecord r = learner.play(c);
    out.value += r.outcome.V;
    out.payment += r.outcome.P;
    const auto w = round_weights(acc, c, curve);
    for (std::size_t e = 0; e < cum.size(); ++e) cum[e] += w[e];
    if (opt.track_expected) {
      const auto p = learner.last_marginals();
      const auto mu = r.delta == 0.0 ? mu0 : expected_round_weights(acc, *law, curve, r.delta);
      double ev = 0.0;
      for (std::size_t e = 0; e < p.size(); ++e) ev += p[e] * mu[e];
      out.expected_value += ev;
    }
    if (opt.on_round) opt.on_round(r, c);
    if (opt.keep_rounds) out.history.push_back(c);
    past.push_back(std::move(r));
  }
  out.hindsight_opt = max_weight_path(acc, cum).weight;
  out.regret = out.hindsight_opt - out.value;
  if (opt.track_expected) {
    out.expected_opt = T * max_weight_path(acc, mu0).weight;
    out.pseudo_regret = out.expected_opt - out.expected_value;
  }
  if (opt.keep_rounds) out.rounds = std::move(past);
  return out;
}

}  // namespace bidlab
