#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidlab/auction.hpp"
#include "bidlab/dag.hpp"

namespace bidlab {

struct BenchmarkInstance {
  std::string name;
  ValuationCurve curve;
  std::vector<CompetingBids> history;
  int K = 0;  // 0 when the supply varies by round
  std::map<std::string, double> params;
  std::vector<int> round_group;  // partition index of each round, when the construction has one
};

inline double desk_cap() {
  if (const char* env = std::getenv("BIDLAB_SIZE_CAP")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return 1e6;
}

inline void check_desk_cap(double rounds, double units) {
  if (rounds * units > desk_cap()) throw std::length_error("instance exceeds the rounds x units size cap");
}

inline double ipow(int base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Nonnegative, finite, and distinct levels in a round at least 1e-9 apart.
inline void validate_instance(const BenchmarkInstance& inst) {
  for (const auto& c : inst.history) {
    if (inst.K > 0 && c.K() != inst.K) throw std::invalid_argument("inconsistent K across rounds");
    const auto& a = c.ascending();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i]) || a[i] < 0.0) throw std::invalid_argument("bad competing bid");
      if (i > 0 && a[i] != a[i - 1] && a[i] - a[i - 1] < 1e-9)
        throw std::invalid_argument("competing bid levels closer than 1e-9");
    }
  }
}

struct RegretLbInstance {
  ValuationCurve curve;
  CompetingBids club, diamond;
  double p_club_P = 0.5, p_club_Q = 0.5;
  MUniformStrategy b1, b2;
  double delta = 0.0;
};

// Two profiles that are hard to tell apart: half of the units are worth 1 and
// half 1 - delta; one strategy is best when club rounds are more likely, the
// other when diamond rounds are.
inline RegretLbInstance gen_regret_lb(int M, double delta) {
  if (M < 2 || M % 2 != 0) throw std::invalid_argument("M must be even and >= 2");
  if (!(delta >= 0.0) || delta > 0.5) throw std::invalid_argument("delta must lie in [0, 1/2]");
  std::vector<double> v(static_cast<std::size_t>(M), 1.0);
  for (int i = M / 2; i < M; ++i) v[static_cast<std::size_t>(i)] = 1.0 - delta;
  RegretLbInstance out;
  out.curve = ValuationCurve(v);
  const double dp = delta / (2.0 * M);
  out.club = CompetingBids(std::vector<double>(static_cast<std::size_t>(M), 1.0 - dp), M);
  out.diamond = CompetingBids(std::vector<double>(static_cast<std::size_t>(M), (1.0 + (1.0 - delta)) / 2.0 - dp), M);
  out.p_club_P = 0.5 + delta;
  out.p_club_Q = 0.5 - delta;
  out.b1 = MUniformStrategy({{out.curve.w(static_cast<std::size_t>(M / 2)), M / 2}}, out.curve.M());
  out.b2 = MUniformStrategy({{out.curve.w(static_cast<std::size_t>(M)), M}}, out.curve.M());
  out.delta = delta;
  return out;
}

inline double regret_lb_delta(int T) { return 1.0 / (4.0 * std::sqrt(2.0 * T)); }

inline BenchmarkInstance gen_pouf_tight_m1(double delta) {
  if (!(delta > 0.0) || delta > 0.5) throw std::invalid_argument("delta must lie in (0, 1/2]");
  const int M = 2 * static_cast<int>(std::ceil(1.0 / delta));
  const int T = M, K = M + 1;
  check_desk_cap(T, K);
  const double mu = 1.0 / M;
  const double eps = (delta - mu) / (4.0 * (1.0 - mu));
  if (eps < 1e-9) throw std::invalid_argument("construction gap below 1e-9");
  const double v = 1.0 - 4.0 * eps;
  std::vector<double> vals(static_cast<std::size_t>(M), v);
  vals[0] = 1.0;
  BenchmarkInstance inst;
  inst.name = "pouf_tight_m1";
  inst.curve = ValuationCurve(vals);
  inst.K = K;
  const double C = 10.0 * 1.0 * T;
  for (int t = 1; t <= T; ++t) {
    std::vector<double> bids;
    if (t < T) {
      bids.assign(static_cast<std::size_t>(K - 1), C);
      bids.push_back(1.0 - eps);
      inst.round_group.push_back(1);
    } else {
      bids.assign(static_cast<std::size_t>(K), eps);
      inst.round_group.push_back(2);
    }
    inst.history.emplace_back(bids, K);
  }
  inst.params = {{"delta", delta}, {"M", M}, {"T", T}, {"K", K}, {"epsilon", eps}, {"v", v},
                 {"opt_value", M + (M - 1) * v}, {"safe_value", static_cast<double>(M)},
                 {"target_ratio", 2.0 - delta}};
  return inst;
}

// The feasible m-pair strategy of the general construction.
inline MUniformStrategy pouf_tight_general_strategy(int m, int N, const ValuationCurve& curve) {
  std::vector<BidPair> pairs{{1.0, N}};
  for (int j = 2; j <= m; ++j)
    pairs.push_back({curve.w(static_cast<std::size_t>(ipow(N, 2 * j - 2))),
                     static_cast<int>(ipow(N, 2 * j - 1) - ipow(N, 2 * j - 3))});
  return MUniformStrategy(pairs, curve.M());
}

inline BenchmarkInstance gen_pouf_tight_general(int m, double delta, int N) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (!(delta > 0.0) || delta > 0.5) throw std::invalid_argument("delta must lie in (0, 1/2]");
  if (N < 2 * static_cast<int>(std::ceil(1.0 / delta))) throw std::invalid_argument("N must be >= 2 ceil(1/delta)");
  const double Md = ipow(N, 2 * m - 1);
  check_desk_cap(Md, Md + 1.0);
  const int M = static_cast<int>(Md), T = M, K = M + 1;
  const double epsp = (m * delta / (2.0 * m - 1.0) - 1.0 / N) / (2.0 * (1.0 - 1.0 / N));
  const double eps = epsp / (Md * (Md + 1.0));
  if (eps < 1e-9) throw std::invalid_argument("construction gap below 1e-9");
  const double v = 1.0 - 2.0 * epsp;
  auto W = [&](double n) { return (1.0 + (n - 1.0) * v) / n; };
  std::vector<double> vals(static_cast<std::size_t>(M), v);
  vals[0] = 1.0;
  BenchmarkInstance inst;
  inst.name = "pouf_tight_general";
  inst.curve = ValuationCurve(vals);
  inst.K = K;
  const double C = 10.0 * 1.0 * T;
  inst.history.emplace_back(std::vector<double>(static_cast<std::size_t>(K), W(Md + 1.0) + eps), K);
  inst.round_group.push_back(1);
  for (int j = 2; j <= 2 * m; ++j) {
    const double n = ipow(N, 2 * m - j);
    const int low = static_cast<int>(j % 2 == 1 ? n + 1.0 : n);
    std::vector<double> bids(static_cast<std::size_t>(K - low), C);
    bids.insert(bids.end(), static_cast<std::size_t>(low), W(n + 1.0) + eps);
    const int rounds = static_cast<int>(ipow(N, j - 1) - ipow(N, j - 2));
    for (int r = 0; r < rounds; ++r) {
      inst.history.emplace_back(bids, K);
      inst.round_group.push_back(j);
    }
  }
  const double opt = Md + (2.0 * m - 1.0) * (Md - ipow(N, 2 * m - 2)) * v;
  inst.params = {{"m", m}, {"delta", delta}, {"N", N}, {"M", M}, {"T", T}, {"K", K}, {"epsilon", eps},
                 {"epsilon_prime", epsp}, {"v", v}, {"opt_value", opt}, {"safe_value_1", Md},
                 {"target_ratio", 2.0 - delta}};
  return inst;
}

// The safe m'-pair strategy of the m' vs 1 construction: (1, 1) then
// (w_{N^{j-1}}, N^{j-1} - N^{j-2}) for j = 2..m'.
inline MUniformStrategy mmbar_tight_strategy(int m_prime, int N, const ValuationCurve& curve) {
  std::vector<BidPair> pairs{{curve.w(1), 1}};
  for (int j = 2; j <= m_prime; ++j)
    pairs.push_back({curve.w(static_cast<std::size_t>(ipow(N, j - 1))),
                     static_cast<int>(ipow(N, j - 1) - ipow(N, j - 2))});
  return MUniformStrategy(pairs, curve.M());
}

inline BenchmarkInstance gen_mmbar_tight(int m_prime, double delta, int N) {
  if (m_prime < 1) throw std::invalid_argument("m' must be >= 1");
  if (!(delta > 0.0) || delta > 0.5) throw std::invalid_argument("delta must lie in (0, 1/2]");
  if (N < static_cast<int>(std::ceil(m_prime / delta))) throw std::invalid_argument("N must be >= ceil(m'/delta)");
  const double Md = ipow(N, m_prime - 1);
  check_desk_cap(Md, Md);
  const int M = static_cast<int>(Md), T = M, K = M;
  double epsp = m_prime == 1 ? delta / 4.0
                             : (delta / (m_prime - 1.0) - 1.0 / N) / (2.0 * (1.0 - 1.0 / N));
  const double eps = epsp / (Md * (Md + 1.0));
  if (eps < 1e-9) throw std::invalid_argument("construction gap below 1e-9");
  const double v = 1.0 - 2.0 * epsp;
  auto W = [&](double n) { return (1.0 + (n - 1.0) * v) / n; };
  std::vector<double> vals(static_cast<std::size_t>(M), v);
  vals[0] = 1.0;
  BenchmarkInstance inst;
  inst.name = "mmbar_tight";
  inst.curve = ValuationCurve(vals);
  inst.K = K;
  const double C = 10.0 * 1.0 * T;
  inst.history.emplace_back(std::vector<double>(static_cast<std::size_t>(K), W(Md + 1.0) + eps), K);
  inst.round_group.push_back(1);
  for (int j = 2; j <= m_prime; ++j) {
    const double n = ipow(N, m_prime - j);
    const int low = static_cast<int>(n + 1.0);
    std::vector<double> bids(static_cast<std::size_t>(std::max(0, K - low)), C);
    bids.insert(bids.end(), static_cast<std::size_t>(low), W(n + 1.0) + eps);
    const int rounds = static_cast<int>(ipow(N, j - 1) - ipow(N, j - 2));
    for (int r = 0; r < rounds; ++r) {
      inst.history.emplace_back(bids, K);
      inst.round_group.push_back(j);
    }
  }
  const double safe_mp = Md + (m_prime - 1.0) * (Md - (m_prime >= 2 ? ipow(N, m_prime - 2) : 0.0)) * v;
  inst.params = {{"m_prime", m_prime}, {"delta", delta}, {"N", N}, {"M", M}, {"T", T}, {"K", K},
                 {"epsilon", eps}, {"epsilon_prime", epsp}, {"v", v}, {"safe_value_m_prime", safe_mp},
                 {"safe_value_1", Md}, {"target_ratio", m_prime == 1 ? 1.0 : 2.0 - delta}};
  return inst;
}

// One unit worth 1. Early rounds can only be won by paying 1 + eps, which a
// cumulative RoI budget repays later when units sell at eps.
inline BenchmarkInstance gen_cumulative_impossibility(double epsilon, int T) {
  if (!(epsilon > 0.0) || epsilon >= 1.0) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  const double late = epsilon * T;
  if (std::abs(late - std::round(late)) > 1e-9) throw std::invalid_argument("epsilon * T must be integral");
  const int n_late = static_cast<int>(std::round(late));
  check_desk_cap(T, 2);
  BenchmarkInstance inst;
  inst.name = "cumulative_impossibility";
  inst.curve = ValuationCurve({1.0});
  inst.K = 2;
  for (int t = 0; t < T; ++t) {
    if (t < T - n_late) {
      inst.history.emplace_back(std::vector<double>{3.0 * T, 1.0 + epsilon / 2.0}, 2);
      inst.round_group.push_back(1);
    } else {
      inst.history.emplace_back(std::vector<double>{epsilon, epsilon}, 2);
      inst.round_group.push_back(2);
    }
  }
  inst.params = {{"epsilon", epsilon}, {"T", T}, {"hindsight_bid", 1.0 + epsilon},
                 {"hindsight_value", static_cast<double>(T)}, {"safe_value", late}};
  return inst;
}

// i.i.d. rounds drawn from a finite set of competing profiles.
struct StochasticInstance {
  ValuationCurve curve;
  std::vector<CompetingBids> profiles;
  std::vector<double> probs;
  int K = 0;
};

inline StochasticInstance gen_stochastic_benchmark(int M, int K, int n_profiles, std::uint64_t seed) {
  if (M < 1 || K < 1 || n_profiles < 1) throw std::invalid_argument("bad stochastic benchmark size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(M));
  for (double& x : v) x = 0.2 + 0.8 * unif(rng);
  std::sort(v.begin(), v.end(), std::greater<double>());
  StochasticInstance out;
  out.curve = ValuationCurve(v);
  out.K = K;
  double total = 0.0;
  for (int i = 0; i < n_profiles; ++i) {
    std::vector<double> bids(static_cast<std::size_t>(K));
    const double hi = 0.4 + 0.8 * unif(rng);
    for (double& b : bids) b = hi * unif(rng);
    out.profiles.emplace_back(bids, K);
    out.probs.push_back(0.2 + unif(rng));
    total += out.probs.back();
  }
  for (double& p : out.probs) p /= total;
  return out;
}

// Sum over rounds of the best one-pair safe value; an upper bound on any
// RoI-feasible strategy's value on the history.
inline double uniform_upper_bound(const std::vector<CompetingBids>& history, const ValuationCurve& curve,
                                  TiePolicy policy = TiePolicy::FavorBidder) {
  const bool strict = policy == TiePolicy::LowerIndexWins;
  double total = 0.0;
  for (const auto& c : history) {
    double best = 0.0;
    for (std::size_t q = 1; q <= curve.M(); ++q) {
      const int x = std::min(static_cast<int>(q), c.count_below(curve.w(q), strict));
      best = std::max(best, curve.prefix(static_cast<std::size_t>(x)));
    }
    total += best;
  }
  return total;
}

inline BestPath safe_optimum(const std::vector<CompetingBids>& history, const ValuationCurve& curve, int m,
                             TiePolicy policy = TiePolicy::FavorBidder) {
  LayeredDag dag(static_cast<int>(curve.M()), std::min<int>(m, static_cast<int>(curve.M())));
  assign_offline_weights(dag, history, curve, policy);
  return max_weight_path(dag);
}

enum class BenchmarkKind { FeasibleSameM, SafeMPrime, FeasibleMPrime };

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::FeasibleSameM;
  int m_prime = 1;
};

struct RichnessResult {
  double alpha = 1.0;
  double lambda = 1.0;
  double numerator = 0.0;
  double denominator = 0.0;
  bool alpha_is_lower_bound = false;
};

inline RichnessResult richness_ratio(const std::vector<CompetingBids>& history, const ValuationCurve& curve, int m,
                                     BenchmarkSpec bench = {}) {
  RichnessResult r;
  r.denominator = safe_optimum(history, curve, m).weight;
  if (bench.kind == BenchmarkKind::SafeMPrime) {
    r.numerator = safe_optimum(history, curve, bench.m_prime).weight;
  } else {
    r.numerator = uniform_upper_bound(history, curve);
    r.alpha_is_lower_bound = true;
  }
  if (r.denominator > 0.0) {
    r.lambda = r.numerator / r.denominator;
    r.alpha = r.denominator / r.numerator;
  } else {
    r.lambda = r.numerator > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    r.alpha = r.numerator > 0.0 ? 0.0 : 1.0;
  }
  return r;
}

}  // namespace bidlab
