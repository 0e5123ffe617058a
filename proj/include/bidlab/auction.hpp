#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidlab {

enum class TiePolicy { FavorBidder, LowerIndexWins };

// Per-unit values v_1..v_M, stored after dividing by (1 + gamma).
//
// w_j is the largest double with fl(j * w_j) <= S_j (S_j the stored prefix
// sum), clamped to be nonincreasing. This keeps it within an ulp of S_j / j
// and makes V >= P hold exactly in floating point for every safe strategy.
class ValuationCurve {
 public:
  ValuationCurve() = default;

  explicit ValuationCurve(std::vector<double> raw, double gamma = 0.0)
      : gamma_(gamma) {
    if (raw.empty()) throw std::invalid_argument("valuation curve is empty");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("gamma must be finite and >= 0");
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!std::isfinite(raw[i]) || raw[i] < 0.0)
        throw std::invalid_argument("valuation entries must be finite and >= 0");
      if (i > 0 && raw[i] > raw[i - 1])
        throw std::invalid_argument("valuation curve must be nonincreasing");
    }
    if (!(raw[0] > 0.0)) throw std::invalid_argument("v_1 must be positive");
    raw_ = raw;
    v_.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) v_[i] = raw[i] / (1.0 + gamma);
    prefix_.assign(v_.size() + 1, 0.0);
    for (std::size_t i = 0; i < v_.size(); ++i) prefix_[i + 1] = prefix_[i] + v_[i];
    w_.assign(v_.size() + 1, 0.0);
    for (std::size_t j = 1; j <= v_.size(); ++j) {
      const double s = prefix_[j];
      const double dj = static_cast<double>(j);
      double w = s / dj;
      while (w > 0.0 && w * dj > s) w = std::nextafter(w, 0.0);
      for (;;) {
        double up = std::nextafter(w, std::numeric_limits<double>::infinity());
        if (up * dj <= s) w = up; else break;
      }
      if (j > 1) w = std::min(w, w_[j - 1]);
      w_[j] = w;
    }
  }

  std::size_t M() const { return v_.size(); }
  double gamma() const { return gamma_; }
  // 1-based accessors
  double v(std::size_t j) const { return v_.at(j - 1); }
  double w(std::size_t j) const { return w_.at(j); }
  double prefix(std::size_t j) const { return prefix_.at(j); }
  const std::vector<double>& values() const { return v_; }
  const std::vector<double>& raw_values() const { return raw_; }
  std::vector<double> avg_cumulative() const { return {w_.begin() + 1, w_.end()}; }

  bool operator==(const ValuationCurve& o) const { return raw_ == o.raw_ && gamma_ == o.gamma_; }

 private:
  std::vector<double> raw_, v_, prefix_, w_;
  double gamma_ = 0.0;
};

struct BidPair {
  double bid;
  int qty;
};

class MUniformStrategy {
 public:
  MUniformStrategy() = default;

  // Bids must be nonincreasing and positive; equal consecutive bids occur for
  // undominated strategies on flat stretches of the curve.
  explicit MUniformStrategy(std::vector<BidPair> pairs, std::size_t max_units = 0)
      : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw std::invalid_argument("strategy has no pairs");
    int q = 0;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& p = pairs_[i];
      if (!std::isfinite(p.bid) || !(p.bid > 0.0))
        throw std::invalid_argument("bids must be positive and finite");
      if (p.qty <= 0) throw std::invalid_argument("quantities must be positive");
      if (i > 0 && p.bid > pairs_[i - 1].bid)
        throw std::invalid_argument("bids must be sorted in decreasing order");
      q += p.qty;
      cum_.push_back(q);
    }
    if (max_units > 0 && static_cast<std::size_t>(q) > max_units)
      throw std::invalid_argument("total demand exceeds M");
  }

  std::size_t size() const { return pairs_.size(); }
  const std::vector<BidPair>& pairs() const { return pairs_; }
  // 1-based: b_l, q_l, Q_l; Q(0) = 0
  double bid(std::size_t l) const { return pairs_.at(l - 1).bid; }
  int qty(std::size_t l) const { return pairs_.at(l - 1).qty; }
  int Q(std::size_t l) const { return l == 0 ? 0 : cum_.at(l - 1); }
  int demand() const { return cum_.empty() ? 0 : cum_.back(); }

  // Bid on the r-th demanded unit, r in [1, demand()].
  double unit_bid(int r) const {
    auto it = std::lower_bound(cum_.begin(), cum_.end(), r);
    return pairs_.at(static_cast<std::size_t>(it - cum_.begin())).bid;
  }

  std::string to_string() const {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "(%.9f,%d)", pairs_[i].bid, pairs_[i].qty);
      if (i) out += ';';
      out += buf;
    }
    return out;
  }

  bool operator==(const MUniformStrategy& o) const {
    if (pairs_.size() != o.pairs_.size()) return false;
    for (std::size_t i = 0; i < pairs_.size(); ++i)
      if (pairs_[i].bid != o.pairs_[i].bid || pairs_[i].qty != o.pairs_[i].qty) return false;
    return true;
  }

 private:
  std::vector<BidPair> pairs_;
  std::vector<int> cum_;
};

// Top-K competing bids, ascending, zero padded to length K.
class CompetingBids {
 public:
  CompetingBids() = default;

  CompetingBids(std::vector<double> bids, int K) : K_(K) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    for (double b : bids)
      if (std::isnan(b) || b < 0.0) throw std::invalid_argument("competing bids must be >= 0");
    std::sort(bids.begin(), bids.end(), std::greater<double>());
    if (bids.size() > static_cast<std::size_t>(K)) bids.resize(static_cast<std::size_t>(K));
    bids.resize(static_cast<std::size_t>(K), 0.0);
    std::reverse(bids.begin(), bids.end());
    asc_ = std::move(bids);
  }

  int K() const { return K_; }
  const std::vector<double>& ascending() const { return asc_; }

  // j-th smallest of the top K; 0 for j = 0, +inf past K.
  double beta(int j) const {
    if (j <= 0) return 0.0;
    if (j > K_) return std::numeric_limits<double>::infinity();
    return asc_[static_cast<std::size_t>(j - 1)];
  }

  // Number of k in [1, K] with beta(k) <= level (< level when strict).
  int count_below(double level, bool strict) const {
    auto it = strict ? std::lower_bound(asc_.begin(), asc_.end(), level)
                     : std::upper_bound(asc_.begin(), asc_.end(), level);
    return static_cast<int>(it - asc_.begin());
  }

  bool operator==(const CompetingBids& o) const { return K_ == o.K_ && asc_ == o.asc_; }

 private:
  int K_ = 0;
  std::vector<double> asc_;
};

struct RoundOutcome {
  int x = 0;
  double p = 0.0;
  double V = 0.0;
  double P = 0.0;
};

inline bool wins_unit(double bid, double beta, TiePolicy policy) {
  return policy == TiePolicy::FavorBidder ? bid >= beta : bid > beta;
}

inline int allocation(const MUniformStrategy& s, const CompetingBids& c,
                      TiePolicy policy = TiePolicy::FavorBidder) {
  const int cap = std::min(s.demand(), c.K());
  int x = 0;
  // The winning set is a prefix: unit bids fall and beta rises with r.
  for (std::size_t l = 1; l <= s.size() && x < cap; ++l) {
    const double b = s.bid(l);
    const int hi = std::min(s.Q(l), cap);
    while (x < hi && wins_unit(b, c.beta(x + 1), policy)) ++x;
    if (x < hi) break;
  }
  return x;
}

// K-th highest bid of the combined profile (bidder's unit bids plus top-K
// competing bids, zero padded).
inline double clearing_price(const MUniformStrategy& s, const CompetingBids& c) {
  const auto& asc = c.ascending();
  const int K = c.K();
  int i = 0;  // bidder unit index (descending)
  int k = K - 1;  // competing index into asc (descending)
  double last = 0.0;
  for (int taken = 0; taken < K; ++taken) {
    const bool have_b = i < s.demand();
    const bool have_c = k >= 0;
    if (!have_b && !have_c) return 0.0;
    const double bb = have_b ? s.unit_bid(i + 1) : -1.0;
    const double cc = have_c ? asc[static_cast<std::size_t>(k)] : -1.0;
    if (bb >= cc) { last = bb; ++i; } else { last = cc; --k; }
  }
  return last;
}

inline RoundOutcome clear_auction(const MUniformStrategy& s, const CompetingBids& c,
                                  const ValuationCurve& curve,
                                  TiePolicy policy = TiePolicy::FavorBidder) {
  RoundOutcome o;
  o.x = allocation(s, c, policy);
  if (static_cast<std::size_t>(o.x) > curve.M())
    throw std::invalid_argument("strategy demand exceeds curve length");
  o.p = clearing_price(s, c);
  o.V = curve.prefix(static_cast<std::size_t>(o.x));
  o.P = o.x > 0 ? o.p * static_cast<double>(o.x) : 0.0;
  return o;
}

// Closed form of the bidder's per-unit payment from the strategy and the
// competing bids alone.
inline double per_unit_price(const MUniformStrategy& s, const CompetingBids& c,
                             TiePolicy policy = TiePolicy::FavorBidder) {
  const int x = allocation(s, c, policy);
  if (x == 0) return 0.0;
  std::size_t l = 1;
  while (s.Q(l) < x) ++l;
  if (x < s.Q(l)) return s.bid(l);
  return std::min(s.bid(l), c.beta(s.Q(l) + 1));
}

inline bool roi_feasible(const RoundOutcome& o, const ValuationCurve&) { return o.V >= o.P; }

inline bool feasible_over_history(const MUniformStrategy& s, const std::vector<CompetingBids>& history,
                                  const ValuationCurve& curve,
                                  TiePolicy policy = TiePolicy::FavorBidder) {
  for (const auto& c : history)
    if (!roi_feasible(clear_auction(s, c, curve, policy), curve)) return false;
  return true;
}

}  // namespace bidlab
