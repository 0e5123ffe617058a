#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "bidlab/auction.hpp"

namespace bidlab {

enum class StrategyClass { Overbid, Underbid, Undominated, MixedSafe };

inline const char* to_string(StrategyClass c) {
  switch (c) {
    case StrategyClass::Overbid: return "Overbid";
    case StrategyClass::Underbid: return "Underbid";
    case StrategyClass::Undominated: return "Undominated";
    case StrategyClass::MixedSafe: return "MixedSafe";
  }
  return "?";
}

inline void check_fits(const MUniformStrategy& s, const ValuationCurve& curve) {
  if (static_cast<std::size_t>(s.demand()) > curve.M())
    throw std::invalid_argument("strategy demand exceeds M");
}

// MixedSafe is never produced: "all <= with none strict" is the all-equal case.
inline StrategyClass classify(const MUniformStrategy& s, const ValuationCurve& curve) {
  check_fits(s, curve);
  bool strict = false;
  for (std::size_t l = 1; l <= s.size(); ++l) {
    const double w = curve.w(static_cast<std::size_t>(s.Q(l)));
    if (s.bid(l) > w) return StrategyClass::Overbid;
    if (s.bid(l) < w) strict = true;
  }
  return strict ? StrategyClass::Underbid : StrategyClass::Undominated;
}

inline bool is_safe(const MUniformStrategy& s, const ValuationCurve& curve) {
  return classify(s, curve) != StrategyClass::Overbid;
}

// Competing bids under which an overbidding strategy breaks RoI: pick a unit
// count r where the strategy's r-th unit bid exceeds w_r, then offer r units
// against r tiny competing bids so the bidder wins exactly r at that price.
inline CompetingBids adversary_violating(const MUniformStrategy& s, const ValuationCurve& curve) {
  if (classify(s, curve) != StrategyClass::Overbid)
    throw std::invalid_argument("strategy does not overbid");
  const double eps = s.bid(s.size()) / 4.0;
  for (int r = 1; r <= s.demand(); ++r) {
    const double b = s.unit_bid(r);
    if (b * static_cast<double>(r) > curve.prefix(static_cast<std::size_t>(r)))
      return CompetingBids(std::vector<double>(static_cast<std::size_t>(r), eps), r);
  }
  throw std::logic_error("no violating unit count found");
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

inline std::uint64_t undominated_count(int M, int m) {
  std::uint64_t total = 0;
  for (int k = 1; k <= m && k <= M; ++k) total += binomial(M, k);
  return total;
}

inline std::uint64_t enumeration_cap() { return 10'000'000ULL; }

// Undominated strategies of at most m pairs, bids shifted by delta.
struct SafeClassSpec {
  ValuationCurve curve;
  int m = 1;
  double delta = 0.0;
};

inline MUniformStrategy strategy_from_cumulative(const std::vector<int>& Q, const ValuationCurve& curve,
                                                 double delta = 0.0) {
  std::vector<BidPair> pairs;
  int prev = 0;
  for (int q : Q) {
    pairs.push_back({curve.w(static_cast<std::size_t>(q)) + delta, q - prev});
    prev = q;
  }
  return MUniformStrategy(std::move(pairs), curve.M());
}

// Streams strategies in lexicographic order of the subset {Q_1 < ... < Q_k}.
class UndominatedEnumerator {
 public:
  explicit UndominatedEnumerator(SafeClassSpec spec) : spec_(std::move(spec)) {
    const int M = static_cast<int>(spec_.curve.M());
    if (spec_.m < 1) throw std::invalid_argument("m must be >= 1");
    if (undominated_count(M, spec_.m) > enumeration_cap())
      throw std::length_error("enumeration exceeds size cap");
    Q_ = {1};
  }

  std::optional<MUniformStrategy> next() {
    if (Q_.empty()) return std::nullopt;
    MUniformStrategy out = strategy_from_cumulative(Q_, spec_.curve, spec_.delta);
    advance();
    return out;
  }

 private:
  void advance() {
    const int M = static_cast<int>(spec_.curve.M());
    if (static_cast<int>(Q_.size()) < spec_.m && Q_.back() < M) {
      Q_.push_back(Q_.back() + 1);
      return;
    }
    while (!Q_.empty()) {
      if (Q_.back() < M) { ++Q_.back(); return; }
      Q_.pop_back();
    }
  }

  SafeClassSpec spec_;
  std::vector<int> Q_;
};

inline std::vector<MUniformStrategy> enumerate_undominated(const SafeClassSpec& spec) {
  std::vector<MUniformStrategy> out;
  UndominatedEnumerator e(spec);
  while (auto s = e.next()) out.push_back(std::move(*s));
  return out;
}

// V(b) as the best value among the one-pair prefixes (b_l, Q_l).
inline double sum_to_max_value(const MUniformStrategy& s, const CompetingBids& c,
                               const ValuationCurve& curve,
                               TiePolicy policy = TiePolicy::FavorBidder) {
  double best = 0.0;
  for (std::size_t l = 1; l <= s.size(); ++l) {
    MUniformStrategy one({{s.bid(l), s.Q(l)}});
    best = std::max(best, clear_auction(one, c, curve, policy).V);
  }
  return best;
}

}  // namespace bidlab
