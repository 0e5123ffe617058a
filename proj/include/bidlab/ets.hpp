#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidlab/auction.hpp"

namespace bidlab {

struct AuctionAggregates {
  std::string auction_id;
  double b_min = 0, b_max = 0, b_avg = 0, b_med = 0;
  int n_sub = 1;
  int K = 1;
};

inline void validate(const AuctionAggregates& a) {
  if (a.n_sub < 1) throw std::invalid_argument(a.auction_id + ": n_sub must be >= 1");
  if (a.K < 1) throw std::invalid_argument(a.auction_id + ": K must be >= 1");
  if (!(a.b_min <= a.b_med && a.b_med <= a.b_max && a.b_min <= a.b_avg && a.b_avg <= a.b_max))
    throw std::invalid_argument(a.auction_id + ": aggregates out of order");
}

enum class ShapeType { TypeI, TypeII, Uniform };

inline const char* to_string(ShapeType s) {
  switch (s) {
    case ShapeType::TypeI: return "TypeI";
    case ShapeType::TypeII: return "TypeII";
    case ShapeType::Uniform: return "Uniform";
  }
  return "?";
}

// The median picks the candidate side; the mean must agree with it, otherwise
// the concentration interval would fall outside [b_min, b_max].
inline ShapeType classify_shape(const AuctionAggregates& a) {
  validate(a);
  if (a.b_max == a.b_min) return ShapeType::Uniform;
  const bool low_side = a.b_med - a.b_min <= a.b_max - a.b_med;
  if (low_side) return 2.0 * a.b_avg > a.b_min + a.b_max ? ShapeType::Uniform : ShapeType::TypeI;
  return 2.0 * a.b_avg < a.b_min + a.b_max ? ShapeType::Uniform : ShapeType::TypeII;
}

template <class Rng>
std::vector<double> reconstruct(const AuctionAggregates& a, double f, Rng& rng) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("f must lie in (0, 1)");
  const ShapeType shape = classify_shape(a);
  const int n = a.n_sub;
  auto draw = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return std::clamp(lo + (hi - lo) * u(rng), a.b_min, a.b_max);
  };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (shape == ShapeType::Uniform) {
    for (int i = 0; i < n; ++i) out.push_back(draw(a.b_min, a.b_max));
    return out;
  }
  const int nc = static_cast<int>(std::lround(f * n));
  double c_lo, c_hi, t_lo, t_hi;
  if (shape == ShapeType::TypeI) {
    c_lo = a.b_min; c_hi = 2.0 * a.b_avg - a.b_min; t_lo = c_hi; t_hi = a.b_max;
  } else {
    c_lo = 2.0 * a.b_avg - a.b_max; c_hi = a.b_max; t_lo = a.b_min; t_hi = c_lo;
  }
  for (int i = 0; i < nc; ++i) out.push_back(draw(c_lo, c_hi));
  for (int i = nc; i < n; ++i) out.push_back(draw(t_lo, t_hi));
  return out;
}

struct Aggregates4 {
  double min, max, avg, med;
};

// Lower median for even counts.
inline Aggregates4 aggregates_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("no values");
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return {v.front(), v.back(), s / static_cast<double>(v.size()), v[(v.size() - 1) / 2]};
}

inline double relative_error(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

// Errors of min, max, avg, med in that order.
inline std::array<double, 4> aggregate_errors(const AuctionAggregates& a, const std::vector<double>& values) {
  const Aggregates4 g = aggregates_of(values);
  return {relative_error(g.min, a.b_min), relative_error(g.max, a.b_max), relative_error(g.avg, a.b_avg),
          relative_error(g.med, a.b_med)};
}

struct QuantityPolicy {
  double oversupply = 1.5;  // each bid gets ceil(oversupply * K / n) units
  int fixed = 0;            // > 0 overrides with a constant quantity
};

inline CompetingBids to_competing_bids(const std::vector<double>& values, int K, QuantityPolicy policy = {}) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (values.empty()) throw std::invalid_argument("no values");
  const int q = policy.fixed > 0
                    ? policy.fixed
                    : static_cast<int>(std::ceil(policy.oversupply * K / static_cast<double>(values.size())));
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  std::vector<double> expanded;
  for (double v : sorted) {
    for (int i = 0; i < q && static_cast<int>(expanded.size()) < K; ++i) expanded.push_back(v);
    if (static_cast<int>(expanded.size()) >= K) break;
  }
  return CompetingBids(std::move(expanded), K);
}

inline std::mt19937_64 auction_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

struct ReconstructionReport {
  double f = 0.0;
  double tolerance = 0.05;
  std::vector<std::string> accepted, rejected;
  std::vector<std::string> ids;
  std::vector<std::array<double, 4>> errors;
  std::vector<ShapeType> shapes;
  std::vector<std::vector<double>> bids;  // reconstructed values, accepted and rejected
  std::vector<bool> is_accepted;

  double accepted_fraction() const {
    return ids.empty() ? 0.0 : static_cast<double>(accepted.size()) / static_cast<double>(ids.size());
  }
};

inline ReconstructionReport reconstruct_all(const std::vector<AuctionAggregates>& aggs, double f, std::uint64_t seed,
                                            double tolerance = 0.05) {
  ReconstructionReport rep;
  rep.f = f;
  rep.tolerance = tolerance;
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    auto rng = auction_rng(seed, i);
    auto vals = reconstruct(aggs[i], f, rng);
    const auto err = aggregate_errors(aggs[i], vals);
    bool ok = true;
    for (double e : err) ok = ok && e < tolerance;
    rep.ids.push_back(aggs[i].auction_id);
    rep.errors.push_back(err);
    rep.shapes.push_back(classify_shape(aggs[i]));
    rep.is_accepted.push_back(ok);
    (ok ? rep.accepted : rep.rejected).push_back(aggs[i].auction_id);
    rep.bids.push_back(std::move(vals));
  }
  return rep;
}

// Grid over f = 0.50, 0.51, ..., 0.99; the smallest f with the most accepted
// auctions wins.
inline ReconstructionReport grid_search_f(const std::vector<AuctionAggregates>& aggs, std::uint64_t seed,
                                          double tolerance = 0.05) {
  ReconstructionReport best;
  bool have = false;
  for (int k = 50; k <= 99; ++k) {
    auto rep = reconstruct_all(aggs, k / 100.0, seed, tolerance);
    if (!have || rep.accepted.size() > best.accepted.size()) {
      best = std::move(rep);
      have = true;
    }
  }
  return best;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
    out.push_back(cur);
  }
  return out;
}

inline std::vector<AuctionAggregates> read_aggregates_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty aggregates CSV");
  const auto header = split_csv_line(line);
  const std::vector<std::string> want{"auction_id", "b_min", "b_max", "b_avg", "b_med", "n_sub", "K"};
  std::vector<int> col(want.size(), -1);
  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t k = 0; k < want.size(); ++k)
      if (header[i] == want[k]) col[k] = static_cast<int>(i);
  for (std::size_t k = 0; k < want.size(); ++k)
    if (col[k] < 0) throw std::invalid_argument("aggregates CSV missing column " + want[k]);
  std::vector<AuctionAggregates> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    try {
      AuctionAggregates a;
      a.auction_id = f.at(static_cast<std::size_t>(col[0]));
      a.b_min = std::stod(f.at(static_cast<std::size_t>(col[1])));
      a.b_max = std::stod(f.at(static_cast<std::size_t>(col[2])));
      a.b_avg = std::stod(f.at(static_cast<std::size_t>(col[3])));
      a.b_med = std::stod(f.at(static_cast<std::size_t>(col[4])));
      a.n_sub = std::stoi(f.at(static_cast<std::size_t>(col[5])));
      a.K = std::stoi(f.at(static_cast<std::size_t>(col[6])));
      validate(a);
      out.push_back(a);
    } catch (const std::exception& e) {
      throw std::invalid_argument("aggregates CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_report_csv(std::ostream& os, const ReconstructionReport& rep) {
  os << "auction_id,shape,accepted,f,err_min,err_max,err_avg,err_med\n";
  char buf[256];
  for (std::size_t i = 0; i < rep.ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%s,%d,%.2f,%.9f,%.9f,%.9f,%.9f\n", to_string(rep.shapes[i]),
                  rep.is_accepted[i] ? 1 : 0, rep.f, rep.errors[i][0], rep.errors[i][1], rep.errors[i][2],
                  rep.errors[i][3]);
    os << rep.ids[i] << buf;
  }
}

}  // namespace bidlab
