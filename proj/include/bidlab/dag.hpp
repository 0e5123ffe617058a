#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidlab/auction.hpp"

namespace bidlab {

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct DagNode {
  int layer;  // 0 for s, m+1 for d
  int j;      // -1 for d
};

struct DagEdge {
  int from;
  int to;
  bool to_sink;
  double wbar;  // j' - j on layer edges, 0 into d
};

// A path is its node sequence s, (1, z_1), ..., (k, z_k), d.
using Path = std::vector<int>;

class LayeredDag {
 public:
  LayeredDag(int M, int m) : M_(M), m_(m) {
    if (M < 1 || m < 1) throw std::invalid_argument("M and m must be >= 1");
    if (m > M) throw std::invalid_argument("m must not exceed M");
    nodes_.push_back({0, 0});
    layer_start_.assign(static_cast<std::size_t>(m + 2), 0);
    for (int l = 1; l <= m; ++l) {
      layer_start_[static_cast<std::size_t>(l)] = static_cast<int>(nodes_.size());
      for (int j = l; j <= M; ++j) nodes_.push_back({l, j});
    }
    sink_ = static_cast<int>(nodes_.size());
    layer_start_[static_cast<std::size_t>(m + 1)] = sink_;
    nodes_.push_back({m + 1, -1});
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    for (int u = 0; u < sink_; ++u) {
      const DagNode a = nodes_[static_cast<std::size_t>(u)];
      if (a.layer < m) {
        for (int jp = std::max(a.j + 1, a.layer + 1); jp <= M; ++jp)
          add_edge(u, node_index(a.layer + 1, jp), false, jp - a.j);
      }
      if (a.layer >= 1) add_edge(u, sink_, true, 0.0);
    }
    weight_.assign(edges_.size(), 0.0);
    log_phi_.assign(edges_.size(), 0.0);
  }

  int M() const { return M_; }
  int m() const { return m_; }
  int source() const { return 0; }
  int sink() const { return sink_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const DagNode& node(int u) const { return nodes_.at(static_cast<std::size_t>(u)); }
  const DagEdge& edge(int e) const { return edges_.at(static_cast<std::size_t>(e)); }
  const std::vector<DagEdge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int u) const { return out_[static_cast<std::size_t>(u)]; }
  const std::vector<int>& in_edges(int u) const { return in_[static_cast<std::size_t>(u)]; }

  int node_index(int layer, int j) const {
    if (layer == 0 && j == 0) return 0;
    if (layer < 1 || layer > m_ || j < layer || j > M_) throw std::out_of_range("no such node");
    return layer_start_[static_cast<std::size_t>(layer)] + (j - layer);
  }

  int edge_between(int u, int v) const {
    for (int e : out_edges(u))
      if (edges_[static_cast<std::size_t>(e)].to == v) return e;
    return -1;
  }

  std::vector<double>& weights() { return weight_; }
  const std::vector<double>& weights() const { return weight_; }
  std::vector<double>& log_phi() { return log_phi_; }
  const std::vector<double>& log_phi() const { return log_phi_; }
  std::vector<double> wbar() const {
    std::vector<double> out(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) out[e] = edges_[e].wbar;
    return out;
  }

  std::vector<int> path_edges(const Path& p) const {
    std::vector<int> out;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const int e = edge_between(p[i], p[i + 1]);
      if (e < 0) throw std::invalid_argument("not a path of this DAG");
      out.push_back(e);
    }
    return out;
  }

 private:
  void add_edge(int u, int v, bool to_sink, double wbar) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({u, v, to_sink, wbar});
    out_[static_cast<std::size_t>(u)].push_back(id);
    in_[static_cast<std::size_t>(v)].push_back(id);
  }

  int M_, m_;
  int sink_ = 0;
  std::vector<DagNode> nodes_;
  std::vector<int> layer_start_;
  std::vector<DagEdge> edges_;
  std::vector<std::vector<int>> out_, in_;
  std::vector<double> weight_, log_phi_;
};

inline LayeredDag build_dag(int M, int m) { return LayeredDag(M, m); }

inline bool is_valid_path(const LayeredDag& dag, const Path& p) {
  if (p.size() < 3 || p.front() != dag.source() || p.back() != dag.sink()) return false;
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i] < 0 || p[i] >= static_cast<int>(dag.num_nodes()) || dag.edge_between(p[i], p[i + 1]) < 0)
      return false;
  return true;
}

inline MUniformStrategy path_to_strategy(const LayeredDag& dag, const Path& p, const ValuationCurve& curve,
                                         double shift = 0.0) {
  if (!is_valid_path(dag, p)) throw std::invalid_argument("not an s-d path");
  if (static_cast<int>(curve.M()) != dag.M()) throw std::invalid_argument("curve length differs from M");
  std::vector<BidPair> pairs;
  int prev = 0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const int z = dag.node(p[i]).j;
    pairs.push_back({curve.w(static_cast<std::size_t>(z)) + shift, z - prev});
    prev = z;
  }
  return MUniformStrategy(std::move(pairs), curve.M());
}

inline Path strategy_to_path(const LayeredDag& dag, const MUniformStrategy& s, const ValuationCurve& curve) {
  if (static_cast<int>(s.size()) > dag.m()) throw std::invalid_argument("too many pairs for this DAG");
  if (s.demand() > dag.M()) throw std::invalid_argument("demand exceeds M");
  Path p{dag.source()};
  for (std::size_t l = 1; l <= s.size(); ++l) {
    const int Q = s.Q(l);
    if (s.bid(l) != curve.w(static_cast<std::size_t>(Q)))
      throw std::invalid_argument("strategy is not undominated");
    p.push_back(dag.node_index(static_cast<int>(l), Q));
  }
  p.push_back(dag.sink());
  return p;
}

// Per-edge weight of one round: units j+1..j' of the block are won iff their
// competing threshold is at most w_{j'} + shift.
inline std::vector<double> round_weights(const LayeredDag& dag, const CompetingBids& c, const ValuationCurve& curve,
                                         double shift = 0.0, TiePolicy policy = TiePolicy::FavorBidder) {
  if (static_cast<int>(curve.M()) != dag.M()) throw std::invalid_argument("curve length differs from M");
  const bool strict = policy == TiePolicy::LowerIndexWins;
  std::vector<int> reach(static_cast<std::size_t>(dag.M() + 1), 0);
  for (int jp = 1; jp <= dag.M(); ++jp)
    reach[static_cast<std::size_t>(jp)] = c.count_below(curve.w(static_cast<std::size_t>(jp)) + shift, strict);
  std::vector<double> out(dag.num_edges(), 0.0);
  for (std::size_t e = 0; e < dag.num_edges(); ++e) {
    const DagEdge& ed = dag.edge(static_cast<int>(e));
    if (ed.to_sink) continue;
    const int j = dag.node(ed.from).j, jp = dag.node(ed.to).j;
    const int r = reach[static_cast<std::size_t>(jp)];
    const int hi = std::min(jp, r), lo = std::min(j, r);
    if (hi > lo) out[e] = curve.prefix(static_cast<std::size_t>(hi)) - curve.prefix(static_cast<std::size_t>(lo));
  }
  return out;
}

// Same weights, recovered for the edges of a played path from its allocation.
inline std::vector<double> path_weights_from_allocation(const LayeredDag& dag, const Path& p, int x,
                                                        const ValuationCurve& curve) {
  std::vector<double> out(dag.num_edges(), 0.0);
  for (int e : dag.path_edges(p)) {
    const DagEdge& ed = dag.edge(e);
    if (ed.to_sink) continue;
    const int j = dag.node(ed.from).j, jp = dag.node(ed.to).j;
    const int hi = std::min(jp, x), lo = std::min(j, x);
    if (hi > lo)
      out[static_cast<std::size_t>(e)] =
          curve.prefix(static_cast<std::size_t>(hi)) - curve.prefix(static_cast<std::size_t>(lo));
  }
  return out;
}

inline void assign_offline_weights(LayeredDag& dag, const std::vector<CompetingBids>& history,
                                   const ValuationCurve& curve, TiePolicy policy = TiePolicy::FavorBidder) {
  auto& w = dag.weights();
  std::fill(w.begin(), w.end(), 0.0);
  for (const auto& c : history) {
    const auto rw = round_weights(dag, c, curve, 0.0, policy);
    for (std::size_t e = 0; e < w.size(); ++e) w[e] += rw[e];
  }
}

struct BestPath {
  Path path;
  double weight;
};

// Longest path by backward DP; ties go to the smaller next node, which yields
// the lexicographically smallest node sequence among optima.
inline BestPath max_weight_path(const LayeredDag& dag, const std::vector<double>& weights) {
  const std::size_t n = dag.num_nodes();
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(n, ninf);
  std::vector<int> next(n, -1);
  best[static_cast<std::size_t>(dag.sink())] = 0.0;
  for (int u = dag.sink() - 1; u >= 0; --u) {
    for (int e : dag.out_edges(u)) {
      const DagEdge& ed = dag.edge(e);
      const double cand = weights[static_cast<std::size_t>(e)] + best[static_cast<std::size_t>(ed.to)];
      if (cand > best[static_cast<std::size_t>(u)] ||
          (cand == best[static_cast<std::size_t>(u)] && ed.to < next[static_cast<std::size_t>(u)])) {
        best[static_cast<std::size_t>(u)] = cand;
        next[static_cast<std::size_t>(u)] = ed.to;
      }
    }
  }
  Path p{dag.source()};
  while (p.back() != dag.sink()) p.push_back(next[static_cast<std::size_t>(p.back())]);
  return {p, best[0]};
}

inline BestPath max_weight_path(const LayeredDag& dag) { return max_weight_path(dag, dag.weights()); }

// log Gamma(u): log of the sum over u->d paths of prod phi(e) exp(eta w(e)).
inline std::vector<double> backward_log_gamma(const LayeredDag& dag, double eta, const std::vector<double>& w) {
  std::vector<double> lg(dag.num_nodes(), -std::numeric_limits<double>::infinity());
  lg[static_cast<std::size_t>(dag.sink())] = 0.0;
  const auto& lphi = dag.log_phi();
  for (int u = dag.sink() - 1; u >= 0; --u) {
    double acc = -std::numeric_limits<double>::infinity();
    for (int e : dag.out_edges(u)) {
      const auto ei = static_cast<std::size_t>(e);
      acc = log_sum_exp(acc, lg[static_cast<std::size_t>(dag.edge(e).to)] + lphi[ei] + eta * w[ei]);
    }
    lg[static_cast<std::size_t>(u)] = acc;
  }
  return lg;
}

inline std::vector<double> forward_log_gamma(const LayeredDag& dag, double eta, const std::vector<double>& w) {
  std::vector<double> lg(dag.num_nodes(), -std::numeric_limits<double>::infinity());
  lg[0] = 0.0;
  const auto& lphi = dag.log_phi();
  for (int v = 1; v <= dag.sink(); ++v) {
    double acc = -std::numeric_limits<double>::infinity();
    for (int e : dag.in_edges(v)) {
      const auto ei = static_cast<std::size_t>(e);
      acc = log_sum_exp(acc, lg[static_cast<std::size_t>(dag.edge(e).from)] + lphi[ei] + eta * w[ei]);
    }
    lg[static_cast<std::size_t>(v)] = acc;
  }
  return lg;
}

// Weight pushing: phi'(e) = phi(e) exp(eta w(e)) Gamma(v) / Gamma(u).
inline void update_probabilities(LayeredDag& dag, double eta, const std::vector<double>& prev_weights) {
  const auto lg = backward_log_gamma(dag, eta, prev_weights);
  auto& lphi = dag.log_phi();
  for (std::size_t e = 0; e < dag.num_edges(); ++e) {
    const DagEdge& ed = dag.edge(static_cast<int>(e));
    lphi[e] = lphi[e] + eta * prev_weights[e] + lg[static_cast<std::size_t>(ed.to)] -
              lg[static_cast<std::size_t>(ed.from)];
  }
}

// Marginal p(e) of the path law that update_probabilities(dag, eta, w) would
// produce; eta = 0 gives the marginals of the current state.
inline std::vector<double> edge_marginals(const LayeredDag& dag, double eta, const std::vector<double>& prev_weights) {
  const auto back = backward_log_gamma(dag, eta, prev_weights);
  const auto fwd = forward_log_gamma(dag, eta, prev_weights);
  const double lz = back[0];
  std::vector<double> p(dag.num_edges());
  for (std::size_t e = 0; e < dag.num_edges(); ++e) {
    const DagEdge& ed = dag.edge(static_cast<int>(e));
    p[e] = std::exp(fwd[static_cast<std::size_t>(ed.from)] + dag.log_phi()[e] + eta * prev_weights[e] +
                    back[static_cast<std::size_t>(ed.to)] - lz);
  }
  return p;
}

inline std::vector<double> edge_marginals(const LayeredDag& dag) {
  return edge_marginals(dag, 0.0, std::vector<double>(dag.num_edges(), 0.0));
}

template <class Rng>
Path sample_path(const LayeredDag& dag, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Path p{dag.source()};
  const auto& lphi = dag.log_phi();
  while (p.back() != dag.sink()) {
    const auto& outs = dag.out_edges(p.back());
    double total = 0.0;
    for (int e : outs) total += std::exp(lphi[static_cast<std::size_t>(e)]);
    const double u = unif(rng) * total;
    double acc = 0.0;
    int pick = outs.back();
    for (int e : outs) {
      const double pe = std::exp(lphi[static_cast<std::size_t>(e)]);
      acc += pe;
      if (u < acc && pe > 0.0) { pick = e; break; }
    }
    p.push_back(dag.edge(pick).to);
  }
  return p;
}

// Every s-d path, in lexicographic node order.
inline std::vector<Path> enumerate_paths(const LayeredDag& dag) {
  std::vector<Path> out;
  Path cur{dag.source()};
  std::function<void()> rec = [&]() {
    const int u = cur.back();
    if (u == dag.sink()) { out.push_back(cur); return; }
    for (int e : dag.out_edges(u)) {
      cur.push_back(dag.edge(e).to);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

inline double path_log_prob(const LayeredDag& dag, const Path& p) {
  double s = 0.0;
  for (int e : dag.path_edges(p)) s += dag.log_phi()[static_cast<std::size_t>(e)];
  return s;
}

inline void write_edge_csv(std::ostream& os, const LayeredDag& dag) {
  os << "layer_from,j_from,layer_to,j_to,weight,prob\n";
  char buf[160];
  for (std::size_t e = 0; e < dag.num_edges(); ++e) {
    const DagEdge& ed = dag.edge(static_cast<int>(e));
    const DagNode& a = dag.node(ed.from);
    const DagNode& b = dag.node(ed.to);
    const std::string jto = ed.to_sink ? std::string("inf") : std::to_string(b.j);
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%.17g,%.17g\n", a.layer, a.j, b.layer, jto.c_str(),
                  dag.weights()[e], std::exp(dag.log_phi()[e]));
    os << buf;
  }
}

}  // namespace bidlab
