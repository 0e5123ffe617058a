#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "bidlab/dag.hpp"
#include "bidlab/instances.hpp"
#include "bidlab/strategy_space.hpp"

using namespace bidlab;

namespace {

double path_prob(const LayeredDag& d, const Path& p) { return std::exp(path_log_prob(d, p)); }

ValuationCurve random_curve(std::mt19937_64& rng, int M) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(M);
  for (double& x : v) x = u(rng);
  std::sort(v.begin(), v.end(), std::greater<double>());
  v[0] = std::max(v[0], 1e-3);
  return ValuationCurve(v);
}

}  // namespace

TEST_CASE("shape of the M=3, m=2 DAG") {
  const LayeredDag d(3, 2);
  CHECK(d.num_nodes() == 1 + 3 + 2 + 1);
  const int s = d.source(), t = d.sink();
  CHECK(d.edge_between(s, d.node_index(1, 1)) >= 0);
  CHECK(d.edge_between(d.node_index(1, 1), d.node_index(2, 3)) >= 0);
  CHECK(d.edge_between(d.node_index(2, 3), t) >= 0);
  CHECK(d.edge_between(d.node_index(1, 3), t) >= 0);
  // s->(1,j): 3, (1,j)->(2,j'): 3, into d: 5
  CHECK(d.num_edges() == 11);
  CHECK(enumerate_paths(d).size() == 6);
}

TEST_CASE("layer sizes and path counts") {
  for (int M = 1; M <= 7; ++M) {
    for (int m = 1; m <= M; ++m) {
      const LayeredDag d(M, m);
      std::map<int, int> per_layer;
      for (std::size_t u = 0; u < d.num_nodes(); ++u) per_layer[d.node(static_cast<int>(u)).layer]++;
      for (int l = 1; l <= m; ++l) CHECK(per_layer[l] == M + 1 - l);
      CHECK(enumerate_paths(d).size() == undominated_count(M, m));
    }
  }
  CHECK(enumerate_paths(LayeredDag(1, 1)).size() == 1);
  CHECK(enumerate_paths(LayeredDag(4, 2)).size() == 10);
  CHECK(LayeredDag(4, 2).num_edges() == 17);
  CHECK_THROWS(LayeredDag(2, 3));
}

TEST_CASE("paths and strategies") {
  const ValuationCurve v({0.9, 0.6, 0.3});
  const LayeredDag d(3, 2);
  const Path red{d.source(), d.node_index(1, 1), d.node_index(2, 3), d.sink()};
  const MUniformStrategy rs = path_to_strategy(d, red, v);
  CHECK(rs == MUniformStrategy({{v.w(1), 1}, {v.w(3), 2}}));
  const Path blue{d.source(), d.node_index(1, 3), d.sink()};
  CHECK(path_to_strategy(d, blue, v) == MUniformStrategy({{v.w(3), 3}}));

  const ValuationCurve v4({0.9, 0.6, 0.3, 0.2});
  const LayeredDag d4(4, 2);
  for (const Path& p : enumerate_paths(d4)) CHECK(strategy_to_path(d4, path_to_strategy(d4, p, v4), v4) == p);
  CHECK_THROWS(strategy_to_path(d4, MUniformStrategy({{0.95, 1}}), v4));
}

TEST_CASE("offline weights") {
  const ValuationCurve v({6, 4, 3, 1, 1});
  LayeredDag d(5, 2);
  assign_offline_weights(d, {}, v);
  for (double w : d.weights()) CHECK(w == 0.0);

  assign_offline_weights(d, {CompetingBids({7, 7, 7, 7, 7}, 5)}, v);
  for (double w : d.weights()) CHECK(w == 0.0);

  // bidder 2's bids from the two-bidder example; units 1-2 at w_2 = 5 beat 4, 4
  assign_offline_weights(d, {CompetingBids({4, 4, 2, 2}, 5)}, v);
  CHECK(d.weights()[d.edge_between(d.source(), d.node_index(1, 2))] == 10.0);
}

TEST_CASE("max weight path on the tight m=1 instance") {
  const auto inst = gen_pouf_tight_m1(0.5);
  LayeredDag d(static_cast<int>(inst.curve.M()), 1);
  assign_offline_weights(d, inst.history, inst.curve);
  const BestPath b = max_weight_path(d);
  CHECK(b.weight == 4.0);
  CHECK(path_to_strategy(d, b.path, inst.curve) == MUniformStrategy({{1.0, 1}}));
}

TEST_CASE("all-zero weights") {
  const LayeredDag d(4, 2);
  const BestPath b = max_weight_path(d);
  CHECK(b.weight == 0.0);
  CHECK(is_valid_path(d, b.path));
}

TEST_CASE("first update is uniform over paths") {
  LayeredDag d(5, 3);
  update_probabilities(d, 0.7, std::vector<double>(d.num_edges(), 0.0));
  const auto paths = enumerate_paths(d);
  for (const Path& p : paths) CHECK(path_prob(d, p) == doctest::Approx(1.0 / paths.size()).epsilon(1e-12));
}

TEST_CASE("one round of weights matches explicit Hedge") {
  std::mt19937_64 rng(1);
  const ValuationCurve v = random_curve(rng, 3);
  LayeredDag d(3, 2);
  const double eta = 0.9;
  update_probabilities(d, eta, std::vector<double>(d.num_edges(), 0.0));
  const auto w = round_weights(d, CompetingBids({0.5, 0.2, 0.45}, 3), v);
  update_probabilities(d, eta, w);
  const auto paths = enumerate_paths(d);
  std::vector<double> score;
  double z = 0.0;
  for (const Path& p : paths) {
    double s = 0.0;
    for (int e : d.path_edges(p)) s += w[e];
    score.push_back(std::exp(eta * s));
    z += score.back();
  }
  for (std::size_t k = 0; k < paths.size(); ++k) CHECK(std::abs(path_prob(d, paths[k]) - score[k] / z) <= 1e-12);
}

TEST_CASE("vanishing eta keeps the law uniform") {
  std::mt19937_64 rng(2);
  const ValuationCurve v = random_curve(rng, 4);
  LayeredDag d(4, 2);
  update_probabilities(d, 0.0, std::vector<double>(d.num_edges(), 0.0));
  for (int t = 0; t < 5; ++t) update_probabilities(d, 0.0, round_weights(d, CompetingBids({0.3, 0.1}, 2), v));
  for (const Path& p : enumerate_paths(d)) CHECK(path_prob(d, p) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("out-probabilities are normalized after weight pushing") {
  std::mt19937_64 rng(3);
  const ValuationCurve v = random_curve(rng, 6);
  LayeredDag d(6, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 6; ++t)
    update_probabilities(d, 1.3, round_weights(d, CompetingBids({u(rng), u(rng), u(rng), u(rng)}, 4), v));
  for (std::size_t n = 0; n + 1 < d.num_nodes(); ++n) {
    double s = 0.0;
    for (int e : d.out_edges(static_cast<int>(n))) s += std::exp(d.log_phi()[e]);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(4);
  SUBCASE("single path") {
    LayeredDag d(1, 1);
    update_probabilities(d, 1.0, std::vector<double>(d.num_edges(), 0.0));
    for (int k = 0; k < 10; ++k) CHECK(sample_path(d, rng) == Path{0, 1, 2});
  }
  SUBCASE("uniform M=3, m=2") {
    LayeredDag d(3, 2);
    update_probabilities(d, 1.0, std::vector<double>(d.num_edges(), 0.0));
    const auto paths = enumerate_paths(d);
    std::map<Path, int> freq;
    const int n = 100000;
    for (int k = 0; k < n; ++k) freq[sample_path(d, rng)]++;
    const double p = 1.0 / paths.size(), sigma = std::sqrt(n * p * (1 - p));
    for (const Path& q : paths) CHECK(std::abs(freq[q] - n * p) <= 3 * sigma);
  }
  SUBCASE("degenerate law") {
    LayeredDag d(3, 2);
    std::vector<double> w(d.num_edges(), 0.0);
    const Path target{d.source(), d.node_index(1, 2), d.node_index(2, 3), d.sink()};
    for (int e : d.path_edges(target)) w[e] = 1.0;
    update_probabilities(d, 800.0, w);
    for (int k = 0; k < 50; ++k) CHECK(sample_path(d, rng) == target);
  }
}

TEST_CASE("edge marginals") {
  LayeredDag d(3, 2);
  update_probabilities(d, 1.0, std::vector<double>(d.num_edges(), 0.0));
  const auto p = edge_marginals(d);
  CHECK(p[d.edge_between(d.source(), d.node_index(1, 3))] == doctest::Approx(1.0 / 6).epsilon(1e-12));

  LayeredDag one(1, 1);
  update_probabilities(one, 1.0, std::vector<double>(one.num_edges(), 0.0));
  for (double x : edge_marginals(one)) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int M = 1; M <= 6; ++M) {
    const ValuationCurve v = random_curve(rng, M);
    LayeredDag g(M, std::min(M, 3));
    for (int t = 0; t < 3; ++t) update_probabilities(g, 2.0, round_weights(g, CompetingBids({u(rng), u(rng)}, 2), v));
    std::vector<double> enum_p(g.num_edges(), 0.0);
    for (const Path& q : enumerate_paths(g))
      for (int e : g.path_edges(q)) enum_p[e] += path_prob(g, q);
    const auto mg = edge_marginals(g);
    for (std::size_t e = 0; e < mg.size(); ++e) CHECK(std::abs(mg[e] - enum_p[e]) <= 1e-12);
  }
}

TEST_CASE("look-ahead marginals equal marginals after the update") {
  std::mt19937_64 rng(6);
  const ValuationCurve v = random_curve(rng, 5);
  LayeredDag d(5, 2);
  const auto w = round_weights(d, CompetingBids({0.4, 0.3, 0.2}, 3), v);
  const auto ahead = edge_marginals(d, 0.8, w);
  update_probabilities(d, 0.8, w);
  const auto after = edge_marginals(d);
  for (std::size_t e = 0; e < w.size(); ++e) CHECK(std::abs(ahead[e] - after[e]) <= 1e-12);
}

TEST_CASE("allocation-based recovery equals full-information weights on the played path") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const int M = 1 + k % 6;
    const ValuationCurve v = random_curve(rng, M);
    LayeredDag d(M, std::min(M, 3));
    const CompetingBids c({u(rng), u(rng), u(rng), v.w(1 + k % M)}, 1 + k % 5);
    const auto full = round_weights(d, c, v);
    for (const Path& p : enumerate_paths(d)) {
      const int x = clear_auction(path_to_strategy(d, p, v), c, v).x;
      const auto rec = path_weights_from_allocation(d, p, x, v);
      for (int e : d.path_edges(p)) CHECK(rec[e] == full[e]);
    }
  }
}

TEST_CASE("edge CSV") {
  LayeredDag d(2, 1);
  update_probabilities(d, 1.0, std::vector<double>(d.num_edges(), 0.0));
  std::ostringstream os;
  write_edge_csv(os, d);
  const std::string s = os.str();
  CHECK(s.rfind("layer_from,j_from,layer_to,j_to,weight,prob\n", 0) == 0);
  CHECK(s.find("inf") != std::string::npos);
}
