#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "bidlab/experiment.hpp"
#include "bidlab/instances.hpp"
#include "bidlab/learners.hpp"

using namespace bidlab;

namespace {

LearnerConfig make_cfg(LearnerMode mode, int M, int m, int T, std::uint64_t seed = 1) {
  LearnerConfig c;
  c.mode = mode;
  c.M = M;
  c.m = m;
  c.T = T;
  c.seed = seed;
  return c;
}

ValuationCurve random_curve(std::mt19937_64& rng, int M) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(M);
  for (double& x : v) x = u(rng);
  std::sort(v.begin(), v.end(), std::greater<double>());
  v[0] = std::max(v[0], 1e-3);
  return ValuationCurve(v);
}

CompetingBids random_profile(std::mt19937_64& rng, int K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> b(K);
  for (double& x : b) x = u(rng);
  return CompetingBids(b, K);
}

}  // namespace

TEST_CASE("default learning rates") {
  const int M = 6, m = 2, T = 1000;
  const double lM = std::log(6.0);
  CHECK(default_eta(LearnerMode::FullInfo, M, m, T) == doctest::Approx(std::sqrt(8 * m * lM / T) / M));
  CHECK(default_eta(LearnerMode::Bandit, M, m, T) == doctest::Approx(std::sqrt(lM / (m * T)) / (M * M)));
  CHECK(default_eta(LearnerMode::ContextualStochastic, M, m, T) == doctest::Approx(std::sqrt(m * lM / T) / M));
}

TEST_CASE("adaptive parameters") {
  LearnerConfig c = make_cfg(LearnerMode::AdaptiveBandit, 4, 2, 100000);
  const double E = static_cast<double>(dag_edge_count(4, 2));
  const auto p = adaptive_params(c, dag_edge_count(4, 2));
  const double lam = std::sqrt(2.0 * 3.0 * E * std::log(4.0) / 100000);
  CHECK(p.lambda == doctest::Approx(lam));
  CHECK(p.eta == doctest::Approx(std::sqrt(2 * std::log(4.0) / (3 * E * 100000)) / 8));
  CHECK(p.lambda == doctest::Approx(2 * p.eta * 3 * 4 * E));
  CHECK(p.theta == doctest::Approx(std::min(4.0, 4 * std::sqrt(3 * std::log(E * 100000) / (100000 * E)))));

  c.eta = 0.01;
  c.lambda = 0.3;
  CHECK_THROWS(adaptive_params(c, dag_edge_count(4, 2)));
}

TEST_CASE("single strategy learner") {
  const ValuationCurve v({0.7});
  FullInfoLearner l(v, make_cfg(LearnerMode::FullInfo, 1, 1, 10));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) CHECK(l.play(random_profile(rng, 2)).strategy == MUniformStrategy({{0.7, 1}}));
}

TEST_CASE("first round is uniform") {
  std::mt19937_64 rng(2);
  const ValuationCurve v = random_curve(rng, 5);
  FullInfoLearner l(v, make_cfg(LearnerMode::FullInfo, 5, 2, 100));
  l.play(random_profile(rng, 3));
  const auto paths = enumerate_paths(l.current_dag());
  for (const Path& p : paths)
    CHECK(std::exp(path_log_prob(l.current_dag(), p)) == doctest::Approx(1.0 / paths.size()).epsilon(1e-12));
}

TEST_CASE("full information play concentrates on the hindsight optimum") {
  const ValuationCurve v({1.0, 0.9, 0.5, 0.3, 0.2});
  const CompetingBids c({0.92, 0.6, 0.55, 0.1, 0.05}, 4);
  const int T = 5000;
  FullInfoLearner l(v, make_cfg(LearnerMode::FullInfo, 5, 2, T, 3));
  LayeredDag d(5, 2);
  assign_offline_weights(d, std::vector<CompetingBids>(1, c), v);
  const double best = max_weight_path(d).weight;
  int hits = 0;
  for (int t = 0; t < T; ++t) {
    const RoundRecord r = l.play(c);
    if (t >= T - T / 10 && r.outcome.V == best) ++hits;
  }
  CHECK(hits > 0.9 * (T / 10));
}

TEST_CASE("full information state depends on the bid history only") {
  std::mt19937_64 rng(4);
  const ValuationCurve v = random_curve(rng, 6);
  LearnerConfig cfg = make_cfg(LearnerMode::FullInfo, 6, 3, 200, 99);
  FullInfoLearner l(v, cfg);
  std::vector<CompetingBids> hist;
  for (int t = 0; t < 50; ++t) {
    hist.push_back(random_profile(rng, 4));
    l.play(hist.back());
  }
  LayeredDag d(6, 3);
  std::vector<double> prev(d.num_edges(), 0.0);
  for (const auto& c : hist) {
    update_probabilities(d, l.eta(), prev);
    prev = round_weights(d, c, v);
  }
  CHECK(d.log_phi() == l.current_dag().log_phi());
}

TEST_CASE("bandit estimates") {
  std::mt19937_64 rng(5);
  const ValuationCurve v = random_curve(rng, 5);
  BanditLearner l(v, make_cfg(LearnerMode::Bandit, 5, 2, 500, 7));
  const auto wbar = l.current_dag().wbar();
  for (int t = 0; t < 500; ++t) {
    l.play(random_profile(rng, 4));
    for (double p : l.last_marginals()) CHECK(p > 0.0);
    const auto& est = l.last_estimate();
    for (std::size_t e = 0; e < est.size(); ++e) CHECK(est[e] <= wbar[e]);
  }
}

TEST_CASE("covering path sets") {
  const LayeredDag one(1, 1);
  const auto c1 = build_covering_set(one);
  REQUIRE(c1.paths.size() == 1);
  CHECK(c1.paths[0] == Path{0, 1, 2});

  for (auto [M, m] : {std::pair{3, 2}, std::pair{5, 3}, std::pair{10, 3}}) {
    const LayeredDag d(M, m);
    const auto c = build_covering_set(d);
    std::vector<int> hit(d.num_edges(), 0);
    for (const Path& p : c.paths) {
      CHECK(is_valid_path(d, p));
      for (int e : d.path_edges(p)) hit[e] = 1;
    }
    for (int h : hit) CHECK(h == 1);
    CHECK(c.paths.size() <= d.num_edges());
  }
}

TEST_CASE("adaptive exploration") {
  std::mt19937_64 rng(6);
  const ValuationCurve v = random_curve(rng, 4);
  SUBCASE("marginals respect the exploration floor") {
    AdaptiveLearner l(v, make_cfg(LearnerMode::AdaptiveBandit, 4, 2, 3000, 8));
    const double floor = l.params().lambda / l.covering_set().paths.size();
    for (int t = 0; t < 200; ++t) {
      l.play(random_profile(rng, 3));
      for (double p : l.last_marginals()) CHECK(p >= floor * (1 - 1e-12));
    }
  }
  SUBCASE("lambda = 1 plays only covering paths") {
    LearnerConfig c = make_cfg(LearnerMode::AdaptiveBandit, 4, 2, 3000, 9);
    c.lambda = 1.0;
    AdaptiveLearner l(v, c);
    const auto& cover = l.covering_set().paths;
    for (int t = 0; t < 300; ++t) {
      const RoundRecord r = l.play(random_profile(rng, 3));
      CHECK(std::find(cover.begin(), cover.end(), r.path) != cover.end());
    }
  }
}

TEST_CASE("adaptive learner against the price squeeze") {
  const ValuationCurve v({1.0, 0.8, 0.6, 0.3});
  auto avg_regret = [&](int T) {
    double tot = 0.0;
    for (std::uint64_t s = 0; s < 4; ++s) {
      AdaptiveLearner l(v, make_cfg(LearnerMode::AdaptiveBandit, 4, 2, T, 100 + s));
      PriceSqueezeAdversary adv(3, 200 + s, 0.05);
      RunOptions ro;
      ro.keep_rounds = false;
      tot += run_learner(l, adv, T, ro).regret / T;
    }
    return tot / 4;
  };
  const double r2 = avg_regret(2000), r8 = avg_regret(8000);
  MESSAGE("REG/T at 2000: " << r2 << ", at 8000: " << r8);
  CHECK(r8 <= 0.5 * r2);
}

TEST_CASE("contextual learners") {
  std::mt19937_64 rng(10);
  const int M = 4, m = 2;
  const ValuationCurve a = random_curve(rng, M), b = random_curve(rng, M);
  LearnerConfig cfg = make_cfg(LearnerMode::ContextualStochastic, M, m, 400, 11);
  cfg.eta = 0.5;

  SUBCASE("one context is the full-information learner") {
    for (bool adversarial : {false, true}) {
      FullInfoLearner base(a, cfg);
      ContextualLearner ctx({a}, cfg, adversarial);
      std::mt19937_64 adv(12);
      for (int t = 0; t < 100; ++t) {
        const CompetingBids c = random_profile(adv, 3);
        CHECK(base.play(c).path == ctx.round(0, c).path);
        CHECK(base.last_marginals() == ctx.last_marginals());
      }
    }
  }
  SUBCASE("stochastic contexts update every copy") {
    ContextualLearner l({a, b}, cfg, false);
    l.round(0, random_profile(rng, 3));
    const auto before = l.dag(1).log_phi();
    l.round(0, random_profile(rng, 3));
    CHECK(l.dag(1).log_phi() != before);
    CHECK(l.contextual_stochastic_round(b, random_profile(rng, 3)).demand() >= 1);
    CHECK_THROWS(l.contextual_adversarial_round(b, random_profile(rng, 3)));
  }
  SUBCASE("adversarial contexts leave unobserved copies alone") {
    ContextualLearner l({a, b}, cfg, true);
    l.round(1, random_profile(rng, 3));
    l.round(1, random_profile(rng, 3));
    const auto before = l.dag(1).log_phi();
    for (int t = 0; t < 20; ++t) {
      l.round(0, random_profile(rng, 3));
      CHECK(l.dag(1).log_phi() == before);
    }
    CHECK_THROWS(l.context_index(random_curve(rng, M)));
  }
  SUBCASE("per-context play concentrates") {
    const CompetingBids c({0.9, 0.5, 0.3}, 3);
    const ValuationCurve ca({1.0, 0.95, 0.9, 0.2}), cb({0.6, 0.2, 0.1, 0.05});
    LearnerConfig lc = make_cfg(LearnerMode::ContextualStochastic, M, m, 4000, 13);
    ContextualLearner l({ca, cb}, lc, false);
    std::bernoulli_distribution coin(0.5);
    std::map<int, int> hits, seen;
    LayeredDag da(M, m), db(M, m);
    assign_offline_weights(da, {c}, ca);
    assign_offline_weights(db, {c}, cb);
    const double best[2] = {max_weight_path(da).weight, max_weight_path(db).weight};
    for (int t = 0; t < 4000; ++t) {
      const int k = coin(rng) ? 1 : 0;
      const RoundRecord r = l.round(k, c);
      if (t >= 3600) {
        seen[k]++;
        hits[k] += r.outcome.V == best[k];
      }
    }
    CHECK(hits[0] > 0.9 * seen[0]);
    CHECK(hits[1] > 0.9 * seen[1]);
  }
}

TEST_CASE("adversarial contexts in epochs") {
  // Two contexts alternate in epochs; per-round regret within an epoch drops
  // as epochs get longer.
  std::mt19937_64 rng(14);
  const int M = 4, m = 2;
  const ValuationCurve ca({1.0, 0.9, 0.4, 0.3}), cb({0.7, 0.6, 0.55, 0.5});
  auto per_round = [&](int L) {
    LearnerConfig cfg = make_cfg(LearnerMode::ContextualAdversarial, M, m, 4 * L, 15);
    ContextualLearner l({ca, cb}, cfg, true);
    std::mt19937_64 adv(16);
    double reg = 0.0;
    for (int e = 0; e < 4; ++e) {
      const int k = e % 2;
      const ValuationCurve& v = k ? cb : ca;
      LayeredDag d(M, m);
      std::vector<double> cum(d.num_edges(), 0.0);
      double got = 0.0;
      for (int t = 0; t < L; ++t) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const CompetingBids c({0.35 + 0.5 * u(adv), 0.3 * u(adv), 0.58}, 3);
        got += l.round(k, c).outcome.V;
        const auto w = round_weights(d, c, v);
        for (std::size_t i = 0; i < w.size(); ++i) cum[i] += w[i];
      }
      reg += max_weight_path(d, cum).weight - got;
    }
    return reg / (4.0 * L);
  };
  const double short_epochs = per_round(500), long_epochs = per_round(4000);
  MESSAGE("per-round epoch regret: " << short_epochs << " vs " << long_epochs);
  CHECK(long_epochs < short_epochs);
}

TEST_CASE("shifted window learner") {
  std::mt19937_64 rng(17);
  const int M = 5;
  const ValuationCurve v = random_curve(rng, M);
  SUBCASE("T0 = 1 never shifts and matches full information play") {
    LearnerConfig cfg = make_cfg(LearnerMode::ShiftedWindow, M, 2, 300, 18);
    cfg.T0 = 1;
    ShiftedWindowLearner s(v, cfg);
    FullInfoLearner f(v, cfg);
    for (int t = 0; t < 300; ++t) {
      const CompetingBids c = random_profile(rng, 4);
      const RoundRecord a = s.play(c), b = f.play(c);
      CHECK(a.delta == 0.0);
      CHECK(a.path == b.path);
      CHECK(a.outcome.V >= a.outcome.P);
    }
  }
  SUBCASE("unbounded window adds surplus / M to the shift") {
    LearnerConfig cfg = make_cfg(LearnerMode::ShiftedWindow, M, 2, 300, 19);
    ShiftedWindowLearner s(v, cfg);
    double prev = s.current_delta();
    for (int t = 0; t < 50; ++t) {
      const RoundRecord r = s.play(random_profile(rng, 4));
      const double c = (r.outcome.V - r.outcome.P) / M;
      CHECK(s.current_delta() == doctest::Approx(std::max(0.0, prev + c)).epsilon(1e-6).scale(1.0));
      prev = s.current_delta();
    }
  }
  SUBCASE("a window funded by its own past never goes negative") {
    for (int T0 : {2, 5, 17}) {
      LearnerConfig cfg = make_cfg(LearnerMode::ShiftedWindow, M, 3, 400, 20 + T0);
      cfg.T0 = T0;
      ShiftedWindowLearner s(v, cfg);
      std::vector<double> d;
      for (int t = 0; t < 400; ++t) {
        const RoundRecord r = s.play(random_profile(rng, 4));
        d.push_back(r.outcome.V - r.outcome.P);
      }
      for (std::size_t end = 1; end <= d.size(); ++end) {
        const std::size_t begin = end > static_cast<std::size_t>(T0) ? end - T0 : 0;
        double before = 0.0;
        for (std::size_t k = begin; k + 1 < end; ++k) before += d[k];
        if (before >= 0.0) CHECK(before + d[end - 1] >= -1e-12);
      }
    }
  }
  SUBCASE("unbounded window keeps every prefix nonnegative") {
    LearnerConfig cfg = make_cfg(LearnerMode::ShiftedWindow, M, 3, 1000, 30);
    ShiftedWindowLearner s(v, cfg);
    double run = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const RoundRecord r = s.play(random_profile(rng, 4));
      run += r.outcome.V - r.outcome.P;
      CHECK(run >= 0.0);
    }
  }
}

TEST_CASE("bandit regret stays within its scale") {
  const auto law = gen_stochastic_benchmark(4, 4, 4, 21);
  const int T = 4000, m = 2;
  BanditLearner l(law.curve, make_cfg(LearnerMode::Bandit, 4, m, T, 22));
  StochasticAdversary adv(law, 23);
  RunOptions ro;
  ro.keep_rounds = false;
  ro.track_expected = true;
  const auto r = run_learner(l, adv, T, ro);
  const double scale = 16.0 * std::sqrt(8.0 * T * std::log(4.0));
  CHECK(r.pseudo_regret <= 4.0 * scale);
  CHECK(r.pseudo_regret >= 0.0);
}

TEST_CASE("factory and mode names") {
  const ValuationCurve v({1.0, 0.5, 0.25});
  for (auto name : {"full_info", "bandit", "adaptive", "contextual_stochastic", "contextual_adversarial", "shifted"}) {
    const auto mode = parse_mode(name);
    CHECK(std::string(to_string(mode)) == name);
    auto l = make_learner(v, make_cfg(mode, 3, 2, 100));
    CHECK(l->play(CompetingBids({0.3}, 2)).strategy.demand() >= 1);
  }
  CHECK_THROWS(parse_mode("nope"));
  CHECK_THROWS(FullInfoLearner(v, make_cfg(LearnerMode::FullInfo, 4, 2, 10)));
}
