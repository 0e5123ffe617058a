#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bidlab/ets.hpp"
#include "bidlab/io.hpp"
#include "bidlab/runner.hpp"
#include "bidlab/suites.hpp"

namespace fs = std::filesystem;
using namespace bidlab;

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

BenchmarkInstance sample_instance(const StochasticInstance& law, int T, std::uint64_t seed, const std::string& name) {
  StochasticAdversary adv(law, seed);
  BenchmarkInstance inst;
  inst.name = name;
  inst.curve = law.curve;
  inst.K = law.K;
  std::vector<RoundRecord> none;
  for (int t = 0; t < T; ++t) inst.history.push_back(adv.next(none));
  return inst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidlab: learning to bid in repeated uniform-price auctions"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  int replications = 1, threads = 1;
  auto* run = app.add_subcommand("run", "run a learner against an adversary from a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out-dir", out_dir, "artifact directory");
  run->add_option("--replications", replications, "independent replications")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string suite_name;
  auto* suite = app.add_subcommand("suite", "run a reproduction suite");
  suite->add_option("name", suite_name, "suite name")->required()->check(CLI::IsMember(suite_names()));
  suite->add_option("--seed", seed, "suite seed");
  suite->add_option("--out-dir", out_dir, "report directory");
  suite->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string kind, out_file;
  double delta = 0.5, epsilon = 0.5;
  int m = 1, N = 4, M = 4, T = 100, K = 0, n_profiles = 4;
  auto* gen = app.add_subcommand("gen-instance", "write a benchmark instance as JSON");
  gen->add_option("--kind", kind, "instance family")
      ->required()
      ->check(CLI::IsMember({"pouf_tight_m1", "pouf_tight_general", "mmbar_tight", "cumulative_impossibility",
                             "regret_lb", "stochastic"}));
  gen->add_option("--delta", delta, "gap parameter");
  gen->add_option("--epsilon", epsilon, "epsilon of the impossibility instance");
  gen->add_option("--m", m, "pairs (or m' for mmbar_tight)");
  gen->add_option("--N", N, "base of the partition sizes");
  gen->add_option("--M", M, "units demanded");
  gen->add_option("--T", T, "rounds for sampled instances");
  gen->add_option("--K", K, "supply for stochastic instances");
  gen->add_option("--profiles", n_profiles, "support size for stochastic instances");
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--out", out_file, "output file (stdout if omitted)");

  std::string input, values;
  std::optional<double> f_fixed;
  double tol = 0.05;
  int curve_M = 0;
  auto* rec = app.add_subcommand("reconstruct", "rebuild bids from auction aggregates");
  rec->add_option("--input", input, "aggregates CSV")->required()->check(CLI::ExistingFile);
  rec->add_option("--f", f_fixed, "concentration fraction (grid search if omitted)");
  rec->add_option("--tol", tol, "relative error tolerance");
  rec->add_option("--seed", seed, "RNG seed");
  rec->add_option("--out-dir", out_dir, "output directory");
  rec->add_option("--values", values, "bidder valuation curve, comma separated");
  rec->add_option("--curve-M", curve_M, "draw a random bidder curve with this many units");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed) cfg.learner.seed = *seed;
      const json summary = run_experiment(cfg, out_dir, replications, threads);
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
    if (*suite) {
      SuiteOptions opt;
      if (seed) opt.seed = *seed;
      opt.threads = threads;
      const auto results = run_suite(suite_name, opt);
      json rep{{"suite", suite_name}, {"seed", opt.seed}, {"checks", json::array()}};
      bool pass = true;
      for (const auto& r : results) {
        rep["checks"].push_back({{"name", r.name}, {"pass", r.pass}, {"measured", r.measured}});
        pass = pass && r.pass;
      }
      rep["pass"] = pass;
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / ("suite_" + suite_name + ".json"), rep.dump(2) + "\n");
      std::cout << rep.dump(2) << "\n";
      return pass ? 0 : 1;
    }
    if (*gen) {
      const std::uint64_t s = seed.value_or(1);
      BenchmarkInstance inst;
      if (kind == "pouf_tight_m1") inst = gen_pouf_tight_m1(delta);
      else if (kind == "pouf_tight_general") inst = gen_pouf_tight_general(m, delta, N);
      else if (kind == "mmbar_tight") inst = gen_mmbar_tight(m, delta, N);
      else if (kind == "cumulative_impossibility") inst = gen_cumulative_impossibility(epsilon, T);
      else if (kind == "regret_lb") {
        check_desk_cap(T, M);
        inst = sample_instance(regret_lb_law(gen_regret_lb(M, delta), true), T, s, "regret_lb");
        inst.params = {{"delta", delta}};
      } else {
        check_desk_cap(T, K > 0 ? K : M);
        inst = sample_instance(gen_stochastic_benchmark(M, K > 0 ? K : M, n_profiles, s), T, derive_seed(s, 0, 2),
                               "stochastic");
      }
      const std::string text = instance_to_json(inst).dump() + "\n";
      if (out_file.empty()) std::cout << text;
      else write_text(out_file, text);
      return 0;
    }
    if (*rec) {
      std::ifstream in(input);
      const auto aggs = read_aggregates_csv(in);
      const std::uint64_t s = seed.value_or(1);
      const auto rep = f_fixed ? reconstruct_all(aggs, *f_fixed, s, tol) : grid_search_f(aggs, s, tol);
      fs::create_directories(out_dir);
      std::ofstream csv(fs::path(out_dir) / "report.csv");
      write_report_csv(csv, rep);
      BenchmarkInstance inst;
      inst.name = "reconstructed";
      if (!values.empty()) {
        inst.curve = ValuationCurve(parse_list(values));
      } else {
        std::mt19937_64 crng(derive_seed(s, 0, 9));
        inst.curve = curve_M > 0 ? detail::uniform_curve(crng, curve_M) : ets_bidder_curve(crng);
      }
      inst.history = accepted_history(aggs, rep);
      inst.K = 0;
      inst.params = {{"f", rep.f}, {"tolerance", tol}};
      write_text(fs::path(out_dir) / "instance.json", instance_to_json(inst).dump() + "\n");
      json summary{{"f", rep.f},
                   {"tolerance", tol},
                   {"auctions", rep.ids.size()},
                   {"accepted", rep.accepted.size()},
                   {"accepted_fraction", rep.accepted_fraction()},
                   {"rejected_ids", rep.rejected}};
      write_text(fs::path(out_dir) / "reconstruction.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
