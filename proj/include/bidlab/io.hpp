#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidlab/auction.hpp"
#include "bidlab/instances.hpp"
#include "bidlab/learners.hpp"

namespace bidlab {

using json = nlohmann::json;

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ rep) ^ (stream * 0x632be59bd9b4e019ull));
}

// --- instances ---------------------------------------------------------------

inline json curve_to_json(const ValuationCurve& c) { return {{"values", c.raw_values()}, {"gamma", c.gamma()}}; }

inline json instance_to_json(const BenchmarkInstance& inst) {
  json j;
  j["name"] = inst.name;
  j["curve"] = curve_to_json(inst.curve);
  j["K"] = inst.K;
  json hist = json::array();
  for (const auto& c : inst.history) {
    std::vector<double> desc(c.ascending().rbegin(), c.ascending().rend());
    while (!desc.empty() && desc.back() == 0.0) desc.pop_back();
    hist.push_back(desc);
  }
  j["history"] = hist;
  if (inst.K == 0) {
    std::vector<int> ks;
    for (const auto& c : inst.history) ks.push_back(c.K());
    j["round_K"] = ks;
  }
  j["params"] = inst.params;
  if (!inst.round_group.empty()) j["round_group"] = inst.round_group;
  return j;
}

inline BenchmarkInstance instance_from_json(const json& j) {
  BenchmarkInstance inst;
  inst.name = j.value("name", std::string("instance"));
  const json& cj = j.at("curve");
  inst.curve = ValuationCurve(cj.at("values").get<std::vector<double>>(), cj.value("gamma", 0.0));
  inst.K = j.at("K").get<int>();
  const auto& hist = j.at("history");
  if (inst.K == 0) {
    const auto ks = j.at("round_K").get<std::vector<int>>();
    if (ks.size() != hist.size()) throw std::invalid_argument("round_K length differs from history");
    for (std::size_t t = 0; t < ks.size(); ++t) inst.history.emplace_back(hist[t].get<std::vector<double>>(), ks[t]);
  } else {
    if (inst.K < 1) throw std::invalid_argument("K must be >= 1");
    for (const auto& row : hist) inst.history.emplace_back(row.get<std::vector<double>>(), inst.K);
  }
  if (j.contains("params")) inst.params = j.at("params").get<std::map<std::string, double>>();
  if (j.contains("round_group")) inst.round_group = j.at("round_group").get<std::vector<int>>();
  double units = 0;
  for (const auto& c : inst.history) units = std::max(units, static_cast<double>(c.K()));
  check_desk_cap(static_cast<double>(inst.history.size()), units);
  validate_instance(inst);
  return inst;
}

inline BenchmarkInstance load_instance(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return instance_from_json(json::parse(in));
}

// --- config ------------------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error("config line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  LearnerConfig learner;
  int K = 0;
  double gamma = 0.0;
  std::optional<std::vector<double>> values;
  json adversary;  // {"kind": ..., "params": {...}} or {"instance_file": ...}
  std::vector<ValuationCurve> contexts;
  std::vector<double> context_probs;
  json canonical;  // parsed document, for hashing
  std::filesystem::path base_dir;
};

// First line mentioning "key", or 1.
inline int line_of_key(const std::string& text, const std::string& key) {
  const std::string needle = "\"" + key + "\"";
  const auto pos = text.find(needle);
  if (pos == std::string::npos) return 1;
  int line = 1;
  for (std::size_t i = 0; i < pos; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line
    int line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError(1, "top level must be an object");

  static const std::vector<std::string> known{"mode", "M", "m", "T", "K", "eta", "lambda", "theta", "T0",
                                              "gamma", "seed", "adversary", "contexts", "values", "delta_conf"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError(line_of_key(text, it.key()), "unknown field '" + it.key() + "'");

  ExperimentConfig cfg;
  cfg.canonical = j;
  cfg.base_dir = base_dir;
  auto fail = [&](const std::string& key, const std::string& msg) -> ConfigError {
    return ConfigError(line_of_key(text, key), key + ": " + msg);
  };
  auto get_int = [&](const std::string& key, int lo) -> std::optional<int> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number_integer()) throw fail(key, "expected an integer");
    const auto v = j[key].get<long long>();
    if (v < lo || v > 1000000000LL) throw fail(key, "must be >= " + std::to_string(lo));
    return static_cast<int>(v);
  };
  auto get_pos = [&](const std::string& key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number()) throw fail(key, "expected a number");
    const double v = j[key].get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw fail(key, "must be positive");
    return v;
  };

  if (!j.contains("mode")) throw ConfigError(1, "missing field 'mode'");
  if (!j["mode"].is_string()) throw fail("mode", "expected a string");
  try {
    cfg.learner.mode = parse_mode(j["mode"].get<std::string>());
  } catch (const std::exception& e) {
    throw fail("mode", e.what());
  }
  if (!j.contains("T")) throw ConfigError(1, "missing field 'T'");
  cfg.learner.T = *get_int("T", 1);
  cfg.learner.m = get_int("m", 1).value_or(1);
  if (auto M = get_int("M", 1)) cfg.learner.M = *M;
  else cfg.learner.M = 0;
  cfg.K = get_int("K", 1).value_or(0);
  cfg.learner.eta = get_pos("eta");
  cfg.learner.lambda = get_pos("lambda");
  cfg.learner.theta = get_pos("theta");
  cfg.learner.delta_conf = get_pos("delta_conf");
  if (j.contains("T0") && !(j["T0"].is_string() && j["T0"] == "inf")) cfg.learner.T0 = get_int("T0", 1);
  if (j.contains("gamma")) {
    if (!j["gamma"].is_number() || j["gamma"].get<double>() < 0.0) throw fail("gamma", "must be a number >= 0");
    cfg.gamma = j["gamma"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw fail("seed", "expected a nonnegative integer");
    cfg.learner.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("values")) {
    if (!j["values"].is_array()) throw fail("values", "expected an array");
    try {
      cfg.values = j["values"].get<std::vector<double>>();
      ValuationCurve check(*cfg.values, cfg.gamma);
    } catch (const std::exception& e) {
      throw fail("values", e.what());
    }
  }
  if (!j.contains("adversary") || !j["adversary"].is_object()) throw ConfigError(1, "missing object 'adversary'");
  cfg.adversary = j["adversary"];
  if (!cfg.adversary.contains("kind") && !cfg.adversary.contains("instance_file"))
    throw fail("adversary", "needs 'kind' or 'instance_file'");
  if (cfg.adversary.contains("kind") && !cfg.adversary["kind"].is_string()) throw fail("kind", "expected a string");
  if (cfg.adversary.contains("params") && !cfg.adversary["params"].is_object())
    throw fail("params", "expected an object");

  if (j.contains("contexts")) {
    const json& cx = j["contexts"];
    if (!cx.is_array() || cx.empty()) throw fail("contexts", "expected a nonempty array");
    double total = 0.0;
    for (const auto& c : cx) {
      try {
        cfg.contexts.emplace_back(c.at("values").get<std::vector<double>>(), c.value("gamma", cfg.gamma));
        cfg.context_probs.push_back(c.value("prob", 1.0));
      } catch (const std::exception& e) {
        throw fail("contexts", e.what());
      }
      if (!(cfg.context_probs.back() > 0.0)) throw fail("contexts", "prob must be positive");
      total += cfg.context_probs.back();
    }
    for (double& p : cfg.context_probs) p /= total;
    const bool ctx_mode = cfg.learner.mode == LearnerMode::ContextualStochastic ||
                          cfg.learner.mode == LearnerMode::ContextualAdversarial;
    if (!ctx_mode) throw fail("contexts", "only valid for contextual modes");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open config " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), p.parent_path());
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  json j = cfg.canonical;
  j["seed"] = cfg.learner.seed;
  return hex64(fnv1a64(j.dump()));
}

}  // namespace bidlab
