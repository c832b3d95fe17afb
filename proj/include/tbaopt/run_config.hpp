#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

#include "tbaopt/annealer.hpp"
#include "tbaopt/benchmarks.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/hash.hpp"
#include "tbaopt/optimizers.hpp"
#include "tbaopt/tpe.hpp"

namespace tbaopt {

// Everything that determines one run. Serialized in full into the log
// header, so a log describes itself.
struct RunConfig {
  std::string benchmark = "crashy_branin";
  std::string optimizer = "hybrid";
  std::string scenario;         // empty: the benchmark's first scenario
  std::string hardware = "mid";
  std::optional<std::int64_t> budget;  // empty: the scenario's budget
  std::uint64_t seed = 0;
  std::string evaluator = "inprocess";
  bool timeout_enabled = true;
  double timeout_multiplier = 5.0;
  AnnealConfig anneal;
  TpeConfig tpe;

  // Fills the scenario and budget defaults and validates names.
  void resolve(const BenchmarkConstants& constants) {
    const auto& names = benchmark_names();
    if (std::find(names.begin(), names.end(), benchmark) == names.end())
      throw SpecError("unknown benchmark '" + benchmark + "' (choose from: " + join(names) + ")");
    const auto& opts = optimizer_names();
    if (std::find(opts.begin(), opts.end(), optimizer) == opts.end())
      throw SpecError("unknown optimizer '" + optimizer + "' (choose from: " + join(opts) + ")");
    const auto& scenarios = constants.scenarios.at(benchmark);
    if (scenario.empty()) scenario = scenarios.begin()->first;
    const Scenario& sc = constants.scenario(benchmark, scenario);
    constants.profile(hardware);
    if (!budget) budget = sc.budget;
    if (*budget < 1) throw SpecError("budget must be >= 1");
    if ((optimizer == "tba" || optimizer == "hybrid") && *budget < anneal.n_init + 1)
      throw SpecError(optimizer + " needs budget >= " + std::to_string(anneal.n_init + 1));
    if (evaluator != "inprocess" && evaluator.rfind("exec:", 0) != 0)
      throw SpecError("evaluator must be 'inprocess' or 'exec:<command>'");
    if (!(timeout_multiplier > 1.0)) throw SpecError("timeout multiplier must be > 1");
    anneal.check();
    tpe.check();
  }

  std::string run_id() const {
    return optimizer + "-" + benchmark + "-" + scenario + "-" + hardware + "-B" +
           std::to_string(budget.value_or(0)) + "-s" + std::to_string(seed);
  }

  // Master RNG seed: a fixed mix of the integer seed with the optimizer and
  // benchmark names.
  std::uint64_t master() const { return master_seed(seed, optimizer + "/" + benchmark); }

 private:
  static std::string join(const std::vector<std::string>& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : ", ") + x;
    return s;
  }
};

inline Json to_json(const RunConfig& c) {
  Json j{{"benchmark", c.benchmark},
         {"optimizer", c.optimizer},
         {"scenario", c.scenario},
         {"hardware", c.hardware},
         {"budget", c.budget ? Json(*c.budget) : Json(nullptr)},
         {"seed", c.seed},
         {"evaluator", c.evaluator},
         {"timeout", {{"enabled", c.timeout_enabled}, {"multiplier", c.timeout_multiplier}}},
         {"anneal", to_json(c.anneal)},
         {"tpe", to_json(c.tpe)}};
  return j;
}

// Reads a run configuration document. Unknown keys are rejected so that
// typos do not silently fall back to defaults. `extra` receives keys that
// belong to the caller (for example "out" or "constants").
inline RunConfig run_config_from_json(const Json& j, RunConfig c = {},
                                      const std::vector<std::string>& extra = {}) {
  static const std::vector<std::string> known{"benchmark", "optimizer", "scenario", "hardware",
                                              "budget",    "seed",      "evaluator", "timeout",
                                              "anneal",    "tpe"};
  try {
    for (const auto& [k, v] : j.items())
      if (std::find(known.begin(), known.end(), k) == known.end() &&
          std::find(extra.begin(), extra.end(), k) == extra.end())
        throw SpecError("unknown run setting '" + k + "'");
    if (j.contains("benchmark")) c.benchmark = j["benchmark"].get<std::string>();
    if (j.contains("optimizer")) c.optimizer = j["optimizer"].get<std::string>();
    if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
    if (j.contains("hardware")) c.hardware = j["hardware"].get<std::string>();
    if (j.contains("budget") && !j["budget"].is_null()) c.budget = j["budget"].get<std::int64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("evaluator")) c.evaluator = j["evaluator"].get<std::string>();
    if (j.contains("timeout")) {
      const auto& t = j["timeout"];
      for (const auto& [k, v] : t.items())
        if (k != "enabled" && k != "multiplier") throw SpecError("unknown timeout setting '" + k + "'");
      if (t.contains("enabled")) c.timeout_enabled = t["enabled"].get<bool>();
      if (t.contains("multiplier")) c.timeout_multiplier = t["multiplier"].get<double>();
    }
    if (j.contains("anneal")) c.anneal = anneal_config_from_json(j["anneal"], c.anneal);
    if (j.contains("tpe")) c.tpe = tpe_config_from_json(j["tpe"], c.tpe);
  } catch (const Json::exception& e) {
    throw SpecError(std::string("run configuration: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {},
                                 const std::vector<std::string>& extra = {}) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw SpecError("run configuration " + path + ": " + e.what());
  }
  return run_config_from_json(j, std::move(base), extra);
}

}  // namespace tbaopt
