#pragma once

// One fully isolated run: benchmark, evaluator, optimizer and log writer.

#include <memory>
#include <optional>
#include <string>

#include "tbaopt/benchmarks.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/external.hpp"
#include "tbaopt/jsonl_log.hpp"
#include "tbaopt/optimizers.hpp"
#include "tbaopt/run_config.hpp"

namespace tbaopt {

// Resolves `cfg` against `constants`, runs it, and (when `log_path` is set)
// writes the JSONL log as the run proceeds.
inline RunRecord execute_run(RunConfig cfg, const BenchmarkConstants& constants,
                             const std::optional<std::string>& log_path = std::nullopt) {
  cfg.resolve(constants);
  const auto bench = make_benchmark(cfg.benchmark, constants);
  const Scenario& scenario = constants.scenario(cfg.benchmark, cfg.scenario);
  const HardwareProfile& hw = constants.profile(cfg.hardware);
  const TimeoutPolicy policy =
      TimeoutPolicy::for_scenario(scenario, cfg.timeout_multiplier, cfg.timeout_enabled);

  std::unique_ptr<TrialRunner> runner;
  if (cfg.evaluator == "inprocess")
    runner = std::make_unique<InProcessRunner>(*bench, scenario, hw, policy);
  else
    runner = std::make_unique<ExternalRunner>(parse_exec_spec(cfg.evaluator), cfg.benchmark,
                                              scenario, cfg.hardware, policy, constants.hash);

  std::optional<JsonlWriter> writer;
  if (log_path) {
    writer.emplace(*log_path);
    writer->header(cfg, scenario, constants.hash);
  }
  TrialObserver observer;
  if (writer) observer = [&](const TrialResult& t) { writer->trial(t); };

  Evaluator ev(bench->space(), scenario, *runner);
  RngStreams rngs = RngStreams::from_master(cfg.master());
  const std::int64_t budget = *cfg.budget;
  RunRecord rec;
  if (cfg.optimizer == "random")
    rec = run_random(bench->space(), ev, budget, rngs, observer);
  else if (cfg.optimizer == "tpe")
    rec = run_tpe(bench->space(), ev, budget, rngs, cfg.tpe, observer);
  else if (cfg.optimizer == "tba")
    rec = run_tba_pure(bench->space(), ev, budget, rngs, cfg.anneal, observer);
  else
    rec = run_hybrid(bench->space(), ev, budget, rngs, cfg.anneal, cfg.tpe, observer);

  rec.benchmark = cfg.benchmark;
  rec.scenario = scenario;
  rec.hardware = cfg.hardware;
  rec.seed = cfg.seed;
  rec.constants_hash = constants.hash;
  return rec;
}

}  // namespace tbaopt
