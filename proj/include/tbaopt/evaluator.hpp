#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbaopt/benchmarks.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/search_space.hpp"
#include "tbaopt/value.hpp"

namespace tbaopt {

enum class TrialStatus { ok, crash, early_stop };
enum class Phase { init, sa, tpe };

inline const char* to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::crash: return "crash";
    case TrialStatus::early_stop: return "early_stop";
  }
  return "?";
}

inline std::optional<TrialStatus> trial_status_from_string(std::string_view s) {
  if (s == "ok") return TrialStatus::ok;
  if (s == "crash") return TrialStatus::crash;
  if (s == "early_stop") return TrialStatus::early_stop;
  return std::nullopt;
}

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::init: return "init";
    case Phase::sa: return "sa";
    case Phase::tpe: return "tpe";
  }
  return "?";
}

inline Phase phase_from_string(const std::string& s) {
  if (s == "init") return Phase::init;
  if (s == "sa") return Phase::sa;
  if (s == "tpe") return Phase::tpe;
  throw SpecError("unknown phase '" + s + "'");
}

// Aborts a trial whose latency, observed after warmup, exceeds
// multiplier * c_latency.
struct TimeoutPolicy {
  std::string latency_metric;  // name of the watched constraint
  double c_latency = 0.0;
  double multiplier = 5.0;
  bool enabled = true;
  double warmup_fraction = 30.0 / 130.0;

  double tau() const { return multiplier * c_latency; }

  void check() const {
    if (!(multiplier > 1.0)) throw SpecError("timeout multiplier must be > 1");
    if (!(warmup_fraction > 0.0 && warmup_fraction <= 1.0))
      throw SpecError("warmup fraction must be in (0, 1]");
  }

  // Watches the scenario's first latency-like constraint; disabled when the
  // scenario has none.
  static TimeoutPolicy for_scenario(const Scenario& s, double multiplier = 5.0,
                                    bool enabled = true) {
    TimeoutPolicy p;
    p.multiplier = multiplier;
    p.enabled = false;
    for (const auto& c : s.constraints)
      if (c.name.rfind("latency", 0) == 0) {
        p.latency_metric = c.name;
        p.c_latency = c.threshold;
        p.enabled = enabled;
        break;
      }
    p.check();
    return p;
  }
};

inline Json to_json(const TimeoutPolicy& p) {
  return {{"latency_metric", p.latency_metric},
          {"c_latency", p.c_latency},
          {"multiplier", p.multiplier},
          {"enabled", p.enabled},
          {"warmup_fraction", p.warmup_fraction}};
}

// Evaluation result as seen through the evaluator boundary (in-process or
// over the wire), before violation bookkeeping.
struct EvalResponse {
  std::int64_t id = 0;
  TrialStatus status = TrialStatus::ok;
  std::optional<double> objective;
  std::map<std::string, double> constraint_values;
  double cost_seconds = 0.0;
  std::optional<std::string> error;

  bool operator==(const EvalResponse&) const = default;
};

// Early-stop rule at an explicit threshold `tau` on `latency_metric`.
inline EvalResponse apply_timeout_at(const RawOutcome& raw, const std::string& latency_metric,
                                     std::optional<double> tau, double warmup_fraction) {
  EvalResponse r;
  r.cost_seconds = raw.true_cost_seconds;
  if (raw.status == OutcomeStatus::crash) {
    r.status = TrialStatus::crash;
    r.error = raw.crash_reason;
    return r;
  }
  if (tau) {
    auto it = raw.constraint_values.find(latency_metric);
    if (it != raw.constraint_values.end() && it->second > *tau) {
      r.status = TrialStatus::early_stop;
      r.constraint_values = {{it->first, it->second}};
      r.cost_seconds = raw.true_cost_seconds * warmup_fraction;
      return r;
    }
  }
  r.status = TrialStatus::ok;
  r.objective = raw.objective;
  r.constraint_values = raw.constraint_values;
  return r;
}

inline EvalResponse apply_timeout(const RawOutcome& raw, const TimeoutPolicy& policy) {
  return apply_timeout_at(raw, policy.latency_metric,
                          policy.enabled ? std::optional<double>(policy.tau()) : std::nullopt,
                          policy.warmup_fraction);
}

// Sum_j max(0, g_j - c_j).
inline double violation(const std::map<std::string, double>& values,
                        const std::vector<ConstraintSpec>& constraints) {
  double v = 0.0;
  for (const auto& c : constraints) {
    auto it = values.find(c.name);
    if (it == values.end()) throw SpecError("missing value for constraint '" + c.name + "'");
    v += std::max(0.0, it->second - c.threshold);
  }
  return v;
}

struct TrialResult {
  std::int64_t trial_index = 0;  // 1-based
  Phase phase = Phase::init;
  Configuration config;
  TrialStatus status = TrialStatus::ok;
  std::optional<double> objective;
  std::map<std::string, double> constraint_values;
  // +inf for crashes; early stops use the single observed latency.
  double violation = 0.0;
  bool feasible = false;
  double cost_seconds = 0.0;
  std::vector<Json> events;

  bool bad() const { return !feasible; }
  bool operator==(const TrialResult&) const = default;
};

inline TrialResult make_trial(const Configuration& config, const EvalResponse& r,
                              const Scenario& scenario, std::int64_t index, Phase phase) {
  TrialResult t;
  t.trial_index = index;
  t.phase = phase;
  t.config = config;
  t.status = r.status;
  t.cost_seconds = r.cost_seconds;
  switch (r.status) {
    case TrialStatus::crash:
      t.violation = std::numeric_limits<double>::infinity();
      break;
    case TrialStatus::early_stop: {
      t.constraint_values = r.constraint_values;
      std::vector<ConstraintSpec> observed;
      for (const auto& c : scenario.constraints)
        if (r.constraint_values.count(c.name)) observed.push_back(c);
      t.violation = violation(r.constraint_values, observed);
      break;
    }
    case TrialStatus::ok:
      if (!r.objective) throw SpecError("ok outcome without objective");
      t.objective = r.objective;
      t.constraint_values = r.constraint_values;
      t.violation = violation(r.constraint_values, scenario.constraints);
      t.feasible = t.violation == 0.0;
      break;
  }
  return t;
}

// Ordered trial ledger shared by every phase of a run.
class History {
 public:
  void append(TrialResult t) {
    if (!trials_.empty() && t.trial_index <= trials_.back().trial_index)
      throw SpecError("trial indices must be strictly increasing");
    if (t.feasible) {
      ++n_feasible_;
      if (!best_ || *t.objective > *trials_[*best_].objective) best_ = trials_.size();
    }
    trials_.push_back(std::move(t));
  }

  const std::vector<TrialResult>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const TrialResult& operator[](std::size_t i) const { return trials_[i]; }
  TrialResult& back() { return trials_.back(); }
  const TrialResult& back() const { return trials_.back(); }

  std::size_t n_feasible() const { return n_feasible_; }
  std::size_t n_bad() const { return trials_.size() - n_feasible_; }

  // Position (0-based) of the best feasible trial; earliest on ties.
  std::optional<std::size_t> best_feasible() const { return best_; }

  // Feasible trial positions ordered by objective descending, then index.
  std::vector<std::size_t> feasible_ranking() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < trials_.size(); ++i)
      if (trials_[i].feasible) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return *trials_[a].objective > *trials_[b].objective;
    });
    return idx;
  }

  bool operator==(const History& o) const { return trials_ == o.trials_; }

 private:
  std::vector<TrialResult> trials_;
  std::size_t n_feasible_ = 0;
  std::optional<std::size_t> best_;
};

// Evaluates one configuration. Implementations: in-process benchmark, or an
// out-of-process worker speaking the wire protocol.
class TrialRunner {
 public:
  virtual ~TrialRunner() = default;
  // Throws TransportError when the evaluator cannot be reached.
  virtual EvalResponse run(const Configuration& config) = 0;
};

class InProcessRunner final : public TrialRunner {
 public:
  InProcessRunner(const Benchmark& bench, Scenario scenario, HardwareProfile hw,
                  TimeoutPolicy policy)
      : bench_(bench), scenario_(std::move(scenario)), hw_(std::move(hw)),
        policy_(std::move(policy)) {}

  EvalResponse run(const Configuration& config) override {
    return apply_timeout(bench_.evaluate(config, scenario_, hw_), policy_);
  }

 private:
  const Benchmark& bench_;
  Scenario scenario_;
  HardwareProfile hw_;
  TimeoutPolicy policy_;
};

// Per-run evaluation front end: validates, numbers trials, computes V.
class Evaluator {
 public:
  Evaluator(const SearchSpace& space, const Scenario& scenario, TrialRunner& runner)
      : space_(space), scenario_(scenario), runner_(runner) {}

  TrialResult run_trial(const Configuration& config, Phase phase) {
    require_valid(space_, config);
    const auto response = runner_.run(config);
    return make_trial(config, response, scenario_, ++count_, phase);
  }

  const Scenario& scenario() const { return scenario_; }
  const SearchSpace& space() const { return space_; }
  std::int64_t trials_run() const { return count_; }

 private:
  const SearchSpace& space_;
  const Scenario& scenario_;
  TrialRunner& runner_;
  std::int64_t count_ = 0;
};

// One-shot trial against an in-process benchmark.
inline TrialResult run_trial(const Benchmark& bench, const Configuration& config,
                             const Scenario& scenario, const HardwareProfile& hw,
                             const TimeoutPolicy& policy) {
  InProcessRunner runner(bench, scenario, hw, policy);
  Evaluator ev(bench.space(), scenario, runner);
  return ev.run_trial(config, Phase::init);
}

}  // namespace tbaopt
