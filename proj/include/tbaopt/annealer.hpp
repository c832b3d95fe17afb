#pragma once

// Feasible-first simulated annealing: minimizes total constraint violation
// until a feasible point is seen, then maximizes the objective over feasible
// states. Crashed and early-stopped trials are recorded but never become the
// current state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/search_space.hpp"

namespace tbaopt {

struct AnnealConfig {
  double t0 = 1.0;
  double alpha_feasibility = 0.95;
  double alpha_optimization = 0.92;
  double beta = 2.5;
  double gamma = 0.8;
  int patience = 4;
  int n_init = 5;
  int n_min = 8;
  int n_max = 15;
  int handoff_min_feasible = 5;
  int handoff_min_bad = 3;
  int elite_restart_period = 12;
  double restart_budget_fraction = 0.7;
  double snap_back_base = 0.4;
  double p_s_start = 0.5;
  double p_s_decay = 0.35;
  double p_s_fixed = 0.3;
  double move_scale = 0.2;
  int blacklist_threshold = 3;
  int blacklist_cooldown = 8;
  // ablation toggles
  bool late_restarts_allowed = false;
  bool snap_back_enabled = true;
  bool adaptive_ps_enabled = true;
  bool elite_restart_enabled = true;
  bool blacklisting_enabled = true;

  void check() const {
    auto fail = [](const std::string& m) { throw SpecError("anneal config: " + m); };
    if (!(t0 > 0)) fail("t0 must be > 0");
    if (!(alpha_feasibility > 0 && alpha_feasibility < 1)) fail("alpha_feasibility must be in (0,1)");
    if (!(alpha_optimization > 0 && alpha_optimization < 1)) fail("alpha_optimization must be in (0,1)");
    if (!(beta > 1)) fail("beta must be > 1");
    if (!(gamma > 0 && gamma <= 1)) fail("gamma must be in (0,1]");
    if (patience < 1) fail("patience must be >= 1");
    if (!(n_init >= 1 && n_init < n_min && n_min <= n_max)) fail("need 1 <= n_init < n_min <= n_max");
    if (blacklist_threshold < 1 || blacklist_cooldown < 1) fail("blacklist settings must be >= 1");
    if (!(move_scale > 0)) fail("move_scale must be > 0");
  }
};

inline Json to_json(const AnnealConfig& c) {
  return {{"t0", c.t0},
          {"alpha_feasibility", c.alpha_feasibility},
          {"alpha_optimization", c.alpha_optimization},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"patience", c.patience},
          {"n_init", c.n_init},
          {"n_min", c.n_min},
          {"n_max", c.n_max},
          {"handoff_min_feasible", c.handoff_min_feasible},
          {"handoff_min_bad", c.handoff_min_bad},
          {"elite_restart_period", c.elite_restart_period},
          {"restart_budget_fraction", c.restart_budget_fraction},
          {"snap_back_base", c.snap_back_base},
          {"p_s_start", c.p_s_start},
          {"p_s_decay", c.p_s_decay},
          {"p_s_fixed", c.p_s_fixed},
          {"move_scale", c.move_scale},
          {"blacklist_threshold", c.blacklist_threshold},
          {"blacklist_cooldown", c.blacklist_cooldown},
          {"late_restarts_allowed", c.late_restarts_allowed},
          {"snap_back_enabled", c.snap_back_enabled},
          {"adaptive_ps_enabled", c.adaptive_ps_enabled},
          {"elite_restart_enabled", c.elite_restart_enabled},
          {"blacklisting_enabled", c.blacklisting_enabled}};
}

// Overrides fields present in `j`; unknown keys are rejected.
inline AnnealConfig anneal_config_from_json(const Json& j, AnnealConfig c = {}) {
  const Json defaults = to_json(c);
  for (const auto& [k, v] : j.items())
    if (!defaults.contains(k)) throw SpecError("unknown anneal setting '" + k + "'");
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("t0", c.t0);
  get("alpha_feasibility", c.alpha_feasibility);
  get("alpha_optimization", c.alpha_optimization);
  get("beta", c.beta);
  get("gamma", c.gamma);
  get("patience", c.patience);
  get("n_init", c.n_init);
  get("n_min", c.n_min);
  get("n_max", c.n_max);
  get("handoff_min_feasible", c.handoff_min_feasible);
  get("handoff_min_bad", c.handoff_min_bad);
  get("elite_restart_period", c.elite_restart_period);
  get("restart_budget_fraction", c.restart_budget_fraction);
  get("snap_back_base", c.snap_back_base);
  get("p_s_start", c.p_s_start);
  get("p_s_decay", c.p_s_decay);
  get("p_s_fixed", c.p_s_fixed);
  get("move_scale", c.move_scale);
  get("blacklist_threshold", c.blacklist_threshold);
  get("blacklist_cooldown", c.blacklist_cooldown);
  get("late_restarts_allowed", c.late_restarts_allowed);
  get("snap_back_enabled", c.snap_back_enabled);
  get("adaptive_ps_enabled", c.adaptive_ps_enabled);
  get("elite_restart_enabled", c.elite_restart_enabled);
  get("blacklisting_enabled", c.blacklisting_enabled);
  c.check();
  return c;
}

// ---------------------------------------------------------------------------
// Temperature

struct TemperatureState {
  double t = 1.0;
  int consecutive_non_improving = 0;
  bool operator==(const TemperatureState&) const = default;
};

// improved -> cool by alpha; otherwise hold until `patience` consecutive
// non-improving steps, then reheat to min(beta T, gamma T0).
inline TemperatureState update_temperature(TemperatureState ts, bool improved, double alpha,
                                           const AnnealConfig& cfg) {
  if (improved) {
    ts.t *= alpha;
    ts.consecutive_non_improving = 0;
    return ts;
  }
  if (++ts.consecutive_non_improving >= cfg.patience) {
    ts.t = std::min(cfg.beta * ts.t, cfg.gamma * cfg.t0);
    ts.consecutive_non_improving = 0;
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Acceptance

inline double sigma_violation(const std::vector<ConstraintSpec>& constraints) {
  if (constraints.empty()) throw SpecError("sigma_violation needs at least one constraint");
  double s = 0.0;
  for (const auto& c : constraints) s += std::abs(c.threshold);
  return std::max(0.1, s / static_cast<double>(constraints.size()) * 0.1);
}

inline double sigma_objective(double f_min, double f_max) {
  return std::max(0.01, (f_max - f_min) / 2.0);
}

inline bool accept_feasibility(double v_curr, double v_prop, double t, double sigma_v, Rng& rng) {
  if (v_prop < v_curr) return true;
  return rng.uniform() < std::exp(-(v_prop - v_curr) / (t * sigma_v));
}

inline bool accept_optimization(double f_curr, double f_prop, bool prop_feasible, double t,
                                double sigma_f, Rng& rng) {
  if (!prop_feasible) return false;
  if (f_prop > f_curr) return true;
  return rng.uniform() < std::exp(-(f_curr - f_prop) / (t * sigma_f));
}

// Structural move probability at trial n: linear decay from p_s_start at
// n_init to p_s_start - p_s_decay at B.
inline double structural_prob(std::int64_t n, std::int64_t n_init, std::int64_t budget,
                              const AnnealConfig& cfg = {}) {
  if (budget <= n_init) throw SpecError("structural_prob needs B > n_init");
  if (!cfg.adaptive_ps_enabled) return cfg.p_s_fixed;
  const double frac = static_cast<double>(n - n_init) / static_cast<double>(budget - n_init);
  return cfg.p_s_start - cfg.p_s_decay * frac;
}

// ---------------------------------------------------------------------------
// Subspace blacklisting

class SubspaceTracker {
 public:
  struct Entry {
    int failures = 0;
    bool blacklisted = false;
    int age = 0;
    bool operator==(const Entry&) const = default;
  };

  SubspaceTracker() = default;

  explicit SubspaceTracker(const SearchSpace& space, int threshold = 3, int cooldown = 8)
      : threshold_(threshold), cooldown_(cooldown) {
    for (const auto& v : space.variables())
      if (v.structural())
        for (const auto& x : v.values) entries_[v.name].push_back({x, Entry{}});
  }

  bool is_blacklisted(const std::string& var, const Value& value) const {
    const auto* e = find(var, value);
    return e && e->blacklisted;
  }

  const Entry& entry(const std::string& var, const Value& value) const {
    const auto* e = find(var, value);
    if (!e) throw SpecError("tracker has no entry for " + var + "=" + to_string(value));
    return *e;
  }

  std::vector<Value> allowed_values(const std::string& var) const {
    std::vector<Value> out;
    auto it = entries_.find(var);
    if (it == entries_.end()) return out;
    for (const auto& [v, e] : it->second)
      if (!e.blacklisted) out.push_back(v);
    return out;
  }

  // Ages active blacklists, then records the outcome for every categorical
  // value in `config`. Returns blacklist set/clear events.
  std::vector<Json> update(const Configuration& config, bool success) {
    std::vector<Json> events;
    for (auto& [var, values] : entries_)
      for (auto& [val, e] : values)
        if (e.blacklisted && ++e.age >= cooldown_) {
          e = Entry{};
          events.push_back(event("blacklist_clear", var, val, "cooldown"));
        }
    for (const auto& [var, value] : config) {
      auto it = entries_.find(var);
      if (it == entries_.end()) continue;
      auto& values = it->second;
      for (auto& [val, e] : values) {
        if (val != value) continue;
        if (success) {
          if (e.blacklisted) events.push_back(event("blacklist_clear", var, val, "success"));
          e = Entry{};
          continue;
        }
        ++e.failures;
        if (!e.blacklisted && e.failures >= threshold_) {
          const auto open = std::count_if(values.begin(), values.end(),
                                          [](const auto& p) { return !p.second.blacklisted; });
          if (open > 1) {
            e.blacklisted = true;
            e.age = 0;
            events.push_back(event("blacklist_set", var, val, "consecutive failures"));
          }
        }
      }
    }
    return events;
  }

  // At least one value of every variable is available.
  bool safety_valve_holds() const {
    for (const auto& [var, values] : entries_)
      if (std::all_of(values.begin(), values.end(), [](const auto& p) { return p.second.blacklisted; }))
        return false;
    return true;
  }

  std::vector<std::pair<std::string, Value>> blacklisted() const {
    std::vector<std::pair<std::string, Value>> out;
    for (const auto& [var, values] : entries_)
      for (const auto& [val, e] : values)
        if (e.blacklisted) out.emplace_back(var, val);
    return out;
  }

  int cooldown() const { return cooldown_; }
  bool operator==(const SubspaceTracker&) const = default;

 private:
  static Json event(const char* kind, const std::string& var, const Value& val, const char* why) {
    return {{"kind", kind}, {"variable", var}, {"value", to_json(val)}, {"reason", why}};
  }

  const Entry* find(const std::string& var, const Value& value) const {
    auto it = entries_.find(var);
    if (it == entries_.end()) return nullptr;
    for (const auto& [v, e] : it->second)
      if (v == value) return &e;
    return nullptr;
  }

  int threshold_ = 3;
  int cooldown_ = 8;
  std::map<std::string, std::vector<std::pair<Value, Entry>>> entries_;
};

// Value-semantics form of SubspaceTracker::update for a finished trial.
inline SubspaceTracker tracker_update(SubspaceTracker tracker, const Configuration& config,
                                      TrialStatus status, bool feasible) {
  tracker.update(config, status == TrialStatus::ok && feasible);
  return tracker;
}

// ---------------------------------------------------------------------------
// Neighbor proposals

enum class MoveKind { structural, numerical, none };

struct Proposal {
  Configuration config;
  MoveKind kind = MoveKind::none;
  std::string variable;
};

namespace detail {

inline Value step_discrete(const VariableSpec& v, const Value& current, double t,
                           const AnnealConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::int64_t>(v.domain_size());
  const auto i = static_cast<std::int64_t>(*v.index_of(current));
  const double mean = 1.0 + cfg.move_scale * t * static_cast<double>(n - 1);
  const std::int64_t k = std::min<std::int64_t>(rng.geometric(mean), n - 1);
  std::int64_t dir = rng.bernoulli(0.5) ? 1 : -1;
  std::int64_t j = i + dir * k;
  if (j < 0 || j >= n) {
    dir = -dir;
    j = i + dir * k;
  }
  j = std::clamp<std::int64_t>(j, 0, n - 1);
  return v.value_at(static_cast<std::size_t>(j));
}

inline Value step_continuous(const VariableSpec& v, double x, double t, const AnnealConfig& cfg,
                             Rng& rng) {
  const double scale = cfg.move_scale * t * (v.hi - v.lo);
  for (int attempt = 0; attempt < 16; ++attempt) {
    const double d = rng.normal(0.0, scale);
    double y = std::clamp(x + d, v.lo, v.hi);
    if (y == x) y = std::clamp(x - d, v.lo, v.hi);
    if (y != x) return y;
  }
  // Degenerate scale: nudge toward the interior.
  return x < 0.5 * (v.lo + v.hi) ? std::nextafter(x, v.hi) : std::nextafter(x, v.lo);
}

}  // namespace detail

// With probability p_s resample one structural variable among its
// non-blacklisted values (excluding the current one) and repair activeness;
// otherwise perturb one active numeric variable. Falls back to the other move
// kind when one is impossible.
inline Proposal propose_neighbor(const Configuration& current, const SearchSpace& space,
                                 double p_s, const SubspaceTracker* tracker, double t,
                                 const AnnealConfig& cfg, Rng& rng) {
  std::vector<std::pair<const VariableSpec*, std::vector<Value>>> structural;
  std::vector<const VariableSpec*> numeric;
  for (const auto& v : space.variables()) {
    auto it = current.find(v.name);
    if (it == current.end()) continue;
    if (v.structural()) {
      std::vector<Value> options;
      for (const auto& x : v.values)
        if (x != it->second && !(tracker && tracker->is_blacklisted(v.name, x)))
          options.push_back(x);
      if (!options.empty()) structural.emplace_back(&v, std::move(options));
    } else if (v.kind == VariableKind::continuous ? v.lo < v.hi : v.domain_size() > 1) {
      numeric.push_back(&v);
    }
  }

  bool do_structural = rng.bernoulli(p_s);
  if (do_structural && structural.empty()) do_structural = false;
  if (!do_structural && numeric.empty()) do_structural = !structural.empty();
  if (structural.empty() && numeric.empty()) return {current, MoveKind::none, ""};

  Proposal p;
  if (do_structural) {
    const auto& [var, options] = structural[rng.below(structural.size())];
    Configuration next = current;
    next[var->name] = options[rng.below(options.size())];
    p.config = complete_configuration(space, next,
                                      [&](const VariableSpec& v) { return v.sample(rng); });
    p.kind = MoveKind::structural;
    p.variable = var->name;
    return p;
  }
  const VariableSpec& v = *numeric[rng.below(numeric.size())];
  p.config = current;
  const Value& x = current.at(v.name);
  p.config[v.name] = v.kind == VariableKind::continuous
                         ? detail::step_continuous(v, std::get<double>(x), t, cfg, rng)
                         : detail::step_discrete(v, x, t, cfg, rng);
  p.kind = MoveKind::numerical;
  p.variable = v.name;
  return p;
}

// ---------------------------------------------------------------------------
// State, restarts, handoff

enum class Stage { feasibility, optimization };

inline const char* to_string(Stage s) {
  return s == Stage::feasibility ? "feasibility" : "optimization";
}

struct AnnealerState {
  std::optional<Configuration> current;
  double current_violation = std::numeric_limits<double>::infinity();
  std::optional<double> current_objective;
  std::optional<std::pair<Configuration, double>> best_feasible;
  Stage stage = Stage::feasibility;
  TemperatureState temperature;
  SubspaceTracker tracker;
  int trials_since_restart = 0;
  int restarts = 0;
  double sigma_v = 0.1;
  double sigma_f = 0.01;
};

struct Replacement {
  Configuration config;
  double objective = 0.0;
  enum class Kind { snap_back, elite_restart } kind = Kind::snap_back;
};

inline double snap_back_probability(std::int64_t n, std::int64_t budget, const AnnealConfig& cfg) {
  return cfg.snap_back_base * (1.0 - static_cast<double>(n) / static_cast<double>(budget));
}

// Snap-back is evaluated first; when it fires, the elite restart is
// suppressed for this trial. Updates the restart bookkeeping in `state`.
inline std::optional<Replacement> restart_and_snapback(AnnealerState& state, std::int64_t n,
                                                       std::int64_t budget, const History& history,
                                                       bool accepted_worse_feasible,
                                                       const AnnealConfig& cfg, Rng& rng) {
  if (cfg.snap_back_enabled && accepted_worse_feasible && state.best_feasible) {
    if (rng.uniform() < snap_back_probability(n, budget, cfg))
      return Replacement{state.best_feasible->first, state.best_feasible->second,
                         Replacement::Kind::snap_back};
  }
  if (!cfg.elite_restart_enabled || state.trials_since_restart < cfg.elite_restart_period)
    return std::nullopt;
  const bool early = static_cast<double>(n) < cfg.restart_budget_fraction * static_cast<double>(budget);
  if (!early && !cfg.late_restarts_allowed) return std::nullopt;
  const auto ranking = history.feasible_ranking();
  if (ranking.size() < 3) return std::nullopt;
  const std::size_t pick = ranking[1 + (state.restarts % 2)];
  ++state.restarts;
  state.trials_since_restart = 0;
  return Replacement{history[pick].config, *history[pick].objective,
                     Replacement::Kind::elite_restart};
}

inline bool handoff_ready(std::size_t n, std::size_t n_feasible, std::size_t n_bad,
                          const AnnealConfig& cfg) {
  const auto sn = static_cast<std::int64_t>(n);
  return (sn >= cfg.n_min && n_feasible >= static_cast<std::size_t>(cfg.handoff_min_feasible) &&
          n_bad >= static_cast<std::size_t>(cfg.handoff_min_bad)) ||
         sn >= cfg.n_max;
}

inline bool handoff_ready(const History& history, const AnnealConfig& cfg) {
  return handoff_ready(history.size(), history.n_feasible(), history.n_bad(), cfg);
}

// ---------------------------------------------------------------------------
// Phase-1 loop

using TrialObserver = std::function<void(const TrialResult&)>;

struct TbaResult {
  History history;
  AnnealerState state;
  std::optional<std::int64_t> handoff_index;
  bool aborted = false;
  std::string abort_reason;
};

// Runs the feasible-first annealer for up to `budget` trials. With
// `stop_at_handoff`, stops after the first trial at which handoff_ready
// holds. `observer` sees every trial once its annotations are final.
inline TbaResult run_tba(const SearchSpace& space, Evaluator& evaluator, const AnnealConfig& cfg,
                         std::int64_t budget, RngStreams& rngs, bool stop_at_handoff,
                         const TrialObserver& observer = {}) {
  cfg.check();
  if (budget < cfg.n_init + 1) throw SpecError("run_tba needs B >= n_init + 1");
  const Scenario& scenario = evaluator.scenario();

  TbaResult out;
  History& h = out.history;
  AnnealerState& st = out.state;
  st.temperature.t = cfg.t0;
  st.tracker = SubspaceTracker(space, cfg.blacklist_threshold, cfg.blacklist_cooldown);
  st.sigma_v = sigma_violation(scenario.constraints);
  std::optional<double> f_min, f_max;

  auto record = [&](TrialResult& t) {
    if (cfg.blacklisting_enabled) {
      auto ev = st.tracker.update(t.config, t.feasible);
      t.events.insert(t.events.end(), ev.begin(), ev.end());
    }
    if (t.feasible) {
      f_min = std::min(f_min.value_or(*t.objective), *t.objective);
      f_max = std::max(f_max.value_or(*t.objective), *t.objective);
      st.sigma_f = sigma_objective(*f_min, *f_max);
      if (!st.best_feasible || *t.objective > st.best_feasible->second)
        st.best_feasible = std::pair{t.config, *t.objective};
    }
  };
  auto emit = [&] {
    if (observer) observer(h.back());
  };

  try {
    for (int i = 0; i < cfg.n_init; ++i) {
      auto t = evaluator.run_trial(sample_uniform(space, rngs.sampling), Phase::init);
      record(t);
      h.append(std::move(t));
      ++st.trials_since_restart;
      emit();
    }

    // Start from the best feasible trial, else the least-violating
    // evaluable one.
    if (st.best_feasible) {
      st.current = st.best_feasible->first;
      st.current_violation = 0.0;
      st.current_objective = st.best_feasible->second;
      st.stage = Stage::optimization;
    } else {
      for (const auto& t : h.trials())
        if (t.status == TrialStatus::ok && t.violation < st.current_violation) {
          st.current = t.config;
          st.current_violation = t.violation;
          st.current_objective = t.objective;
        }
    }

    for (std::int64_t n = cfg.n_init + 1; n <= budget; ++n) {
      const double p_s = structural_prob(n, cfg.n_init, budget, cfg);
      Proposal prop;
      if (st.current) {
        prop = propose_neighbor(*st.current, space, p_s,
                                cfg.blacklisting_enabled ? &st.tracker : nullptr,
                                st.temperature.t, cfg, rngs.proposal);
      } else {
        prop.config = sample_uniform(space, rngs.sampling);
      }
      auto t = evaluator.run_trial(prop.config, Phase::sa);

      const Stage stage_before = st.stage;
      bool accepted = false, improved = false, accepted_worse = false;
      std::string reason;
      if (t.status != TrialStatus::ok) {
        reason = to_string(t.status);
      } else if (!st.current) {
        accepted = improved = true;
        reason = "first evaluable state";
      } else if (st.stage == Stage::feasibility) {
        improved = t.violation < st.current_violation;
        accepted = accept_feasibility(st.current_violation, t.violation, st.temperature.t,
                                      st.sigma_v, rngs.acceptance);
        reason = "violation";
      } else {
        improved = t.feasible && *t.objective > *st.current_objective;
        accepted = accept_optimization(*st.current_objective, *t.objective, t.feasible,
                                       st.temperature.t, st.sigma_f, rngs.acceptance);
        accepted_worse = accepted && *t.objective < *st.current_objective;
        reason = t.feasible ? "objective" : "infeasible";
      }
      t.events.push_back({{"kind", accepted ? "accept" : "reject"},
                          {"reason", reason},
                          {"move", prop.kind == MoveKind::structural  ? "structural"
                                   : prop.kind == MoveKind::numerical ? "numerical"
                                                                      : "random"},
                          {"variable", prop.variable},
                          {"temperature", st.temperature.t},
                          {"p_s", p_s}});
      if (accepted) {
        st.current = t.config;
        st.current_violation = t.violation;
        st.current_objective = t.objective;
        if (t.feasible && st.stage == Stage::feasibility) {
          st.stage = Stage::optimization;
          t.events.push_back({{"kind", "stage"}, {"stage", "optimization"}});
        }
      }

      const double alpha = stage_before == Stage::feasibility ? cfg.alpha_feasibility
                                                              : cfg.alpha_optimization;
      const double t_before = st.temperature.t;
      st.temperature = update_temperature(st.temperature, improved, alpha, cfg);
      if (!improved && st.temperature.consecutive_non_improving == 0)
        t.events.push_back({{"kind", "reheat"}, {"from", t_before}, {"to", st.temperature.t}});

      record(t);
      h.append(std::move(t));
      ++st.trials_since_restart;

      if (auto r = restart_and_snapback(st, n, budget, h, accepted_worse, cfg, rngs.acceptance)) {
        st.current = r->config;
        st.current_violation = 0.0;
        st.current_objective = r->objective;
        h.back().events.push_back(
            {{"kind", r->kind == Replacement::Kind::snap_back ? "snap_back" : "restart"},
             {"objective", r->objective}});
      }

      if (stop_at_handoff && handoff_ready(h, cfg)) {
        out.handoff_index = n;
        h.back().events.push_back({{"kind", "handoff"},
                                   {"n_feasible", h.n_feasible()},
                                   {"n_bad", h.n_bad()}});
        emit();
        break;
      }
      emit();
    }
  } catch (const TransportError& e) {
    out.aborted = true;
    out.abort_reason = e.what();
  }
  return out;
}

}  // namespace tbaopt
