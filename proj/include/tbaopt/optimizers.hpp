#pragma once

// The four strategies compared by the harness: uniform random search,
// cold-start constrained TPE, pure feasible-first annealing, and the
// annealing-then-TPE hybrid. All of them share one Evaluator per run, so
// timeouts and trial numbering are identical across strategies.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "tbaopt/annealer.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/tpe.hpp"

namespace tbaopt {

inline const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names{"random", "tpe", "tba", "hybrid"};
  return names;
}

struct RunRecord {
  std::string optimizer;
  std::string benchmark;
  Scenario scenario;
  std::string hardware;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  History history;
  std::optional<std::pair<Configuration, double>> best_feasible;
  std::optional<std::int64_t> handoff_index;
  std::string constants_hash;
  bool complete = true;
  std::string abort_reason;
};

namespace detail {

inline void finish(RunRecord& r) {
  if (auto b = r.history.best_feasible())
    r.best_feasible = std::pair{r.history[*b].config, *r.history[*b].objective};
  r.complete = r.abort_reason.empty() && static_cast<std::int64_t>(r.history.size()) == r.budget;
}

inline Json suggestion_event(const Suggestion& s) {
  return {{"kind", "tpe_suggest"}, {"pool", s.pool_size}, {"log_score", s.log_score}};
}

inline bool tpe_startup(const Study& study, const TpeConfig& cfg) {
  return !study.warm_started() && study.size() < static_cast<std::size_t>(cfg.n_startup);
}

// Phase-2 style loop: suggestions from `study` until the budget is spent.
inline void tpe_loop(RunRecord& rec, Study& study, Evaluator& ev, const TpeConfig& cfg,
                     RngStreams& rngs, const TrialObserver& observer) {
  while (static_cast<std::int64_t>(rec.history.size()) < rec.budget) {
    Suggestion s;
    if (tpe_startup(study, cfg))
      s.config = sample_uniform(study.space(), rngs.sampling);
    else
      s = suggest(study, cfg, rngs.tpe);
    auto t = ev.run_trial(s.config, Phase::tpe);
    if (s.model_guided) t.events.push_back(suggestion_event(s));
    study.add(t);
    rec.history.append(std::move(t));
    if (observer) observer(rec.history.back());
  }
}

}  // namespace detail

inline RunRecord run_random(const SearchSpace& space, Evaluator& ev, std::int64_t budget,
                            RngStreams& rngs, const TrialObserver& observer = {}) {
  if (budget < 1) throw SpecError("budget must be >= 1");
  RunRecord rec;
  rec.optimizer = "random";
  rec.budget = budget;
  try {
    for (std::int64_t n = 1; n <= budget; ++n) {
      rec.history.append(ev.run_trial(sample_uniform(space, rngs.sampling), Phase::init));
      if (observer) observer(rec.history.back());
    }
  } catch (const TransportError& e) {
    rec.abort_reason = e.what();
  }
  detail::finish(rec);
  return rec;
}

inline RunRecord run_tpe(const SearchSpace& space, Evaluator& ev, std::int64_t budget,
                         RngStreams& rngs, const TpeConfig& cfg = {},
                         const TrialObserver& observer = {}) {
  if (budget < 1) throw SpecError("budget must be >= 1");
  cfg.check();
  RunRecord rec;
  rec.optimizer = "tpe";
  rec.budget = budget;
  Study study(space);
  try {
    detail::tpe_loop(rec, study, ev, cfg, rngs, observer);
  } catch (const TransportError& e) {
    rec.abort_reason = e.what();
  }
  detail::finish(rec);
  return rec;
}

inline RunRecord run_tba_pure(const SearchSpace& space, Evaluator& ev, std::int64_t budget,
                              RngStreams& rngs, const AnnealConfig& cfg = {},
                              const TrialObserver& observer = {}) {
  auto r = run_tba(space, ev, cfg, budget, rngs, false, observer);
  RunRecord rec;
  rec.optimizer = "tba";
  rec.budget = budget;
  rec.history = std::move(r.history);
  rec.abort_reason = r.abort_reason;
  detail::finish(rec);
  return rec;
}

inline RunRecord run_hybrid(const SearchSpace& space, Evaluator& ev, std::int64_t budget,
                            RngStreams& rngs, const AnnealConfig& anneal_cfg = {},
                            const TpeConfig& tpe_cfg = {}, const TrialObserver& observer = {}) {
  tpe_cfg.check();
  auto phase1 = run_tba(space, ev, anneal_cfg, budget, rngs, true, observer);
  RunRecord rec;
  rec.optimizer = "hybrid";
  rec.budget = budget;
  rec.history = std::move(phase1.history);
  rec.handoff_index = phase1.handoff_index;
  rec.abort_reason = phase1.abort_reason;
  if (!phase1.aborted && phase1.handoff_index) {
    // Phase 2 sees the full space: the blacklist stays behind in Phase 1.
    Study study = warm_start(Study(space), rec.history);
    try {
      detail::tpe_loop(rec, study, ev, tpe_cfg, rngs, observer);
    } catch (const TransportError& e) {
      rec.abort_reason = e.what();
    }
  }
  detail::finish(rec);
  return rec;
}

}  // namespace tbaopt
