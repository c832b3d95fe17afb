#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/optimizers.hpp"
#include "tbaopt/search_space.hpp"

namespace tbaopt {

inline constexpr double kNoFeasibleRegret = std::numeric_limits<double>::infinity();

// r(n) for n = 1..|history|: f_star minus the best feasible objective so
// far, floored at zero; +inf until the first feasible trial.
inline std::vector<double> simple_regret(const History& history, double f_star) {
  std::vector<double> out;
  out.reserve(history.size());
  std::optional<double> best;
  for (const auto& t : history.trials()) {
    if (t.feasible) best = std::max(best.value_or(*t.objective), *t.objective);
    out.push_back(best ? std::max(0.0, f_star - *best) : kNoFeasibleRegret);
  }
  return out;
}

inline std::size_t bad_count(const History& history, std::size_t n) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) bad += history[i].bad();
  return bad;
}

inline double wasted_fraction(const History& history, std::size_t n) {
  if (n < 1 || n > history.size())
    throw SpecError("wasted_fraction needs 1 <= n <= " + std::to_string(history.size()));
  return static_cast<double>(bad_count(history, n)) / static_cast<double>(n);
}

inline std::vector<double> wasted_curve(const History& history) {
  std::vector<double> out;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    bad += history[i].bad();
    out.push_back(static_cast<double>(bad) / static_cast<double>(i + 1));
  }
  return out;
}

inline std::optional<std::int64_t> first_feasible_index(const History& history) {
  for (const auto& t : history.trials())
    if (t.feasible) return t.trial_index;
  return std::nullopt;
}

inline const std::string kFamilyVariable = "model_name";

inline bool discovery(const History& history, const SearchSpace& space, const Value& family) {
  if (!space.find(kFamilyVariable))
    throw SpecError("space '" + space.name() + "' has no " + kFamilyVariable + " variable");
  for (const auto& t : history.trials()) {
    if (!t.feasible) continue;
    auto it = t.config.find(kFamilyVariable);
    if (it != t.config.end() && it->second == family) return true;
  }
  return false;
}

// Chance that n0 uniform trials over K equally likely families, each
// crashing with probability rho, feasibly hit one particular family.
inline double discovery_probability(std::int64_t k, double rho, std::int64_t n0) {
  if (k < 1) throw SpecError("discovery_probability needs K >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw SpecError("discovery_probability needs 0 <= rho <= 1");
  if (n0 < 0) throw SpecError("discovery_probability needs n0 >= 0");
  const double miss = 1.0 - (1.0 - rho) / static_cast<double>(k);
  return 1.0 - std::pow(miss, static_cast<double>(n0));
}

inline double wall_clock(const History& history) {
  double s = 0.0;
  for (const auto& t : history.trials()) s += t.cost_seconds;
  return s;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct RunMetrics {
  std::optional<double> best_objective;
  std::optional<Configuration> best_config;
  std::vector<double> regret;  // empty when no reference optimum was given
  std::vector<double> waste;
  double wasted = 0.0;         // W(|history|)
  std::optional<std::int64_t> first_feasible;
  double wall_clock_seconds = 0.0;
  std::map<std::string, bool> discovered;  // family -> flag

  bool operator==(const RunMetrics&) const = default;
};

inline RunMetrics compute_metrics(const RunRecord& rec, const SearchSpace& space,
                                  std::optional<double> f_star = std::nullopt) {
  RunMetrics m;
  if (rec.best_feasible) {
    m.best_objective = rec.best_feasible->second;
    m.best_config = rec.best_feasible->first;
  }
  if (f_star) m.regret = simple_regret(rec.history, *f_star);
  m.waste = wasted_curve(rec.history);
  m.wasted = m.waste.empty() ? 0.0 : m.waste.back();
  m.first_feasible = first_feasible_index(rec.history);
  m.wall_clock_seconds = wall_clock(rec.history);
  if (const auto* fam = space.find(kFamilyVariable))
    for (const auto& v : fam->values) m.discovered[to_string(v)] = discovery(rec.history, space, v);
  return m;
}

}  // namespace tbaopt
