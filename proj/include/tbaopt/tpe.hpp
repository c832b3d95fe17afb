#pragma once

// Constraint-aware Tree-structured Parzen Estimator over conditional spaces.
// Candidates are drawn from the good-set density l(x) and ranked by
// l(x)/g(x) * P(feasible | x), each density factorized over active variables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/search_space.hpp"

namespace tbaopt {

struct TpeConfig {
  double gamma_quantile = 0.25;
  int n_candidates = 24;
  int n_startup = 10;
  // "nearest_neighbor": width max(range/20, distance to nearest neighbour);
  // "fixed": width range/20.
  std::string bandwidth_rule = "nearest_neighbor";
  double categorical_smoothing = 1.0;
  double prior_weight = 1.0;

  void check() const {
    if (!(gamma_quantile > 0 && gamma_quantile < 1)) throw SpecError("tpe: gamma_quantile must be in (0,1)");
    if (n_candidates < 1) throw SpecError("tpe: n_candidates must be >= 1");
    if (n_startup < 0) throw SpecError("tpe: n_startup must be >= 0");
    if (bandwidth_rule != "nearest_neighbor" && bandwidth_rule != "fixed")
      throw SpecError("tpe: unknown bandwidth_rule '" + bandwidth_rule + "'");
    if (!(categorical_smoothing > 0)) throw SpecError("tpe: categorical_smoothing must be > 0");
    if (!(prior_weight > 0)) throw SpecError("tpe: prior_weight must be > 0");
  }
};

inline Json to_json(const TpeConfig& c) {
  return {{"gamma_quantile", c.gamma_quantile},   {"n_candidates", c.n_candidates},
          {"n_startup", c.n_startup},             {"bandwidth_rule", c.bandwidth_rule},
          {"categorical_smoothing", c.categorical_smoothing}, {"prior_weight", c.prior_weight}};
}

inline TpeConfig tpe_config_from_json(const Json& j, TpeConfig c = {}) {
  const Json defaults = to_json(c);
  for (const auto& [k, v] : j.items())
    if (!defaults.contains(k)) throw SpecError("unknown tpe setting '" + k + "'");
  if (j.contains("gamma_quantile")) c.gamma_quantile = j["gamma_quantile"].get<double>();
  if (j.contains("n_candidates")) c.n_candidates = j["n_candidates"].get<int>();
  if (j.contains("n_startup")) c.n_startup = j["n_startup"].get<int>();
  if (j.contains("bandwidth_rule")) c.bandwidth_rule = j["bandwidth_rule"].get<std::string>();
  if (j.contains("categorical_smoothing")) c.categorical_smoothing = j["categorical_smoothing"].get<double>();
  if (j.contains("prior_weight")) c.prior_weight = j["prior_weight"].get<double>();
  c.check();
  return c;
}

// ---------------------------------------------------------------------------
// Good / bad split

struct GoodBadSplit {
  std::vector<std::size_t> good;  // positions into the trial list
  std::vector<std::size_t> bad;
};

inline GoodBadSplit split_good_bad(const std::vector<TrialResult>& trials, const TpeConfig& cfg) {
  std::vector<std::size_t> feasible;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (trials[i].feasible) feasible.push_back(i);
  std::stable_sort(feasible.begin(), feasible.end(), [&](std::size_t a, std::size_t b) {
    if (*trials[a].objective != *trials[b].objective)
      return *trials[a].objective > *trials[b].objective;
    return trials[a].trial_index < trials[b].trial_index;
  });
  const auto n_good = static_cast<std::size_t>(
      std::ceil(cfg.gamma_quantile * static_cast<double>(feasible.size())));
  GoodBadSplit s;
  s.good.assign(feasible.begin(), feasible.begin() + static_cast<std::ptrdiff_t>(n_good));
  std::vector<bool> is_good(trials.size(), false);
  for (auto i : s.good) is_good[i] = true;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (!is_good[i]) s.bad.push_back(i);
  std::sort(s.good.begin(), s.good.end());
  return s;
}

inline GoodBadSplit split_good_bad(const History& history, const TpeConfig& cfg) {
  return split_good_bad(history.trials(), cfg);
}

// ---------------------------------------------------------------------------
// Per-variable Parzen densities

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double truncated_normal_pdf(double x, double mu, double sigma, double lo, double hi) {
  const double mass = std_normal_cdf((hi - mu) / sigma) - std_normal_cdf((lo - mu) / sigma);
  const double z = (x - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  return mass > 0 ? pdf / mass : 0.0;
}

// Kernel widths for points on a line with extent `range`.
inline std::vector<double> bandwidths(const std::vector<double>& points, double range,
                                      const std::string& rule) {
  std::vector<double> out(points.size(), range);
  if (points.size() < 2) return out;
  const double floor_width = range / 20.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (rule == "fixed") {
      out[i] = floor_width;
      continue;
    }
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < points.size(); ++k)
      if (k != i) nn = std::min(nn, std::abs(points[i] - points[k]));
    out[i] = std::max(floor_width, nn);
  }
  return out;
}

}  // namespace detail

// Density of one variable estimated from the observations where it is
// active. Numeric kinds mix per-observation kernels with a uniform prior
// component; categorical uses smoothed frequencies.
class VariableDensity {
 public:
  VariableDensity(const VariableSpec& var, const std::vector<Value>& observations,
                  const TpeConfig& cfg)
      : var_(var), prior_weight_(cfg.prior_weight) {
    if (var.kind == VariableKind::categorical) {
      const std::size_t k = var.domain_size();
      probs_.assign(k, cfg.categorical_smoothing);
      for (const auto& o : observations) probs_[*var.index_of(o)] += 1.0;
      const double total = cfg.categorical_smoothing * static_cast<double>(k) +
                           static_cast<double>(observations.size());
      for (auto& p : probs_) p /= total;
      return;
    }
    for (const auto& o : observations)
      mus_.push_back(var.kind == VariableKind::continuous ? std::get<double>(o)
                                                          : static_cast<double>(*var.index_of(o)));
    sigmas_ = detail::bandwidths(mus_, extent(), cfg.bandwidth_rule);
    if (var.kind != VariableKind::continuous) {
      // Discrete kernels: precompute the normalized mass over the index grid.
      const std::size_t n = var.domain_size();
      probs_.assign(n, prior_weight_ / static_cast<double>(n));
      for (std::size_t i = 0; i < mus_.size(); ++i) {
        std::vector<double> w(n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double d = (static_cast<double>(j) - mus_[i]) / std::max(sigmas_[i], 1e-12);
          w[j] = std::exp(-0.5 * d * d);
          z += w[j];
        }
        for (std::size_t j = 0; j < n; ++j) probs_[j] += w[j] / z;
      }
      const double total = prior_weight_ + static_cast<double>(mus_.size());
      for (auto& p : probs_) p /= total;
    }
  }

  double pdf(const Value& x) const {
    if (var_.kind != VariableKind::continuous) return probs_[*var_.index_of(x)];
    const double range = extent();
    if (range <= 0) return 1.0;
    const double v = std::get<double>(x);
    double acc = prior_weight_ / range;
    for (std::size_t i = 0; i < mus_.size(); ++i)
      acc += detail::truncated_normal_pdf(v, mus_[i], sigmas_[i], var_.lo, var_.hi);
    return acc / (prior_weight_ + static_cast<double>(mus_.size()));
  }

  Value sample(Rng& rng) const {
    if (var_.kind != VariableKind::continuous) {
      double u = rng.uniform();
      for (std::size_t j = 0; j < probs_.size(); ++j) {
        if (u < probs_[j]) return var_.value_at(j);
        u -= probs_[j];
      }
      return var_.value_at(probs_.size() - 1);
    }
    const double total = prior_weight_ + static_cast<double>(mus_.size());
    const double pick = rng.uniform() * total;
    if (pick < prior_weight_ || mus_.empty()) return rng.uniform(var_.lo, var_.hi);
    const auto i = std::min(mus_.size() - 1, static_cast<std::size_t>(pick - prior_weight_));
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double y = rng.normal(mus_[i], sigmas_[i]);
      if (y >= var_.lo && y <= var_.hi) return y;
    }
    return std::clamp(mus_[i], var_.lo, var_.hi);
  }

 private:
  double extent() const {
    if (var_.kind == VariableKind::continuous) return var_.hi - var_.lo;
    return static_cast<double>(var_.domain_size() - 1);
  }

  VariableSpec var_;
  double prior_weight_;
  std::vector<double> mus_, sigmas_;
  std::vector<double> probs_;
};

// Product of per-variable densities built from a set of configurations.
class ParzenEstimator {
 public:
  ParzenEstimator(const SearchSpace& space, const std::vector<const Configuration*>& configs,
                  const TpeConfig& cfg) {
    for (const auto& v : space.variables()) {
      std::vector<Value> obs;
      for (const auto* c : configs) {
        auto it = c->find(v.name);
        if (it != c->end()) obs.push_back(it->second);
      }
      densities_.emplace_back(v, obs, cfg);
      names_.push_back(v.name);
    }
    vars_ = space.variables();
  }

  // Sum of log densities over the variables assigned in `config`.
  double log_pdf(const Configuration& config) const {
    double s = 0.0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto it = config.find(names_[i]);
      if (it != config.end()) s += std::log(densities_[i].pdf(it->second));
    }
    return s;
  }

  // Draws structural variables first, then conditionals given activeness.
  Configuration sample(Rng& rng) const {
    Configuration out;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (is_active(vars_[i], out)) out.emplace(vars_[i].name, densities_[i].sample(rng));
    return out;
  }

 private:
  std::vector<VariableSpec> vars_;
  std::vector<std::string> names_;
  std::vector<VariableDensity> densities_;
};

// ---------------------------------------------------------------------------
// Feasibility model and score

namespace detail {

inline std::vector<const Configuration*> configs_of(const std::vector<TrialResult>& trials,
                                                    const std::vector<std::size_t>& idx) {
  std::vector<const Configuration*> out;
  for (auto i : idx) out.push_back(&trials[i].config);
  return out;
}

}  // namespace detail

// Two-class Parzen posterior P(feasible | x) with class priors proportional
// to class sizes.
class FeasibilityModel {
 public:
  FeasibilityModel(const SearchSpace& space, const std::vector<TrialResult>& trials,
                   const TpeConfig& cfg) {
    std::vector<std::size_t> f, b;
    for (std::size_t i = 0; i < trials.size(); ++i) (trials[i].feasible ? f : b).push_back(i);
    n_feasible_ = f.size();
    n_bad_ = b.size();
    feasible_.emplace(space, detail::configs_of(trials, f), cfg);
    bad_.emplace(space, detail::configs_of(trials, b), cfg);
  }

  double probability(const Configuration& x) const { return std::exp(log_probability(x)); }

  double log_probability(const Configuration& x) const {
    if (n_feasible_ + n_bad_ == 0) return std::log(0.5);
    if (n_bad_ == 0) return 0.0;
    // No feasible observation yet: one pseudo-observation spread uniformly,
    // so the estimate stays positive and falls where failures cluster.
    const double nf = n_feasible_ == 0 ? 1.0 : static_cast<double>(n_feasible_);
    const double lf = std::log(nf) + feasible_->log_pdf(x);
    const double lb = std::log(static_cast<double>(n_bad_)) + bad_->log_pdf(x);
    const double m = std::max(lf, lb);
    return lf - (m + std::log(std::exp(lf - m) + std::exp(lb - m)));
  }

 private:
  std::size_t n_feasible_ = 0, n_bad_ = 0;
  std::optional<ParzenEstimator> feasible_, bad_;
};

inline double feasibility_prob(const Configuration& config, const SearchSpace& space,
                               const std::vector<TrialResult>& trials, const TpeConfig& cfg = {}) {
  return FeasibilityModel(space, trials, cfg).probability(config);
}

inline double feasibility_prob(const Configuration& config, const SearchSpace& space,
                               const History& history, const TpeConfig& cfg = {}) {
  return feasibility_prob(config, space, history.trials(), cfg);
}

// Everything needed to score candidates against one snapshot of a study.
class TpeModel {
 public:
  TpeModel(const SearchSpace& space, const std::vector<TrialResult>& trials, const TpeConfig& cfg)
      : split_(split_good_bad(trials, cfg)),
        good_(space, detail::configs_of(trials, split_.good), cfg),
        bad_(space, detail::configs_of(trials, split_.bad), cfg),
        feasibility_(space, trials, cfg) {}

  bool has_good() const { return !split_.good.empty(); }
  const GoodBadSplit& split() const { return split_; }

  // log(l/g) + log P(feasible); with an empty good set only the
  // feasibility term remains.
  double log_score(const Configuration& x) const {
    const double lf = feasibility_.log_probability(x);
    if (!has_good()) return lf;
    return good_.log_pdf(x) - bad_.log_pdf(x) + lf;
  }

  double score(const Configuration& x) const { return std::exp(log_score(x)); }

  Configuration draw(const SearchSpace& space, Rng& rng) const {
    return has_good() ? good_.sample(rng) : sample_uniform(space, rng);
  }

 private:
  GoodBadSplit split_;
  ParzenEstimator good_, bad_;
  FeasibilityModel feasibility_;
};

inline double score_candidate(const Configuration& config, const SearchSpace& space,
                              const std::vector<TrialResult>& trials, const TpeConfig& cfg = {}) {
  return TpeModel(space, trials, cfg).score(config);
}

// ---------------------------------------------------------------------------
// Study

class Study {
 public:
  explicit Study(SearchSpace space) : space_(std::move(space)) {}

  const SearchSpace& space() const { return space_; }
  const std::vector<TrialResult>& trials() const { return trials_; }
  // Objective as seen by the sampler; crashes and early stops receive a
  // value strictly below every feasible objective observed so far.
  const std::vector<double>& study_objectives() const { return objectives_; }
  std::size_t size() const { return trials_.size(); }
  std::size_t injected() const { return injected_; }
  bool warm_started() const { return injected_ > 0; }

  void add(const TrialResult& t) {
    if (auto err = validate(space_, t.config)) throw SpecError("study: " + *err);
    objectives_.push_back(t.objective && t.status == TrialStatus::ok ? *t.objective : crash_objective());
    trials_.push_back(t);
  }

  void inject(const History& history) {
    for (const auto& t : history.trials()) add(t);
    injected_ += history.size();
  }

 private:
  double crash_objective() const {
    std::optional<double> lo, hi;
    for (const auto& t : trials_)
      if (t.feasible) {
        lo = std::min(lo.value_or(*t.objective), *t.objective);
        hi = std::max(hi.value_or(*t.objective), *t.objective);
      }
    if (!lo) return -1.0;
    const double range = *hi - *lo;
    return *lo - (range > 0 ? range : 1.0);
  }

  SearchSpace space_;
  std::vector<TrialResult> trials_;
  std::vector<double> objectives_;
  std::size_t injected_ = 0;
};

inline Study warm_start(Study study, const History& history) {
  study.inject(history);
  return study;
}

struct Suggestion {
  Configuration config;
  bool model_guided = false;
  int pool_size = 0;
  double log_score = 0.0;
};

// Uniform sample during cold-start startup; otherwise the best of
// n_candidates draws from l(x) under the constrained score.
inline Suggestion suggest(const Study& study, const TpeConfig& cfg, Rng& rng) {
  const SearchSpace& space = study.space();
  if (!study.warm_started() && study.size() < static_cast<std::size_t>(cfg.n_startup))
    return {sample_uniform(space, rng), false, 0, 0.0};
  const TpeModel model(space, study.trials(), cfg);
  Suggestion best;
  best.model_guided = true;
  best.pool_size = cfg.n_candidates;
  best.log_score = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (int i = 0; i < cfg.n_candidates; ++i) {
    Configuration c = model.draw(space, rng);
    const double s = model.log_score(c);
    if (!have || s > best.log_score) {
      best.config = std::move(c);
      best.log_score = s;
      have = true;
    }
  }
  return best;
}

}  // namespace tbaopt
