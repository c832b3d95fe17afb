#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/hash.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/search_space.hpp"
#include "tbaopt/value.hpp"

#ifndef TBAOPT_DATA_DIR
#define TBAOPT_DATA_DIR "data"
#endif

namespace tbaopt {

// ---------------------------------------------------------------------------
// Scenario / outcome types

enum class ObjectiveKind { maximize_accuracy, maximize_throughput, maximize_negated_function };

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::maximize_accuracy: return "maximize-accuracy";
    case ObjectiveKind::maximize_throughput: return "maximize-throughput";
    case ObjectiveKind::maximize_negated_function: return "maximize-negated-function";
  }
  return "?";
}

inline ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "maximize-accuracy") return ObjectiveKind::maximize_accuracy;
  if (s == "maximize-throughput") return ObjectiveKind::maximize_throughput;
  if (s == "maximize-negated-function") return ObjectiveKind::maximize_negated_function;
  throw SpecError("unknown objective kind '" + s + "'");
}

// g_j(x) <= threshold
struct ConstraintSpec {
  std::string name;
  double threshold = 0.0;
  std::string unit;
};

struct Scenario {
  std::string name;
  std::vector<ConstraintSpec> constraints;
  ObjectiveKind objective_kind = ObjectiveKind::maximize_negated_function;
  std::int64_t budget = 25;

  void check() const {
    if (budget < 1) throw SpecError("scenario " + name + ": budget must be >= 1");
    if (constraints.empty()) throw SpecError("scenario " + name + ": no constraints");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      if (!std::isfinite(constraints[i].threshold))
        throw SpecError("scenario " + name + ": non-finite threshold");
      for (std::size_t k = 0; k < i; ++k)
        if (constraints[k].name == constraints[i].name)
          throw SpecError("scenario " + name + ": duplicate constraint " +
                          constraints[i].name);
    }
  }

  const ConstraintSpec* find(const std::string& n) const {
    for (const auto& c : constraints)
      if (c.name == n) return &c;
    return nullptr;
  }
};

inline Json to_json(const Scenario& s) {
  Json cs = Json::array();
  for (const auto& c : s.constraints)
    cs.push_back({{"name", c.name}, {"threshold", c.threshold}, {"unit", c.unit}});
  return {{"name", s.name},
          {"constraints", cs},
          {"objective_kind", to_string(s.objective_kind)},
          {"budget", s.budget}};
}

inline Scenario scenario_from_json(const Json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string("custom"));
    for (const auto& c : j.at("constraints"))
      s.constraints.push_back({c.at("name").get<std::string>(),
                               c.at("threshold").get<double>(),
                               c.value("unit", std::string())});
    s.objective_kind = objective_kind_from_string(j.at("objective_kind").get<std::string>());
    s.budget = j.value("budget", std::int64_t{25});
    s.check();
    return s;
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed scenario: ") + e.what());
  }
}

struct HardwareProfile {
  std::string name = "mid";
  double speed_multiplier = 1.0;
  double oom_cap_mb = 1024.0;  // memory above this OOMs the large-batch rule
};

enum class OutcomeStatus { ok, crash };

struct RawOutcome {
  OutcomeStatus status = OutcomeStatus::ok;
  std::optional<double> objective;
  std::map<std::string, double> constraint_values;
  double true_cost_seconds = 0.0;
  std::optional<std::string> crash_reason;

  bool operator==(const RawOutcome&) const = default;

  static RawOutcome crash(double cost, std::string reason) {
    RawOutcome o;
    o.status = OutcomeStatus::crash;
    o.true_cost_seconds = cost;
    o.crash_reason = std::move(reason);
    return o;
  }
};

// ---------------------------------------------------------------------------
// Benchmark constants (versioned JSON document, hashed into every log)

// A crash region: every present predicate must hold.
struct CrashZone {
  std::vector<std::string> modes;                         // empty = any mode
  std::map<std::string, std::pair<double, double>> box;   // var -> [lo, hi]
  std::optional<std::pair<double, double>> disk_center;   // (x1, x2)
  double disk_radius = 0.0;
  std::optional<double> any_abs_gt;                       // any active x_i
  std::string reason;

  bool contains(const std::string& mode, const std::map<std::string, double>& x) const {
    if (!modes.empty() && std::find(modes.begin(), modes.end(), mode) == modes.end())
      return false;
    for (const auto& [var, range] : box) {
      auto it = x.find(var);
      if (it == x.end() || it->second < range.first || it->second > range.second)
        return false;
    }
    if (disk_center) {
      const double dx = x.at("x1") - disk_center->first;
      const double dy = x.at("x2") - disk_center->second;
      if (dx * dx + dy * dy > disk_radius * disk_radius) return false;
    }
    if (any_abs_gt) {
      bool hit = false;
      for (const auto& [var, val] : x)
        if (var.size() > 1 && var[0] == 'x' && std::abs(val) > *any_abs_gt) hit = true;
      if (!hit) return false;
    }
    return true;
  }
};

inline CrashZone crash_zone_from_json(const Json& j) {
  CrashZone z;
  z.modes = j.value("modes", std::vector<std::string>{});
  if (j.contains("box"))
    for (const auto& [var, r] : j.at("box").items())
      z.box[var] = {r.at(0).get<double>(), r.at(1).get<double>()};
  if (j.contains("disk")) {
    const auto& d = j.at("disk");
    z.disk_center = std::pair{d.at("center").at(0).get<double>(),
                              d.at("center").at(1).get<double>()};
    z.disk_radius = d.at("radius").get<double>();
  }
  if (j.contains("any_abs_gt")) z.any_abs_gt = j.at("any_abs_gt").get<double>();
  z.reason = j.value("reason", std::string("crash zone"));
  return z;
}

struct BraninConstants {
  std::map<std::string, double> mode_offset;
  std::vector<CrashZone> crash_zones;
  double latency_per_resolution = 0.0;
  double latency_per_x2 = 0.0;
  double cost_base = 0.0;
  double cost_per_resolution_sq = 0.0;
};

struct RosenbrockConstants {
  std::vector<CrashZone> crash_zones;
  double latency_per_dim = 0.0;
  double latency_per_x1 = 0.0;  // times (x1 + 2)
  double cost_base = 0.0;
  double cost_per_dim_cubed = 0.0;
};

struct DeployConstants {
  std::map<std::string, double> accuracy;
  double int8_accuracy_penalty = 0.0;
  std::map<std::string, std::map<std::string, double>> base_latency_ms;  // model -> backend
  std::map<std::string, double> quant_factor;
  double batch_latency_slope = 0.0;  // bf(b) = 1 + slope (b - 1)
  std::map<std::string, double> base_memory_mb;
  double batch_memory_slope = 0.0;
  std::map<std::string, double> quant_memory_factor;
  double thread_latency_span = 0.0;  // max relative perturbation from num_threads
  double p99_over_p95 = 1.0;
  double mean_over_p95 = 1.0;
  // backend -> model -> quantizations that crash
  std::map<std::string, std::map<std::string, std::vector<std::string>>> incompatible;
  std::string oom_model;
  std::int64_t oom_min_batch = 0;
  double load_seconds_per_mb = 0.0;
  double load_seconds_base = 0.0;
  std::map<std::string, double> backend_setup_seconds;  // compile / export
  double timed_iterations = 130.0;
  double accuracy_images = 500.0;
};

struct BenchmarkConstants {
  std::string version;
  std::string hash;  // sha256 of the document bytes
  Json document;
  std::map<std::string, HardwareProfile> hardware;
  BraninConstants branin;
  RosenbrockConstants rosenbrock;
  DeployConstants deploy;
  // benchmark -> scenario name -> scenario
  std::map<std::string, std::map<std::string, Scenario>> scenarios;
  // benchmark -> target band for combined invalidity under uniform sampling
  std::map<std::string, std::pair<double, double>> target_invalidity;

  static BenchmarkConstants parse(const std::string& text);
  static BenchmarkConstants load(const std::string& path) { return parse(read_file(path)); }

  const HardwareProfile& profile(const std::string& name) const {
    auto it = hardware.find(name);
    if (it == hardware.end()) throw SpecError("unknown hardware profile '" + name + "'");
    return it->second;
  }

  const Scenario& scenario(const std::string& benchmark, const std::string& name) const {
    auto b = scenarios.find(benchmark);
    if (b == scenarios.end()) throw SpecError("no scenarios for benchmark '" + benchmark + "'");
    auto s = b->second.find(name);
    if (s == b->second.end())
      throw SpecError("unknown scenario '" + name + "' for " + benchmark);
    return s->second;
  }
};

inline std::string default_constants_path() {
  return std::string(TBAOPT_DATA_DIR) + "/benchmark_constants.json";
}

inline BenchmarkConstants BenchmarkConstants::parse(const std::string& text) {
  BenchmarkConstants c;
  c.hash = sha256_hex(text);
  try {
    c.document = Json::parse(text);
    const Json& d = c.document;
    c.version = d.at("version").get<std::string>();
    for (const auto& [name, h] : d.at("hardware_profiles").items()) {
      HardwareProfile p{name, h.at("speed_multiplier").get<double>(),
                        h.at("oom_cap_mb").get<double>()};
      if (!(p.speed_multiplier > 0)) throw SpecError("speed_multiplier must be > 0");
      c.hardware[name] = p;
    }

    const Json& b = d.at("crashy_branin");
    c.branin.mode_offset = b.at("mode_offsets").get<std::map<std::string, double>>();
    for (const auto& z : b.at("crash_zones")) c.branin.crash_zones.push_back(crash_zone_from_json(z));
    c.branin.latency_per_resolution = b.at("latency_per_resolution").get<double>();
    c.branin.latency_per_x2 = b.at("latency_per_x2").get<double>();
    c.branin.cost_base = b.at("cost_base").get<double>();
    c.branin.cost_per_resolution_sq = b.at("cost_per_resolution_sq").get<double>();

    const Json& r = d.at("hier_rosenbrock");
    for (const auto& z : r.at("crash_zones")) c.rosenbrock.crash_zones.push_back(crash_zone_from_json(z));
    c.rosenbrock.latency_per_dim = r.at("latency_per_dim").get<double>();
    c.rosenbrock.latency_per_x1 = r.at("latency_per_x1").get<double>();
    c.rosenbrock.cost_base = r.at("cost_base").get<double>();
    c.rosenbrock.cost_per_dim_cubed = r.at("cost_per_dim_cubed").get<double>();

    const Json& s = d.at("sim_deploy");
    auto& dc = c.deploy;
    dc.accuracy = s.at("accuracy").get<std::map<std::string, double>>();
    dc.int8_accuracy_penalty = s.at("int8_accuracy_penalty").get<double>();
    dc.base_latency_ms =
        s.at("base_latency_ms").get<std::map<std::string, std::map<std::string, double>>>();
    dc.quant_factor = s.at("quant_latency_factor").get<std::map<std::string, double>>();
    dc.batch_latency_slope = s.at("batch_latency_slope").get<double>();
    dc.base_memory_mb = s.at("base_memory_mb").get<std::map<std::string, double>>();
    dc.batch_memory_slope = s.at("batch_memory_slope").get<double>();
    dc.quant_memory_factor = s.at("quant_memory_factor").get<std::map<std::string, double>>();
    dc.thread_latency_span = s.at("thread_latency_span").get<double>();
    dc.p99_over_p95 = s.at("p99_over_p95").get<double>();
    dc.mean_over_p95 = s.at("mean_over_p95").get<double>();
    dc.incompatible = s.at("incompatible")
                          .get<std::map<std::string, std::map<std::string, std::vector<std::string>>>>();
    dc.oom_model = s.at("oom_rule").at("model").get<std::string>();
    dc.oom_min_batch = s.at("oom_rule").at("min_batch").get<std::int64_t>();
    dc.load_seconds_base = s.at("load_seconds_base").get<double>();
    dc.load_seconds_per_mb = s.at("load_seconds_per_mb").get<double>();
    dc.backend_setup_seconds = s.at("backend_setup_seconds").get<std::map<std::string, double>>();
    dc.timed_iterations = s.at("timed_iterations").get<double>();
    dc.accuracy_images = s.at("accuracy_images").get<double>();

    for (const auto& [bench, scs] : d.at("scenarios").items())
      for (const auto& [name, sj] : scs.items()) {
        Json copy = sj;
        copy["name"] = name;
        c.scenarios[bench][name] = scenario_from_json(copy);
      }
    for (const auto& [bench, band] : d.at("target_invalidity").items())
      c.target_invalidity[bench] = {band.at(0).get<double>(), band.at(1).get<double>()};
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed benchmark constants: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Benchmarks

class Benchmark {
 public:
  virtual ~Benchmark() = default;
  virtual const std::string& name() const = 0;
  virtual const SearchSpace& space() const = 0;
  // Deterministic. Throws SpecError on a configuration outside the space.
  virtual RawOutcome evaluate(const Configuration& config, const Scenario& scenario,
                              const HardwareProfile& hw) const = 0;
  // Analytic optimizer candidates the oracle adds on top of its grid.
  virtual std::vector<Configuration> known_candidates() const { return {}; }
};

namespace detail {

inline double pick_objective(ObjectiveKind kind, const std::map<std::string, double>& metrics,
                             const std::string& bench) {
  const char* key = nullptr;
  switch (kind) {
    case ObjectiveKind::maximize_accuracy: key = "accuracy"; break;
    case ObjectiveKind::maximize_throughput: key = "throughput"; break;
    case ObjectiveKind::maximize_negated_function: key = "negated_function"; break;
  }
  auto it = metrics.find(key);
  if (it == metrics.end())
    throw SpecError(bench + " does not support objective " + to_string(kind));
  return it->second;
}

// Selects the scenario's constraint values out of everything the benchmark
// measured.
inline RawOutcome finish_ok(const std::map<std::string, double>& metrics,
                            const Scenario& scenario, double cost, const std::string& bench) {
  RawOutcome o;
  o.status = OutcomeStatus::ok;
  o.objective = pick_objective(scenario.objective_kind, metrics, bench);
  for (const auto& c : scenario.constraints) {
    auto it = metrics.find(c.name);
    if (it == metrics.end())
      throw SpecError(bench + " does not measure constraint '" + c.name + "'");
    o.constraint_values[c.name] = it->second;
  }
  o.true_cost_seconds = cost;
  return o;
}

}  // namespace detail

inline double branin(double x1, double x2) {
  constexpr double a = 1.0;
  const double b = 5.1 / (4.0 * M_PI * M_PI);
  const double c = 5.0 / M_PI;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  const double t = 1.0 / (8.0 * M_PI);
  const double u = x2 - b * x1 * x1 + c * x1 - r;
  return a * u * u + s * (1.0 - t) * std::cos(x1) + s;
}

inline double rosenbrock(const std::vector<double>& x) {
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double p = x[i + 1] - x[i] * x[i];
    const double q = 1.0 - x[i];
    f += 100.0 * p * p + q * q;
  }
  return f;
}

class CrashyBranin final : public Benchmark {
 public:
  explicit CrashyBranin(BraninConstants k) : k_(std::move(k)), space_(crashy_branin_space()) {}

  const std::string& name() const override { return name_; }
  const SearchSpace& space() const override { return space_; }

  RawOutcome evaluate(const Configuration& config, const Scenario& scenario,
                      const HardwareProfile& hw) const override {
    require_valid(space_, config);
    const auto& mode = std::get<std::string>(config.at("mode"));
    const double r = static_cast<double>(std::get<std::int64_t>(config.at("resolution")));
    const double x1 = std::get<double>(config.at("x1"));
    const double x2 = std::get<double>(config.at("x2"));
    const double cost = k_.cost_base + k_.cost_per_resolution_sq * r * r;

    const std::map<std::string, double> coords{{"resolution", r}, {"x1", x1}, {"x2", x2}};
    for (const auto& z : k_.crash_zones)
      if (z.contains(mode, coords)) return RawOutcome::crash(cost, z.reason);

    auto off = k_.mode_offset.find(mode);
    const double offset = off == k_.mode_offset.end() ? 0.0 : off->second;
    std::map<std::string, double> metrics{
        {"negated_function", -branin(x1, x2) + offset},
        {"latency_ms",
         (k_.latency_per_resolution * r + k_.latency_per_x2 * x2) * hw.speed_multiplier}};
    return detail::finish_ok(metrics, scenario, cost, name_);
  }

  // The three Branin minimizers, for every mode and resolution.
  std::vector<Configuration> known_candidates() const override {
    std::vector<Configuration> out;
    const std::pair<double, double> minima[] = {
        {-M_PI, 12.275}, {M_PI, 2.275}, {3.0 * M_PI, 2.475}};
    for (const auto& mode : {"A", "B", "C"})
      for (std::int64_t r = 1; r <= 5; ++r)
        for (auto [x1, x2] : minima)
          out.push_back({{"mode", std::string(mode)}, {"resolution", r}, {"x1", x1}, {"x2", x2}});
    return out;
  }

  const BraninConstants& constants() const { return k_; }

 private:
  std::string name_ = "crashy_branin";
  BraninConstants k_;
  SearchSpace space_;
};

class HierRosenbrock final : public Benchmark {
 public:
  explicit HierRosenbrock(RosenbrockConstants k)
      : k_(std::move(k)), space_(hier_rosenbrock_space()) {}

  const std::string& name() const override { return name_; }
  const SearchSpace& space() const override { return space_; }

  static int dimension(const std::string& mode) {
    if (mode == "m2") return 2;
    if (mode == "m4") return 4;
    return 6;
  }

  RawOutcome evaluate(const Configuration& config, const Scenario& scenario,
                      const HardwareProfile& hw) const override {
    require_valid(space_, config);
    const auto& mode = std::get<std::string>(config.at("mode"));
    const int d = dimension(mode);
    std::vector<double> x;
    std::map<std::string, double> coords;
    for (int i = 1; i <= d; ++i) {
      const std::string key = "x" + std::to_string(i);
      x.push_back(std::get<double>(config.at(key)));
      coords[key] = x.back();
    }
    const double cost = k_.cost_base + k_.cost_per_dim_cubed * d * d * d;
    for (const auto& z : k_.crash_zones)
      if (z.contains(mode, coords)) return RawOutcome::crash(cost, z.reason);

    std::map<std::string, double> metrics{
        {"negated_function", -rosenbrock(x)},
        {"latency_ms",
         (k_.latency_per_dim * d + k_.latency_per_x1 * (x[0] + 2.0)) * hw.speed_multiplier}};
    return detail::finish_ok(metrics, scenario, cost, name_);
  }

  std::vector<Configuration> known_candidates() const override {
    std::vector<Configuration> out;
    for (const auto& mode : {"m2", "m4", "m6"}) {
      Configuration c{{"mode", std::string(mode)}};
      for (int i = 1; i <= dimension(mode); ++i) c["x" + std::to_string(i)] = 1.0;
      out.push_back(c);
    }
    return out;
  }

 private:
  std::string name_ = "hier_rosenbrock";
  RosenbrockConstants k_;
  SearchSpace space_;
};

class SimDeploy final : public Benchmark {
 public:
  explicit SimDeploy(DeployConstants k) : k_(std::move(k)), space_(deployment_space()) {}

  const std::string& name() const override { return name_; }
  const SearchSpace& space() const override { return space_; }

  // Everything the simulated profiler would measure; crash reason if any.
  struct Measurement {
    std::map<std::string, double> metrics;
    double cost = 0.0;
    std::optional<std::string> crash_reason;
  };

  Measurement measure(const Configuration& config, const HardwareProfile& hw) const {
    const auto& model = std::get<std::string>(config.at("model_name"));
    const auto& backend = std::get<std::string>(config.at("backend"));
    const auto& quant = std::get<std::string>(config.at("quantization"));
    const std::int64_t batch = std::get<std::int64_t>(config.at("batch_size"));
    const double b = static_cast<double>(batch);

    const double memory = k_.base_memory_mb.at(model) * (1.0 + k_.batch_memory_slope * (b - 1.0)) *
                          k_.quant_memory_factor.at(quant);
    const double load = k_.load_seconds_base + k_.load_seconds_per_mb * k_.base_memory_mb.at(model);
    const double setup = k_.backend_setup_seconds.at(backend);

    Measurement m;
    if (auto bi = k_.incompatible.find(backend); bi != k_.incompatible.end()) {
      if (auto mi = bi->second.find(model); mi != bi->second.end()) {
        const auto& qs = mi->second;
        if (std::find(qs.begin(), qs.end(), quant) != qs.end()) {
          m.cost = load + setup;
          m.crash_reason = backend + " does not support " + model + "/" + quant;
          return m;
        }
      }
    }
    if (model == k_.oom_model && batch >= k_.oom_min_batch && memory > hw.oom_cap_mb) {
      m.cost = load + setup;
      m.crash_reason = "out of memory";
      return m;
    }

    double thread_factor = 1.0;
    if (auto it = config.find("num_threads"); it != config.end()) {
      // 4 threads is the sweet spot; the extremes cost up to the full span.
      const double t = static_cast<double>(std::get<std::int64_t>(it->second));
      thread_factor = 1.0 + k_.thread_latency_span * std::abs(t - 4.0) / 4.0;
    }
    const double p95 = k_.base_latency_ms.at(model).at(backend) *
                       (1.0 + k_.batch_latency_slope * (b - 1.0)) * k_.quant_factor.at(quant) *
                       thread_factor * hw.speed_multiplier;
    const double mean = p95 * k_.mean_over_p95;
    double accuracy = k_.accuracy.at(model);
    if (quant == "int8_dynamic") accuracy -= k_.int8_accuracy_penalty;

    m.metrics = {{"accuracy", accuracy},
                 {"throughput", b / (mean / 1000.0)},
                 {"latency_p95_ms", p95},
                 {"latency_p99_ms", p95 * k_.p99_over_p95},
                 {"latency_mean_ms", mean},
                 {"memory_mb", memory}};
    const double batches = std::ceil(k_.accuracy_images / b);
    m.cost = load + setup + (k_.timed_iterations + batches) * mean / 1000.0;
    return m;
  }

  RawOutcome evaluate(const Configuration& config, const Scenario& scenario,
                      const HardwareProfile& hw) const override {
    require_valid(space_, config);
    auto m = measure(config, hw);
    if (m.crash_reason) return RawOutcome::crash(m.cost, *m.crash_reason);
    return detail::finish_ok(m.metrics, scenario, m.cost, name_);
  }

 private:
  std::string name_ = "sim_deploy";
  DeployConstants k_;
  SearchSpace space_;
};

// -(x - center)^2 on [-1, 1]; never crashes, constant latency and cost.
class Quadratic1D final : public Benchmark {
 public:
  explicit Quadratic1D(double center = 0.3) : center_(center), space_(quadratic_space()) {}

  const std::string& name() const override { return name_; }
  const SearchSpace& space() const override { return space_; }

  RawOutcome evaluate(const Configuration& config, const Scenario& scenario,
                      const HardwareProfile&) const override {
    require_valid(space_, config);
    const double x = std::get<double>(config.at("x"));
    return detail::finish_ok({{"negated_function", -(x - center_) * (x - center_)},
                              {"latency_ms", 1.0}},
                             scenario, 1.0, name_);
  }

  std::vector<Configuration> known_candidates() const override {
    return {{{"x", center_}}};
  }

  static Scenario scenario() {
    return {"unconstrained", {{"latency_ms", 1e9, "ms"}},
            ObjectiveKind::maximize_negated_function, 50};
  }

 private:
  std::string name_ = "quadratic";
  double center_;
  SearchSpace space_;
};

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"crashy_branin", "hier_rosenbrock", "sim_deploy",
                                              "quadratic"};
  return names;
}

inline std::unique_ptr<Benchmark> make_benchmark(const std::string& name,
                                                 const BenchmarkConstants& k) {
  if (name == "crashy_branin") return std::make_unique<CrashyBranin>(k.branin);
  if (name == "hier_rosenbrock") return std::make_unique<HierRosenbrock>(k.rosenbrock);
  if (name == "sim_deploy") return std::make_unique<SimDeploy>(k.deploy);
  if (name == "quadratic") return std::make_unique<Quadratic1D>();
  std::string all;
  for (const auto& n : benchmark_names()) all += (all.empty() ? "" : ", ") + n;
  throw SpecError("unknown benchmark '" + name + "' (known: " + all + ")");
}

// Search space of a named benchmark; spaces do not depend on constants.
inline SearchSpace benchmark_space(const std::string& name) {
  if (name == "crashy_branin") return crashy_branin_space();
  if (name == "hier_rosenbrock") return hier_rosenbrock_space();
  if (name == "sim_deploy") return deployment_space();
  if (name == "quadratic") return quadratic_space();
  throw SpecError("unknown benchmark '" + name + "'");
}

// ---------------------------------------------------------------------------
// Oracles

// Feasible under the scenario: ok and every constraint satisfied.
inline bool outcome_feasible(const RawOutcome& o, const Scenario& s) {
  if (o.status != OutcomeStatus::ok) return false;
  for (const auto& c : s.constraints)
    if (o.constraint_values.at(c.name) > c.threshold) return false;
  return true;
}

struct InvalidityEstimate {
  double crash_rate = 0.0;
  double infeasible_rate = 0.0;  // ok but some g_j > c_j
  double combined = 0.0;
};

inline InvalidityEstimate invalidity_rate(const Benchmark& bench, const Scenario& scenario,
                                          const HardwareProfile& hw, std::int64_t n_samples,
                                          Rng& rng) {
  if (n_samples < 1) throw SpecError("n_samples must be >= 1");
  std::int64_t crashes = 0, infeasible = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const auto o = bench.evaluate(sample_uniform(bench.space(), rng), scenario, hw);
    if (o.status == OutcomeStatus::crash)
      ++crashes;
    else if (!outcome_feasible(o, scenario))
      ++infeasible;
  }
  const double n = static_cast<double>(n_samples);
  return {crashes / n, infeasible / n, (crashes + infeasible) / n};
}

struct Optimum {
  Configuration config;
  double value = 0.0;
};

// Brute-force oracle: every discrete combination crossed with a regular grid
// of `grid_points` per continuous axis, plus the benchmark's analytic
// candidates. Combinations with more than two active continuous axes are
// covered by the analytic candidates only. nullopt = infeasible benchmark.
inline std::optional<Optimum> global_optimum(const Benchmark& bench, const Scenario& scenario,
                                             const HardwareProfile& hw,
                                             std::size_t grid_points = 201) {
  const auto& space = bench.space();
  std::optional<Optimum> best;
  auto consider = [&](const Configuration& c) {
    const auto o = bench.evaluate(c, scenario, hw);
    if (!outcome_feasible(o, scenario)) return;
    if (!best || *o.objective > best->value) best = Optimum{c, *o.objective};
  };

  for_each_discrete(space, [&](const Configuration& discrete) {
    std::vector<const VariableSpec*> axes;
    for (const auto& v : space.variables())
      if (!v.discrete() && is_active(v, discrete)) axes.push_back(&v);
    if (axes.empty()) {
      consider(discrete);
      return;
    }
    if (axes.size() > 2) return;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      Configuration c = discrete;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const double t = static_cast<double>(idx[a]) / static_cast<double>(grid_points - 1);
        c[axes[a]->name] = axes[a]->lo + t * (axes[a]->hi - axes[a]->lo);
      }
      consider(c);
      std::size_t a = 0;
      while (a < axes.size() && ++idx[a] == grid_points) idx[a++] = 0;
      if (a == axes.size()) break;
    }
  });
  for (const auto& c : bench.known_candidates())
    if (!validate(space, c)) consider(c);
  return best;
}

}  // namespace tbaopt
