// tbaopt: single runs, budget sweeps, benchmark calibration and reports.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tbaopt/tbaopt.hpp"

namespace fs = std::filesystem;
using namespace tbaopt;

namespace {

constexpr int kExitAborted = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("TBAOPT_OUT_DIR"); env && *env) return env;
  return "runs";
}

// Flags shared by run and sweep. Flags given on the command line override
// the configuration file, which overrides built-in defaults.
struct CommonFlags {
  std::string config_path;
  std::string constants_path = default_constants_path();
  std::string out_dir;
  std::string benchmark, optimizer, scenario, hardware, evaluator;
  bool no_timeout = false;
  double timeout_multiplier = 5.0;

  CLI::Option* benchmark_opt = nullptr;
  CLI::Option* optimizer_opt = nullptr;
  CLI::Option* scenario_opt = nullptr;
  CLI::Option* hardware_opt = nullptr;
  CLI::Option* evaluator_opt = nullptr;
  CLI::Option* multiplier_opt = nullptr;
  CLI::Option* constants_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void add(CLI::App* app, bool with_optimizer) {
    app->add_option("--config", config_path, "Run configuration file (JSON)")->check(CLI::ExistingFile);
    constants_opt = app->add_option("--constants", constants_path, "Benchmark constants file");
    out_opt = app->add_option("--out", out_dir, "Output directory (default: $TBAOPT_OUT_DIR or ./runs)");
    benchmark_opt = app->add_option("--benchmark", benchmark, "Benchmark name");
    if (with_optimizer) optimizer_opt = app->add_option("--optimizer", optimizer, "random | tpe | tba | hybrid");
    scenario_opt = app->add_option("--scenario", scenario, "Scenario name (default: first of the benchmark)");
    hardware_opt = app->add_option("--hardware", hardware, "Hardware profile");
    evaluator_opt = app->add_option("--evaluator", evaluator, "inprocess | exec:<command>");
    app->add_flag("--no-timeout", no_timeout, "Disable trial timeouts");
    multiplier_opt = app->add_option("--timeout-multiplier", timeout_multiplier, "Timeout as a multiple of the latency limit");
  }

  RunConfig base() {
    RunConfig cfg;
    if (!config_path.empty()) {
      Json j = Json::parse(read_file(config_path));
      cfg = run_config_from_json(j, cfg, {"out", "constants"});
      if (j.contains("out") && !out_opt->count()) out_dir = j["out"].get<std::string>();
      if (j.contains("constants") && !constants_opt->count())
        constants_path = j["constants"].get<std::string>();
    }
    if (benchmark_opt->count()) cfg.benchmark = benchmark;
    if (optimizer_opt && optimizer_opt->count()) cfg.optimizer = optimizer;
    if (scenario_opt->count()) cfg.scenario = scenario;
    if (hardware_opt->count()) cfg.hardware = hardware;
    if (evaluator_opt->count()) cfg.evaluator = evaluator;
    if (no_timeout) cfg.timeout_enabled = false;
    if (multiplier_opt->count()) cfg.timeout_multiplier = timeout_multiplier;
    if (out_dir.empty()) out_dir = default_out_dir();
    return cfg;
  }
};

Json summary_json(const RunRecord& rec, const std::string& log_path) {
  const auto w = wasted_curve(rec.history);
  Json j{{"run_id", run_id_of(rec)},
         {"log", log_path},
         {"complete", rec.complete},
         {"trials", rec.history.size()},
         {"budget", rec.budget},
         {"wasted_fraction", w.empty() ? 0.0 : w.back()},
         {"wall_clock_seconds", wall_clock(rec.history)},
         {"best_objective", rec.best_feasible ? Json(rec.best_feasible->second) : Json(nullptr)},
         {"best_config", rec.best_feasible ? to_json(rec.best_feasible->first) : Json(nullptr)},
         {"handoff_index", rec.handoff_index ? Json(*rec.handoff_index) : Json(nullptr)}};
  if (auto f = first_feasible_index(rec.history)) j["first_feasible_index"] = *f;
  if (!rec.abort_reason.empty()) j["abort_reason"] = rec.abort_reason;
  return j;
}

// Returns (record, log path). Throws SpecError for configuration problems.
std::pair<RunRecord, std::string> run_one(RunConfig cfg, const BenchmarkConstants& constants,
                                          const std::string& out_dir) {
  cfg.resolve(constants);
  fs::create_directories(out_dir);
  const std::string log = (fs::path(out_dir) / (cfg.run_id() + ".jsonl")).string();
  auto rec = execute_run(cfg, constants, log);
  std::ofstream(fs::path(out_dir) / (cfg.run_id() + ".summary.json")) << summary_json(rec, log).dump(2) << '\n';
  return {std::move(rec), log};
}

std::vector<std::int64_t> parse_int_list(const std::string& text, const char* what) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto dash = item.find('-', 1);
      if (dash != std::string::npos) {
        const auto lo = std::stoll(item.substr(0, dash)), hi = std::stoll(item.substr(dash + 1));
        if (hi < lo) throw UsageError(std::string("empty range in ") + what);
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoll(item));
      }
    }
  } catch (const std::logic_error&) {
    throw UsageError(std::string("cannot parse ") + what + " '" + text + "'");
  }
  if (out.empty()) throw UsageError(std::string("no ") + what + " given");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasible-first annealing with TPE handoff: runs, sweeps, calibration, reports"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Execute one optimization run");
  CommonFlags run_flags;
  run_flags.add(run, true);
  std::int64_t run_budget = 0;
  std::uint64_t run_seed = 0;
  auto* run_budget_opt = run->add_option("--budget", run_budget, "Evaluation budget B");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Seed (plain integer, 0 allowed)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Full factorial of optimizers x budgets x seeds");
  CommonFlags sweep_flags;
  sweep_flags.add(sweep, false);
  std::string budgets_text = "10,15,20,25,30", seeds_text = "0-9",
              optimizers_text = "random,tpe,tba,hybrid";
  bool resume = false;
  unsigned jobs = 1;
  sweep->add_option("--budgets", budgets_text, "Comma-separated budgets")->capture_default_str();
  sweep->add_option("--seeds", seeds_text, "Seeds, e.g. 0-9 or 0,3,5")->capture_default_str();
  sweep->add_option("--optimizers", optimizers_text, "Comma-separated optimizers")->capture_default_str();
  sweep->add_flag("--resume", resume, "Skip runs whose complete log already exists");
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::Range(1u, 256u));

  // report
  auto* report = app.add_subcommand("report", "Aggregate tables and curves from logs");
  std::string logs_dir, format_text = "markdown", report_out, curves_dir,
              report_constants = default_constants_path();
  bool allow_mixed = false;
  report->add_option("logs", logs_dir, "Directory of JSONL logs")->required();
  report->add_option("--format", format_text, "markdown | text | csv | tsv")->capture_default_str();
  report->add_option("--output", report_out, "Write tables to this file instead of stdout");
  report->add_option("--curves-dir", curves_dir, "Where to write r(n)/W(n) files (default: <logs>/curves)");
  report->add_option("--constants", report_constants, "Constants file used for regret");
  report->add_flag("--allow-mixed", allow_mixed, "Accept logs from different constants files");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo invalidity of a benchmark");
  std::string cal_benchmark = "crashy_branin", cal_scenario, cal_hardware = "mid",
              cal_constants = default_constants_path();
  std::int64_t samples = 100000;
  std::uint64_t cal_seed = 0;
  calibrate->add_option("--benchmark", cal_benchmark, "Benchmark name")->capture_default_str();
  calibrate->add_option("--scenario", cal_scenario, "Scenario (default: first of the benchmark)");
  calibrate->add_option("--hardware", cal_hardware, "Hardware profile")->capture_default_str();
  calibrate->add_option("--samples", samples, "Number of uniform samples")->capture_default_str();
  calibrate->add_option("--seed", cal_seed, "Sampling seed");
  calibrate->add_option("--constants", cal_constants, "Benchmark constants file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) {
      RunConfig cfg = run_flags.base();
      if (run_budget_opt->count()) cfg.budget = run_budget;
      if (run_seed_opt->count()) cfg.seed = run_seed;
      const auto constants = BenchmarkConstants::load(run_flags.constants_path);
      cfg.resolve(constants);
      auto [rec, log] = run_one(cfg, constants, run_flags.out_dir);
      std::cout << summary_json(rec, log).dump(2) << '\n';
      return rec.complete ? 0 : kExitAborted;
    }

    if (sweep->parsed()) {
      RunConfig base = sweep_flags.base();
      const auto constants = BenchmarkConstants::load(sweep_flags.constants_path);
      const auto budgets = parse_int_list(budgets_text, "budgets");
      const auto seeds = parse_int_list(seeds_text, "seeds");
      const auto optimizers = parse_name_list(optimizers_text);
      std::vector<RunConfig> plan;
      for (const auto& o : optimizers)
        for (auto b : budgets)
          for (auto s : seeds) {
            if (s < 0) throw UsageError("seeds must be >= 0");
            RunConfig c = base;
            c.optimizer = o;
            c.budget = b;
            c.seed = static_cast<std::uint64_t>(s);
            c.resolve(constants);
            plan.push_back(c);
          }
      fs::create_directories(sweep_flags.out_dir);
      std::vector<Json> entries(plan.size());
      std::atomic<std::size_t> next{0};
      std::mutex io;
      auto worker = [&] {
        for (std::size_t i; (i = next++) < plan.size();) {
          const auto& c = plan[i];
          const std::string log = (fs::path(sweep_flags.out_dir) / (c.run_id() + ".jsonl")).string();
          Json e{{"run_id", c.run_id()}, {"log", log}};
          bool skipped = false;
          if (resume && fs::exists(log)) {
            try {
              skipped = replay(log).record.complete;
            } catch (const std::exception&) {
            }
          }
          if (skipped) {
            e["status"] = "complete";
            e["skipped"] = true;
          } else {
            try {
              auto [rec, path] = run_one(c, constants, sweep_flags.out_dir);
              e["status"] = rec.complete ? "complete" : "incomplete";
              if (!rec.complete) e["error"] = rec.abort_reason;
            } catch (const std::exception& ex) {
              e["status"] = "incomplete";
              e["error"] = ex.what();
            }
          }
          std::lock_guard lock(io);
          std::cout << e["status"].get<std::string>() << ' ' << c.run_id()
                    << (skipped ? " (skipped)" : "") << '\n';
          entries[i] = e;
        }
      };
      std::vector<std::thread> pool;
      for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      std::size_t bad = 0;
      for (const auto& e : entries) bad += e["status"] != "complete";
      Json manifest{{"expected_runs", plan.size()},
                    {"incomplete_runs", bad},
                    {"constants_hash", constants.hash},
                    {"runs", entries}};
      std::ofstream(fs::path(sweep_flags.out_dir) / "manifest.json") << manifest.dump(2) << '\n';
      std::cout << plan.size() - bad << "/" << plan.size() << " runs complete\n";
      return bad == 0 ? 0 : kExitAborted;
    }

    if (report->parsed()) {
      const Format fmt = format_from_string(format_text);
      const auto runs = load_logs(logs_dir);
      std::optional<BenchmarkConstants> constants;
      if (fs::exists(report_constants)) constants = BenchmarkConstants::load(report_constants);
      ReportOptions opts;
      opts.allow_mixed = allow_mixed;
      opts.constants = constants ? &*constants : nullptr;
      const auto rep = build_report(runs, opts);
      const std::string text = render(rep, fmt);
      if (report_out.empty())
        std::cout << text;
      else
        std::ofstream(report_out) << text;
      const fs::path cdir = curves_dir.empty() ? fs::path(logs_dir) / "curves" : fs::path(curves_dir);
      fs::create_directories(cdir);
      for (const auto& [name, body] : rep.curve_files) std::ofstream(cdir / name) << body;
      for (const auto& n : rep.notes) std::cerr << "note: " << n << '\n';
      return 0;
    }

    if (calibrate->parsed()) {
      if (samples < 1) throw UsageError("--samples must be >= 1");
      const auto constants = BenchmarkConstants::load(cal_constants);
      RunConfig c;
      c.benchmark = cal_benchmark;
      c.optimizer = "random";
      c.scenario = cal_scenario;
      c.hardware = cal_hardware;
      c.resolve(constants);
      const auto bench = make_benchmark(c.benchmark, constants);
      Rng rng = Rng::substream(master_seed(cal_seed, "calibrate/" + c.benchmark), "sampling");
      const auto est = invalidity_rate(*bench, constants.scenario(c.benchmark, c.scenario),
                                       constants.profile(c.hardware), samples, rng);
      const auto it = constants.target_invalidity.find(c.benchmark);
      std::printf("benchmark:    %s / %s / %s\n", c.benchmark.c_str(), c.scenario.c_str(), c.hardware.c_str());
      std::printf("samples:      %lld\n", static_cast<long long>(samples));
      std::printf("crash rate:   %.4f\n", est.crash_rate);
      std::printf("infeasible:   %.4f\n", est.infeasible_rate);
      std::printf("combined:     %.4f\n", est.combined);
      if (it == constants.target_invalidity.end()) {
        std::printf("target band:  none\n");
        return 0;
      }
      const auto band = it->second;
      const bool pass = est.combined >= band.first && est.combined <= band.second;
      std::printf("target band:  [%.2f, %.2f]\n", band.first, band.second);
      std::printf("result:       %s\n", pass ? "PASS" : "FAIL");
      return pass ? 0 : kExitAborted;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SpecError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAborted;
  }
  return 0;
}
