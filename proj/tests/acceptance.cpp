// Acceptance criteria A1-A7. One line per criterion; exit status is the
// number of failures.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tbaopt/tbaopt.hpp"

using namespace tbaopt;
namespace fs = std::filesystem;

namespace {

const BenchmarkConstants& K() {
  static const auto k = BenchmarkConstants::load(default_constants_path());
  return k;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}
std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}
std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Setup {
  std::unique_ptr<Benchmark> bench;
  Scenario scenario;
  std::unique_ptr<TrialRunner> runner;
  std::unique_ptr<Evaluator> ev;

  Setup(const std::string& name, const std::string& scen, const std::string& hw = "mid") {
    bench = make_benchmark(name, K());
    scenario = name == "quadratic" ? Quadratic1D::scenario() : K().scenario(name, scen);
    runner = std::make_unique<InProcessRunner>(*bench, scenario, K().profile(hw),
                                               TimeoutPolicy::for_scenario(scenario));
    ev = std::make_unique<Evaluator>(bench->space(), scenario, *runner);
  }
};

RunRecord run(const std::string& opt, const std::string& bench, const std::string& scen,
              std::int64_t budget, std::uint64_t seed, const std::string& hw = "mid") {
  Setup s(bench, scen, hw);
  auto rngs = RngStreams::from_master(master_seed(seed, opt + "/" + bench));
  const auto& sp = s.bench->space();
  RunRecord r;
  if (opt == "random") r = run_random(sp, *s.ev, budget, rngs);
  else if (opt == "tpe") r = run_tpe(sp, *s.ev, budget, rngs);
  else if (opt == "tba") r = run_tba_pure(sp, *s.ev, budget, rngs);
  else r = run_hybrid(sp, *s.ev, budget, rngs);
  return r;
}

double mean_waste(const std::string& opt, const std::string& bench, const std::string& scen,
                  std::int64_t budget, int seeds, const std::string& hw = "mid") {
  double s = 0.0;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto r = run(opt, bench, scen, budget, static_cast<std::uint64_t>(seed), hw);
    s += wasted_fraction(r.history, r.history.size());
  }
  return s / seeds;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  Outcome o;
  const double p = discovery_probability(5, 0.6, 10);
  const double direct = 1.0 - std::pow(0.92, 10);
  o.require(std::abs(p - direct) <= 1e-12, "closed form");
  o.require(std::abs(p - 0.57) < 0.005, "approximately 0.57");
  Rng rng(20240601);
  const int reps = 100000;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    bool hit = false;
    for (int i = 0; i < 10; ++i) {
      const auto family = rng.uniform_int(0, 4);
      const bool crashed = rng.bernoulli(0.6);
      hit = hit || (family == 0 && !crashed);
    }
    hits += hit;
  }
  const double mc = hits / static_cast<double>(reps);
  o.require(std::abs(mc - p) <= 0.005, "Monte Carlo agreement");
  o.note(fmt("P=%.6f, MC=%.4f", p, mc));
  return o;
}

Outcome a2() {
  Outcome o;
  const auto bench = make_benchmark("crashy_branin", K());
  Rng rng = Rng::substream(master_seed(0, "calibrate/crashy_branin"), "sampling");
  const auto est = invalidity_rate(*bench, K().scenario("crashy_branin", "default"), K().profile("mid"),
                                   100000, rng);
  o.require(est.combined >= 0.60 && est.combined <= 0.70, "invalidity in [0.60, 0.70]");
  const double w = mean_waste("random", "crashy_branin", "default", 1000, 10);
  o.require(std::abs(w - est.combined) <= 0.05, "random W within 0.05");
  o.note(fmt("invalidity=%.4f, random W(1000)=%.4f", est.combined, w));
  return o;
}

Outcome a3() {
  Outcome o;
  const AnnealConfig cfg;
  Rng rng(3);

  bool temp_ok = true;
  for (int r = 0; r < 500; ++r) {
    TemperatureState ts{cfg.t0, 0};
    for (int i = 0; i < 80; ++i) {
      const auto next = update_temperature(ts, rng.bernoulli(0.3), cfg.alpha_optimization, cfg);
      temp_ok = temp_ok && next.t > 0.0 && next.t <= cfg.t0;
      if (next.t > ts.t) temp_ok = temp_ok && next.t <= cfg.gamma * cfg.t0 + 1e-15;
      ts = next;
    }
  }
  o.require(temp_ok, "temperature positivity and reheat cap");

  bool accept_ok = true;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(0.0, 100.0), d = rng.uniform(1e-9, 50.0);
    const double t = rng.uniform(1e-3, 1.0);
    accept_ok = accept_ok && accept_feasibility(v, v - d, t, 0.1, rng);
    accept_ok = accept_ok && !accept_optimization(-v, v, false, t, 1.0, rng);
  }
  o.require(accept_ok, "feasibility-improvement acceptance and infeasible rejection");

  bool current_ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Setup s("crashy_branin", "default");
    auto rngs = RngStreams::from_master(seed);
    const auto r = run_tba(s.bench->space(), *s.ev, cfg, 40, rngs, false);
    for (const auto& t : r.history.trials())
      if (t.phase == Phase::sa && t.status != TrialStatus::ok)
        current_ok = current_ok && t.events.at(0)["kind"] == "reject";
    if (r.state.current) {
      const auto& c = *r.state.current;
      bool seen_ok = false;
      for (const auto& t : r.history.trials()) seen_ok = seen_ok || (t.config == c && t.status == TrialStatus::ok);
      current_ok = current_ok && seen_ok;
    }
  }
  o.require(current_ok, "crashed states never current");

  const auto space = deployment_space();
  Configuration c{{"model_name", "resnet18"}, {"backend", "pytorch_eager"}, {"quantization", "int8_dynamic"},
                  {"batch_size", std::int64_t{4}}, {"num_threads", std::int64_t{2}}};
  Configuration good{{"model_name", "vit_tiny"}, {"backend", "onnxruntime"}, {"quantization", "fp32"},
                     {"batch_size", std::int64_t{4}}, {"num_threads", std::int64_t{2}}};
  SubspaceTracker tr(space);
  tr.update(c, false);
  tr.update(c, false);
  const bool two = tr.is_blacklisted("quantization", "int8_dynamic");
  tr.update(c, false);
  bool bl_ok = !two && tr.is_blacklisted("quantization", "int8_dynamic");
  for (int i = 0; i < 7; ++i) {
    tr.update(good, true);
    bl_ok = bl_ok && tr.is_blacklisted("quantization", "int8_dynamic");
  }
  tr.update(good, true);
  bl_ok = bl_ok && !tr.is_blacklisted("quantization", "int8_dynamic");
  SubspaceTracker reset(space);
  reset.update(c, false);
  reset.update(c, false);
  reset.update(c, true);
  reset.update(c, false);
  bl_ok = bl_ok && !reset.is_blacklisted("quantization", "int8_dynamic");
  SubspaceTracker valve(space);
  for (int i = 0; i < 5000; ++i) {
    valve.update(sample_uniform(space, rng), rng.bernoulli(0.1));
    bl_ok = bl_ok && valve.safety_valve_holds();
  }
  o.require(bl_ok, "blacklist at 3, cooldown at 8, success reset, safety valve");

  bool handoff_ok = true;
  for (const auto& [b, sc] : std::vector<std::pair<std::string, std::string>>{
           {"crashy_branin", "default"}, {"sim_deploy", "edge_tight"}, {"hier_rosenbrock", "default"}})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Setup s(b, sc);
      auto rngs = RngStreams::from_master(seed);
      const auto r = run_tba(s.bench->space(), *s.ev, cfg, 100, rngs, true);
      const auto n = r.history.size();
      handoff_ok = handoff_ok && r.handoff_index && n <= 15 && *r.handoff_index == static_cast<std::int64_t>(n);
      const bool cond = (r.history.n_feasible() >= 5 && r.history.n_bad() >= 3) || n == 15;
      handoff_ok = handoff_ok && cond;
    }
  o.require(handoff_ok, "handoff within 15 trials");

  o.require(structural_prob(cfg.n_init, cfg.n_init, 30, cfg) == 0.5 &&
                std::abs(structural_prob(30, cfg.n_init, 30, cfg) - 0.15) < 1e-12,
            "p_s endpoints");

  bool stop_ok = true;
  const auto bench = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  const auto policy = TimeoutPolicy::for_scenario(sc);
  for (const char* hw : {"fast", "mid", "slow"})
    for (int i = 0; i < 2000; ++i) {
      const auto cfg_i = sample_uniform(bench->space(), rng);
      const auto raw = bench->evaluate(cfg_i, sc, K().profile(hw));
      const auto t = run_trial(*bench, cfg_i, sc, K().profile(hw), policy);
      if (raw.status != OutcomeStatus::ok) continue;
      const bool over = raw.constraint_values.at(policy.latency_metric) > 5.0 * policy.c_latency;
      stop_ok = stop_ok && (t.status == TrialStatus::early_stop) == over;
    }
  o.require(stop_ok, "early stop exactly above 5x latency limit");
  if (o.pass) o.note("temperature, acceptance, current state, blacklist, handoff, p_s, timeout");
  return o;
}

Outcome a4() {
  Outcome o;
  const int seeds = 20;
  for (std::int64_t B : {10, 15, 20, 25, 30}) {
    const double wr = mean_waste("random", "crashy_branin", "default", B, seeds);
    const double wt = mean_waste("tpe", "crashy_branin", "default", B, seeds);
    const double wh = mean_waste("hybrid", "crashy_branin", "default", B, seeds);
    o.require(wh < wr - 0.20, "hybrid W 20 points below random at B=" + std::to_string(B));
    if (B <= 20) o.require(wh <= wt + 0.05, "hybrid W within 5 points of TPE at B=" + std::to_string(B));
    o.note("B=" + std::to_string(B) + fmt(" W random/tpe/hybrid %.3f/%.3f/%.3f", wr, wt, wh));
  }
  std::vector<double> hyb, sa;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto h = run("hybrid", "crashy_branin", "default", 30, seed);
    const auto s = run("tba", "crashy_branin", "default", 30, seed);
    if (h.best_feasible) hyb.push_back(h.best_feasible->second);
    if (s.best_feasible) sa.push_back(s.best_feasible->second);
  }
  const auto sh = summarize(hyb), ss = summarize(sa);
  o.require(hyb.size() == static_cast<std::size_t>(seeds) && sa.size() == static_cast<std::size_t>(seeds),
            "every seed finds a feasible point at B=30");
  o.require(sh.mean >= ss.mean, "hybrid mean objective >= SA at B=30");
  o.require(sh.std < ss.std, "hybrid std < SA std at B=30");
  o.note(fmt("B=30 hybrid %.3f +- %.3f", sh.mean, sh.std) + fmt(", SA %.3f +- %.3f", ss.mean, ss.std));
  return o;
}

Outcome a5() {
  Outcome o;
  const auto space = deployment_space();
  int hyb = 0, tpe = 0;
  double wh = 0, wr = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto h = run("hybrid", "sim_deploy", "edge_tight", 25, seed);
    const auto t = run("tpe", "sim_deploy", "edge_tight", 25, seed);
    const auto r = run("random", "sim_deploy", "edge_tight", 25, seed);
    hyb += discovery(h.history, space, Value("vit_tiny"));
    tpe += discovery(t.history, space, Value("vit_tiny"));
    wh += wasted_fraction(h.history, 25) / 10;
    wr += wasted_fraction(r.history, 25) / 10;
  }
  o.require(hyb >= tpe, "hybrid vit_tiny discovery >= TPE");
  o.require(wh < wr, "hybrid W < random W");
  const auto bench = make_benchmark("sim_deploy", K());
  const auto opt = global_optimum(*bench, K().scenario("sim_deploy", "edge_tight"), K().profile("fast"));
  o.require(opt && opt->config.at("model_name") == Value("vit_tiny"), "global optimum is vit_tiny");
  o.note(fmt("vit_tiny hybrid %.0f/10, TPE %.0f/10", hyb, tpe) + fmt(", W hybrid %.3f vs random %.3f", wh, wr));
  return o;
}

Outcome a6() {
  Outcome o;
  const auto dir = fs::temp_directory_path() / ("tbaopt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  std::vector<RunRecord> live;
  bool hash_ok = true;
  for (const auto& opt : optimizer_names())
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RunConfig cfg;
      cfg.benchmark = "sim_deploy";
      cfg.scenario = "edge_tight";
      cfg.optimizer = opt;
      cfg.budget = 15;
      cfg.seed = seed;
      cfg.resolve(K());
      const auto name = cfg.run_id() + ".jsonl";
      live.push_back(execute_run(cfg, K(), (dir / "a" / name).string()));
      execute_run(cfg, K(), (dir / "b" / name).string());
      hash_ok = hash_ok && determinism_hash((dir / "a" / name).string()) ==
                               determinism_hash((dir / "b" / name).string());
    }
  o.require(hash_ok, "identical seeds give identical hashes");
  RunConfig other;
  other.benchmark = "sim_deploy";
  other.scenario = "edge_tight";
  other.budget = 15;
  other.seed = 99;
  execute_run(other, K(), (dir / "other.jsonl").string());
  o.require(determinism_hash((dir / "other.jsonl").string()) !=
                determinism_hash((dir / "a" / "hybrid-sim_deploy-edge_tight-mid-B15-s0.jsonl").string()),
            "different seed changes the hash");

  ReportOptions opts;
  opts.constants = &K();
  const auto a = build_report(live, opts);
  const auto b = build_report(load_logs((dir / "a").string()), opts);
  bool same = a.curve_files == b.curve_files && a.incomplete == b.incomplete;
  for (auto f : {Format::markdown, Format::text, Format::csv, Format::tsv}) same = same && render(a, f) == render(b, f);
  o.require(same, "replayed report byte-identical");
  fs::remove_all(dir);
  o.note(std::to_string(live.size()) + " runs replayed");
  return o;
}

Outcome a7() {
  Outcome o;
  const auto q = make_benchmark("quadratic", K());
  const auto opt = global_optimum(*q, Quadratic1D::scenario(), K().profile("mid"));
  o.require(opt.has_value(), "quadratic optimum");
  double rt = 0, rr = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto t = run("tpe", "quadratic", "", 50, seed);
    const auto r = run("random", "quadratic", "", 50, seed);
    rt += simple_regret(t.history, opt->value).back() / 20;
    rr += simple_regret(r.history, opt->value).back() / 20;
  }
  o.require(rt < rr, "TPE regret < random regret");
  o.note(fmt("regret TPE %.2e vs random %.2e", rt, rr));

  const SearchSpace unit("unit", {VariableSpec::continuous("x", 0.0, 1.0)});
  auto trial = [](std::int64_t i, double x, std::optional<double> f, TrialStatus st = TrialStatus::ok) {
    TrialResult t;
    t.trial_index = i;
    t.config = {{"x", x}};
    t.status = st;
    t.objective = st == TrialStatus::ok ? f : std::nullopt;
    t.feasible = st == TrialStatus::ok;
    t.violation = t.feasible ? 0.0 : INFINITY;
    return t;
  };
  auto argmax = [](const std::vector<double>& xs, const std::function<double(double)>& f) {
    double bx = xs.front(), bv = -INFINITY;
    for (double x : xs)
      if (const double v = f(x); v > bv) bv = v, bx = x;
    return bx;
  };

  // good = {0}, bad = {1}: one truncated normal of width 1 per observation,
  // mixed 1:1 with the uniform prior.
  const std::vector<TrialResult> f1{trial(1, 0.0, 1.0), trial(2, 1.0, 0.0)};
  auto tn = [](double x, double mu) {
    const double phi = std::exp(-0.5 * (x - mu) * (x - mu)) / std::sqrt(2 * M_PI);
    return phi / (0.5 * (std::erf((1 - mu) / std::sqrt(2.0)) - std::erf(-mu / std::sqrt(2.0))));
  };
  const std::vector<double> cands{0.0, 0.5, 1.0};
  const double s1 = argmax(cands, [&](double x) { return score_candidate({{"x", x}}, unit, f1); });
  const double b1 = argmax(cands, [&](double x) { return (1 + tn(x, 0.0)) / (1 + tn(x, 1.0)); });
  o.require(s1 == b1 && s1 == 0.0, "fixture good={0}, bad={1}");

  // Mixed fixtures: brute force from the separate densities and feasibility.
  std::vector<std::vector<TrialResult>> fixtures{
      {trial(1, 0.1, 2.0), trial(2, 0.15, 1.5), trial(3, 0.8, -1.0), trial(4, 0.9, {}, TrialStatus::crash),
       trial(5, 0.85, {}, TrialStatus::crash), trial(6, 0.5, 0.0)},
      {trial(1, 0.3, 1.0), trial(2, 0.7, 3.0), trial(3, 0.72, {}, TrialStatus::crash),
       trial(4, 0.68, {}, TrialStatus::early_stop), trial(5, 0.1, -2.0), trial(6, 0.95, 0.5)}};
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(i / 200.0);
  const TpeConfig cfg;
  bool fixtures_ok = true;
  for (const auto& f : fixtures) {
    const auto split = split_good_bad(f, cfg);
    std::vector<const Configuration*> good, bad;
    for (auto i : split.good) good.push_back(&f[i].config);
    for (auto i : split.bad) bad.push_back(&f[i].config);
    const ParzenEstimator l(unit, good, cfg), g(unit, bad, cfg);
    const double s = argmax(grid, [&](double x) { return score_candidate({{"x", x}}, unit, f, cfg); });
    const double b = argmax(grid, [&](double x) {
      const Configuration c{{"x", x}};
      return std::exp(l.log_pdf(c) - g.log_pdf(c)) * feasibility_prob(c, unit, f, cfg);
    });
    fixtures_ok = fixtures_ok && s == b;
  }
  o.require(fixtures_ok, "argmax matches brute force on mixed fixtures");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"A1 discovery probability", a1}, {"A2 benchmark calibration", a2}, {"A3 mechanism invariants", a3},
      {"A4 Crashy Branin waste and objective", a4},   {"A5 deployment discovery", a5},  {"A6 determinism and replay", a6},
      {"A7 TPE sanity", a7}};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("[%s] %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
