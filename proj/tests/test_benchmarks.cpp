#include <cmath>

#include <gtest/gtest.h>

#include "tbaopt/benchmarks.hpp"

using namespace tbaopt;

namespace {

const BenchmarkConstants& K() {
  static const auto k = BenchmarkConstants::load(default_constants_path());
  return k;
}

// Independent Branin, written out from the textbook form.
double branin_ref(double x, double y) {
  const double pi = std::acos(-1.0);
  const double t = y - 5.1 * x * x / (4 * pi * pi) + 5 * x / pi - 6;
  return t * t + 10 * (1 - 1 / (8 * pi)) * std::cos(x) + 10;
}

Configuration deploy(const std::string& model, const std::string& backend, const std::string& quant,
                     std::int64_t batch, std::optional<std::int64_t> threads = 4) {
  Configuration c{{"model_name", model}, {"backend", backend}, {"quantization", quant},
                  {"batch_size", batch}};
  if (backend != "torch_compile" && threads) c["num_threads"] = *threads;
  return c;
}

}  // namespace

TEST(Branin, DenseGridMinimumMatchesReference) {
  double best = 1e300;
  for (int i = 0; i <= 3000; ++i)
    for (int j = 0; j <= 3000; ++j) best = std::min(best, branin_ref(-5 + 15.0 * i / 3000, 15.0 * j / 3000));
  EXPECT_NEAR(best, 0.397887, 1e-3);
  EXPECT_NEAR(branin(M_PI, 2.275), branin_ref(M_PI, 2.275), 1e-12);
  EXPECT_NEAR(branin(M_PI, 2.275), 0.397887, 1e-6);
}

TEST(CrashyBranin, MinimizerObjective) {
  const auto b = make_benchmark("crashy_branin", K());
  const auto& sc = K().scenario("crashy_branin", "default");
  const auto o = b->evaluate({{"mode", "A"}, {"resolution", std::int64_t{1}}, {"x1", M_PI}, {"x2", 2.275}},
                             sc, K().profile("mid"));
  ASSERT_EQ(o.status, OutcomeStatus::ok);
  EXPECT_NEAR(*o.objective, -0.3979, 1e-4);
  EXPECT_TRUE(outcome_feasible(o, sc));
}

TEST(CrashyBranin, CrashZonesHaveNoObjective) {
  const auto b = make_benchmark("crashy_branin", K());
  const auto& sc = K().scenario("crashy_branin", "default");
  const auto& hw = K().profile("mid");
  const Configuration inside[] = {
      {{"mode", "A"}, {"resolution", std::int64_t{1}}, {"x1", -M_PI}, {"x2", 12.275}},
      {{"mode", "C"}, {"resolution", std::int64_t{2}}, {"x1", 7.0}, {"x2", 1.0}},
      {{"mode", "B"}, {"resolution", std::int64_t{5}}, {"x1", 8.0}, {"x2", 10.0}}};
  for (const auto& c : inside) {
    const auto o = b->evaluate(c, sc, hw);
    EXPECT_EQ(o.status, OutcomeStatus::crash);
    EXPECT_FALSE(o.objective);
    EXPECT_TRUE(o.constraint_values.empty());
    EXPECT_TRUE(o.crash_reason);
    EXPECT_GT(o.true_cost_seconds, 0);
  }
}

TEST(CrashyBranin, InvalidConfigIsRejected) {
  const auto b = make_benchmark("crashy_branin", K());
  EXPECT_THROW(b->evaluate({{"mode", "Z"}, {"resolution", std::int64_t{1}}, {"x1", 0.0}, {"x2", 0.0}},
                           K().scenario("crashy_branin", "default"), K().profile("mid")),
               SpecError);
}

TEST(HierRosenbrock, MinimizerAndActiveDimensions) {
  const auto b = make_benchmark("hier_rosenbrock", K());
  const auto& sc = K().scenario("hier_rosenbrock", "default");
  const auto o = b->evaluate({{"mode", "m2"}, {"x1", 1.0}, {"x2", 1.0}}, sc, K().profile("mid"));
  ASSERT_EQ(o.status, OutcomeStatus::ok);
  EXPECT_EQ(*o.objective, 0.0);
  const auto space = b->space();
  auto continuous_active = [&](const std::string& mode) {
    int n = 0;
    for (const auto& name : active_set(space, {{"mode", mode}}))
      n += !space.at(name).discrete();
    return n;
  };
  EXPECT_EQ(continuous_active("m2"), 2);
  EXPECT_EQ(continuous_active("m6"), 6);
}

TEST(HierRosenbrock, M6CrashesOutsideBox) {
  const auto b = make_benchmark("hier_rosenbrock", K());
  const auto& sc = K().scenario("hier_rosenbrock", "default");
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    Configuration c{{"mode", "m6"}};
    bool outside = false;
    for (int d = 1; d <= 6; ++d) {
      const double x = rng.uniform(-2, 2);
      c["x" + std::to_string(d)] = x;
      outside = outside || std::abs(x) > 1.8;
    }
    const auto o = b->evaluate(c, sc, K().profile("mid"));
    if (outside) EXPECT_EQ(o.status, OutcomeStatus::crash);
    else EXPECT_EQ(o.status, OutcomeStatus::ok);
  }
}

TEST(SimDeploy, VitTinyAccuracy) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  const auto o = b->evaluate(deploy("vit_tiny", "pytorch_eager", "fp32", 1), sc, K().profile("fast"));
  ASSERT_EQ(o.status, OutcomeStatus::ok);
  EXPECT_DOUBLE_EQ(*o.objective, 0.766);
}

TEST(SimDeploy, AccuracyOrdering) {
  const auto& acc = K().deploy.accuracy;
  EXPECT_GT(acc.at("vit_tiny"), acc.at("resnet50"));
  EXPECT_GT(acc.at("resnet50"), acc.at("efficientnet_b0"));
  EXPECT_GT(acc.at("efficientnet_b0"), acc.at("resnet18"));
  EXPECT_GT(acc.at("resnet18"), acc.at("mobilenet_v2"));
}

TEST(SimDeploy, Int8OnSlowProfileIsCatastrophic) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  int ok = 0;
  for_each_discrete(b->space(), [&](const Configuration& c) {
    if (std::get<std::string>(c.at("quantization")) != "int8_dynamic") return;
    const auto o = b->evaluate(c, sc, K().profile("slow"));
    if (o.status != OutcomeStatus::ok) return;
    ++ok;
    EXPECT_GE(o.constraint_values.at("latency_p95_ms"), 25 * 20.0);
    EXPECT_FALSE(outcome_feasible(o, sc));
  });
  EXPECT_GT(ok, 0);
}

TEST(SimDeploy, Int8FullRunCostsAnOrderOfMagnitudeMore) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  const auto fp = b->evaluate(deploy("resnet18", "pytorch_eager", "fp32", 8), sc, K().profile("mid"));
  const auto q = b->evaluate(deploy("resnet18", "pytorch_eager", "int8_dynamic", 8), sc, K().profile("mid"));
  EXPECT_GE(q.true_cost_seconds, 10 * fp.true_cost_seconds);
}

TEST(SimDeploy, IncompatibilityAndOom) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  EXPECT_EQ(b->evaluate(deploy("vit_tiny", "onnxruntime", "fp16", 1), sc, K().profile("mid")).status,
            OutcomeStatus::crash);
  EXPECT_EQ(b->evaluate(deploy("resnet50", "pytorch_eager", "fp32", 32), sc, K().profile("mid")).status,
            OutcomeStatus::crash);
  EXPECT_EQ(b->evaluate(deploy("resnet50", "pytorch_eager", "fp32", 32), sc, K().profile("fast")).status,
            OutcomeStatus::ok);
}

TEST(SimDeploy, ScenarioSelectsObjective) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto o = b->evaluate(deploy("resnet18", "pytorch_eager", "fp32", 4),
                             K().scenario("sim_deploy", "server_throughput"), K().profile("mid"));
  ASSERT_EQ(o.status, OutcomeStatus::ok);
  EXPECT_GT(*o.objective, 10.0);
  EXPECT_TRUE(o.constraint_values.count("latency_p99_ms"));
  EXPECT_TRUE(o.constraint_values.count("memory_mb"));
}

TEST(Benchmarks, Deterministic) {
  for (const auto& name : benchmark_names()) {
    const auto b = make_benchmark(name, K());
    const auto& sc = K().scenarios.at(name).begin()->second;
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
      const auto c = sample_uniform(b->space(), rng);
      EXPECT_EQ(b->evaluate(c, sc, K().profile("mid")), b->evaluate(c, sc, K().profile("mid"))) << name;
    }
  }
}

TEST(Invalidity, CrashyBraninInCalibratedBand) {
  const auto b = make_benchmark("crashy_branin", K());
  Rng rng(2024);
  const auto est = invalidity_rate(*b, K().scenario("crashy_branin", "default"), K().profile("mid"), 100000, rng);
  EXPECT_GE(est.combined, 0.60);
  EXPECT_LE(est.combined, 0.70);
  EXPECT_NEAR(est.combined, est.crash_rate + est.infeasible_rate, 1e-12);
}

TEST(Invalidity, CrashFreeUnconstrainedIsZero) {
  const auto b = make_benchmark("quadratic", K());
  Rng rng(1);
  EXPECT_EQ(invalidity_rate(*b, Quadratic1D::scenario(), K().profile("mid"), 1000, rng).combined, 0.0);
  EXPECT_THROW(invalidity_rate(*b, Quadratic1D::scenario(), K().profile("mid"), 0, rng), SpecError);
}

TEST(Invalidity, SlowProfileWorseThanFast) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto& sc = K().scenario("sim_deploy", "edge_tight");
  Rng r1(5), r2(5);
  const double slow = invalidity_rate(*b, sc, K().profile("slow"), 100000, r1).combined;
  const double fast = invalidity_rate(*b, sc, K().profile("fast"), 100000, r2).combined;
  EXPECT_GT(slow, fast);
}

TEST(GlobalOptimum, EdgeTightFastIsVitTiny) {
  const auto b = make_benchmark("sim_deploy", K());
  const auto opt = global_optimum(*b, K().scenario("sim_deploy", "edge_tight"), K().profile("fast"));
  ASSERT_TRUE(opt);
  EXPECT_EQ(std::get<std::string>(opt->config.at("model_name")), "vit_tiny");
  EXPECT_DOUBLE_EQ(opt->value, 0.766);
}

TEST(GlobalOptimum, CrashFreeBranin) {
  BraninConstants k;
  k.mode_offset = {{"A", 0.0}, {"B", 0.0}, {"C", 0.0}};
  CrashyBranin b(k);
  Scenario sc{"free", {{"latency_ms", 1e9, "ms"}}, ObjectiveKind::maximize_negated_function, 30};
  const auto opt = global_optimum(b, sc, HardwareProfile{});
  ASSERT_TRUE(opt);
  EXPECT_NEAR(opt->value, -0.3979, 1e-4);
}

TEST(GlobalOptimum, ImpossibleThresholdIsInfeasible) {
  const auto b = make_benchmark("sim_deploy", K());
  Scenario sc = K().scenario("sim_deploy", "edge_tight");
  sc.constraints[0].threshold = 1e-6;
  EXPECT_FALSE(global_optimum(*b, sc, K().profile("fast")));
}

TEST(Constants, HashIsSha256OfDocument) {
  EXPECT_EQ(K().hash, sha256_hex(read_file(default_constants_path())));
  EXPECT_THROW(BenchmarkConstants::parse("{}"), std::exception);
}
