#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/error.hpp"
#include "rforge/evaluation.hpp"
#include "rforge/prompting.hpp"
#include "support.hpp"

#include <cmath>

using namespace rforge;

namespace {

std::shared_ptr<const SignalSchema> small_schema() {
  return std::make_shared<const SignalSchema>(
      std::vector<SignalSpec>{{"x", 1, "", "", true}, {"p", 3, "", "", true}, {"a", 2, "", "", true}}, "a");
}

/// 11 samples at dt 0.5; x(i) = f(i), p = (i, 0, 0).
Trajectory trace(const std::function<double(std::size_t)>& f) {
  return testing::make_trajectory(small_schema(), 0.5, 11, [&](std::size_t i) {
    return std::vector<testing::SampleEdit>{{"x", {f(i)}}, {"p", {static_cast<double>(i), 0, 0}}};
  });
}

TaskSpec small_spec() {
  return parse_task_spec("goal 1: G[0,5](x >= 0)\ngoal 2: F[0,5](p[0] >= 8)\nhorizon: 5\n", *small_schema(), "t");
}

} // namespace

TEST_CASE("verdict threshold is inclusive") {
  CHECK(classify(0.95, kDefaultThreshold) == Verdict::Good);
  CHECK(classify(0.949, kDefaultThreshold) == Verdict::Bad);
  CHECK(classify(1.0, kDefaultThreshold) == Verdict::Good);
  CHECK(classify(0.0, kDefaultThreshold) == Verdict::Bad);
  CHECK(classify(1.0, kDefaultThreshold, true) == Verdict::Bad);
  CHECK(classify(0.5, 0.5) == Verdict::Good);
  CHECK(verdict_name(Verdict::Good) == "good");
}

TEST_CASE("metric aggregations on synthetic trajectories") {
  const std::vector<Trajectory> ts{trace([](std::size_t) { return 2.0; }),
                                   trace([](std::size_t i) { return static_cast<double>(i); })};
  MetricDef m{"m", Aggregation::StepMean, "x", false};
  // Samples 1..10: constant 2, then 1..10 (mean 5.5).
  CHECK(compute_metric(m, ts) == doctest::Approx((20.0 + 55.0) / 20.0));
  m.aggregation = Aggregation::TrajectoryMean;
  CHECK(compute_metric(m, ts) == doctest::Approx((2.0 + 5.5) / 2.0));
  m.aggregation = Aggregation::MaxThenMean;
  CHECK(compute_metric(m, ts) == doctest::Approx((2.0 + 10.0) / 2.0));
  m = {"n", Aggregation::StepMean, "x", true};
  const std::vector<Trajectory> shifted{trace([](std::size_t i) { return 4.0 + static_cast<double>(i); })};
  CHECK(compute_metric(m, shifted) == doctest::Approx((5.0 + 14.0) / 2.0 / 4.0));
  CHECK_THROWS_AS((void)compute_metric(m, ts), EvalError);  // second trajectory starts at zero
  CHECK(parse_aggregation(aggregation_name(Aggregation::MaxThenMean)) == Aggregation::MaxThenMean);
  CHECK_THROWS_AS((void)parse_aggregation("median"), Error);
}

TEST_CASE("92 of 100 satisfying trajectories give SR 0.92 and a bad verdict") {
  std::vector<Trajectory> ts;
  for (std::size_t k = 0; k < 100; ++k) {
    const bool ok = k % 25 >= 2;  // 8 violate goal 1
    ts.push_back(trace([&](std::size_t i) { return ok || i != 6 ? 1.0 : -1.0; }));
  }
  const std::vector<MetricDef> metrics{{"mean_x", Aggregation::StepMean, "x", false}};
  const auto r = evaluate_trajectories(ts, parse_reward("return x"), small_spec(), metrics);
  CHECK(r.success_rate == doctest::Approx(0.92));
  CHECK(r.verdict == Verdict::Bad);
  CHECK(r.n_t == 100);
  REQUIRE(r.goal_rates.size() == 2);
  CHECK(r.goal_rates[0].second == doctest::Approx(0.92));
  CHECK(r.goal_rates[1].second == 1.0);
  CHECK(r.avg_episode_length == 10.0);
  CHECK(r.avg_episode_reward == doctest::Approx((92 * 10.0 + 8 * 8.0) / 100.0));
  CHECK(r.metrics[0].second == doctest::Approx((92 * 10.0 + 8 * 8.0) / 1000.0));
  CHECK_FALSE(r.failure.has_value());

  for (std::size_t k : {0, 1, 25, 26}) ts[k] = ts[2];  // 96 satisfy
  const auto r2 = evaluate_trajectories(ts, parse_reward("return x"), small_spec(), metrics);
  CHECK(r2.success_rate == doctest::Approx(0.96));
  CHECK(r2.verdict == Verdict::Good);
}

TEST_CASE("reward failures become a failure note") {
  const std::vector<Trajectory> ts{trace([](std::size_t i) { return static_cast<double>(i) - 3.0; })};
  const std::vector<MetricDef> metrics{{"mean_x", Aggregation::StepMean, "x", false}};
  const auto r = evaluate_trajectories(ts, parse_reward("return 1 / x"), small_spec(), metrics);
  REQUIRE(r.failure.has_value());
  CHECK(r.failure->find("division_by_zero") == 0);
  CHECK(r.verdict == Verdict::Bad);
  CHECK(r.goal_rates[0].second == 0.0);
  CHECK(r.metrics[0].second == 0.0);
}

TEST_CASE("failure report shape") {
  const std::vector<MetricDef> metrics{{"a", Aggregation::StepMean, "x", false}, {"b", Aggregation::StepMean, "x", false}};
  const auto r = failure_report(small_spec(), metrics, 100, "parse_error: oops");
  CHECK(r.verdict == Verdict::Bad);
  CHECK(r.metrics.size() == 2);
  CHECK(r.goal_rates.size() == 2);
  CHECK(r.success_rate == 0.0);
  CHECK(r.failure == std::optional<std::string>("parse_error: oops"));
}

TEST_CASE("report JSON round trip") {
  EvalReport r;
  r.verdict = Verdict::Good;
  r.converged_at_step = 12345;
  r.total_train_steps = 99999;
  r.avg_episode_reward = -1.0 / 3.0;
  r.avg_episode_length = 283.25;
  r.metrics = {{"a", 0.1}, {"b", 1e-300}};
  r.goal_rates = {{"1", 0.97}};
  r.success_rate = 0.97;
  r.n_t = 100;
  CHECK(report_from_json(report_to_json(r)) == r);
  r.failure = "x";
  r.converged_at_step.reset();
  CHECK(report_from_json(report_to_json(r)) == r);
  CHECK_THROWS_AS((void)report_from_json("{\"verdict\": \"meh\"}"), Error);
  CHECK_THROWS_AS((void)report_from_json("not json"), Error);
}

TEST_CASE("fixture reports load for every task") {
  for (const auto& id : testing::task_ids()) {
    const auto prof = load_task_profile(assets_dir(), id);
    for (std::size_t k = 0;; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "report_%02zu.json", k);
      const auto path = prof.dir / "fixtures" / name;
      if (!std::filesystem::exists(path)) {
        CHECK(k >= 1);
        break;
      }
      const auto r = report_from_json(read_text_file(path));
      CHECK(r.metrics.size() == prof.metrics.size());
      CHECK(r.goal_rates.size() == prof.spec.goals.size());
      CHECK(r.verdict == classify(r.success_rate, kDefaultThreshold));
    }
  }
}

TEST_CASE("evaluate_policy uses consecutive seeds") {
  const auto prof = load_task_profile(assets_dir(), "quadcopter_hovering");
  auto env = prof.env;
  env.horizon_steps = 50;
  std::vector<Trajectory> kept;
  const auto prog = parse_reward("return -norm(copter_pos - target_pos)");
  const auto r = evaluate_policy(env, zero_policy(env), prog, prof.spec, prof.metrics, 4, 10, kDefaultThreshold, &kept);
  REQUIRE(kept.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(kept[i] == rollout(env, zero_policy(env), 10 + i));
  CHECK(r == evaluate_trajectories(kept, prog, prof.spec, prof.metrics));
  CHECK_THROWS_AS((void)evaluate_policy(env, zero_policy(env), prog, prof.spec, prof.metrics, 0, 0), Error);
}
