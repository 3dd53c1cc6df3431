#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/convergence.hpp"
#include "rforge/error.hpp"
#include "rforge/policy.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace rforge;

namespace {

EnvProfile short_hover() {
  auto p = load_task_profile(assets_dir(), "quadcopter_hovering").env;
  p.horizon_steps = 150;
  return p;
}

Policy random_policy(const EnvProfile& p, std::mt19937_64& rng, double scale = 0.5) {
  auto pol = zero_policy(p);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& t : pol.theta) t = n(rng);
  return pol;
}

} // namespace

TEST_CASE("zero policy on a gravity-compensated point mass is stationary") {
  const auto p = load_task_profile(assets_dir(), "quadcopter_hovering").env;
  const auto tr = rollout(p, zero_policy(p), 4);
  CHECK(tr.size() == p.horizon_steps + 1);
  CHECK_FALSE(tr.terminated());
  for (std::size_t i = 0; i < tr.size(); i += 100) {
    const auto pos = tr.signal(i, "copter_pos");
    CHECK(std::vector<double>(pos.begin(), pos.end()) == std::vector<double>{0, 0, 1});
  }
  CHECK(tr == rollout(p, zero_policy(p), 4));
}

TEST_CASE("an aggressive gait falls exactly when the height recurrence says so") {
  const auto p = load_task_profile(assets_dir(), "quadruped_running").env;
  auto pol = zero_policy(p);
  for (std::size_t i = 0; i < pol.action_dim; ++i) pol.theta[i * (pol.feature_dim + 1) + pol.feature_dim] = 1.0;
  const auto tr = rollout(p, pol, 0);
  // Step-by-step replay of the height channel with ||a|| = sqrt(12).
  double z = p.param("stand_height");
  std::size_t steps = 0;
  const double excess = std::sqrt(12.0) - p.param("stability_threshold");
  while (steps < p.horizon_steps) {
    z += p.dt * (-p.param("height_relax") * (z - p.param("stand_height")) - p.param("fall_rate") * excess);
    ++steps;
    if (z < p.param("fail_height")) break;
  }
  CHECK(steps < p.horizon_steps);
  CHECK(tr.size() == steps + 1);
  CHECK(tr.terminated());
}

TEST_CASE("emitted actions stay within bounds") {
  std::mt19937_64 rng(9);
  for (const auto& id : testing::task_ids()) {
    const auto p = load_task_profile(assets_dir(), id).env;
    const auto pol = random_policy(p, rng, 5.0);
    const auto tr = rollout(p, pol, 1);
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const auto a = tr.action(i);
      for (std::size_t j = 0; j < a.size(); ++j) {
        REQUIRE(a[j] >= p.action_bounds[j].lo);
        REQUIRE(a[j] <= p.action_bounds[j].hi);
      }
    }
  }
}

TEST_CASE("discounted return: series and reference summation") {
  const auto p = short_hover();
  auto q = p;
  q.horizon_steps = 100;
  const auto tr = rollout(q, zero_policy(q), 0);
  REQUIRE(tr.size() == 101);
  const auto one = parse_reward("return 1.0");
  CHECK(discounted_return(tr, one, 1.0) == 100.0);
  CHECK(discounted_return(tr, one, 0.99) == doctest::Approx((1 - std::pow(0.99, 100)) / 0.01).epsilon(1e-12));

  const auto run = load_task_profile(assets_dir(), "quadruped_running");
  std::mt19937_64 rng(4);
  const auto traj = rollout(run.env, random_policy(run.env, rng), 2);
  const auto prog = parse_reward(
      "r = 1.5*robot_linvel[0] + 0.2*select(robot_pos[2] >= 0.5, 1.0, 0.0) - 0.5*abs(robot_pos[1])/2 - "
      "0.1*abs(robot_angvel[2]); return r");
  double ref = 0.0, plain = 0.0, w = 1.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    auto b = traj.bindings(k);
    const double r = 1.5 * b["robot_linvel"][0] + 0.2 * (b["robot_pos"][2] >= 0.5 ? 1.0 : 0.0) -
                     0.5 * std::abs(b["robot_pos"][1]) / 2 - 0.1 * std::abs(b["robot_angvel"][2]);
    ref += w * r;
    plain += r;
    w *= 0.99;
  }
  CHECK(std::abs(discounted_return(traj, prog, 0.99) - ref) <= 1e-9);
  CHECK(std::abs(discounted_return(traj, prog, 1.0) - plain) <= 1e-12 * std::max(1.0, std::abs(plain)));
  CHECK(discounted_return(traj, CompiledReward(prog, *run.env.schema), 0.99) == discounted_return(traj, prog, 0.99));
}

TEST_CASE("reward errors report the step") {
  const auto p = short_hover();
  const auto tr = rollout(p, zero_policy(p), 0);
  try {
    (void)discounted_return(tr, parse_reward("return 1 / (copter_pos[2] - 1)"), 0.99);
    FAIL("expected an evaluation error");
  } catch (const EvalError& e) {
    CHECK(e.code() == "division_by_zero");
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("elite selection matches a stable sort") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> r(1 + rng() % 30);
    for (auto& x : r) x = static_cast<double>(rng() % 7);  // many ties
    const auto n = 1 + rng() % r.size();
    std::vector<std::size_t> idx(r.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r[a] > r[b]; });
    idx.resize(n);
    CHECK(select_elites(r, n) == idx);
  }
}

TEST_CASE("derived seeds are distinct across streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t st = 0; st < 4; ++st)
      for (std::uint64_t i = 0; i < 16; ++i) seen.insert(derive_seed(s, st, i));
  CHECK(seen.size() == 4 * 4 * 16);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("degenerate CEM returns the better of two candidates") {
  const auto p = short_hover();
  const auto prog = parse_reward("return -norm(copter_pos - target_pos)");
  TrainConfig cfg;
  cfg.population = 2;
  cfg.elites = 1;
  cfg.iterations = 1;
  cfg.rollouts_per_candidate = 1;
  cfg.seed = 3;
  const auto res = train(p, prog, cfg);
  const double own = discounted_return(rollout(p, res.policy, derive_seed(cfg.seed, 2, 0)), prog, cfg.gamma);
  CHECK(own == doctest::Approx(res.summary.max_return[0]).epsilon(1e-12));
  const double other = 2 * res.summary.mean_return[0] - res.summary.max_return[0];
  CHECK(own >= other);
}

TEST_CASE("CEM improves a distance reward and is deterministic") {
  const auto p = short_hover();
  const auto prog = parse_reward("return -norm(copter_pos - target_pos) ** 2");
  TrainConfig cfg;
  cfg.iterations = 30;
  cfg.population = 32;
  cfg.elites = 6;
  cfg.seed = 0;
  const auto a = train(p, prog, cfg);
  const auto b = train(p, prog, cfg);
  CHECK(a.policy == b.policy);
  CHECK(a.summary.mean_return == b.summary.mean_return);
  const auto& em = a.summary.elite_mean;
  std::size_t up = 0;
  for (std::size_t i = 1; i < em.size(); ++i) up += em[i] >= em[i - 1];
  CHECK(static_cast<double>(up) >= 0.9 * static_cast<double>(em.size() - 1));
  CHECK(em.back() > a.summary.mean_return.front());
  // Both returns are negative: the final elite cost is at most a tenth of the
  // initial population cost.
  CHECK(-em.back() * 10.0 <= -a.summary.mean_return.front());
  CHECK(a.summary.avg_episode_length <= static_cast<double>(p.horizon_steps));
  cfg.threads = 3;
  CHECK(train(p, prog, cfg).policy == a.policy);
}

TEST_CASE("train rejects programs that fail the signal check") {
  TrainConfig cfg;
  CHECK_THROWS_AS((void)train(short_hover(), parse_reward("return norm(desired_joint_pos)"), cfg), Error);
  cfg.elites = 40;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("policy serialisation round trip") {
  std::mt19937_64 rng(1);
  const auto p = short_hover();
  const auto pol = random_policy(p, rng);
  CHECK(policy_from_json(policy_to_json(pol)) == pol);
  const auto dir = testing::scratch_dir("policy");
  save_policy(dir / "policy.json", pol);
  CHECK(load_policy(dir / "policy.json") == pol);
}

TEST_CASE("convergence detection") {
  const std::vector<double> h{0, 5, 9, 10, 10.01, 10.02, 10.0, 9.99};
  CHECK(detect_convergence(h, 3, 0.01) == std::optional<std::size_t>(5));
  CHECK_FALSE(detect_convergence(std::vector<double>{1, 2, 3, 4}, 3, 0.01).has_value());
  CHECK(detect_convergence(std::vector<double>{0.001, 0.002, 0.0}, 3, 0.01) == std::optional<std::size_t>(2));
  CHECK_THROWS_AS((void)detect_convergence(h, 1, 0.01), Error);
}
