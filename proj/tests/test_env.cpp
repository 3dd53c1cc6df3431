#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/env.hpp"
#include "rforge/error.hpp"
#include "support.hpp"

#include <cmath>
#include <set>

using namespace rforge;

namespace {

EnvProfile point_mass(double drag, double wind, std::vector<double> start = {0, 0, 1}) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, R"({
    "env_id": "pm_test", "dynamics": "point_mass", "dt": 0.02, "horizon_steps": 200,
    "signals": [{"name": "pos", "dim": 3, "quantity": "pos"}, {"name": "vel", "dim": 3, "quantity": "linvel"},
                {"name": "u", "dim": 4, "quantity": "action"}],
    "action_signal": "u", "action_bounds": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]],
    "params": {"mass": 0.5, "drag": %g, "wind_force": %g},
    "init": {"start_pos": [%g, %g, %g]},
    "features": [{"signal": "pos", "offset": [0, 0, 0], "scale": [1, 1, 1]}]
  })",
                drag, wind, start[0], start[1], start[2]);
  return parse_env_profile(buf);
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

} // namespace

TEST_CASE("hovering reset: start position and target ranges") {
  const auto p = load_task_profile(assets_dir(), "quadcopter_hovering").env;
  const auto s = reset(p, 7);
  const auto o = observe(p, s);
  CHECK(o.at("copter_pos") == std::vector<double>{0, 0, 1});
  const auto& t = o.at("target_pos");
  CHECK(t[0] >= -2.0);
  CHECK(t[0] <= 2.0);
  CHECK(t[1] >= -2.0);
  CHECK(t[1] <= 2.0);
  CHECK(t[2] == 2.0);
  CHECK(reset(p, 7) == s);

  std::set<std::vector<double>> targets;
  for (std::uint64_t seed = 0; seed < 100; ++seed) targets.insert(observe(p, reset(p, seed)).at("target_pos"));
  CHECK(targets.size() >= 99);
}

TEST_CASE("locomotor reset stands at the nominal height") {
  const auto p = load_task_profile(assets_dir(), "quadruped_running").env;
  const auto o = observe(p, reset(p, 3));
  CHECK(o.at("robot_pos") == std::vector<double>{0, 0, p.param("stand_height")});
  CHECK(o.at("robot_rot") == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("zero action holds a gravity-compensated point mass still") {
  const auto p = point_mass(0.1, 0.0);
  auto s = reset(p, 1);
  const std::vector<double> zero(4, 0.0);
  for (int i = 0; i < 50; ++i) s = step(p, s, zero);
  CHECK(observe(p, s).at("pos") == std::vector<double>{0, 0, 1});
}

TEST_CASE("constant action matches the discrete double-integrator closed form") {
  const auto p = point_mass(0.0, 0.0);
  const std::vector<double> a{0.2, 0.0, 0.0, 0.0};
  const double m = 0.5, dt = 0.02;
  const double f[3] = {0.2, 0.0, 0.2};  // x: a0 - a2, y: a1 - a3, z: sum
  const double x0[3] = {0.0, 0.0, 1.0};
  auto s = reset(p, 0);
  for (int k = 1; k <= 150; ++k) {
    s = step(p, s, a);
    const auto o = observe(p, s);
    for (int i = 0; i < 3; ++i) {
      const double v = k * dt * f[i] / m;
      const double x = x0[i] + dt * dt * f[i] / m * k * (k + 1) / 2.0;
      REQUIRE(std::abs(o.at("vel")[i] - v) <= 1e-9);
      REQUIRE(std::abs(o.at("pos")[i] - x) <= 1e-9);
    }
  }
}

TEST_CASE("wind pushes only inside its region") {
  const std::vector<double> zero(4, 0.0);
  const auto inside = point_mass(0.0, 0.1, {0.4, 0, 1});
  const auto s1 = step(inside, reset(inside, 0), zero);
  CHECK(observe(inside, s1).at("vel")[0] == doctest::Approx(0.02 * 0.1 / 0.5).epsilon(1e-12));
  const auto outside = point_mass(0.0, 0.1, {0.7, 0, 1});
  CHECK(observe(outside, step(outside, reset(outside, 0), zero)).at("vel")[0] == 0.0);
}

TEST_CASE("drag never adds energy") {
  const auto p = point_mass(0.3, 0.0);
  auto s = reset(p, 0);
  s.x[3] = 1.5;
  s.x[4] = -0.7;
  s.x[5] = 0.4;
  const std::vector<double> zero(4, 0.0);
  double prev = 1e9;
  for (int i = 0; i < 100; ++i) {
    const auto v = observe(p, s).at("vel");
    const double speed = std::hypot(v[0], v[1], v[2]);
    CHECK(speed <= prev);
    prev = speed;
    s = step(p, s, zero);
  }
}

TEST_CASE("actions are clamped to their bounds") {
  const auto p = point_mass(0.0, 0.0);
  const auto s = step(p, reset(p, 0), std::vector<double>{5, -5, 0.5, std::nan("")});
  CHECK(s.action == std::vector<double>{1, -1, 0.5, 0});
}

TEST_CASE("termination: horizon, failure predicate and misuse") {
  const auto p = point_mass(0.0, 0.0);
  auto s = reset(p, 0);
  const std::vector<double> zero(4, 0.0);
  for (std::size_t i = 0; i < p.horizon_steps; ++i) {
    CHECK_FALSE(s.terminated);
    s = step(p, s, zero);
  }
  CHECK(s.terminated);
  CHECK_FALSE(s.failed);
  CHECK(code_of([&] { (void)step(p, s, zero); }) == "terminated");
  CHECK(code_of([&] { (void)step(p, reset(p, 0), std::vector<double>{0, 0}); }) == "dimension_mismatch");

  // Full downward thrust drives the point mass into the ground.
  auto d = reset(p, 0);
  const std::vector<double> down{-1, -1, -1, -1};
  while (!d.terminated) d = step(p, d, down);
  CHECK(d.failed);
  CHECK(d.steps < p.horizon_steps);
}

TEST_CASE("observe is pure and matches the schema") {
  for (const auto& id : testing::task_ids()) {
    const auto p = load_task_profile(assets_dir(), id).env;
    auto s = reset(p, 11);
    const std::vector<double> a(p.action_dim(), 0.3);
    for (int i = 0; i < 10; ++i) s = step(p, s, a);
    const auto o1 = observe(p, s);
    CHECK(o1 == observe(p, s));
    REQUIRE(o1.size() == p.schema->size());
    for (const auto& sig : p.schema->signals()) CHECK(o1.at(sig.name).size() == sig.dim);
    CHECK(o1.at(p.schema->action_signal()) == std::vector<double>(p.action_dim(), 0.3));
  }
}

TEST_CASE("identical seeds and actions give identical states") {
  for (const auto& id : testing::task_ids()) {
    const auto p = load_task_profile(assets_dir(), id).env;
    auto a = reset(p, 5);
    auto b = reset(p, 5);
    for (int i = 0; i < 100 && !a.terminated; ++i) {
      std::vector<double> act(p.action_dim());
      for (std::size_t j = 0; j < act.size(); ++j) act[j] = std::sin(0.1 * i + static_cast<double>(j));
      a = step(p, a, act);
      b = step(p, b, act);
    }
    CHECK(a == b);
  }
}

TEST_CASE("profile validation") {
  auto bad = [](const std::string& text) { return code_of([&] { (void)parse_env_profile(text); }); };
  CHECK(bad(R"({"env_id": "x", "dynamics": "warp", "dt": 0.02, "horizon_steps": 10, "signals": [], "action_signal": "u"})") ==
        "invalid_profile");
  CHECK(bad(R"({"env_id": "x", "dynamics": "point_mass", "dt": 0, "horizon_steps": 10,
    "signals": [{"name": "u", "dim": 4, "quantity": "action"}], "action_signal": "u",
    "action_bounds": [[-1,1],[-1,1],[-1,1],[-1,1]]})") == "invalid_profile");
  CHECK(bad(R"({"env_id": "x", "dynamics": "point_mass", "dt": 0.02, "horizon_steps": 10,
    "signals": [{"name": "u", "dim": 4, "quantity": "action"}, {"name": "p", "dim": 2, "quantity": "pos"}],
    "action_signal": "u", "action_bounds": [[-1,1],[-1,1],[-1,1],[-1,1]]})") == "invalid_profile");
  CHECK(bad(R"({"env_id": "x", "dynamics": "point_mass", "dt": 0.02, "horizon_steps": 10,
    "signals": [{"name": "u", "dim": 4, "quantity": "action"}], "action_signal": "u",
    "action_bounds": [[-1,1],[-1,1],[-1,1],[-1,1]], "params": {"warp_factor": 9}})") == "invalid_profile");
}
