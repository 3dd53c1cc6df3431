#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/error.hpp"
#include "rforge/reward_lang.hpp"
#include "support.hpp"

#include <random>

using namespace rforge;

namespace {

const char* kEq3 =
    "r = 1.5*robot_linvel[0] + 0.2*select(robot_pos[2] >= 0.5, 1.0, 0.0) - 0.5*abs(robot_pos[1])/2 - "
    "0.1*abs(robot_angvel[2]); return r";

std::string parse_code(const std::string& text) {
  try {
    (void)parse_reward(text);
  } catch (const ParseError& e) {
    return e.code();
  }
  return "none";
}

Bindings random_bindings(const SignalSchema& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Bindings b;
  for (const auto& sig : s.signals()) {
    auto& v = b[sig.name];
    for (std::size_t i = 0; i < sig.dim; ++i) v.push_back(u(rng));
  }
  return b;
}

} // namespace

TEST_CASE("weighted-sum example parses into four terms") {
  const auto p = parse_reward(kEq3);
  REQUIRE(p.bindings().size() == 1);
  CHECK(p.bindings()[0].name == "r");
  CHECK(p.signals() == std::vector<std::string>{"robot_linvel", "robot_pos", "robot_angvel"});
  // ((a + b) - c) - d
  const auto& top = *p.bindings()[0].value;
  CHECK(top.kind == expr::Kind::Binary);
  CHECK(top.op == expr::BinaryOp::Sub);
  CHECK(top.args[0]->op == expr::BinaryOp::Sub);
  CHECK(top.args[0]->args[0]->op == expr::BinaryOp::Add);
}

TEST_CASE("weighted-sum example evaluates by hand") {
  const Bindings b{{"robot_linvel", {2, 0, 0}}, {"robot_pos", {0, 0, 0.6}}, {"robot_angvel", {0, 0, 0}}};
  // 1.5*2 + 0.2*1 - 0 - 0
  CHECK(evaluate(parse_reward(kEq3), b) == doctest::Approx(3.2).epsilon(1e-15));
}

TEST_CASE("hovering iteration 0 at the target evaluates by hand") {
  const auto p = parse_reward(read_text_file(assets_dir() / "tasks/quadcopter_hovering/dsl/iter_00.rw"));
  const Bindings b{{"copter_pos", {1, 1, 1}}, {"target_pos", {1, 1, 1}}, {"copter_angvels", {0, 0, 0, 0}},
                   {"actions", {0, 0, 0, 0}}};
  // 1/(1+0) + 0.1/(1+0) + 0.1/(1+0) + hover bonus 1
  CHECK(evaluate(p, b) == doctest::Approx(2.2).epsilon(1e-15));
}

TEST_CASE("constant program") {
  const auto p = parse_reward("return 1.0");
  CHECK(p.signals().empty());
  CHECK(evaluate(p, {}) == 1.0);
  CHECK(evaluate(p, {{"anything", {4, 5}}}) == 1.0);
}

TEST_CASE("parse errors") {
  CHECK(parse_code("while True: r = 1\nreturn r") == "disallowed_construct");
  CHECK(parse_code("import os\nreturn 1") == "disallowed_construct");
  CHECK(parse_code("r = self.actions\nreturn r") == "disallowed_construct");
  CHECK(parse_code("a = b + 1\nb = 2\nreturn a") == "undeclared_name");
  CHECK(parse_code("r = 1") == "syntax_error");
  CHECK(parse_code("return 1\nr = 2") == "syntax_error");
  CHECK(parse_code("r = (1 + \nreturn r") == "syntax_error");
}

TEST_CASE("rebinding a name shadows the earlier binding") {
  const auto p = parse_reward("v = x[0]\nv = max(0, v)\nreturn 2 * v");
  CHECK(evaluate(p, {{"x", {-3}}}) == 0);
  CHECK(evaluate(p, {{"x", {4}}}) == 8);
}

TEST_CASE("evaluation errors name the failing binding") {
  const auto p = parse_reward("d = norm(a - b)\nr = 1 / d\nreturn r");
  try {
    (void)evaluate(p, {{"a", {1, 2}}, {"b", {1, 2}}});
    FAIL("expected division by zero");
  } catch (const EvalError& e) {
    CHECK(e.code() == "division_by_zero");
    CHECK(e.binding() == "r");
  }
  try {
    (void)evaluate(parse_reward("return a"), {{"a", {1, 2}}});
    FAIL("expected dimension mismatch");
  } catch (const EvalError& e) {
    CHECK(e.code() == "dimension_mismatch");
    CHECK(e.binding() == "return");
  }
}

TEST_CASE("signal usage check") {
  const auto profile = load_task_profile(assets_dir(), "quadruped_running");
  const auto& schema = *profile.env.schema;
  CHECK(check_signal_usage(parse_reward(kEq3), schema).empty());
  const auto v1 = check_signal_usage(parse_reward("return 1 - norm(desired_joint_pos)"), schema);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0] == SignalViolation{"desired_joint_pos", "undeclared signal"});
  const auto v2 = check_signal_usage(parse_reward("return robot_pos[5]"), schema);
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].reason == "index out of bounds");
  CHECK(check_signal_usage(parse_reward("return norm(robot_pos[1:4])"), schema).size() == 1);
  CHECK_THROWS_AS(CompiledReward(parse_reward("return robot_pos[5]"), schema), Error);
}

TEST_CASE("round trip, determinism and compiled evaluation") {
  const auto profile = load_task_profile(assets_dir(), "quadruped_running");
  const auto& schema = *profile.env.schema;
  std::mt19937_64 rng(1);
  for (const char* stem : {"iter_00", "iter_01", "iter_02", "manual"}) {
    const auto p = parse_reward(read_text_file(profile.dir / "dsl" / (std::string(stem) + ".rw")));
    const auto q = parse_reward(print(p));
    CHECK(structurally_equal(p, q));
    CompiledReward c(p, schema);
    for (int i = 0; i < 100; ++i) {
      const auto b = random_bindings(schema, rng);
      const double x = evaluate(p, b);
      CHECK(evaluate(q, b) == x);
      CHECK(evaluate(p, b) == x);
      const auto row = schema.to_row(b);
      CHECK(c(row.data()) == x);
    }
  }
}

TEST_CASE("weighted sums decompose over their terms") {
  const auto whole = parse_reward("return 1.5*exp(-abs(a[0])) + 0.2*tanh(b) - 0.7*norm(c)");
  const auto t1 = parse_reward("return exp(-abs(a[0]))");
  const auto t2 = parse_reward("return tanh(b)");
  const auto t3 = parse_reward("return norm(c)");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const Bindings b{{"a", {u(rng), u(rng)}}, {"b", {u(rng)}}, {"c", {u(rng), u(rng), u(rng)}}};
    const double sum = 1.5 * evaluate(t1, b) + 0.2 * evaluate(t2, b) - 0.7 * evaluate(t3, b);
    CHECK(std::abs(evaluate(whole, b) - sum) <= 1e-12);
  }
}

TEST_CASE("scaling multiplies the result") {
  const auto p = parse_reward("r = a[0] * 2\nreturn r + 1");
  const auto s = scaled(p, 3.7);
  CHECK(evaluate(s, {{"a", {1.0}}}) == doctest::Approx(3.7 * 3.0).epsilon(1e-15));
  CHECK(p.bindings().size() == s.bindings().size());
}
