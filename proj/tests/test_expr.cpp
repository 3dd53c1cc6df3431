#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/error.hpp"
#include "rforge/expr.hpp"
#include "rforge/reward_lang.hpp"

#include <cmath>

using namespace rforge;

namespace {

double eval_text(const std::string& expr, const Bindings& b = {}) { return evaluate(parse_reward("return " + expr), b); }

std::string eval_code(const std::string& expr, const Bindings& b = {}) {
  try {
    (void)eval_text(expr, b);
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

} // namespace

// Expected values below follow Python's operator semantics.
TEST_CASE("precedence and associativity") {
  CHECK(eval_text("1 + 2 * 3") == 7);
  CHECK(eval_text("(1 + 2) * 3") == 9);
  CHECK(eval_text("8 / 4 / 2") == 1);
  CHECK(eval_text("2 - 3 - 4") == -5);
  CHECK(eval_text("2 ** 3 ** 2") == 512);
  CHECK(eval_text("-2 ** 2") == -4);
  CHECK(eval_text("2 * -3") == -6);
  CHECK(eval_text("1e-3 * 1000") == 1);
}

TEST_CASE("comparisons and boolean connectives yield 0 or 1") {
  CHECK(eval_text("1 < 2") == 1);
  CHECK(eval_text("2 <= 1") == 0);
  CHECK(eval_text("1 == 1") == 1);
  CHECK(eval_text("1 != 1") == 0);
  CHECK(eval_text("1 < 2 and 3 < 2") == 0);
  CHECK(eval_text("1 < 2 or 3 < 2") == 1);
  CHECK(eval_text("select(0.5 > 0.2, 10, 20)") == 10);
  CHECK(eval_text("select(0, 10, 20)") == 20);
}

TEST_CASE("functions") {
  const Bindings b{{"v", {3.0, -4.0}}, {"w", {1.0, 2.0}}};
  CHECK(eval_text("norm(v)", b) == 5);
  CHECK(eval_text("norm1(v)", b) == 7);
  CHECK(eval_text("sum(v)", b) == -1);
  CHECK(eval_text("sum(abs(v))", b) == 7);
  CHECK(eval_text("dot(v, w)", b) == -5);
  CHECK(eval_text("relu(-2) + relu(3)") == 3);
  CHECK(eval_text("min(2, 5) + max(2, 5)") == 7);
  CHECK(eval_text("pow(2, 10)") == 1024);
  CHECK(eval_text("sqrt(16)") == 4);
  CHECK(eval_text("exp(0) + tanh(0)") == 1);
  CHECK(eval_text("abs(-2.5)") == 2.5);
}

TEST_CASE("indexing, slicing and broadcasting") {
  const Bindings b{{"p", {1.0, 2.0, 3.0}}, {"q", {1.0, 1.0, 1.0}}};
  CHECK(eval_text("p[2]", b) == 3);
  CHECK(eval_text("norm(p[0:2] - q[0:2])", b) == 1);
  CHECK(eval_text("sum(p * 2)", b) == 12);
  CHECK(eval_text("sum(2 - p)", b) == 0);
  CHECK(eval_text("sum(p ** 2)", b) == 14);
}

TEST_CASE("evaluation errors") {
  const Bindings b{{"p", {1.0, 2.0, 3.0}}, {"q", {1.0, 1.0}}};
  CHECK(eval_code("1 / 0") == "division_by_zero");
  CHECK(eval_code("sqrt(-1)") == "domain_error");
  CHECK(eval_code("pow(-8, 0.5)") == "domain_error");
  CHECK(eval_code("p - q", b) == "dimension_mismatch");
  CHECK(eval_code("p", b) == "dimension_mismatch");
  CHECK(eval_code("exp(1000)") == "non_finite");
  CHECK(eval_code("r[0]") == "missing_signal");
}

TEST_CASE("lexical structure") {
  CHECK(eval_text("(1 + # comment\n 2)") == 3);
  CHECK(eval_code("1 +\n 2") == "syntax_error");
  CHECK(eval_text("(1 +\n 2)") == 3);
  const auto toks = expr::tokenize("a[0:2] ** 2 # trailing");
  CHECK(toks.front().text == "a");
  CHECK(toks.back().kind == expr::TokKind::End);
}

TEST_CASE("canonical printing") {
  const auto p = parse_reward("return 2 ** x + -y * 3");
  CHECK(expr::print(*p.result()) == "(pow(2, x) + ((-y) * 3))");
  CHECK(expr::print_bare(*p.result()) == "pow(2, x) + ((-y) * 3)");
  CHECK(expr::format_number(0.1) == "0.1");
  CHECK(expr::format_number(3) == "3");
  CHECK(expr::format_number(1e-6) == "1e-06");
}
