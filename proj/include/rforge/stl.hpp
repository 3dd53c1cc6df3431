#pragma once

// Bounded-time STL over sampled trajectories.
//
//   formula := unary { "and" unary }
//   unary   := ("G" | "F") "[" a "," b "]" "(" formula ")" | "(" formula ")" | atom
//   atom    := arith-expr ("<=" | ">=" | "<" | ">") signed-number

#include "rforge/expr.hpp"
#include "rforge/trajectory.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace rforge {

enum class StlKind : std::uint8_t { Atom, Always, Eventually, And };
enum class Comparator : std::uint8_t { Le, Ge, Lt, Gt };

[[nodiscard]] std::string_view comparator_symbol(Comparator c);

struct StlNode;
using StlPtr = std::shared_ptr<const StlNode>;

struct StlNode {
  StlKind kind = StlKind::Atom;
  // Atom: lhs (Signal refs are schema indices) cmp threshold
  expr::NodePtr lhs;
  Comparator cmp = Comparator::Le;
  double threshold = 0.0;
  // Always / Eventually
  double a = 0.0;
  double b = 0.0;
  // Always / Eventually: one child; And: two or more
  std::vector<StlPtr> children;
};

[[nodiscard]] StlPtr stl_atom(expr::NodePtr lhs, Comparator cmp, double threshold);
[[nodiscard]] StlPtr stl_always(double a, double b, StlPtr body);
[[nodiscard]] StlPtr stl_eventually(double a, double b, StlPtr body);
[[nodiscard]] StlPtr stl_and(std::vector<StlPtr> children);

/// Throws ParseError: syntax_error, invalid_interval, unknown_signal,
/// comparator_missing.
[[nodiscard]] StlPtr parse_formula(std::string_view text, const SignalSchema& schema);
[[nodiscard]] std::string print(const StlNode& f);
[[nodiscard]] bool structurally_equal(const StlNode& x, const StlNode& y);

inline constexpr double kTimeEps = 1e-9;

/// Truth at t = 0. Throws Error("empty_trajectory") or an EvalError from an
/// atom (e.g. dimension_mismatch).
[[nodiscard]] bool satisfies(const StlNode& f, const Trajectory& traj);

struct Goal {
  std::string label;
  StlPtr formula;
};

struct TaskSpec {
  std::string task_id;
  std::vector<Goal> goals;
  double horizon = 0.0;

  /// Conjunction of all goals (the goal itself when there is only one).
  [[nodiscard]] StlPtr overall() const;
};

/// Spec file text: "goal <label>: <formula>" lines and one "horizon: <s>"
/// line; '#' comments and blank lines are ignored.
[[nodiscard]] TaskSpec parse_task_spec(std::string_view text, const SignalSchema& schema, std::string task_id = {});

struct GoalReport {
  std::vector<double> goal_rates;  // in spec goal order
  double overall = 0.0;
  std::size_t n = 0;
};

[[nodiscard]] GoalReport goal_report(const TaskSpec& spec, std::span<const Trajectory> trajs);

} // namespace rforge
