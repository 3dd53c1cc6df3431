#pragma once

// Straight-line reward language:
//
//   program   := { statement (NEWLINE | ';') } "return" expr
//   statement := name "=" expr
//
// Expressions are those of rforge::expr. Names that are not earlier bindings
// are signal references.

#include "rforge/expr.hpp"
#include "rforge/signal_schema.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rforge {

struct RewardBinding {
  std::string name;
  expr::NodePtr value;
};

class RewardProgram {
public:
  [[nodiscard]] const std::vector<RewardBinding>& bindings() const noexcept { return bindings_; }
  [[nodiscard]] const expr::NodePtr& result() const noexcept { return result_; }
  /// Distinct signal names in first-use order; Signal node refs index this.
  [[nodiscard]] const std::vector<std::string>& signals() const noexcept { return signals_; }

  friend RewardProgram parse_reward(std::string_view text);
  friend RewardProgram scaled(const RewardProgram& p, double factor);

private:
  std::vector<RewardBinding> bindings_;
  expr::NodePtr result_;
  std::vector<std::string> signals_;
};

/// Throws ParseError with code syntax_error, disallowed_construct or
/// undeclared_name.
[[nodiscard]] RewardProgram parse_reward(std::string_view text);

/// Canonical source; parse_reward(print(p)) is structurally equal to p.
[[nodiscard]] std::string print(const RewardProgram& p);

[[nodiscard]] bool structurally_equal(const RewardProgram& a, const RewardProgram& b);

/// The same program with its result multiplied by `factor`.
[[nodiscard]] RewardProgram scaled(const RewardProgram& p, double factor);

struct SignalViolation {
  std::string reference;
  std::string reason;  // "undeclared signal" | "index out of bounds"

  friend bool operator==(const SignalViolation&, const SignalViolation&) = default;
};

[[nodiscard]] std::vector<SignalViolation> check_signal_usage(const RewardProgram& p, const SignalSchema& schema);

/// Evaluates against loose bindings. Throws EvalError (division_by_zero,
/// domain_error, dimension_mismatch, index_out_of_bounds, non_finite,
/// missing_signal) whose binding() names the failing statement.
[[nodiscard]] double evaluate(const RewardProgram& p, const Bindings& bindings);

/// A program bound to a schema's flat row layout, for per-step evaluation in
/// rollouts. Construction fails with Error("invalid_program") if the program
/// does not pass check_signal_usage.
class CompiledReward {
public:
  CompiledReward(RewardProgram program, const SignalSchema& schema);

  [[nodiscard]] double operator()(const double* row) const;
  [[nodiscard]] const RewardProgram& program() const noexcept { return program_; }

private:
  RewardProgram program_;
  std::vector<expr::SignalSlot> slots_;
};

} // namespace rforge
