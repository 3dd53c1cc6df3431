#pragma once

// Expression core shared by the reward language and STL atoms: a small
// vector-valued arithmetic language over named signals.

#include "rforge/error.hpp"
#include "rforge/signal_schema.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rforge::expr {

/// A real vector of dimension 1..kMaxSignalDim. Dimension 1 doubles as scalar
/// and broadcasts against any dimension in element-wise operations.
struct Value {
  std::uint8_t size = 1;
  std::array<double, kMaxSignalDim> v{};

  static Value scalar(double x) {
    Value r;
    r.v[0] = x;
    return r;
  }
  [[nodiscard]] bool is_scalar() const noexcept { return size == 1; }
  [[nodiscard]] std::span<const double> span() const noexcept { return {v.data(), size}; }
};

enum class Kind : std::uint8_t { Number, Signal, Binding, Index, Slice, Neg, Binary, Call };

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

enum class Func : std::uint8_t { Abs, Exp, Tanh, Sqrt, Relu, Sum, Norm, Norm1, Min, Max, Pow, Dot, Select };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Kind kind = Kind::Number;
  double number = 0.0;      // Number
  std::string name;         // Signal / Binding
  std::size_t ref = 0;      // Signal: resolver-assigned id; Binding: binding index
  std::size_t lo = 0;       // Index: component; Slice: begin
  std::size_t hi = 0;       // Slice: end (exclusive)
  BinaryOp op = BinaryOp::Add;
  Func func = Func::Abs;
  std::vector<NodePtr> args; // operands / call arguments / indexed base
  SourceSpan span;
};

[[nodiscard]] std::string_view func_name(Func f);
[[nodiscard]] std::string_view op_symbol(BinaryOp op);

/// Structural equality, ignoring source spans.
[[nodiscard]] bool equal(const Node& a, const Node& b);

/// Canonical text: every binary operation parenthesised, numbers in shortest
/// round-trip form, pow written as a call.
[[nodiscard]] std::string print(const Node& n);
/// Like print, minus the outermost parentheses of a binary operation.
[[nodiscard]] std::string print_bare(const Node& n);
[[nodiscard]] std::string format_number(double x);

// ---------------------------------------------------------------------------
// Lexing and parsing

enum class TokKind : std::uint8_t { Number, Ident, Punct, Newline, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  double number = 0.0;
  SourceSpan span;
};

/// Tokenises the whole input. `#` starts a comment running to end of line.
/// Newlines inside (), [] are dropped. Throws ParseError on stray characters.
[[nodiscard]] std::vector<Token> tokenize(std::string_view text);

struct ParseOptions {
  /// Restricts to arithmetic: comparisons, and/or, select are rejected.
  bool arithmetic_only = false;
};

/// Turns an identifier into a Signal or Binding node; may throw ParseError.
using IdentResolver = std::function<NodePtr(const std::string& name, SourceSpan span)>;

/// Recursive-descent expression parser over a token vector. Callers drive
/// statement structure and use this for expressions.
class Parser {
public:
  Parser(std::vector<Token> tokens, IdentResolver resolver, ParseOptions opts = {});

  NodePtr parse_expression();

  [[nodiscard]] const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  [[nodiscard]] bool at_punct(std::string_view p) const;
  void expect_punct(std::string_view p);
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }
  void rewind(std::size_t pos) noexcept { pos_ = pos; }

private:
  NodePtr parse_or();
  NodePtr parse_and();
  NodePtr parse_comparison();
  NodePtr parse_additive();
  NodePtr parse_multiplicative();
  NodePtr parse_unary();
  NodePtr parse_power();
  NodePtr parse_postfix();
  NodePtr parse_primary();
  NodePtr parse_call(const Token& name);

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  IdentResolver resolver_;
  ParseOptions opts_;
};

/// Keywords and constructs that are never part of the language; meeting one
/// produces a "disallowed_construct" ParseError.
[[nodiscard]] bool is_disallowed_keyword(std::string_view word);

// ---------------------------------------------------------------------------
// Evaluation

/// Location of one signal inside a flat observation row.
struct SignalSlot {
  std::size_t offset = 0;
  std::size_t dim = 0;
};

struct EvalContext {
  const double* row = nullptr;
  std::span<const SignalSlot> signals;  // indexed by Node::ref of Signal nodes
  std::span<const Value> bindings;      // indexed by Node::ref of Binding nodes
};

/// Throws EvalError with codes division_by_zero, domain_error,
/// dimension_mismatch, index_out_of_bounds.
[[nodiscard]] Value evaluate(const Node& n, const EvalContext& ctx);

/// Visits every node depth-first, parents before children.
void visit(const Node& n, const std::function<void(const Node&)>& fn);

} // namespace rforge::expr
