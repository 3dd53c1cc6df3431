#include "rforge/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>

namespace rforge::expr {

namespace {

constexpr std::size_t kOpenEnd = std::numeric_limits<std::size_t>::max();

struct FuncInfo {
  Func func;
  std::size_t arity;
};

const std::unordered_map<std::string_view, FuncInfo>& func_table() {
  static const std::unordered_map<std::string_view, FuncInfo> table{
      {"abs", {Func::Abs, 1}},   {"exp", {Func::Exp, 1}},     {"tanh", {Func::Tanh, 1}},
      {"sqrt", {Func::Sqrt, 1}}, {"relu", {Func::Relu, 1}},   {"sum", {Func::Sum, 1}},
      {"norm", {Func::Norm, 1}}, {"norm1", {Func::Norm1, 1}}, {"min", {Func::Min, 2}},
      {"max", {Func::Max, 2}},   {"pow", {Func::Pow, 2}},     {"dot", {Func::Dot, 2}},
      {"select", {Func::Select, 3}},
  };
  return table;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

[[noreturn]] void syntax_error(const std::string& msg, SourceSpan span) {
  throw ParseError("syntax_error", msg, span);
}

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

} // namespace

std::string_view func_name(Func f) {
  switch (f) {
  case Func::Abs: return "abs";
  case Func::Exp: return "exp";
  case Func::Tanh: return "tanh";
  case Func::Sqrt: return "sqrt";
  case Func::Relu: return "relu";
  case Func::Sum: return "sum";
  case Func::Norm: return "norm";
  case Func::Norm1: return "norm1";
  case Func::Min: return "min";
  case Func::Max: return "max";
  case Func::Pow: return "pow";
  case Func::Dot: return "dot";
  case Func::Select: return "select";
  }
  return "?";
}

std::string_view op_symbol(BinaryOp op) {
  switch (op) {
  case BinaryOp::Add: return "+";
  case BinaryOp::Sub: return "-";
  case BinaryOp::Mul: return "*";
  case BinaryOp::Div: return "/";
  case BinaryOp::Lt: return "<";
  case BinaryOp::Le: return "<=";
  case BinaryOp::Gt: return ">";
  case BinaryOp::Ge: return ">=";
  case BinaryOp::Eq: return "==";
  case BinaryOp::Ne: return "!=";
  case BinaryOp::And: return "and";
  case BinaryOp::Or: return "or";
  }
  return "?";
}

bool is_disallowed_keyword(std::string_view w) {
  static constexpr std::string_view words[] = {
      "while", "for",   "if",     "else",   "elif",  "def",   "class",    "import", "from",
      "lambda", "try",  "except", "with",   "del",   "global", "nonlocal", "exec",  "eval",
      "print", "yield", "pass",   "break",  "continue", "raise", "assert", "not",   "is",
      "in",    "True",  "False",  "None",   "async", "await",  "open",   "len",   "self"};
  return std::find(std::begin(words), std::end(words), w) != std::end(words);
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
  case Kind::Number:
    if (a.number != b.number) return false;
    break;
  case Kind::Signal:
  case Kind::Binding:
    if (a.name != b.name || a.ref != b.ref) return false;
    break;
  case Kind::Index:
    if (a.lo != b.lo) return false;
    break;
  case Kind::Slice:
    if (a.lo != b.lo || a.hi != b.hi) return false;
    break;
  case Kind::Binary:
    if (a.op != b.op) return false;
    break;
  case Kind::Call:
    if (a.func != b.func) return false;
    break;
  case Kind::Neg:
    break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!equal(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string print(const Node& n) {
  switch (n.kind) {
  case Kind::Number: return format_number(n.number);
  case Kind::Signal:
  case Kind::Binding: return n.name;
  case Kind::Index: return print(*n.args[0]) + "[" + std::to_string(n.lo) + "]";
  case Kind::Slice: {
    std::string s = print(*n.args[0]) + "[" + std::to_string(n.lo) + ":";
    if (n.hi != kOpenEnd) s += std::to_string(n.hi);
    return s + "]";
  }
  case Kind::Neg: return "(-" + print(*n.args[0]) + ")";
  case Kind::Binary:
    return "(" + print(*n.args[0]) + " " + std::string(op_symbol(n.op)) + " " + print(*n.args[1]) + ")";
  case Kind::Call: {
    std::string s(func_name(n.func));
    s += "(";
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) s += ", ";
      s += print_bare(*n.args[i]);
    }
    return s + ")";
  }
  }
  return {};
}

std::string print_bare(const Node& n) {
  if (n.kind != Kind::Binary) return print(n);
  return print(*n.args[0]) + " " + std::string(op_symbol(n.op)) + " " + print(*n.args[1]);
}

void visit(const Node& n, const std::function<void(const Node&)>& fn) {
  fn(n);
  for (const auto& a : n.args) visit(*a, fn);
}

// ---------------------------------------------------------------------------
// Lexer

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int depth = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (c == '\n') {
      if (depth == 0) out.push_back({TokKind::Newline, "\n", 0.0, {i, i + 1}});
      ++i;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < text.size() && is_digit(text[i + 1]))) {
      std::size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j < text.size() && text[j] == '.') {
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          while (k < text.size() && is_digit(text[k])) ++k;
          j = k;
        }
      }
      Token t{TokKind::Number, std::string(text.substr(i, j - i)), 0.0, {i, j}};
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc{}) syntax_error("malformed number '" + t.text + "'", t.span);
      if (j < text.size() && is_ident_start(text[j])) syntax_error("malformed number", {i, j + 1});
      out.push_back(std::move(t));
      i = j;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      out.push_back({TokKind::Ident, std::string(text.substr(i, j - i)), 0.0, {i, j}});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      throw ParseError("disallowed_construct", "disallowed construct: string literal", {i, i + 1});
    }
    static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "**"};
    bool matched = false;
    for (auto p : two) {
      if (text.substr(i, 2) == p) {
        out.push_back({TokKind::Punct, std::string(p), 0.0, {i, i + 2}});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static constexpr std::string_view one = "+-*/()[],:;=<>.{}@%&|!^~";
    if (one.find(c) == std::string_view::npos) {
      syntax_error(std::string("unexpected character '") + c + "'", {i, i + 1});
    }
    if (c == '(' || c == '[') ++depth;
    if ((c == ')' || c == ']') && depth > 0) --depth;
    out.push_back({TokKind::Punct, std::string(1, c), 0.0, {i, i + 1}});
    ++i;
  }
  out.push_back({TokKind::End, "", 0.0, {text.size(), text.size()}});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

Parser::Parser(std::vector<Token> tokens, IdentResolver resolver, ParseOptions opts)
    : toks_(std::move(tokens)), resolver_(std::move(resolver)), opts_(opts) {
  if (toks_.empty() || toks_.back().kind != TokKind::End) toks_.push_back({TokKind::End, "", 0.0, {}});
}

const Token& Parser::peek(std::size_t ahead) const {
  return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
}

const Token& Parser::next() {
  const Token& t = toks_[pos_];
  if (pos_ + 1 < toks_.size()) ++pos_;
  return t;
}

bool Parser::at_punct(std::string_view p) const {
  return peek().kind == TokKind::Punct && peek().text == p;
}

void Parser::expect_punct(std::string_view p) {
  if (!at_punct(p)) {
    const auto& t = peek();
    syntax_error("expected '" + std::string(p) + "' but found '" + (t.kind == TokKind::End ? "end of input" : t.text) +
                     "'",
                 t.span);
  }
  next();
}

NodePtr Parser::parse_expression() {
  if (opts_.arithmetic_only) return parse_additive();
  return parse_or();
}

NodePtr Parser::parse_or() {
  auto lhs = parse_and();
  while (peek().kind == TokKind::Ident && peek().text == "or") {
    auto span = next().span;
    auto rhs = parse_and();
    Node n{.kind = Kind::Binary, .op = BinaryOp::Or, .args = {lhs, rhs}, .span = {lhs->span.begin, rhs->span.end}};
    (void)span;
    lhs = make_node(std::move(n));
  }
  return lhs;
}

NodePtr Parser::parse_and() {
  auto lhs = parse_comparison();
  while (peek().kind == TokKind::Ident && peek().text == "and") {
    next();
    auto rhs = parse_comparison();
    Node n{.kind = Kind::Binary, .op = BinaryOp::And, .args = {lhs, rhs}, .span = {lhs->span.begin, rhs->span.end}};
    lhs = make_node(std::move(n));
  }
  return lhs;
}

namespace {
std::optional<BinaryOp> comparison_op(const Token& t) {
  if (t.kind != TokKind::Punct) return std::nullopt;
  if (t.text == "<") return BinaryOp::Lt;
  if (t.text == "<=") return BinaryOp::Le;
  if (t.text == ">") return BinaryOp::Gt;
  if (t.text == ">=") return BinaryOp::Ge;
  if (t.text == "==") return BinaryOp::Eq;
  if (t.text == "!=") return BinaryOp::Ne;
  return std::nullopt;
}
} // namespace

NodePtr Parser::parse_comparison() {
  auto lhs = parse_additive();
  if (auto op = comparison_op(peek())) {
    next();
    auto rhs = parse_additive();
    if (comparison_op(peek())) syntax_error("chained comparisons are not supported", peek().span);
    Node n{.kind = Kind::Binary, .op = *op, .args = {lhs, rhs}, .span = {lhs->span.begin, rhs->span.end}};
    return make_node(std::move(n));
  }
  return lhs;
}

NodePtr Parser::parse_additive() {
  auto lhs = parse_multiplicative();
  while (at_punct("+") || at_punct("-")) {
    const BinaryOp op = next().text == "+" ? BinaryOp::Add : BinaryOp::Sub;
    auto rhs = parse_multiplicative();
    Node n{.kind = Kind::Binary, .op = op, .args = {lhs, rhs}, .span = {lhs->span.begin, rhs->span.end}};
    lhs = make_node(std::move(n));
  }
  return lhs;
}

NodePtr Parser::parse_multiplicative() {
  auto lhs = parse_unary();
  while (at_punct("*") || at_punct("/")) {
    const BinaryOp op = next().text == "*" ? BinaryOp::Mul : BinaryOp::Div;
    auto rhs = parse_unary();
    Node n{.kind = Kind::Binary, .op = op, .args = {lhs, rhs}, .span = {lhs->span.begin, rhs->span.end}};
    lhs = make_node(std::move(n));
  }
  return lhs;
}

NodePtr Parser::parse_unary() {
  if (at_punct("-")) {
    auto begin = next().span.begin;
    auto operand = parse_unary();
    Node n{.kind = Kind::Neg, .args = {operand}, .span = {begin, operand->span.end}};
    return make_node(std::move(n));
  }
  if (at_punct("+")) {
    next();
    return parse_unary();
  }
  return parse_power();
}

NodePtr Parser::parse_power() {
  auto base = parse_postfix();
  if (at_punct("**")) {
    next();
    auto exponent = parse_unary();
    Node n{.kind = Kind::Call, .func = Func::Pow, .args = {base, exponent}, .span = {base->span.begin, exponent->span.end}};
    return make_node(std::move(n));
  }
  return base;
}

NodePtr Parser::parse_postfix() {
  auto base = parse_primary();
  for (;;) {
    if (at_punct(".")) {
      throw ParseError("disallowed_construct", "disallowed construct: attribute access", peek().span);
    }
    if (!at_punct("[")) break;
    const auto open = next().span;
    if (base->kind != Kind::Signal && base->kind != Kind::Binding) {
      syntax_error("only named values can be indexed", open);
    }
    auto read_int = [&]() -> std::size_t {
      const Token& t = peek();
      if (t.kind != TokKind::Number || t.number < 0 || std::floor(t.number) != t.number ||
          t.text.find_first_of(".eE") != std::string::npos) {
        syntax_error("expected a non-negative integer index", t.span);
      }
      next();
      return static_cast<std::size_t>(t.number);
    };
    Node n;
    n.args = {base};
    if (at_punct(":")) {
      next();
      n.kind = Kind::Slice;
      n.lo = 0;
      n.hi = at_punct("]") ? kOpenEnd : read_int();
    } else {
      const auto first = read_int();
      if (at_punct(":")) {
        next();
        n.kind = Kind::Slice;
        n.lo = first;
        n.hi = at_punct("]") ? kOpenEnd : read_int();
      } else {
        n.kind = Kind::Index;
        n.lo = first;
      }
    }
    if (n.kind == Kind::Slice && n.hi != kOpenEnd && n.hi <= n.lo) syntax_error("empty slice", open);
    const auto close = peek().span;
    expect_punct("]");
    n.span = {base->span.begin, close.end};
    base = make_node(std::move(n));
  }
  return base;
}

NodePtr Parser::parse_primary() {
  const Token& t = peek();
  switch (t.kind) {
  case TokKind::Number: {
    next();
    Node n{.kind = Kind::Number, .number = t.number, .span = t.span};
    return make_node(std::move(n));
  }
  case TokKind::Ident: {
    const Token tok = next();
    if (is_disallowed_keyword(tok.text)) {
      throw ParseError("disallowed_construct", "disallowed construct '" + tok.text + "'", tok.span);
    }
    if (tok.text == "and" || tok.text == "or" || tok.text == "return") {
      syntax_error("unexpected keyword '" + tok.text + "'", tok.span);
    }
    if (at_punct("(")) return parse_call(tok);
    return resolver_(tok.text, tok.span);
  }
  case TokKind::Punct:
    if (t.text == "(") {
      next();
      auto inner = parse_expression();
      expect_punct(")");
      return inner;
    }
    if (t.text == "{" || t.text == "@" || t.text == "&" || t.text == "|" || t.text == "^" || t.text == "~") {
      throw ParseError("disallowed_construct", "disallowed construct '" + t.text + "'", t.span);
    }
    syntax_error("expected an expression but found '" + t.text + "'", t.span);
  case TokKind::Newline: syntax_error("expected an expression but found end of line", t.span);
  case TokKind::End: syntax_error("expected an expression but found end of input", t.span);
  }
  syntax_error("expected an expression", t.span);
}

NodePtr Parser::parse_call(const Token& name) {
  const auto& table = func_table();
  auto it = table.find(name.text);
  if (it == table.end()) {
    throw ParseError("disallowed_construct", "disallowed construct: call to unknown function '" + name.text + "'",
                     name.span);
  }
  if (opts_.arithmetic_only && it->second.func == Func::Select) {
    throw ParseError("disallowed_construct", "select is not allowed here", name.span);
  }
  expect_punct("(");
  Node n{.kind = Kind::Call, .func = it->second.func};
  if (!at_punct(")")) {
    for (;;) {
      n.args.push_back(parse_expression());
      if (at_punct(",")) {
        next();
        continue;
      }
      break;
    }
  }
  const auto close = peek().span;
  expect_punct(")");
  if (n.args.size() != it->second.arity) {
    syntax_error(name.text + " takes " + std::to_string(it->second.arity) + " argument(s), got " +
                     std::to_string(n.args.size()),
                 {name.span.begin, close.end});
  }
  n.span = {name.span.begin, close.end};
  return make_node(std::move(n));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void dim_error(const char* what, std::size_t a, std::size_t b) {
  throw EvalError("dimension_mismatch", std::string(what) + ": dimensions " + std::to_string(a) + " and " +
                                            std::to_string(b) + " are incompatible");
}

template <class F>
Value map1(const Value& a, F f) {
  Value r;
  r.size = a.size;
  for (std::size_t i = 0; i < a.size; ++i) r.v[i] = f(a.v[i]);
  return r;
}

template <class F>
Value map2(const Value& a, const Value& b, const char* what, F f) {
  Value r;
  if (a.size == b.size) {
    r.size = a.size;
    for (std::size_t i = 0; i < a.size; ++i) r.v[i] = f(a.v[i], b.v[i]);
  } else if (a.size == 1) {
    r.size = b.size;
    for (std::size_t i = 0; i < b.size; ++i) r.v[i] = f(a.v[0], b.v[i]);
  } else if (b.size == 1) {
    r.size = a.size;
    for (std::size_t i = 0; i < a.size; ++i) r.v[i] = f(a.v[i], b.v[0]);
  } else {
    dim_error(what, a.size, b.size);
  }
  return r;
}

double require_scalar(const Value& v, const char* what) {
  if (!v.is_scalar()) {
    throw EvalError("dimension_mismatch", std::string(what) + " needs a scalar operand, got dimension " +
                                              std::to_string(v.size));
  }
  return v.v[0];
}

double checked_pow(double base, double e) {
  if (base < 0.0 && std::floor(e) != e) {
    throw EvalError("domain_error", "pow of negative base with non-integer exponent");
  }
  if (base == 0.0 && e < 0.0) throw EvalError("division_by_zero", "pow of zero with negative exponent");
  return std::pow(base, e);
}

} // namespace

Value evaluate(const Node& n, const EvalContext& ctx) {
  switch (n.kind) {
  case Kind::Number: return Value::scalar(n.number);
  case Kind::Signal: {
    const SignalSlot& s = ctx.signals[n.ref];
    Value r;
    r.size = static_cast<std::uint8_t>(s.dim);
    std::copy_n(ctx.row + s.offset, s.dim, r.v.begin());
    return r;
  }
  case Kind::Binding: return ctx.bindings[n.ref];
  case Kind::Index: {
    const Value base = evaluate(*n.args[0], ctx);
    if (n.lo >= base.size) {
      throw EvalError("index_out_of_bounds", "index " + std::to_string(n.lo) + " out of bounds for '" +
                                                 n.args[0]->name + "' of dimension " + std::to_string(base.size));
    }
    return Value::scalar(base.v[n.lo]);
  }
  case Kind::Slice: {
    const Value base = evaluate(*n.args[0], ctx);
    const std::size_t hi = n.hi == kOpenEnd ? base.size : n.hi;
    if (n.lo >= hi || hi > base.size) {
      throw EvalError("index_out_of_bounds", "slice out of bounds for '" + n.args[0]->name + "' of dimension " +
                                                 std::to_string(base.size));
    }
    Value r;
    r.size = static_cast<std::uint8_t>(hi - n.lo);
    std::copy(base.v.begin() + static_cast<std::ptrdiff_t>(n.lo), base.v.begin() + static_cast<std::ptrdiff_t>(hi),
              r.v.begin());
    return r;
  }
  case Kind::Neg: return map1(evaluate(*n.args[0], ctx), [](double x) { return -x; });
  case Kind::Binary: {
    if (n.op == BinaryOp::And || n.op == BinaryOp::Or) {
      const bool lhs = require_scalar(evaluate(*n.args[0], ctx), "and/or") != 0.0;
      if (n.op == BinaryOp::And && !lhs) return Value::scalar(0.0);
      if (n.op == BinaryOp::Or && lhs) return Value::scalar(1.0);
      return Value::scalar(require_scalar(evaluate(*n.args[1], ctx), "and/or") != 0.0 ? 1.0 : 0.0);
    }
    const Value a = evaluate(*n.args[0], ctx);
    const Value b = evaluate(*n.args[1], ctx);
    switch (n.op) {
    case BinaryOp::Add: return map2(a, b, "+", [](double x, double y) { return x + y; });
    case BinaryOp::Sub: return map2(a, b, "-", [](double x, double y) { return x - y; });
    case BinaryOp::Mul: return map2(a, b, "*", [](double x, double y) { return x * y; });
    case BinaryOp::Div:
      return map2(a, b, "/", [](double x, double y) {
        if (y == 0.0) throw EvalError("division_by_zero", "division by zero");
        return x / y;
      });
    default: break;
    }
    const double x = require_scalar(a, "comparison");
    const double y = require_scalar(b, "comparison");
    bool r = false;
    switch (n.op) {
    case BinaryOp::Lt: r = x < y; break;
    case BinaryOp::Le: r = x <= y; break;
    case BinaryOp::Gt: r = x > y; break;
    case BinaryOp::Ge: r = x >= y; break;
    case BinaryOp::Eq: r = x == y; break;
    case BinaryOp::Ne: r = x != y; break;
    default: break;
    }
    return Value::scalar(r ? 1.0 : 0.0);
  }
  case Kind::Call: {
    if (n.func == Func::Select) {
      const double c = require_scalar(evaluate(*n.args[0], ctx), "select condition");
      return evaluate(*n.args[c != 0.0 ? 1 : 2], ctx);
    }
    const Value a = evaluate(*n.args[0], ctx);
    switch (n.func) {
    case Func::Abs: return map1(a, [](double x) { return std::fabs(x); });
    case Func::Exp: return map1(a, [](double x) { return std::exp(x); });
    case Func::Tanh: return map1(a, [](double x) { return std::tanh(x); });
    case Func::Sqrt:
      return map1(a, [](double x) {
        if (x < 0.0) throw EvalError("domain_error", "sqrt of negative value");
        return std::sqrt(x);
      });
    case Func::Relu: return map1(a, [](double x) { return x > 0.0 ? x : 0.0; });
    case Func::Sum: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size; ++i) s += a.v[i];
      return Value::scalar(s);
    }
    case Func::Norm: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size; ++i) s += a.v[i] * a.v[i];
      return Value::scalar(std::sqrt(s));
    }
    case Func::Norm1: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size; ++i) s += std::fabs(a.v[i]);
      return Value::scalar(s);
    }
    default: break;
    }
    const Value b = evaluate(*n.args[1], ctx);
    switch (n.func) {
    case Func::Min: return map2(a, b, "min", [](double x, double y) { return std::min(x, y); });
    case Func::Max: return map2(a, b, "max", [](double x, double y) { return std::max(x, y); });
    case Func::Pow: return map2(a, b, "pow", checked_pow);
    case Func::Dot: {
      if (a.size != b.size) dim_error("dot", a.size, b.size);
      double s = 0.0;
      for (std::size_t i = 0; i < a.size; ++i) s += a.v[i] * b.v[i];
      return Value::scalar(s);
    }
    default: break;
    }
    break;
  }
  }
  throw EvalError("internal", "unhandled expression node");
}

} // namespace rforge::expr
