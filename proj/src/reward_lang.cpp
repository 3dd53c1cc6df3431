#include "rforge/reward_lang.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

namespace rforge {

namespace {

using expr::Kind;
using expr::Node;
using expr::NodePtr;
using expr::TokKind;

bool at_statement_end(const expr::Parser& p) {
  const auto& t = p.peek();
  return t.kind == TokKind::Newline || t.kind == TokKind::End || (t.kind == TokKind::Punct && t.text == ";");
}

void skip_separators(expr::Parser& p) {
  while (p.peek().kind == TokKind::Newline || p.at_punct(";")) p.next();
}

std::string reference_text(const Node& n) {
  if (n.kind == Kind::Index) return n.args[0]->name + "[" + std::to_string(n.lo) + "]";
  return expr::print(n);
}

constexpr std::size_t kOpenEnd = std::numeric_limits<std::size_t>::max();

double run(const RewardProgram& p, const expr::EvalContext& base, std::vector<expr::Value>& scratch) {
  expr::EvalContext ctx = base;
  ctx.bindings = {scratch.data(), scratch.size()};
  auto eval_named = [&](const Node& node, const std::string& name) {
    try {
      auto v = expr::evaluate(node, ctx);
      for (std::size_t i = 0; i < v.size; ++i) {
        if (!std::isfinite(v.v[i])) throw EvalError("non_finite", "non-finite value in '" + name + "'", name);
      }
      return v;
    } catch (const EvalError& e) {
      if (!e.binding().empty()) throw;
      throw EvalError(e.code(), e.what() + std::string(" in '") + name + "'", name);
    }
  };
  const auto& bs = p.bindings();
  for (std::size_t i = 0; i < bs.size(); ++i) scratch[i] = eval_named(*bs[i].value, bs[i].name);
  const auto r = eval_named(*p.result(), "return");
  if (!r.is_scalar()) {
    throw EvalError("dimension_mismatch", "return value has dimension " + std::to_string(r.size), "return");
  }
  return r.v[0];
}

} // namespace

RewardProgram parse_reward(std::string_view text) {
  auto tokens = expr::tokenize(text);

  // Names assigned anywhere; reading one before its assignment is an error
  // rather than a silent signal reference.
  std::set<std::string, std::less<>> assigned;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const bool statement_start = i == 0 || tokens[i - 1].kind == TokKind::Newline ||
                                 (tokens[i - 1].kind == TokKind::Punct && tokens[i - 1].text == ";");
    if (statement_start && tokens[i].kind == TokKind::Ident && tokens[i + 1].kind == TokKind::Punct &&
        tokens[i + 1].text == "=") {
      assigned.insert(tokens[i].text);
    }
  }

  RewardProgram prog;
  std::unordered_map<std::string, std::size_t> current;  // name -> latest binding index
  std::unordered_map<std::string, std::size_t> signal_ids;

  auto resolver = [&](const std::string& name, SourceSpan span) -> NodePtr {
    Node n;
    n.name = name;
    n.span = span;
    if (auto it = current.find(name); it != current.end()) {
      n.kind = Kind::Binding;
      n.ref = it->second;
    } else if (assigned.contains(name)) {
      throw ParseError("undeclared_name", "undeclared name '" + name + "' (bound later)", span);
    } else {
      n.kind = Kind::Signal;
      auto [it2, inserted] = signal_ids.try_emplace(name, prog.signals_.size());
      if (inserted) prog.signals_.push_back(name);
      n.ref = it2->second;
    }
    return std::make_shared<const Node>(std::move(n));
  };

  expr::Parser parser(std::move(tokens), resolver);
  for (;;) {
    skip_separators(parser);
    const auto& t = parser.peek();
    if (t.kind == TokKind::End) throw ParseError("syntax_error", "missing return statement", t.span);
    if (t.kind != TokKind::Ident) {
      throw ParseError("syntax_error", "expected assignment or return, found '" + t.text + "'", t.span);
    }
    if (t.text == "return") {
      parser.next();
      prog.result_ = parser.parse_expression();
      skip_separators(parser);
      if (parser.peek().kind != TokKind::End) {
        throw ParseError("syntax_error", "statement after return", parser.peek().span);
      }
      break;
    }
    if (expr::is_disallowed_keyword(t.text)) {
      throw ParseError("disallowed_construct", "disallowed construct '" + t.text + "'", t.span);
    }
    const auto name_tok = parser.next();
    if (!parser.at_punct("=")) {
      throw ParseError("syntax_error", "expected '=' after '" + name_tok.text + "'", parser.peek().span);
    }
    parser.next();
    auto value = parser.parse_expression();
    if (!at_statement_end(parser)) {
      throw ParseError("syntax_error", "unexpected '" + parser.peek().text + "' after expression", parser.peek().span);
    }
    current[name_tok.text] = prog.bindings_.size();
    prog.bindings_.push_back({name_tok.text, std::move(value)});
  }
  return prog;
}

std::string print(const RewardProgram& p) {
  std::string out;
  for (const auto& b : p.bindings()) out += b.name + " = " + expr::print_bare(*b.value) + "\n";
  out += "return " + expr::print_bare(*p.result()) + "\n";
  return out;
}

bool structurally_equal(const RewardProgram& a, const RewardProgram& b) {
  if (a.bindings().size() != b.bindings().size() || a.signals() != b.signals()) return false;
  for (std::size_t i = 0; i < a.bindings().size(); ++i) {
    if (a.bindings()[i].name != b.bindings()[i].name || !expr::equal(*a.bindings()[i].value, *b.bindings()[i].value)) {
      return false;
    }
  }
  return expr::equal(*a.result(), *b.result());
}

RewardProgram scaled(const RewardProgram& p, double factor) {
  RewardProgram out = p;
  Node k{.kind = Kind::Number, .number = factor};
  Node mul{.kind = Kind::Binary,
           .op = expr::BinaryOp::Mul,
           .args = {std::make_shared<const Node>(std::move(k)), p.result()}};
  out.result_ = std::make_shared<const Node>(std::move(mul));
  return out;
}

std::vector<SignalViolation> check_signal_usage(const RewardProgram& p, const SignalSchema& schema) {
  std::vector<SignalViolation> out;
  auto add = [&](SignalViolation v) {
    for (const auto& e : out) {
      if (e == v) return;
    }
    out.push_back(std::move(v));
  };
  auto check = [&](const Node& n) {
    if (n.kind == Kind::Signal) {
      if (!schema.find(n.name)) add({n.name, "undeclared signal"});
      return;
    }
    if ((n.kind == Kind::Index || n.kind == Kind::Slice) && n.args[0]->kind == Kind::Signal) {
      const auto* spec = schema.find(n.args[0]->name);
      if (!spec) return;
      const bool bad = n.kind == Kind::Index ? n.lo >= spec->dim
                                             : (n.lo >= spec->dim || (n.hi != kOpenEnd && n.hi > spec->dim));
      if (bad) add({reference_text(n), "index out of bounds"});
    }
  };
  for (const auto& b : p.bindings()) expr::visit(*b.value, check);
  expr::visit(*p.result(), check);
  return out;
}

double evaluate(const RewardProgram& p, const Bindings& bindings) {
  std::vector<double> row;
  std::vector<expr::SignalSlot> slots;
  slots.reserve(p.signals().size());
  for (const auto& name : p.signals()) {
    auto it = bindings.find(name);
    if (it == bindings.end()) throw EvalError("missing_signal", "no value bound for signal '" + name + "'");
    if (it->second.empty() || it->second.size() > kMaxSignalDim) {
      throw EvalError("dimension_mismatch", "signal '" + name + "' has unsupported dimension");
    }
    slots.push_back({row.size(), it->second.size()});
    row.insert(row.end(), it->second.begin(), it->second.end());
  }
  std::vector<expr::Value> scratch(p.bindings().size());
  expr::EvalContext ctx{row.data(), slots, {}};
  return run(p, ctx, scratch);
}

CompiledReward::CompiledReward(RewardProgram program, const SignalSchema& schema) : program_(std::move(program)) {
  const auto violations = check_signal_usage(program_, schema);
  if (!violations.empty()) {
    throw Error("invalid_program", violations.front().reason + ": " + violations.front().reference);
  }
  for (const auto& name : program_.signals()) {
    const auto i = *schema.index_of(name);
    slots_.push_back({schema.offset(i), schema.at(i).dim});
  }
}

double CompiledReward::operator()(const double* row) const {
  std::vector<expr::Value> scratch(program_.bindings().size());
  expr::EvalContext ctx{row, slots_, {}};
  return run(program_, ctx, scratch);
}

} // namespace rforge
