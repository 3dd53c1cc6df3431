#include "rforge/stl.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>
#include <unordered_map>

namespace rforge {

namespace {

using expr::TokKind;

class FormulaParser {
public:
  FormulaParser(std::string_view text, const SignalSchema& schema)
      : schema_(schema), p_(expr::tokenize(text), [this](const std::string& n, SourceSpan s) { return resolve(n, s); },
                            expr::ParseOptions{.arithmetic_only = true}) {}

  StlPtr parse_all() {
    auto f = parse_formula();
    if (p_.peek().kind != TokKind::End) {
      throw ParseError("syntax_error", "unexpected '" + p_.peek().text + "' after formula", p_.peek().span);
    }
    return f;
  }

private:
  expr::NodePtr resolve(const std::string& name, SourceSpan span) const {
    auto idx = schema_.index_of(name);
    if (!idx) throw ParseError("unknown_signal", "unknown signal '" + name + "'", span);
    expr::Node n;
    n.kind = expr::Kind::Signal;
    n.name = name;
    n.ref = *idx;
    n.span = span;
    return std::make_shared<const expr::Node>(std::move(n));
  }

  StlPtr parse_formula() {
    std::vector<StlPtr> parts{parse_unary()};
    while (p_.peek().kind == TokKind::Ident && p_.peek().text == "and") {
      p_.next();
      parts.push_back(parse_unary());
    }
    return parts.size() == 1 ? parts.front() : stl_and(std::move(parts));
  }

  bool at_temporal() const {
    const auto& t = p_.peek();
    return t.kind == TokKind::Ident && (t.text == "G" || t.text == "F") && p_.peek(1).kind == TokKind::Punct &&
           p_.peek(1).text == "[";
  }

  double parse_number(bool allow_sign) {
    bool neg = false;
    if (allow_sign && (p_.at_punct("-") || p_.at_punct("+"))) neg = p_.next().text == "-";
    const auto& t = p_.peek();
    if (t.kind != TokKind::Number) throw ParseError("syntax_error", "expected a number", t.span);
    p_.next();
    return neg ? -t.number : t.number;
  }

  StlPtr parse_unary() {
    if (at_temporal()) {
      const auto op = p_.next();
      const auto open = p_.next().span;
      const double a = parse_number(false);
      p_.expect_punct(",");
      const double b = parse_number(false);
      p_.expect_punct("]");
      if (a > b) {
        throw ParseError("invalid_interval", "interval [" + expr::format_number(a) + ", " + expr::format_number(b) +
                                                 "] has a > b",
                         open);
      }
      p_.expect_punct("(");
      auto body = parse_formula();
      p_.expect_punct(")");
      return op.text == "G" ? stl_always(a, b, std::move(body)) : stl_eventually(a, b, std::move(body));
    }
    if (p_.at_punct("(")) {
      const auto mark = p_.position();
      try {
        return parse_atom();
      } catch (const ParseError&) {
        p_.rewind(mark);
      }
      p_.next();
      auto inner = parse_formula();
      p_.expect_punct(")");
      return inner;
    }
    return parse_atom();
  }

  StlPtr parse_atom() {
    auto lhs = p_.parse_expression();
    const auto& t = p_.peek();
    Comparator cmp{};
    if (t.kind == TokKind::Punct && t.text == "<=") {
      cmp = Comparator::Le;
    } else if (t.kind == TokKind::Punct && t.text == ">=") {
      cmp = Comparator::Ge;
    } else if (t.kind == TokKind::Punct && t.text == "<") {
      cmp = Comparator::Lt;
    } else if (t.kind == TokKind::Punct && t.text == ">") {
      cmp = Comparator::Gt;
    } else {
      throw ParseError("comparator_missing", "expected a comparator after '" + expr::print_bare(*lhs) + "'", t.span);
    }
    p_.next();
    const double threshold = parse_number(true);
    return stl_atom(std::move(lhs), cmp, threshold);
  }

  const SignalSchema& schema_;
  expr::Parser p_;
};

// Lazily memoised truth table: one row per node, one cell per sample.
class Monitor {
public:
  Monitor(const Trajectory& traj) : traj_(traj) {
    const auto& schema = traj.schema();
    for (std::size_t i = 0; i < schema.size(); ++i) slots_.push_back({schema.offset(i), schema.at(i).dim});
  }

  bool sat(const StlNode& f, std::size_t i) {
    auto& memo = memo_[&f];
    if (memo.empty()) memo.assign(traj_.size(), -1);
    if (memo[i] >= 0) return memo[i] != 0;
    const bool r = compute(f, i);
    memo_[&f][i] = r ? 1 : 0;
    return r;
  }

private:
  bool compute(const StlNode& f, std::size_t i) {
    switch (f.kind) {
    case StlKind::Atom: {
      expr::EvalContext ctx{traj_.row(i), slots_, {}};
      const auto v = expr::evaluate(*f.lhs, ctx);
      if (!v.is_scalar()) {
        throw EvalError("dimension_mismatch",
                        "atom '" + expr::print_bare(*f.lhs) + "' has dimension " + std::to_string(v.size));
      }
      const double x = v.v[0];
      switch (f.cmp) {
      case Comparator::Le: return x <= f.threshold;
      case Comparator::Ge: return x >= f.threshold;
      case Comparator::Lt: return x < f.threshold;
      case Comparator::Gt: return x > f.threshold;
      }
      return false;
    }
    case StlKind::And:
      return std::all_of(f.children.begin(), f.children.end(), [&](const StlPtr& c) { return sat(*c, i); });
    case StlKind::Always:
    case StlKind::Eventually: {
      const auto& ts = traj_.times();
      const double lo = ts[i] + f.a - kTimeEps;
      const double hi = ts[i] + f.b + kTimeEps;
      const bool always = f.kind == StlKind::Always;
      if (always && traj_.terminated() && ts[i] + f.b > ts.back() + kTimeEps) return false;
      auto j = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), lo) - ts.begin());
      for (; j < ts.size() && ts[j] <= hi; ++j) {
        const bool s = sat(*f.children.front(), j);
        if (always && !s) return false;
        if (!always && s) return true;
      }
      return always;
    }
    }
    return false;
  }

  const Trajectory& traj_;
  std::vector<expr::SignalSlot> slots_;
  std::unordered_map<const StlNode*, std::vector<std::int8_t>> memo_;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double max_bound(const StlNode& f) {
  double m = f.kind == StlKind::Always || f.kind == StlKind::Eventually ? f.b : 0.0;
  for (const auto& c : f.children) m = std::max(m, max_bound(*c));
  return m;
}

} // namespace

std::string_view comparator_symbol(Comparator c) {
  switch (c) {
  case Comparator::Le: return "<=";
  case Comparator::Ge: return ">=";
  case Comparator::Lt: return "<";
  case Comparator::Gt: return ">";
  }
  return "?";
}

StlPtr stl_atom(expr::NodePtr lhs, Comparator cmp, double threshold) {
  StlNode n;
  n.kind = StlKind::Atom;
  n.lhs = std::move(lhs);
  n.cmp = cmp;
  n.threshold = threshold;
  return std::make_shared<const StlNode>(std::move(n));
}

namespace {
StlPtr temporal(StlKind kind, double a, double b, StlPtr body) {
  if (!(a >= 0.0) || !(a <= b)) throw Error("invalid_interval", "temporal interval needs 0 <= a <= b");
  StlNode n;
  n.kind = kind;
  n.a = a;
  n.b = b;
  n.children = {std::move(body)};
  return std::make_shared<const StlNode>(std::move(n));
}
} // namespace

StlPtr stl_always(double a, double b, StlPtr body) { return temporal(StlKind::Always, a, b, std::move(body)); }
StlPtr stl_eventually(double a, double b, StlPtr body) { return temporal(StlKind::Eventually, a, b, std::move(body)); }

StlPtr stl_and(std::vector<StlPtr> children) {
  if (children.size() < 2) throw Error("invalid_formula", "conjunction needs at least two operands");
  StlNode n;
  n.kind = StlKind::And;
  n.children = std::move(children);
  return std::make_shared<const StlNode>(std::move(n));
}

StlPtr parse_formula(std::string_view text, const SignalSchema& schema) {
  if (trim(text).empty()) throw ParseError("syntax_error", "empty formula", {0, 0});
  FormulaParser p(text, schema);
  return p.parse_all();
}

std::string print(const StlNode& f) {
  switch (f.kind) {
  case StlKind::Atom:
    return expr::print_bare(*f.lhs) + " " + std::string(comparator_symbol(f.cmp)) + " " +
           expr::format_number(f.threshold);
  case StlKind::Always:
  case StlKind::Eventually:
    return std::string(f.kind == StlKind::Always ? "G[" : "F[") + expr::format_number(f.a) + "," +
           expr::format_number(f.b) + "](" + print(*f.children.front()) + ")";
  case StlKind::And: {
    std::string s;
    for (std::size_t i = 0; i < f.children.size(); ++i) {
      if (i) s += " and ";
      const auto& c = *f.children[i];
      s += c.kind == StlKind::And ? "(" + print(c) + ")" : print(c);
    }
    return s;
  }
  }
  return {};
}

bool structurally_equal(const StlNode& x, const StlNode& y) {
  if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
  switch (x.kind) {
  case StlKind::Atom:
    if (x.cmp != y.cmp || x.threshold != y.threshold || !expr::equal(*x.lhs, *y.lhs)) return false;
    break;
  case StlKind::Always:
  case StlKind::Eventually:
    if (x.a != y.a || x.b != y.b) return false;
    break;
  case StlKind::And: break;
  }
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!structurally_equal(*x.children[i], *y.children[i])) return false;
  }
  return true;
}

bool satisfies(const StlNode& f, const Trajectory& traj) {
  if (traj.empty()) throw Error("empty_trajectory", "cannot monitor an empty trajectory");
  Monitor m(traj);
  return m.sat(f, 0);
}

StlPtr TaskSpec::overall() const {
  if (goals.empty()) throw Error("invalid_spec", "task spec has no goals");
  if (goals.size() == 1) return goals.front().formula;
  std::vector<StlPtr> parts;
  for (const auto& g : goals) parts.push_back(g.formula);
  return stl_and(std::move(parts));
}

TaskSpec parse_task_spec(std::string_view text, const SignalSchema& schema, std::string task_id) {
  TaskSpec spec;
  spec.task_id = std::move(task_id);
  bool have_horizon = false;
  std::set<std::string> labels;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto where = "spec line " + std::to_string(lineno) + ": ";
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw Error("invalid_spec", where + "expected 'goal <label>: <formula>'");
    const auto head = trim(std::string_view(line).substr(0, colon));
    const auto body = trim(std::string_view(line).substr(colon + 1));
    if (head == "horizon") {
      double h = 0.0;
      auto res = std::from_chars(body.data(), body.data() + body.size(), h);
      if (res.ec != std::errc{} || res.ptr != body.data() + body.size() || !(h > 0.0)) {
        throw Error("invalid_spec", where + "bad horizon '" + body + "'");
      }
      spec.horizon = h;
      have_horizon = true;
    } else if (head.rfind("goal ", 0) == 0) {
      auto label = trim(std::string_view(head).substr(5));
      if (label.empty()) throw Error("invalid_spec", where + "goal without label");
      if (!labels.insert(label).second) throw Error("invalid_spec", where + "duplicate goal '" + label + "'");
      try {
        spec.goals.push_back({label, parse_formula(body, schema)});
      } catch (const ParseError& e) {
        throw ParseError(e.code(), where + e.what(), e.span());
      }
    } else {
      throw Error("invalid_spec", where + "unknown entry '" + head + "'");
    }
  }
  if (spec.goals.empty()) throw Error("invalid_spec", "spec declares no goals");
  if (!have_horizon) throw Error("invalid_spec", "spec has no horizon");
  for (const auto& g : spec.goals) {
    if (max_bound(*g.formula) > spec.horizon + kTimeEps) {
      throw Error("invalid_spec", "goal '" + g.label + "' reaches past the horizon");
    }
  }
  return spec;
}

GoalReport goal_report(const TaskSpec& spec, std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw Error("empty_input", "goal_report needs at least one trajectory");
  GoalReport r;
  r.n = trajs.size();
  std::vector<std::size_t> hits(spec.goals.size(), 0);
  std::size_t all = 0;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    try {
      if (trajs[k].empty()) throw Error("empty_trajectory", "cannot monitor an empty trajectory");
      Monitor m(trajs[k]);
      bool every = true;
      for (std::size_t g = 0; g < spec.goals.size(); ++g) {
        const bool s = m.sat(*spec.goals[g].formula, 0);
        hits[g] += s;
        every = every && s;
      }
      all += every;
    } catch (const EvalError& e) {
      throw EvalError(e.code(), "trajectory " + std::to_string(k) + ": " + e.what(), e.binding());
    } catch (const Error& e) {
      throw Error(e.code(), "trajectory " + std::to_string(k) + ": " + e.what());
    }
  }
  for (auto h : hits) r.goal_rates.push_back(static_cast<double>(h) / static_cast<double>(r.n));
  r.overall = static_cast<double>(all) / static_cast<double>(r.n);
  return r;
}

} // namespace rforge
