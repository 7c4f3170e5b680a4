#include "adn/dsl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <vector>

#include "adn/util.hpp"

namespace adn {

DslError::DslError(int line, int column, const std::string& message)
    : ModelError("line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

// ---------------------------------------------------------------------------
// Printer

namespace {

void append_term(std::string& out, double coef, const std::string& body, bool first) {
  const bool negative = coef < 0;
  const double mag = std::abs(coef);
  if (first) {
    if (negative) out += '-';
  } else {
    out += negative ? " - " : " + ";
  }
  if (body.empty()) {
    out += format_number(mag);
    return;
  }
  if (mag != 1.0) {
    out += format_number(mag);
    out += '*';
  }
  out += body;
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  bool first = true;
  for (const auto& [k, c] : e.quadratic) {
    if (c == 0.0) continue;
    append_term(out, c, k.first + "*" + k.second, first);
    first = false;
  }
  for (const auto& [v, c] : e.linear) {
    if (c == 0.0) continue;
    append_term(out, c, v, first);
    first = false;
  }
  if (e.constant != 0.0 || first) append_term(out, e.constant, "", first);
  return out;
}

std::string print_var(const Var& v) {
  std::string out = "var " + v.name + " kind=" + (v.kind == VarKind::binary ? "bin" : "cont") +
                    " lb=" + format_number(v.lb) + " ub=" + format_number(v.ub);
  if (v.tag) out += " tag=" + std::string(to_string(*v.tag));
  return out;
}

std::string print_objective(const ModelObjective& o) {
  std::string out = "min: ";
  if (o.is_min_max()) {
    out += "max(";
    for (std::size_t i = 0; i < o.max_terms.size(); ++i) out += (i ? ", " : "") + print_expr(o.max_terms[i]);
    out += ')';
  } else {
    out += print_expr(o.expr);
  }
  return out;
}

std::string print_constraint(const Constraint& c) {
  std::string head = c.name + " tag=" + std::string(to_string(c.tag)) + ": ";
  return std::visit(
      [&](const auto& row) -> std::string {
        using T = std::decay_t<decltype(row)>;
        if constexpr (std::is_same_v<T, LinearRow>) {
          return "lin " + head + print_expr(row.expr) + " " + std::string(to_string(row.rel)) + " " +
                 format_number(row.rhs);
        } else if constexpr (std::is_same_v<T, QuadRow>) {
          return "quad " + head + print_expr(row.lhs) + " <= " + print_expr(row.rhs);
        } else {
          std::string out = "soc " + head + "norm(";
          for (std::size_t i = 0; i < row.args.size(); ++i) out += (i ? ", " : "") + print_expr(row.args[i]);
          return out + ") <= " + print_expr(row.bound);
        }
      },
      c.body);
}

std::string print_model(const Model& model) {
  Model m = model;
  sort_model(m);
  std::string out = "problem " + m.name + "\n";
  if (m.horizon)
    out += "horizon T=" + std::to_string(m.horizon->steps) + " dt=" + format_number(m.horizon->dt_hours) + "\n";
  for (const auto& v : m.vars) out += print_var(v) + "\n";
  out += print_objective(m.objective) + "\n";
  for (const auto& c : m.constraints) out += print_constraint(c) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { ident, number, op, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double value = 0.0;
  int column = 0;
};

bool ident_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool ident_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.'; }

std::vector<Token> lex_line(std::string_view line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char ch = line[i];
    const int col = static_cast<int>(i) + 1;
    if (ch == '#') break;
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (ident_start(ch)) {
      std::size_t j = i;
      while (j < line.size() && ident_char(line[j])) ++j;
      out.push_back({Tok::ident, std::string(line.substr(i, j - i)), 0.0, col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
          j = k;
        }
      }
      const std::string text(line.substr(i, j - i));
      if (j < line.size() && ident_char(line[j]))
        throw DslError(line_no, col, "malformed number '" + text + std::string(1, line[j]) + "'");
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size())
        throw DslError(line_no, col, "malformed number '" + text + "'");
      out.push_back({Tok::number, text, value, col});
      i = j;
      continue;
    }
    if ((ch == '<' || ch == '>' || ch == '=') && i + 1 < line.size() && line[i + 1] == '=') {
      out.push_back({Tok::op, std::string(line.substr(i, 2)), 0.0, col});
      i += 2;
      continue;
    }
    if (std::string_view("+-*/^(),:=").find(ch) != std::string_view::npos) {
      out.push_back({Tok::op, std::string(1, ch), 0.0, col});
      ++i;
      continue;
    }
    throw DslError(line_no, col, std::string("unexpected character '") + ch + "'");
  }
  out.push_back({Tok::end, "", 0.0, static_cast<int>(line.size()) + 1});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int line_no, const std::set<std::string>* declared)
      : toks_(std::move(tokens)), line_(line_no), declared_(declared) {}

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::end; }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const Token& at, const std::string& message) const { throw DslError(line_, at.column, message); }

  bool accept_op(std::string_view op) {
    if (peek().kind == Tok::op && peek().text == op) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail(peek(), "expected '" + std::string(op) + "' but found " + describe(peek()));
  }

  std::string expect_ident(const std::string& what) {
    if (peek().kind != Tok::ident) fail(peek(), "expected " + what + " but found " + describe(peek()));
    return next().text;
  }

  void expect_end() {
    if (!at_end()) fail(peek(), "unexpected " + describe(peek()));
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::end: return "end of line";
      case Tok::number: return "number '" + t.text + "'";
      case Tok::ident: return "'" + t.text + "'";
      case Tok::op: return "'" + t.text + "'";
    }
    return "token";
  }

  // key=value where value is an identifier or signed number/inf.
  std::pair<std::string, Token> key_value() {
    Token key = peek();
    std::string k = expect_ident("key");
    expect_op("=");
    Token v = next();
    if (v.kind == Tok::op && (v.text == "-" || v.text == "+")) {
      Token rest = next();
      const double sign = v.text == "-" ? -1.0 : 1.0;
      if (rest.kind == Tok::number) {
        rest.value *= sign;
      } else if (rest.kind == Tok::ident && rest.text == "inf") {
        rest.kind = Tok::number;
        rest.value = sign * kInf;
      } else {
        fail(rest, "expected a number after sign");
      }
      rest.column = v.column;
      v = rest;
    } else if (v.kind == Tok::ident && v.text == "inf") {
      v.kind = Tok::number;
      v.value = kInf;
    } else if (v.kind != Tok::ident && v.kind != Tok::number) {
      fail(v, "expected a value for '" + k + "'");
    }
    (void)key;
    return {k, v};
  }

  double number_value(const Token& t, const std::string& key) const {
    if (t.kind != Tok::number) fail(t, "'" + key + "' expects a number");
    return t.value;
  }

  Expr expr() {
    Expr out;
    bool first = true;
    while (true) {
      double sign = 1.0;
      if (accept_op("-")) sign = -1.0;
      else if (!accept_op("+") && !first) break;
      out.add(term(), sign);
      first = false;
      if (!(peek().kind == Tok::op && (peek().text == "+" || peek().text == "-"))) break;
    }
    return std::move(out.prune());
  }

 private:
  Expr term() {
    const Token start = peek();
    Expr out = power();
    while (true) {
      if (accept_op("*")) {
        const Token at = peek();
        Expr rhs = power();
        try {
          out = multiply(out, rhs);
        } catch (const ModelError& e) {
          fail(at, e.what());
        }
      } else if (accept_op("/")) {
        const Token at = peek();
        Expr rhs = power();
        if (!rhs.is_constant() || rhs.constant == 0.0) fail(at, "division only by a nonzero number");
        out.scale(1.0 / rhs.constant);
      } else {
        break;
      }
    }
    (void)start;
    return out;
  }

  Expr power() {
    Expr base = primary();
    if (accept_op("^")) {
      const Token exp = next();
      if (exp.kind != Tok::number || (exp.value != 0.0 && exp.value != 1.0 && exp.value != 2.0))
        fail(exp, "only exponents 0, 1 and 2 are supported");
      if (exp.value == 0.0) return Expr::number(1.0);
      if (exp.value == 2.0) {
        try {
          return multiply(base, base);
        } catch (const ModelError& e) {
          fail(exp, e.what());
        }
      }
    }
    return base;
  }

  Expr primary() {
    const Token t = next();
    if (t.kind == Tok::number) return Expr::number(t.value);
    if (t.kind == Tok::ident) {
      if (t.text == "inf") fail(t, "infinite coefficient");
      if (declared_ && !declared_->contains(t.text)) fail(t, "undeclared variable '" + t.text + "'");
      return Expr::term(t.text);
    }
    if (t.kind == Tok::op && t.text == "(") {
      Expr inner = expr();
      expect_op(")");
      return inner;
    }
    if (t.kind == Tok::op && t.text == "-") return Expr().add(primary(), -1.0);
    fail(t, "expected a term but found " + describe(t));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
  const std::set<std::string>* declared_;
};

struct RowHeader {
  std::string name;
  Component tag;
};

RowHeader row_header(LineParser& p, const Token& directive) {
  RowHeader h;
  h.name = p.expect_ident("constraint name after '" + directive.text + "'");
  const Token tag_tok = p.peek();
  auto [key, value] = p.key_value();
  if (key != "tag") p.fail(tag_tok, "expected 'tag=<component>' but found '" + key + "'");
  auto comp = value.kind == Tok::ident ? component_from_string(value.text) : std::nullopt;
  if (!comp) p.fail(value, "unknown component tag '" + value.text + "'");
  h.tag = *comp;
  p.expect_op(":");
  return h;
}

}  // namespace

Model parse_model(std::string_view text, const ParseOptions& options) {
  std::vector<std::vector<Token>> lines;
  {
    std::size_t start = 0;
    int line_no = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(lex_line(line, line_no));
      start = end + 1;
    }
  }

  Model m;
  bool have_problem = false;
  std::set<std::string> declared;

  // Pass 1: header and declarations.
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    LineParser p(lines[li], line_no, nullptr);
    if (p.at_end()) continue;
    const Token head = p.next();
    if (head.kind != Tok::ident) p.fail(head, "expected a directive but found " + LineParser::describe(head));
    if (head.text == "problem") {
      if (have_problem) p.fail(head, "duplicate 'problem' line");
      m.name = p.expect_ident("problem name");
      p.expect_end();
      have_problem = true;
    } else if (head.text == "horizon") {
      if (m.horizon) p.fail(head, "duplicate 'horizon' line");
      Horizon h;
      bool have_t = false, have_dt = false;
      while (!p.at_end()) {
        const Token at = p.peek();
        auto [key, value] = p.key_value();
        if (key == "T") {
          const double t = p.number_value(value, key);
          if (t < 1 || t != std::floor(t)) p.fail(value, "T must be a positive integer");
          h.steps = static_cast<int>(t);
          have_t = true;
        } else if (key == "dt") {
          h.dt_hours = p.number_value(value, key);
          if (!(h.dt_hours > 0) || std::isinf(h.dt_hours)) p.fail(value, "dt must be positive");
          have_dt = true;
        } else {
          p.fail(at, "unknown horizon key '" + key + "'");
        }
      }
      if (!have_t || !have_dt) p.fail(head, "horizon needs T= and dt=");
      m.horizon = h;
    } else if (head.text == "var") {
      const Token name_tok = p.peek();
      Var v;
      v.name = p.expect_ident("variable name");
      bool lb_set = false, ub_set = false;
      while (!p.at_end()) {
        const Token at = p.peek();
        auto [key, value] = p.key_value();
        if (key == "kind") {
          if (value.text == "cont" || value.text == "continuous") v.kind = VarKind::continuous;
          else if (value.text == "bin" || value.text == "binary") v.kind = VarKind::binary;
          else p.fail(value, "unknown variable kind '" + value.text + "'");
        } else if (key == "lb") {
          v.lb = p.number_value(value, key);
          lb_set = true;
        } else if (key == "ub") {
          v.ub = p.number_value(value, key);
          ub_set = true;
        } else if (key == "tag") {
          auto comp = component_from_string(value.text);
          if (!comp) p.fail(value, "unknown component tag '" + value.text + "'");
          v.tag = comp;
        } else {
          p.fail(at, "unknown variable attribute '" + key + "'");
        }
      }
      if (v.kind == VarKind::binary) {
        if (!lb_set) v.lb = 0.0;
        if (!ub_set) v.ub = 1.0;
        if (v.lb < 0.0 || v.ub > 1.0)
          p.fail(name_tok, "binary variable '" + v.name + "' has bounds [" + format_number(v.lb) + "," +
                               format_number(v.ub) + "] outside [0,1]");
      }
      if (v.lb > v.ub) p.fail(name_tok, "variable '" + v.name + "' has lb > ub");
      if (!declared.insert(v.name).second) p.fail(name_tok, "variable '" + v.name + "' declared twice");
      m.vars.push_back(std::move(v));
    } else if (head.text != "min" && head.text != "lin" && head.text != "quad" && head.text != "soc") {
      p.fail(head, "unknown directive '" + head.text + "'");
    }
  }

  // Pass 2: objective and rows.
  bool have_objective = false;
  std::set<std::string> row_names;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    LineParser p(lines[li], line_no, options.require_declarations ? &declared : nullptr);
    if (p.at_end()) continue;
    const Token head = p.next();
    if (head.text == "min") {
      if (have_objective) p.fail(head, "more than one objective");
      p.expect_op(":");
      if (p.peek().kind == Tok::ident && p.peek().text == "max" && p.peek(1).kind == Tok::op && p.peek(1).text == "(") {
        p.next();
        p.next();
        do {
          m.objective.max_terms.push_back(p.expr());
        } while (p.accept_op(","));
        p.expect_op(")");
      } else {
        m.objective.expr = p.expr();
      }
      p.expect_end();
      have_objective = true;
      continue;
    }
    if (head.text != "lin" && head.text != "quad" && head.text != "soc") continue;

    const Token name_tok = p.peek();
    RowHeader h = row_header(p, head);
    if (!row_names.insert(h.name).second) p.fail(name_tok, "constraint '" + h.name + "' defined twice");

    if (head.text == "lin") {
      Expr lhs = p.expr();
      const Token rel_tok = p.next();
      Relation rel;
      if (rel_tok.kind == Tok::op && rel_tok.text == "<=") rel = Relation::le;
      else if (rel_tok.kind == Tok::op && rel_tok.text == ">=") rel = Relation::ge;
      else if (rel_tok.kind == Tok::op && (rel_tok.text == "=" || rel_tok.text == "==")) rel = Relation::eq;
      else p.fail(rel_tok, "expected '<=', '=' or '>=' but found " + LineParser::describe(rel_tok));
      Expr rhs = p.expr();
      p.expect_end();
      const double rhs_value = rhs.constant;
      rhs.constant = 0.0;
      lhs.add(rhs, -1.0);
      m.constraints.push_back({h.name, h.tag, LinearRow{std::move(lhs.prune()), rel, rhs_value}});
    } else if (head.text == "quad") {
      Expr lhs = p.expr();
      p.expect_op("<=");
      const Token rhs_tok = p.peek();
      Expr rhs = p.expr();
      p.expect_end();
      if (!rhs.is_affine()) p.fail(rhs_tok, "right-hand side of a quad row must be affine");
      m.constraints.push_back({h.name, h.tag, QuadRow{std::move(lhs), std::move(rhs)}});
    } else {
      const Token norm_tok = p.peek();
      if (p.expect_ident("'norm'") != "norm") p.fail(norm_tok, "soc rows start with norm(...)");
      p.expect_op("(");
      ConeRow row;
      do {
        const Token at = p.peek();
        row.args.push_back(p.expr());
        if (!row.args.back().is_affine()) p.fail(at, "cone arguments must be affine");
      } while (p.accept_op(","));
      p.expect_op(")");
      p.expect_op("<=");
      const Token bound_tok = p.peek();
      row.bound = p.expr();
      p.expect_end();
      if (!row.bound.is_affine()) p.fail(bound_tok, "cone bound must be affine");
      m.constraints.push_back({h.name, h.tag, std::move(row)});
    }
  }
  if (!have_objective && options.require_objective)
    throw DslError(static_cast<int>(lines.size()), 1, "missing 'min:' objective");
  if (options.require_declarations) validate_model(m);
  return m;
}

}  // namespace adn
