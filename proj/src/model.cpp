#include "adn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace adn {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::objective: return "objective";
    case Component::equipment: return "equipment";
    case Component::power_flow: return "power_flow";
    case Component::additional: return "additional";
    case Component::convexification: return "convexification";
  }
  return "?";
}

std::optional<Component> component_from_string(std::string_view name) {
  for (auto c : kAllComponents)
    if (to_string(c) == name) return c;
  return std::nullopt;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::eq: return "=";
    case Relation::ge: return ">=";
  }
  return "?";
}

QuadKey quad_key(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Expr

Expr Expr::number(double c) {
  Expr e;
  e.constant = c;
  return e;
}

Expr Expr::term(const std::string& var, double coef) {
  Expr e;
  e.add_term(var, coef);
  return e;
}

Expr Expr::square(const std::string& var, double coef) {
  Expr e;
  e.add_quad(var, var, coef);
  return e;
}

Expr& Expr::add(const Expr& other, double s) {
  constant += s * other.constant;
  for (const auto& [v, c] : other.linear) add_term(v, s * c);
  for (const auto& [k, c] : other.quadratic) add_quad(k.first, k.second, s * c);
  return *this;
}

Expr& Expr::add_term(const std::string& var, double coef) {
  double& slot = linear[var];
  slot += coef;
  if (slot == 0.0) linear.erase(var);
  return *this;
}

Expr& Expr::add_quad(const std::string& a, const std::string& b, double coef) {
  auto key = quad_key(a, b);
  double& slot = quadratic[key];
  slot += coef;
  if (slot == 0.0) quadratic.erase(key);
  return *this;
}

Expr& Expr::scale(double s) {
  constant *= s;
  for (auto& [v, c] : linear) c *= s;
  for (auto& [k, c] : quadratic) c *= s;
  return prune();
}

Expr& Expr::prune() {
  if (constant == 0.0) constant = 0.0;  // folds -0
  std::erase_if(linear, [](const auto& kv) { return kv.second == 0.0; });
  std::erase_if(quadratic, [](const auto& kv) { return kv.second == 0.0; });
  return *this;
}

std::vector<std::string> Expr::variables() const {
  std::set<std::string> names;
  for (const auto& [v, c] : linear) names.insert(v);
  for (const auto& [k, c] : quadratic) {
    names.insert(k.first);
    names.insert(k.second);
  }
  return {names.begin(), names.end()};
}

double Expr::evaluate(const Assignment& values) const {
  auto value = [&](const std::string& v) {
    auto it = values.find(v);
    if (it == values.end()) throw ModelError("no value for variable '" + v + "'");
    return it->second;
  };
  double sum = constant;
  for (const auto& [v, c] : linear) sum += c * value(v);
  for (const auto& [k, c] : quadratic) sum += c * value(k.first) * value(k.second);
  return sum;
}

Expr operator+(Expr a, const Expr& b) { return std::move(a.add(b)); }
Expr operator-(Expr a, const Expr& b) { return std::move(a.add(b, -1.0)); }
Expr operator*(double s, Expr e) { return std::move(e.scale(s)); }

Expr multiply(const Expr& a, const Expr& b) {
  if (a.degree() + b.degree() > 2) throw ModelError("product exceeds degree 2");
  Expr out;
  out.constant = a.constant * b.constant;
  for (const auto& [v, c] : a.linear) out.add_term(v, c * b.constant);
  for (const auto& [v, c] : b.linear) out.add_term(v, c * a.constant);
  for (const auto& [k, c] : a.quadratic) out.add_quad(k.first, k.second, c * b.constant);
  for (const auto& [k, c] : b.quadratic) out.add_quad(k.first, k.second, c * a.constant);
  for (const auto& [va, ca] : a.linear)
    for (const auto& [vb, cb] : b.linear) out.add_quad(va, vb, ca * cb);
  return std::move(out.prune());
}

// ---------------------------------------------------------------------------
// Constraint / Model

std::vector<std::string> Constraint::variables() const {
  std::set<std::string> names;
  auto collect = [&](const Expr& e) {
    for (auto& v : e.variables()) names.insert(std::move(v));
  };
  std::visit(
      [&](const auto& row) {
        using T = std::decay_t<decltype(row)>;
        if constexpr (std::is_same_v<T, LinearRow>) {
          collect(row.expr);
        } else if constexpr (std::is_same_v<T, QuadRow>) {
          collect(row.lhs);
          collect(row.rhs);
        } else {
          for (const auto& a : row.args) collect(a);
          collect(row.bound);
        }
      },
      body);
  return {names.begin(), names.end()};
}

std::size_t Model::lookup(std::string_view name) const {
  auto rebuild = [&] {
    var_index_.clear();
    for (std::size_t i = 0; i < vars.size(); ++i) var_index_.emplace(vars[i].name, i);
    indexed_data_ = vars.data();
  };
  if (var_index_.size() != vars.size() || indexed_data_ != vars.data()) rebuild();
  auto it = var_index_.find(std::string(name));
  if (it != var_index_.end() && it->second < vars.size() && vars[it->second].name == name) return it->second;
  if (it != var_index_.end()) {
    rebuild();
    it = var_index_.find(std::string(name));
    if (it != var_index_.end()) return it->second;
  }
  return vars.size();
}

const Var* Model::find_var(std::string_view name) const {
  const auto i = lookup(name);
  return i < vars.size() ? &vars[i] : nullptr;
}

Var* Model::find_var(std::string_view name) {
  const auto i = lookup(name);
  return i < vars.size() ? &vars[i] : nullptr;
}

Var& Model::add_var(Var v) {
  if (has_var(v.name)) throw ModelError("symbol collision: variable '" + v.name + "' declared twice");
  vars.push_back(std::move(v));
  return vars.back();
}

Constraint& Model::add_constraint(std::string row_name, Component tag, RowBody body) {
  constraints.push_back(Constraint{std::move(row_name), tag, std::move(body)});
  return constraints.back();
}

const Constraint* Model::find_constraint(std::string_view row_name) const {
  for (const auto& c : constraints)
    if (c.name == row_name) return &c;
  return nullptr;
}

int Model::binary_count() const {
  return static_cast<int>(std::count_if(vars.begin(), vars.end(), [](const Var& v) { return v.kind == VarKind::binary; }));
}

std::vector<const Constraint*> Model::rows_with(Component tag) const {
  std::vector<const Constraint*> out;
  for (const auto& c : constraints)
    if (c.tag == tag) out.push_back(&c);
  return out;
}

void validate_model(const Model& m) {
  std::set<std::string> declared;
  for (const auto& v : m.vars) {
    if (v.name.empty()) throw ModelError("variable with empty name");
    if (!declared.insert(v.name).second) throw ModelError("variable '" + v.name + "' declared twice");
    if (std::isnan(v.lb) || std::isnan(v.ub)) throw ModelError("variable '" + v.name + "' has a NaN bound");
    if (v.lb > v.ub) throw ModelError("variable '" + v.name + "' has lb > ub");
    if (v.kind == VarKind::binary && (v.lb < 0.0 || v.ub > 1.0))
      throw ModelError("binary variable '" + v.name + "' has bounds outside [0,1]");
  }
  auto check_refs = [&](const std::vector<std::string>& names, const std::string& where) {
    for (const auto& n : names)
      if (!declared.contains(n)) throw ModelError(where + ": undeclared variable '" + n + "'");
  };
  std::set<std::string> row_names;
  for (const auto& c : m.constraints) {
    if (!row_names.insert(c.name).second) throw ModelError("constraint '" + c.name + "' defined twice");
    check_refs(c.variables(), "constraint '" + c.name + "'");
    if (const auto* q = std::get_if<QuadRow>(&c.body); q && !q->rhs.is_affine())
      throw ModelError("constraint '" + c.name + "': quadratic right-hand side");
    if (const auto* s = std::get_if<ConeRow>(&c.body)) {
      if (s->args.empty()) throw ModelError("constraint '" + c.name + "': cone dimension below 2");
      for (const auto& a : s->args)
        if (!a.is_affine()) throw ModelError("constraint '" + c.name + "': non-affine cone argument");
      if (!s->bound.is_affine()) throw ModelError("constraint '" + c.name + "': non-affine cone bound");
    }
  }
  check_refs(m.objective.expr.variables(), "objective");
  for (const auto& t : m.objective.max_terms) check_refs(t.variables(), "objective");
  if (m.objective.is_min_max() && !m.objective.expr.is_constant())
    throw ModelError("objective mixes a max(...) intent with other terms");
}

void sort_model(Model& m) {
  std::sort(m.vars.begin(), m.vars.end(), [](const Var& a, const Var& b) { return a.name < b.name; });
  std::stable_sort(m.constraints.begin(), m.constraints.end(), [](const Constraint& a, const Constraint& b) {
    return std::tie(a.tag, a.name) < std::tie(b.tag, b.name);
  });
}

}  // namespace adn
