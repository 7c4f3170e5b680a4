#include "adn/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>

#include "adn/util.hpp"

namespace adn {

namespace {

// Variables linked by quadratic terms, each group sorted by name.
std::vector<std::vector<std::string>> quadratic_groups(const Expr& e) {
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& v) -> std::string {
    auto& p = parent[v];
    if (p.empty() || p == v) {
      p = v;
      return v;
    }
    p = find(p);
    return p;
  };
  for (const auto& [k, c] : e.quadratic) {
    const auto a = find(k.first);
    const auto b = find(k.second);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [v, p] : parent) groups[find(v)].push_back(v);
  std::vector<std::vector<std::string>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

struct SquaresForm {
  std::vector<Expr> args;  // f(x) = sum args_k^2 + rest
  Expr rest;               // affine
};

// Writes f as a sum of squares of affine terms plus an affine remainder.
SquaresForm as_squares(const Expr& f, const std::string& where) {
  SquaresForm out;
  out.rest.constant = f.constant;
  out.rest.linear = f.linear;
  for (const auto& group : quadratic_groups(f)) {
    if (group.size() == 1) {
      const auto& x = group.front();
      const double a = f.quadratic.at({x, x});
      if (a < 0) throw ModelError("non-convex quadratic in " + where + ": negative square coefficient on '" + x + "'");
      const double beta = f.linear.contains(x) ? f.linear.at(x) : 0.0;
      const double root = std::sqrt(a);
      Expr arg = Expr::term(x, root);
      arg.constant = beta / (2.0 * root);
      out.args.push_back(std::move(arg.prune()));
      out.rest.linear.erase(x);
      out.rest.constant -= beta * beta / (4.0 * a);
      continue;
    }
    const int n = static_cast<int>(group.size());
    std::map<std::string, int> index;
    for (int i = 0; i < n; ++i) index[group[i]] = i;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (const auto& [k, c] : f.quadratic) {
      auto it = index.find(k.first);
      if (it == index.end()) continue;
      const int i = it->second, j = index.at(k.second);
      if (i == j) q(i, i) += c;
      else {
        q(i, j) += 0.5 * c;
        q(j, i) += 0.5 * c;
      }
    }
    for (int i = 0; i < n; ++i)
      if (auto it = f.linear.find(group[i]); it != f.linear.end()) b(i) = it->second;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
    const auto& lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    if (lambda.minCoeff() < -tol)
      throw ModelError("non-convex quadratic in " + where + ": cross terms over '" + group.front() +
                       "' are not a sum of squares");
    Eigen::VectorXd residual = b;
    for (int k = 0; k < n; ++k) {
      if (lambda(k) <= tol) continue;
      const Eigen::VectorXd u = eig.eigenvectors().col(k);
      const double beta = u.dot(b);
      const double root = std::sqrt(lambda(k));
      Expr arg;
      for (int i = 0; i < n; ++i)
        if (std::abs(u(i)) > 1e-15) arg.add_term(group[i], root * u(i));
      arg.constant = beta / (2.0 * root);
      out.args.push_back(std::move(arg.prune()));
      residual -= beta * u;
      out.rest.constant -= beta * beta / (4.0 * lambda(k));
    }
    const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
      if (std::abs(residual(i)) <= 1e-12 * bscale) out.rest.linear.erase(group[i]);
      else out.rest.linear[group[i]] = residual(i);
    }
  }
  out.rest.prune();
  return out;
}

// sum args^2 <= w as a cone row.
ConeRow bounded_squares(std::vector<Expr> args, Expr w) {
  ConeRow row;
  if (w.is_constant() && w.constant >= 0.0) {
    row.args = std::move(args);
    row.bound = Expr::number(std::sqrt(w.constant));
    return row;
  }
  for (auto& a : args) row.args.push_back(std::move(a.scale(2.0)));
  Expr minus = w;
  minus.constant -= 1.0;
  Expr plus = w;
  plus.constant += 1.0;
  row.args.push_back(std::move(minus.prune()));
  row.bound = std::move(plus.prune());
  return row;
}

// f(x) <= 0 with f possibly quadratic.
RowBody lower_le_zero(const Expr& f, const std::string& where) {
  if (f.is_affine()) {
    Expr e = f;
    const double rhs = -e.constant;
    e.constant = 0.0;
    return LinearRow{std::move(e.prune()), Relation::le, rhs == 0.0 ? 0.0 : rhs};
  }
  auto sq = as_squares(f, where);
  if (sq.args.empty()) {
    Expr e = sq.rest;
    const double rhs = -e.constant;
    e.constant = 0.0;
    return LinearRow{std::move(e), Relation::le, rhs == 0.0 ? 0.0 : rhs};
  }
  return bounded_squares(std::move(sq.args), std::move(sq.rest.scale(-1.0)));
}

std::string unique_name(const Model& m, const std::string& base) {
  if (!m.has_var(base)) return base;
  for (int i = 2;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!m.has_var(candidate)) return candidate;
  }
}

}  // namespace

Model canonicalize(const Model& input) {
  validate_model(input);
  if (input.objective.is_min_max())
    throw ModelError("objective is still a min-max intent; reformulate with an epigraph variable first");
  Model out;
  out.name = input.name;
  out.horizon = input.horizon;
  out.vars = input.vars;

  for (const auto& c : input.constraints) {
    const std::string where = "row '" + c.name + "'";
    if (const auto* lin = std::get_if<LinearRow>(&c.body)) {
      if (lin->expr.is_affine()) {
        LinearRow row = *lin;
        row.rhs -= row.expr.constant;
        if (row.rhs == 0.0) row.rhs = 0.0;
        row.expr.constant = 0.0;
        row.expr.prune();
        out.constraints.push_back({c.name, c.tag, std::move(row)});
        continue;
      }
      if (lin->rel == Relation::eq) throw ModelError("non-convex quadratic equality in " + where);
      Expr f = lin->expr;
      f.constant -= lin->rhs;
      if (lin->rel == Relation::ge) f.scale(-1.0);
      out.constraints.push_back({c.name, c.tag, lower_le_zero(f, where)});
    } else if (const auto* quad = std::get_if<QuadRow>(&c.body)) {
      out.constraints.push_back({c.name, c.tag, lower_le_zero(quad->lhs - quad->rhs, where)});
    } else {
      ConeRow row = std::get<ConeRow>(c.body);
      for (auto& a : row.args) a.prune();
      row.bound.prune();
      out.constraints.push_back({c.name, c.tag, std::move(row)});
    }
  }

  const Expr& obj = input.objective.expr;
  if (obj.is_affine()) {
    out.objective.expr = obj;
    out.objective.expr.prune();
  } else {
    Expr linear_part;
    linear_part.constant = obj.constant;
    linear_part.linear = obj.linear;
    for (const auto& group : quadratic_groups(obj)) {
      Expr piece;
      for (const auto& [k, c] : obj.quadratic)
        if (std::binary_search(group.begin(), group.end(), k.first)) piece.quadratic[k] = c;
      for (const auto& v : group)
        if (auto it = obj.linear.find(v); it != obj.linear.end()) {
          piece.linear[v] = it->second;
          linear_part.linear.erase(v);
        }
      auto sq = as_squares(piece, "objective");
      linear_part.add(sq.rest);
      if (sq.args.empty()) continue;
      const std::string epi = unique_name(out, "epi_" + group.front());
      out.add_var(Var{epi, VarKind::continuous, 0.0, kInf, Component::objective});
      out.constraints.push_back(
          {"obj.epi." + group.front(), Component::objective, bounded_squares(std::move(sq.args), Expr::term(epi))});
      linear_part.add_term(epi, 1.0);
    }
    out.objective.expr = std::move(linear_part.prune());
  }
  sort_model(out);
  validate_model(out);
  return out;
}

bool is_canonical(const Model& m) {
  if (m.objective.is_min_max() || !m.objective.expr.is_affine()) return false;
  for (const auto& c : m.constraints) {
    if (c.is_quad()) return false;
    if (const auto* lin = std::get_if<LinearRow>(&c.body); lin && !lin->expr.is_affine()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Component diff

std::string_view to_string(DiffOutcome o) {
  switch (o) {
    case DiffOutcome::match: return "match";
    case DiffOutcome::partial: return "partial";
    case DiffOutcome::missing: return "missing";
  }
  return "?";
}

namespace {

struct Signature {
  std::string shape;
  std::vector<double> values;
  std::string name;
};

void append_affine(const Expr& e, double scale, std::string& shape, std::vector<double>& values) {
  shape += '[';
  for (const auto& [v, c] : e.linear) {
    shape += v;
    shape += ',';
    values.push_back(c / scale);
  }
  shape += ']';
  values.push_back(e.constant / scale);
}

double max_abs(const Expr& e) {
  double m = std::abs(e.constant);
  for (const auto& [v, c] : e.linear) m = std::max(m, std::abs(c));
  for (const auto& [k, c] : e.quadratic) m = std::max(m, std::abs(c));
  return m;
}

double first_sign(const Expr& e) {
  for (const auto& [v, c] : e.linear)
    if (c != 0.0) return c > 0 ? 1.0 : -1.0;
  return e.constant < 0 ? -1.0 : 1.0;
}

Signature signature_of(const Constraint& c) {
  Signature s;
  s.name = c.name;
  if (const auto* lin = std::get_if<LinearRow>(&c.body)) {
    Expr e = lin->expr;
    double rhs = lin->rhs - e.constant;
    e.constant = 0.0;
    Relation rel = lin->rel;
    if (rel == Relation::ge) {
      e.scale(-1.0);
      rhs = -rhs;
      rel = Relation::le;
    }
    double scale = max_abs(e);
    if (scale == 0.0) scale = 1.0;
    if (rel == Relation::eq) scale *= first_sign(e);
    s.shape = rel == Relation::eq ? "eq" : "le";
    append_affine(e, scale, s.shape, s.values);
    s.values.push_back(rhs / scale);
    return s;
  }
  if (const auto* quad = std::get_if<QuadRow>(&c.body)) {
    // Only reachable for non-canonical input; compared verbatim.
    s.shape = "quad";
    Expr f = quad->lhs - quad->rhs;
    for (const auto& [k, v] : f.quadratic) {
      s.shape += k.first + "*" + k.second + ",";
      s.values.push_back(v);
    }
    append_affine(f, 1.0, s.shape, s.values);
    return s;
  }
  const auto& cone = std::get<ConeRow>(c.body);
  double scale = max_abs(cone.bound);
  if (scale == 0.0)
    for (const auto& a : cone.args) scale = std::max(scale, max_abs(a));
  if (scale == 0.0) scale = 1.0;
  std::vector<std::pair<std::string, std::vector<double>>> args;
  for (const auto& a : cone.args) {
    std::string shape;
    std::vector<double> values;
    append_affine(a, scale * first_sign(a), shape, values);
    args.emplace_back(std::move(shape), std::move(values));
  }
  std::sort(args.begin(), args.end());
  s.shape = "cone";
  append_affine(cone.bound, scale, s.shape, s.values);
  for (auto& [shape, values] : args) {
    s.shape += shape;
    s.values.insert(s.values.end(), values.begin(), values.end());
  }
  return s;
}

std::vector<Signature> component_signatures(const Model& m, Component comp) {
  std::vector<Signature> out;
  if (comp == Component::objective) {
    Signature s;
    s.name = "objective";
    s.shape = "obj";
    if (m.objective.is_min_max()) {
      s.shape += "max";
      for (const auto& t : m.objective.max_terms) append_affine(t, 1.0, s.shape, s.values);
    } else {
      append_affine(m.objective.expr, 1.0, s.shape, s.values);
    }
    out.push_back(std::move(s));
  }
  for (const auto& c : m.constraints)
    if (c.tag == comp) out.push_back(signature_of(c));
  return out;
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(std::abs(a[i] - b[i]) <= tol)) return false;
  return true;
}

}  // namespace

ModelDiff diff_components(const Model& reference, const Model& candidate, double tolerance) {
  ModelDiff out;
  for (auto comp : kAllComponents) {
    auto ref = component_signatures(reference, comp);
    auto cand = component_signatures(candidate, comp);
    std::unordered_map<std::string, std::vector<std::size_t>> pool;
    for (std::size_t i = 0; i < cand.size(); ++i) pool[cand[i].shape].push_back(i);
    std::vector<bool> used(cand.size(), false);

    ComponentDiff d;
    d.reference_rows = static_cast<int>(ref.size());
    d.candidate_rows = static_cast<int>(cand.size());
    for (const auto& r : ref) {
      bool found = false;
      if (auto it = pool.find(r.shape); it != pool.end()) {
        for (auto idx : it->second) {
          if (used[idx] || !close(r.values, cand[idx].values, tolerance)) continue;
          used[idx] = true;
          found = true;
          break;
        }
      }
      if (found) ++d.matched;
      else d.only_in_reference.push_back(r.name);
    }
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (!used[i]) d.only_in_candidate.push_back(cand[i].name);

    if (ref.empty() && cand.empty()) d.outcome = DiffOutcome::match;
    else if (d.only_in_reference.empty() && d.only_in_candidate.empty()) d.outcome = DiffOutcome::match;
    else if (cand.empty()) d.outcome = DiffOutcome::missing;
    else if (ref.empty() || d.matched > 0) d.outcome = DiffOutcome::partial;
    else d.outcome = DiffOutcome::missing;
    out[comp] = std::move(d);
  }
  return out;
}

}  // namespace adn
