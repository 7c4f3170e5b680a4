#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "adn/case.hpp"

namespace adn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Grading axes; every row and the objective carry one.
enum class Component { objective, equipment, power_flow, additional, convexification };

inline constexpr Component kAllComponents[] = {Component::objective, Component::equipment, Component::power_flow,
                                               Component::additional, Component::convexification};

std::string_view to_string(Component c);
std::optional<Component> component_from_string(std::string_view name);

enum class VarKind { continuous, binary };

struct Var {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = -kInf;
  double ub = kInf;
  std::optional<Component> tag;

  bool operator==(const Var&) const = default;
};

// Unordered variable pair, stored with first <= second.
using QuadKey = std::pair<std::string, std::string>;
QuadKey quad_key(std::string a, std::string b);

using Assignment = std::unordered_map<std::string, double>;

struct Expr {
  double constant = 0.0;
  std::map<std::string, double> linear;
  std::map<QuadKey, double> quadratic;

  static Expr number(double c);
  static Expr term(const std::string& var, double coef = 1.0);
  static Expr square(const std::string& var, double coef = 1.0);

  Expr& add(const Expr& other, double scale = 1.0);
  Expr& add_term(const std::string& var, double coef);
  Expr& add_quad(const std::string& a, const std::string& b, double coef);
  Expr& scale(double s);
  // Drops exact-zero coefficients.
  Expr& prune();

  bool is_affine() const { return quadratic.empty(); }
  bool is_constant() const { return quadratic.empty() && linear.empty(); }
  int degree() const { return !quadratic.empty() ? 2 : !linear.empty() ? 1 : 0; }
  std::vector<std::string> variables() const;
  double evaluate(const Assignment& values) const;

  bool operator==(const Expr&) const = default;
};

Expr operator+(Expr a, const Expr& b);
Expr operator-(Expr a, const Expr& b);
Expr operator*(double s, Expr e);
// Product of two expressions; throws ModelError if the degree exceeds 2.
Expr multiply(const Expr& a, const Expr& b);

enum class Relation { le, eq, ge };
std::string_view to_string(Relation r);

// expr rel rhs; expr may carry quadratic terms before canonicalization.
struct LinearRow {
  Expr expr;
  Relation rel = Relation::le;
  double rhs = 0.0;

  bool operator==(const LinearRow&) const = default;
};

// lhs <= rhs with rhs affine.
struct QuadRow {
  Expr lhs;
  Expr rhs;

  bool operator==(const QuadRow&) const = default;
};

// norm(args) <= bound, all affine.
struct ConeRow {
  std::vector<Expr> args;
  Expr bound;

  bool operator==(const ConeRow&) const = default;
};

using RowBody = std::variant<LinearRow, QuadRow, ConeRow>;

struct Constraint {
  std::string name;
  Component tag = Component::equipment;
  RowBody body;

  bool is_linear() const { return std::holds_alternative<LinearRow>(body); }
  bool is_cone() const { return std::holds_alternative<ConeRow>(body); }
  bool is_quad() const { return std::holds_alternative<QuadRow>(body); }
  std::vector<std::string> variables() const;

  bool operator==(const Constraint&) const = default;
};

// min expr, or min max(terms) before epigraph reformulation.
struct ModelObjective {
  Expr expr;
  std::vector<Expr> max_terms;

  bool is_min_max() const { return !max_terms.empty(); }
  bool operator==(const ModelObjective&) const = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Model {
  std::string name = "model";
  std::optional<Horizon> horizon;
  std::vector<Var> vars;
  std::vector<Constraint> constraints;
  ModelObjective objective;

  const Var* find_var(std::string_view name) const;
  Var* find_var(std::string_view name);
  bool has_var(std::string_view name) const { return find_var(name) != nullptr; }
  // Throws ModelError on a name collision.
  Var& add_var(Var v);
  Constraint& add_constraint(std::string name, Component tag, RowBody body);
  const Constraint* find_constraint(std::string_view name) const;

  int binary_count() const;
  std::vector<const Constraint*> rows_with(Component tag) const;

  bool operator==(const Model& o) const {
    return name == o.name && horizon == o.horizon && vars == o.vars && constraints == o.constraints &&
           objective == o.objective;
  }

 private:
  // Name lookup cache over `vars`; rebuilt whenever it disagrees with the vector.
  mutable std::unordered_map<std::string, std::size_t> var_index_;
  mutable const Var* indexed_data_ = nullptr;
  std::size_t lookup(std::string_view name) const;
};

// Structural invariants: unique declarations, declared references, bounds, cone dimension.
void validate_model(const Model& m);

// Vars by name, constraints by (component, name).
void sort_model(Model& m);

}  // namespace adn
