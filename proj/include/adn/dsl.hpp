#pragma once

#include <string>
#include <string_view>

#include "adn/model.hpp"

namespace adn {

class DslError : public ModelError {
 public:
  DslError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Deterministic text: vars sorted by name, constraints by (component, name).
std::string print_model(const Model& m);
std::string print_expr(const Expr& e);
std::string print_var(const Var& v);
std::string print_constraint(const Constraint& c);
std::string print_objective(const ModelObjective& o);

struct ParseOptions {
  bool require_objective = true;
  // When false, references to undeclared variables are accepted (partial scripts).
  bool require_declarations = true;
};

// Accepts comments, blank lines and declarations after use. Errors carry line and column.
Model parse_model(std::string_view text, const ParseOptions& options = {});

}  // namespace adn
