#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adn/model.hpp"

namespace adn {

enum class SolveStatus { optimal, infeasible, unbounded, node_limit, iteration_limit };

std::string_view to_string(SolveStatus s);
std::optional<SolveStatus> solve_status_from_string(std::string_view word);

struct SolveOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  // Accepted when the iteration stalls before reaching the tolerances above.
  double reduced_tol = 1e-6;
  double integrality_tol = 1e-6;
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  int node_limit = 10000;
  // Ties between equal node bounds broken by creation order.
  bool deterministic = true;

  // Throws SolverError unless every tolerance and limit is positive.
  void validate() const;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct IncumbentRecord {
  int node = 0;
  double objective = 0.0;
};

struct BranchStats {
  int nodes = 0;
  double root_bound = std::numeric_limits<double>::quiet_NaN();
  std::vector<IncumbentRecord> incumbents;
};

struct Solution {
  SolveStatus status = SolveStatus::iteration_limit;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Assignment values;
  Residuals residuals;
  // Worst violation of the original rows and bounds at the returned point.
  double max_violation = 0.0;
  int iterations = 0;
  // Optimal only within SolveOptions::reduced_tol after a numerical stall.
  bool reduced_accuracy = false;
  // Normalized dual-ray residual for infeasible, primal-ray residual for unbounded.
  std::optional<double> certificate_residual;
  BranchStats branch;

  bool optimal() const { return status == SolveStatus::optimal; }
  double value(std::string_view name) const;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Worst violation of rows and variable bounds (quadratic rows evaluated as written).
double max_violation(const Model& m, const Assignment& values);

// Continuous LP+SOC model in canonical form. Binary variables must be fixed.
Solution solve_socp(const Model& m, const SolveOptions& opts = {});
// Best-first branch-and-bound over binaries with solve_socp relaxations.
Solution solve_misocp(const Model& m, const SolveOptions& opts = {});

// Generic file exchange: canonical DSL out, `<var> <value>` lines plus `status <word>` back.
std::string write_exchange_model(const Model& m);
Solution read_exchange_solution(std::string_view text, const Model& m);
// Runs `command` with {model} and {solution} replaced by file paths inside work_dir.
Solution solve_external(const Model& m, const std::string& command, const std::string& work_dir);

}  // namespace adn
