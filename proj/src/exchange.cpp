#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>

#include "adn/dsl.hpp"
#include "adn/solver.hpp"
#include "adn/util.hpp"

namespace adn {

std::string write_exchange_model(const Model& m) { return print_model(m); }

Solution read_exchange_solution(std::string_view text, const Model& m) {
  Solution sol;
  bool have_status = false;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(trim(text.substr(start, end - start)));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto space = line.find_first_of(" \t");
    if (space == std::string::npos)
      throw SolverError("solution line " + std::to_string(line_no) + ": expected '<name> <value>'");
    const std::string key = line.substr(0, space);
    const std::string rest(trim(std::string_view(line).substr(space + 1)));
    if (key == "status") {
      auto st = solve_status_from_string(rest);
      if (!st) throw SolverError("solution line " + std::to_string(line_no) + ": unknown status '" + rest + "'");
      sol.status = *st;
      have_status = true;
      continue;
    }
    if (!m.has_var(key))
      throw SolverError("solution line " + std::to_string(line_no) + ": unknown variable '" + key + "'");
    if (!seen.insert(key).second)
      throw SolverError("solution line " + std::to_string(line_no) + ": duplicate value for '" + key + "'");
    char* endp = nullptr;
    const double value = std::strtod(rest.c_str(), &endp);
    if (endp == rest.c_str() || *endp != '\0')
      throw SolverError("solution line " + std::to_string(line_no) + ": malformed value '" + rest + "'");
    sol.values[key] = value;
  }
  if (!have_status) throw SolverError("solution has no status line");
  if (sol.status == SolveStatus::optimal) {
    for (const auto& v : m.vars)
      if (!sol.values.contains(v.name)) throw SolverError("solution misses variable '" + v.name + "'");
    sol.objective = m.objective.is_min_max() ? std::numeric_limits<double>::quiet_NaN()
                                             : m.objective.expr.evaluate(sol.values);
    sol.max_violation = max_violation(m, sol.values);
  }
  return sol;
}

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) s.replace(pos, from.size(), to);
}

}  // namespace

Solution solve_external(const Model& m, const std::string& command, const std::string& work_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir);
  const std::string model_path = (fs::path(work_dir) / "model.adn").string();
  const std::string solution_path = (fs::path(work_dir) / "solution.txt").string();
  write_file(model_path, write_exchange_model(m));
  std::error_code ec;
  fs::remove(solution_path, ec);
  std::string cmd = command;
  replace_all(cmd, "{model}", model_path);
  replace_all(cmd, "{solution}", solution_path);
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw SolverError("external solver exited with status " + std::to_string(rc));
  if (!fs::exists(solution_path)) throw SolverError("external solver wrote no solution file");
  return read_exchange_solution(read_file(solution_path), m);
}

}  // namespace adn
