#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>

#include "adn/solver.hpp"

namespace adn {

namespace {

struct Node {
  int id = 0;
  double bound = 0.0;
  std::vector<std::pair<std::string, double>> fixings;
  Assignment binary_values;
};

struct NodeOrder {
  bool deterministic = true;
  bool operator()(const Node* a, const Node* b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return deterministic ? a->id > b->id : false;
  }
};

void fix(Model& m, const std::string& name, double value) {
  Var* v = m.find_var(name);
  v->lb = v->ub = value;
}

// Most fractional binary, lowest name on ties; empty when all are integral.
std::optional<std::string> branching_variable(const std::vector<std::string>& binaries, const Assignment& values,
                                              double tol) {
  std::optional<std::string> best;
  double best_frac = -1.0;
  for (const auto& name : binaries) {
    const double v = values.at(name);
    const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
    if (frac <= tol) continue;
    if (frac > best_frac + 1e-12 || (std::abs(frac - best_frac) <= 1e-12 && name < *best)) {
      best = name;
      best_frac = frac;
    }
  }
  return best;
}

Assignment binary_values(const std::vector<std::string>& binaries, const Solution& s) {
  Assignment out;
  for (const auto& name : binaries) out[name] = s.value(name);
  return out;
}

Model with_fixings(const Model& base, const std::vector<std::pair<std::string, double>>& fixings) {
  Model m = base;
  for (const auto& [name, value] : fixings) fix(m, name, value);
  return m;
}

}  // namespace

Solution solve_misocp(const Model& m, const SolveOptions& opts) {
  opts.validate();
  std::vector<std::string> binaries;
  Model relaxed = m;
  for (auto& v : relaxed.vars)
    if (v.kind == VarKind::binary) {
      v.kind = VarKind::continuous;
      if (v.lb != v.ub) binaries.push_back(v.name);
    }
  std::sort(binaries.begin(), binaries.end());

  Solution root = solve_socp(relaxed, opts);
  root.branch.nodes = 1;
  if (binaries.empty() || root.status != SolveStatus::optimal) return root;
  root.branch.root_bound = root.objective;

  std::vector<std::unique_ptr<Node>> storage;
  std::priority_queue<Node*, std::vector<Node*>, NodeOrder> open(NodeOrder{opts.deterministic});
  int nodes = 1;
  bool numerical_trouble = false;
  storage.push_back(std::make_unique<Node>(Node{0, root.objective, {}, binary_values(binaries, root)}));
  open.push(storage.back().get());

  std::optional<Solution> incumbent;
  std::vector<IncumbentRecord> history;
  SolveStatus final_status = SolveStatus::optimal;

  while (!open.empty()) {
    Node* node = open.top();
    open.pop();
    if (incumbent) {
      const double tol = std::max(opts.abs_gap, opts.rel_gap * std::abs(incumbent->objective));
      if (node->bound >= incumbent->objective - tol) break;
    }
    auto branch = branching_variable(binaries, node->binary_values, opts.integrality_tol);
    if (branch && !incumbent) {
      // Rounding heuristic until a first incumbent exists.
      std::vector<std::pair<std::string, double>> rounded;
      for (const auto& name : binaries) rounded.emplace_back(name, node->binary_values.at(name) > 0.5 ? 1.0 : 0.0);
      Solution cand = solve_socp(with_fixings(relaxed, rounded), opts);
      ++nodes;
      if (cand.status == SolveStatus::optimal) {
        incumbent = cand;
        history.push_back({node->id, cand.objective});
        const double tol = std::max(opts.abs_gap, opts.rel_gap * std::abs(cand.objective));
        if (node->bound >= cand.objective - tol) break;
      }
    }
    if (!branch) {
      // Integral: polish with every binary fixed at its rounded value.
      std::vector<std::pair<std::string, double>> all;
      for (const auto& name : binaries) all.emplace_back(name, std::round(node->binary_values.at(name)));
      Solution cand = solve_socp(with_fixings(relaxed, all), opts);
      ++nodes;
      if (cand.status != SolveStatus::optimal) {
        numerical_trouble = true;
        continue;
      }
      if (!incumbent || cand.objective < incumbent->objective) {
        incumbent = cand;
        history.push_back({node->id, cand.objective});
      }
      continue;
    }
    for (double value : {0.0, 1.0}) {
      if (nodes >= opts.node_limit) {
        final_status = SolveStatus::node_limit;
        break;
      }
      auto fixings = node->fixings;
      fixings.emplace_back(*branch, value);
      Solution sol = solve_socp(with_fixings(relaxed, fixings), opts);
      const int id = nodes++;
      if (sol.status == SolveStatus::optimal) {
        storage.push_back(
            std::make_unique<Node>(Node{id, sol.objective, std::move(fixings), binary_values(binaries, sol)}));
        open.push(storage.back().get());
      } else if (sol.status != SolveStatus::infeasible) {
        numerical_trouble = true;
      }
    }
    if (final_status == SolveStatus::node_limit) break;
  }

  Solution out;
  if (incumbent) {
    out = *incumbent;
    if (final_status == SolveStatus::optimal && numerical_trouble) final_status = SolveStatus::iteration_limit;
    out.status = final_status;
  } else {
    out = root;
    out.status = final_status == SolveStatus::node_limit ? SolveStatus::node_limit
                 : numerical_trouble                     ? SolveStatus::iteration_limit
                                                         : SolveStatus::infeasible;
  }
  out.branch.nodes = nodes;
  out.branch.root_bound = root.objective;
  out.branch.incumbents = std::move(history);
  return out;
}

}  // namespace adn
