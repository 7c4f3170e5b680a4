#include "adn/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adn {

double PowerFlowResult::total_losses() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.losses;
  return sum;
}

InjectionSchedule zero_injections(const NetworkCase& c) {
  InjectionSchedule s;
  s.p.assign(c.steps(), std::vector<double>(c.bus_count(), 0.0));
  s.q = s.p;
  return s;
}

InjectionSchedule passive_injections(const NetworkCase& c) {
  InjectionSchedule s = zero_injections(c);
  for (const auto& d : c.devices) {
    for (int t = 0; t < c.steps(); ++t) {
      if (const auto* dg = std::get_if<DgUnit>(&d)) {
        s.p[t][dg->bus] += std::clamp(0.0, dg->p_min, dg->p_max);
        s.q[t][dg->bus] += std::clamp(0.0, dg->q_min, dg->q_max);
      } else if (const auto* pv = std::get_if<PvUnit>(&d)) {
        s.p[t][pv->bus] += std::min(pv->p_avail[t], pv->s_max);
      }
    }
  }
  return s;
}

namespace {

// Buses ordered so that every parent precedes its children.
std::vector<int> topological_order(const NetworkCase& c) {
  std::vector<std::vector<int>> children(c.bus_count());
  for (const auto& br : c.branches) children[br.from_bus].push_back(br.to_bus);
  std::vector<int> order{0};
  for (std::size_t k = 0; k < order.size(); ++k)
    for (int child : children[order[k]]) order.push_back(child);
  return order;
}

}  // namespace

PowerFlowResult baseline_power_flow(const NetworkCase& c, const InjectionSchedule& injections,
                                    const PowerFlowOptions& options) {
  if (auto v = validate_case(c); !v.empty()) throw PowerFlowError("invalid case: " + v.front().message());
  const int n = c.bus_count();
  const int m = c.branch_count();
  const auto order = topological_order(c);
  const auto parent = parent_branch_index(c);

  PowerFlowResult result;
  for (int t = 0; t < c.steps(); ++t) {
    std::vector<double> p_net(n), q_net(n);
    for (int i = 0; i < n; ++i) {
      p_net[i] = injections.p[t][i] - c.buses[i].p_load[t];
      q_net[i] = injections.q[t][i] - c.buses[i].q_load[t];
    }

    PowerFlowStep step;
    step.v.assign(n, 1.0);
    step.p_branch.assign(m, 0.0);
    step.q_branch.assign(m, 0.0);
    step.l_branch.assign(m, 0.0);

    bool converged = false;
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      // Backward: accumulate downstream flow plus branch losses, leaves first.
      std::vector<double> p_out(n, 0.0), q_out(n, 0.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int j = *it;
        const int e = parent[j];
        if (e < 0) continue;
        const auto& br = c.branches[e];
        const double l_prev = step.l_branch[e];
        step.p_branch[e] = p_out[j] - p_net[j] + br.r * l_prev;
        step.q_branch[e] = q_out[j] - q_net[j] + br.x * l_prev;
        step.l_branch[e] = (step.p_branch[e] * step.p_branch[e] + step.q_branch[e] * step.q_branch[e]) /
                           step.v[br.from_bus];
        p_out[br.from_bus] += step.p_branch[e];
        q_out[br.from_bus] += step.q_branch[e];
      }
      step.p_root = p_out[0] - p_net[0];
      step.q_root = q_out[0] - q_net[0];

      // Forward: voltage drop from the fixed root.
      double max_update = 0.0;
      std::vector<double> v_new(n, 1.0);
      for (int j : order) {
        const int e = parent[j];
        if (e < 0) continue;
        const auto& br = c.branches[e];
        v_new[j] = v_new[br.from_bus] - 2.0 * (br.r * step.p_branch[e] + br.x * step.q_branch[e]) +
                   (br.r * br.r + br.x * br.x) * step.l_branch[e];
        if (!(v_new[j] > 0.0) || !std::isfinite(v_new[j]))
          throw PowerFlowError("voltage collapse at step " + std::to_string(t) + ", bus " + std::to_string(j));
        max_update = std::max(max_update, std::abs(v_new[j] - step.v[j]));
      }
      step.v = std::move(v_new);
      step.sweeps = sweep;
      if (max_update < options.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw PowerFlowError("backward/forward sweep did not converge within " +
                           std::to_string(options.max_sweeps) + " sweeps at step " + std::to_string(t));

    // A few backward passes at fixed voltage make branch currents consistent with the converged profile.
    {
      std::vector<double> p_out(n, 0.0), q_out(n, 0.0);
      for (int iter = 0; iter < 3; ++iter) {
        std::fill(p_out.begin(), p_out.end(), 0.0);
        std::fill(q_out.begin(), q_out.end(), 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
          const int j = *it;
          const int e = parent[j];
          if (e < 0) continue;
          const auto& br = c.branches[e];
          step.p_branch[e] = p_out[j] - p_net[j] + br.r * step.l_branch[e];
          step.q_branch[e] = q_out[j] - q_net[j] + br.x * step.l_branch[e];
          step.l_branch[e] = (step.p_branch[e] * step.p_branch[e] + step.q_branch[e] * step.q_branch[e]) /
                             step.v[br.from_bus];
          p_out[br.from_bus] += step.p_branch[e];
          q_out[br.from_bus] += step.q_branch[e];
        }
      }
      step.p_root = p_out[0] - p_net[0];
      step.q_root = q_out[0] - q_net[0];
    }

    step.losses = 0.0;
    for (int e = 0; e < m; ++e) step.losses += c.branches[e].r * step.l_branch[e];

    // Residuals of the nodal balance, voltage drop and current definition.
    double worst = 0.0;
    std::vector<double> p_bal(n, 0.0), q_bal(n, 0.0);
    for (int e = 0; e < m; ++e) {
      const auto& br = c.branches[e];
      p_bal[br.from_bus] += step.p_branch[e];
      q_bal[br.from_bus] += step.q_branch[e];
      p_bal[br.to_bus] -= step.p_branch[e] - br.r * step.l_branch[e];
      q_bal[br.to_bus] -= step.q_branch[e] - br.x * step.l_branch[e];
      const double drop = step.v[br.from_bus] - 2.0 * (br.r * step.p_branch[e] + br.x * step.q_branch[e]) +
                          (br.r * br.r + br.x * br.x) * step.l_branch[e] - step.v[br.to_bus];
      const double current = step.l_branch[e] * step.v[br.from_bus] -
                             (step.p_branch[e] * step.p_branch[e] + step.q_branch[e] * step.q_branch[e]);
      worst = std::max({worst, std::abs(drop), std::abs(current)});
    }
    for (int i = 1; i < n; ++i) worst = std::max({worst, std::abs(p_bal[i] - p_net[i]), std::abs(q_bal[i] - q_net[i])});
    worst = std::max({worst, std::abs(p_bal[0] - p_net[0] - step.p_root), std::abs(q_bal[0] - q_net[0] - step.q_root)});
    step.max_residual = worst;
    result.steps.push_back(std::move(step));
  }
  return result;
}

PowerFlowResult baseline_power_flow(const NetworkCase& c) {
  return baseline_power_flow(c, passive_injections(c));
}

}  // namespace adn
