#include "adn/strategy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "adn/formulator.hpp"

namespace adn {

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class Lookup {
 public:
  Lookup(const Solution& sol, const Model& m) : sol_(sol), m_(m) {}
  bool has(const std::string& name) const { return m_.has_var(name) && sol_.values.contains(name); }
  double at(const std::string& name) const {
    if (!has(name)) throw StrategyError("model/case mismatch: variable '" + name + "' missing");
    return sol_.values.at(name);
  }

 private:
  const Solution& sol_;
  const Model& m_;
};

}  // namespace

DispatchStrategy extract_strategy(const Solution& sol, const Model& m, const NetworkCase& c, double integrality_tol) {
  if (!sol.optimal()) throw StrategyError("solution status is " + std::string(to_string(sol.status)));
  const Lookup val(sol, m);
  DispatchStrategy out;
  for (const auto& v : m.vars)
    if (v.name.rfind("v_0_", 0) == 0)
      if (auto t = parse_int(std::string_view(v.name).substr(4))) out.steps.push_back(*t);
  std::sort(out.steps.begin(), out.steps.end());
  if (out.steps.empty()) throw StrategyError("model/case mismatch: no root voltage variables");
  for (int t : out.steps)
    if (t < 0 || t >= c.steps())
      throw StrategyError("model/case mismatch: step " + std::to_string(t) + " outside the case horizon");

  for (int t : out.steps) {
    std::vector<double> volts;
    for (const auto& bus : c.buses) volts.push_back(std::sqrt(std::max(0.0, val.at(names::voltage(bus.id, t)))));
    out.voltage.push_back(std::move(volts));
    std::vector<double> p, q, l;
    for (const auto& br : c.branches) {
      p.push_back(val.at(names::branch("P", br, t)));
      q.push_back(val.at(names::branch("Q", br, t)));
      l.push_back(val.at(names::branch("l", br, t)));
    }
    out.p_branch.push_back(std::move(p));
    out.q_branch.push_back(std::move(q));
    out.l_branch.push_back(std::move(l));
    out.p_grid.push_back(val.at(names::grid("P", t)));
    out.q_grid.push_back(val.at(names::grid("Q", t)));
  }

  const int first = out.steps.front();
  for (const auto& d : c.devices) {
    DeviceSchedule sched;
    sched.kind = kind_of(d);
    sched.bus = bus_of(d);
    std::vector<std::string> quantities;
    switch (sched.kind) {
      case EquipmentKind::dg: quantities = {"P_dg", "Q_dg"}; break;
      case EquipmentKind::bess: quantities = {"P_dis", "P_cha"}; break;
      case EquipmentKind::pv: quantities = {"Q_pv"}; break;
      case EquipmentKind::svc: quantities = {"Q_svc"}; break;
    }
    if (!val.has(names::device(quantities.front(), sched.bus, first))) continue;
    if (sched.kind == EquipmentKind::bess && val.has(names::device("SOC", sched.bus, first))) quantities.push_back("SOC");
    const auto* pv = std::get_if<PvUnit>(&d);
    if (pv && pv->curtailable) quantities.push_back("P_pv");
    for (const auto& qty : quantities)
      for (int t : out.steps) sched.series[qty].push_back(val.at(names::device(qty, sched.bus, t)));
    if (pv && !pv->curtailable)
      for (int t : out.steps) sched.series["P_pv"].push_back(pv->p_avail[t]);
    out.devices.push_back(std::move(sched));
  }

  // KPIs.
  Kpis& k = out.kpis;
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    const int t = out.steps[i];
    for (std::size_t e = 0; e < c.branches.size(); ++e) {
      k.total_losses += c.branches[e].r * out.l_branch[i][e];
      k.max_branch_apparent_power =
          std::max(k.max_branch_apparent_power, std::hypot(out.p_branch[i][e], out.q_branch[i][e]));
    }
    for (double v : out.voltage[i]) k.max_voltage_deviation = std::max(k.max_voltage_deviation, std::abs(v - 1.0));
    k.total_cost += c.prices.rho0_at(t) * out.p_grid[i];
  }
  for (const auto& sched : out.devices) {
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
      if (sched.kind == EquipmentKind::dg) {
        k.total_cost += c.prices.rho_dg * sched.series.at("P_dg")[i];
      } else if (sched.kind == EquipmentKind::bess) {
        const double dis = sched.series.at("P_dis")[i], cha = sched.series.at("P_cha")[i];
        k.total_cost += c.prices.rho_bess_dis * dis + c.prices.rho_bess_cha * cha;
        out.max_simultaneous_bess = std::max(out.max_simultaneous_bess, std::min(dis, cha));
      }
    }
  }
  double pmax = 0.0;
  for (const auto& b : c.devices_of<BessUnit>()) pmax = std::max({pmax, b.p_dis_max, b.p_cha_max});
  if (out.max_simultaneous_bess > integrality_tol * std::max(pmax, 1.0) + 1e-7)
    out.warnings.push_back("simultaneous BESS charge and discharge up to " + std::to_string(out.max_simultaneous_bess));
  return out;
}

TightnessReport check_tightness(const Solution& sol, const Model& m, double threshold) {
  TightnessReport report;
  bool first = true;
  for (const auto& v : m.vars) {
    if (v.name.rfind("l_", 0) != 0) continue;
    const auto parts = split(std::string_view(v.name).substr(2), '_');
    if (parts.size() != 3) continue;
    auto from = parse_int(parts[0]), to = parse_int(parts[1]), t = parse_int(parts[2]);
    if (!from || !to || !t) continue;
    const std::string key = std::string(parts[0]) + "_" + std::string(parts[1]) + "_" + std::string(parts[2]);
    const std::string vname = "v_" + std::string(parts[0]) + "_" + std::string(parts[2]);
    auto get = [&](const std::string& n) -> std::optional<double> {
      auto it = sol.values.find(n);
      if (it == sol.values.end()) return std::nullopt;
      return it->second;
    };
    auto l = get(v.name), vi = get(vname), p = get("P_" + key), q = get("Q_" + key);
    if (!l || !vi || !p || !q) continue;
    TightnessRow row;
    row.branch = std::string(parts[0]) + "_" + std::string(parts[1]);
    row.step = *t;
    row.slack = *l * *vi - (*p * *p + *q * *q);
    row.flagged = row.slack > threshold || row.slack < -1e-8;
    report.flagged += row.flagged;
    report.max_slack = first ? row.slack : std::max(report.max_slack, row.slack);
    report.min_slack = first ? row.slack : std::min(report.min_slack, row.slack);
    first = false;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace adn
