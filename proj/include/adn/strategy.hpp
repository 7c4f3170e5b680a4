#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adn/case.hpp"
#include "adn/model.hpp"
#include "adn/solver.hpp"

namespace adn {

// Setpoint series of one device, keyed by quantity (P_dg, Q_dg, P_dis, P_cha, SOC, P_pv, Q_pv, Q_svc).
struct DeviceSchedule {
  EquipmentKind kind = EquipmentKind::dg;
  int bus = 0;
  std::map<std::string, std::vector<double>> series;
};

struct Kpis {
  double total_losses = 0.0;
  double total_cost = 0.0;
  double max_voltage_deviation = 0.0;  // max |V - 1| in p.u.
  double max_branch_apparent_power = 0.0;
};

struct DispatchStrategy {
  std::vector<int> steps;  // step labels present in the model
  std::vector<DeviceSchedule> devices;
  std::vector<std::vector<double>> voltage;  // [k][bus], magnitude sqrt(v)
  std::vector<std::vector<double>> p_branch, q_branch, l_branch;  // [k][branch index]
  std::vector<double> p_grid, q_grid;
  Kpis kpis;
  // Largest min(P_dis, P_cha) over BESS units and steps.
  double max_simultaneous_bess = 0.0;
  std::vector<std::string> warnings;
};

class StrategyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inverts the formulator naming convention against the original (un-snapshotted) case.
DispatchStrategy extract_strategy(const Solution& sol, const Model& m, const NetworkCase& c,
                                  double integrality_tol = 1e-6);

struct TightnessRow {
  std::string branch;  // "<from>_<to>"
  int step = 0;
  double slack = 0.0;  // l*v_from - (P^2 + Q^2)
  bool flagged = false;
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  double max_slack = 0.0;
  double min_slack = 0.0;
  int flagged = 0;
};

// Rows with slack above `threshold` or below -1e-8 are flagged.
TightnessReport check_tightness(const Solution& sol, const Model& m, double threshold = 1e-5);

}  // namespace adn
