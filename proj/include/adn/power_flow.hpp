#pragma once

#include <vector>

#include "adn/case.hpp"

namespace adn {

// Device injections (excluding loads), indexed [t][bus].
struct InjectionSchedule {
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> q;
};

// Passive setpoints: DG at the point of its range closest to zero, BESS and SVC idle,
// PV delivering its forecast with unity power factor.
InjectionSchedule passive_injections(const NetworkCase& c);
InjectionSchedule zero_injections(const NetworkCase& c);

struct PowerFlowOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;  // max voltage update between sweeps
};

struct PowerFlowStep {
  std::vector<double> v;  // squared voltage magnitude per bus
  std::vector<double> p_branch, q_branch, l_branch;
  double p_root = 0.0, q_root = 0.0;  // grid import at the root bus
  double losses = 0.0;
  int sweeps = 0;
  double max_residual = 0.0;  // worst of the DistFlow equations
};

struct PowerFlowResult {
  std::vector<PowerFlowStep> steps;
  double total_losses() const;
};

class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact DistFlow solution by backward/forward sweep from a flat start.
PowerFlowResult baseline_power_flow(const NetworkCase& c, const InjectionSchedule& injections,
                                    const PowerFlowOptions& options = {});
PowerFlowResult baseline_power_flow(const NetworkCase& c);

}  // namespace adn
