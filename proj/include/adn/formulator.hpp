#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adn/case.hpp"
#include "adn/model.hpp"
#include "adn/requirements.hpp"

namespace adn {

class FormulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output of one build stage: declarations and rows owned by one component.
struct Fragment {
  Component component = Component::objective;
  std::vector<Var> vars;
  std::vector<Constraint> constraints;
  std::optional<ModelObjective> objective;

  bool empty() const { return vars.empty() && constraints.empty() && !objective; }
  bool operator==(const Fragment&) const = default;
};

std::string print_fragment(const Fragment& f);
// Partial script: declarations optional, objective optional.
Fragment parse_fragment(std::string_view text, Component component);

class FormulationContext {
 public:
  // Single-timestep requirements work on snapshot_at(c, t_hat).
  FormulationContext(StructuredRequirements req, const NetworkCase& c);

  const StructuredRequirements& requirements() const { return req_; }
  const NetworkCase& network() const { return case_; }
  bool single_timestep() const { return req_.horizon.is_single(); }
  int steps() const { return case_.steps(); }
  // Step labels used in names: 0..T-1, or {t_hat}.
  const std::vector<int>& time_labels() const { return labels_; }
  bool uses(EquipmentKind kind) const { return req_.equipment.contains(kind); }

  bool has(Component c) const { return fragments_.contains(c); }
  const Fragment& fragment(Component c) const;
  // Fragments are append-only; a second fragment for a component is an error.
  void append(Fragment f);

 private:
  StructuredRequirements req_;
  NetworkCase case_;
  std::vector<int> labels_;
  std::map<Component, Fragment> fragments_;
};

Fragment build_objective(const FormulationContext& ctx);
Fragment build_equipment_constraints(const FormulationContext& ctx);
Fragment build_power_flow(const FormulationContext& ctx);
Fragment build_additional_constraints(const FormulationContext& ctx);
Model assemble(const FormulationContext& ctx);
// Merges fragments in order; duplicate declarations or row names throw FormulationError.
Model assemble_fragments(std::string name, const Horizon& horizon, const std::vector<const Fragment*>& fragments);
Model convexify(const Model& m);

// Runs every stage in order.
Model formulate(const StructuredRequirements& req, const NetworkCase& c);

// Variable naming shared with strategy extraction.
namespace names {
std::string voltage(int bus, int t);
std::string branch(std::string_view quantity, const Branch& b, int t);  // P, Q, l
std::string grid(std::string_view quantity, int t);                     // P_grid_0_t, Q_grid_0_t
std::string device(std::string_view prefix, int bus, int t);            // P_dg_<bus>_<t>, ...
}  // namespace names

}  // namespace adn
