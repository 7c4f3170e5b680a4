#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adn/case.hpp"

namespace adn {

enum class Objective {
  min_cost,
  min_loss,
  min_voltage_deviation,
  eliminate_voltage_violation,
  eliminate_branch_violation,
};

inline constexpr Objective kAllObjectives[] = {
    Objective::min_cost, Objective::min_loss, Objective::min_voltage_deviation,
    Objective::eliminate_voltage_violation, Objective::eliminate_branch_violation};

std::string_view to_string(Objective objective);
std::optional<Objective> objective_from_string(std::string_view name);
// eliminate_* objectives act on a single timestep; the others span the horizon.
bool is_single_timestep_objective(Objective objective);

enum class ConstraintKind { voltage_safety, branch_safety };

std::string_view to_string(ConstraintKind kind);
std::optional<ConstraintKind> constraint_from_string(std::string_view name);

struct ExtraConstraint {
  ConstraintKind kind = ConstraintKind::voltage_safety;
  // voltage_safety: v_min, v_max; branch_safety: s_max.
  std::map<std::string, double> overrides;

  bool operator==(const ExtraConstraint&) const = default;
};

struct HorizonSpec {
  enum class Kind { day_ahead, single_timestep };
  Kind kind = Kind::day_ahead;
  int t_hat = 0;

  static HorizonSpec day_ahead() { return {}; }
  static HorizonSpec single(int t) { return {Kind::single_timestep, t}; }
  bool is_single() const { return kind == Kind::single_timestep; }
  bool operator==(const HorizonSpec& o) const {
    return kind == o.kind && (kind == Kind::day_ahead || t_hat == o.t_hat);
  }
};

struct StructuredRequirements {
  std::string district;
  Objective objective = Objective::min_loss;
  HorizonSpec horizon;
  EquipmentSet equipment;
  std::vector<ExtraConstraint> extra_constraints;

  bool has_constraint(ConstraintKind kind) const;
  const ExtraConstraint* constraint(ConstraintKind kind) const;
  bool operator==(const StructuredRequirements&) const = default;
};

struct DistrictInfo {
  std::string id;
  std::string case_path;  // relative to the catalog's directory
  std::string description;
  EquipmentSet equipment;
  std::vector<std::string> aliases;
};

// Districts plus synonym tables mapping free phrases to canonical tokens. Synonyms are data:
// extending vocabulary means editing the catalog document, not the code.
class RequestCatalog {
 public:
  static RequestCatalog canonical_only();
  static RequestCatalog load(std::string_view document);
  static RequestCatalog load_file(const std::string& path);

  const std::vector<DistrictInfo>& districts() const { return districts_; }
  const DistrictInfo* find_district(std::string_view id) const;

  std::optional<std::string> normalize_district(std::string_view token) const;
  std::optional<Objective> normalize_objective(std::string_view token) const;
  std::optional<EquipmentKind> normalize_equipment(std::string_view token) const;
  std::optional<ConstraintKind> normalize_constraint(std::string_view token) const;

  const std::map<std::string, Objective>& objective_phrases() const { return objective_phrases_; }
  const std::map<std::string, EquipmentKind>& equipment_phrases() const { return equipment_phrases_; }
  const std::map<std::string, ConstraintKind>& constraint_phrases() const { return constraint_phrases_; }
  const std::vector<std::string>& all_equipment_phrases() const { return all_equipment_phrases_; }
  const std::vector<std::string>& negation_phrases() const { return negations_; }
  const std::vector<std::string>& unavailability_phrases() const { return unavailable_; }
  const std::string& source_dir() const { return source_dir_; }

  // Environment description text used in prompts.
  std::string describe() const;

 private:
  std::vector<DistrictInfo> districts_;
  std::map<std::string, Objective> objective_phrases_;
  std::map<std::string, EquipmentKind> equipment_phrases_;
  std::map<std::string, ConstraintKind> constraint_phrases_;
  std::vector<std::string> all_equipment_phrases_;
  std::vector<std::string> negations_;
  std::vector<std::string> unavailable_;
  std::string source_dir_;
};

class RequirementsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower-cased, whitespace-collapsed form used for synonym lookup.
std::string normalize_phrase(std::string_view text);

StructuredRequirements parse_decorated(std::string_view text,
                                       const RequestCatalog& catalog = RequestCatalog::canonical_only());
std::string render_decorated(const StructuredRequirements& req);

std::vector<Violation> validate_requirements(const StructuredRequirements& req, const RequestCatalog& catalog,
                                             const NetworkCase& c);

}  // namespace adn
