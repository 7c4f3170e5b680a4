#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace adn {

enum class EquipmentKind { dg, bess, pv, svc };

inline constexpr EquipmentKind kAllEquipment[] = {EquipmentKind::dg, EquipmentKind::bess,
                                                 EquipmentKind::pv, EquipmentKind::svc};

std::string_view to_string(EquipmentKind kind);
std::optional<EquipmentKind> equipment_from_string(std::string_view name);

using EquipmentSet = std::set<EquipmentKind>;

struct Bus {
  int id = 0;
  std::vector<double> p_load;
  std::vector<double> q_load;

  bool operator==(const Bus&) const = default;
};

// from_bus is the parent in the root-to-leaf orientation.
struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;

  bool operator==(const Branch&) const = default;
};

struct DgUnit {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  double r_max = 0.0;
  std::optional<double> p_init;

  bool operator==(const DgUnit&) const = default;
};

struct BessUnit {
  int bus = 0;
  double p_dis_max = 0.0, p_cha_max = 0.0;
  double soc_min = 0.0, soc_max = 1.0, soc_init = 0.5;
  double eta = 1.0;
  double e_cap = 1.0;  // p.u.·h

  bool operator==(const BessUnit&) const = default;
};

struct PvUnit {
  int bus = 0;
  double s_max = 0.0;
  std::vector<double> p_avail;
  bool curtailable = false;

  bool operator==(const PvUnit&) const = default;
};

struct SvcUnit {
  int bus = 0;
  double q_max = 0.0;

  bool operator==(const SvcUnit&) const = default;
};

using Device = std::variant<DgUnit, BessUnit, PvUnit, SvcUnit>;

EquipmentKind kind_of(const Device& device);
int bus_of(const Device& device);

struct Horizon {
  int steps = 1;
  double dt_hours = 1.0;

  bool operator==(const Horizon&) const = default;
};

struct Prices {
  std::vector<double> rho0;  // one entry (flat tariff) or one per step
  double rho_dg = 0.0;
  double rho_bess_dis = 0.0;
  double rho_bess_cha = 0.0;

  double rho0_at(int t) const { return rho0.size() == 1 ? rho0.front() : rho0.at(t); }
  bool operator==(const Prices&) const = default;
};

struct Limits {
  double v_min = 0.95;
  double v_max = 1.05;
  double s_branch_max = 1.0;

  bool operator==(const Limits&) const = default;
};

struct NetworkCase {
  std::string district_id;
  Horizon horizon;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Device> devices;
  Prices prices;
  Limits limits;

  int bus_count() const { return static_cast<int>(buses.size()); }
  int branch_count() const { return static_cast<int>(branches.size()); }
  int steps() const { return horizon.steps; }

  EquipmentSet installed_equipment() const;

  template <typename T>
  std::vector<T> devices_of() const {
    std::vector<T> out;
    for (const auto& d : devices)
      if (const auto* p = std::get_if<T>(&d)) out.push_back(*p);
    return out;
  }

  bool operator==(const NetworkCase&) const = default;
};

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  std::string location;
  std::string invariant;

  std::string message() const { return location.empty() ? invariant : location + ": " + invariant; }
};

// Parses a case document (JSON). Unknown keys and invariant violations throw CaseError.
NetworkCase load_case(std::string_view document);
NetworkCase load_case_file(const std::string& path);
std::string serialize_case(const NetworkCase& c);

std::vector<Violation> validate_case(const NetworkCase& c);

// Copy with a one-step horizon holding only step t_hat.
NetworkCase snapshot_at(const NetworkCase& c, int t_hat);

// Branch index whose to_bus is `bus`, or -1 for the root. Assumes a validated case.
std::vector<int> parent_branch_index(const NetworkCase& c);

}  // namespace adn
