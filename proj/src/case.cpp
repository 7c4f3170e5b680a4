#include "adn/case.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adn {

using nlohmann::json;

std::string_view to_string(EquipmentKind kind) {
  switch (kind) {
    case EquipmentKind::dg: return "dg";
    case EquipmentKind::bess: return "bess";
    case EquipmentKind::pv: return "pv";
    case EquipmentKind::svc: return "svc";
  }
  return "?";
}

std::optional<EquipmentKind> equipment_from_string(std::string_view name) {
  for (auto k : kAllEquipment)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

EquipmentKind kind_of(const Device& device) {
  return std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DgUnit>) return EquipmentKind::dg;
        else if constexpr (std::is_same_v<T, BessUnit>) return EquipmentKind::bess;
        else if constexpr (std::is_same_v<T, PvUnit>) return EquipmentKind::pv;
        else return EquipmentKind::svc;
      },
      device);
}

int bus_of(const Device& device) {
  return std::visit([](const auto& d) { return d.bus; }, device);
}

EquipmentSet NetworkCase::installed_equipment() const {
  EquipmentSet out;
  for (const auto& d : devices) out.insert(kind_of(d));
  return out;
}

namespace {

// Reader that rejects unknown keys and reports the JSON path of every failure.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw CaseError(path_ + ": expected an object");
  }

  const json& required(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw CaseError(path_ + "." + key + ": missing required key");
    return *it;
  }

  const json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key) { return as_number(required(key), path_ + "." + key); }
  int integer(const std::string& key) { return as_integer(required(key), path_ + "." + key); }

  std::vector<double> series(const std::string& key) {
    const auto& v = required(key);
    const std::string p = path_ + "." + key;
    if (!v.is_array()) throw CaseError(p + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], p + "[" + std::to_string(i) + "]"));
    return out;
  }

  // Throws on any key that was never requested.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw CaseError(path_ + "." + it.key() + ": unknown key");
  }

  const std::string& path() const { return path_; }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw CaseError(path + ": expected a number");
    return v.get<double>();
  }
  static int as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw CaseError(path + ": expected an integer");
    return v.get<int>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Device read_device(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto& kind_node = r.required("kind");
  if (!kind_node.is_string()) throw CaseError(path + ".kind: expected a string");
  const std::string kind = kind_node.get<std::string>();
  Device out;
  if (kind == "dg") {
    DgUnit d;
    d.bus = r.integer("bus");
    d.p_min = r.number("p_min");
    d.p_max = r.number("p_max");
    d.q_min = r.number("q_min");
    d.q_max = r.number("q_max");
    d.r_max = r.number("r_max");
    if (const auto* p = r.optional("p_init")) d.p_init = ObjectReader::as_number(*p, path + ".p_init");
    out = d;
  } else if (kind == "bess") {
    BessUnit d;
    d.bus = r.integer("bus");
    d.p_dis_max = r.number("p_dis_max");
    d.p_cha_max = r.number("p_cha_max");
    d.soc_min = r.number("soc_min");
    d.soc_max = r.number("soc_max");
    d.soc_init = r.number("soc_init");
    d.eta = r.number("eta");
    d.e_cap = r.number("e_cap");
    out = d;
  } else if (kind == "pv") {
    PvUnit d;
    d.bus = r.integer("bus");
    d.s_max = r.number("s_max");
    d.p_avail = r.series("p_avail");
    if (const auto* c = r.optional("curtailable")) {
      if (!c->is_boolean()) throw CaseError(path + ".curtailable: expected a boolean");
      d.curtailable = c->get<bool>();
    }
    out = d;
  } else if (kind == "svc") {
    SvcUnit d;
    d.bus = r.integer("bus");
    d.q_max = r.number("q_max");
    out = d;
  } else {
    throw CaseError(path + ".kind: unknown device kind '" + kind + "'");
  }
  r.finish();
  return out;
}

json write_device(const Device& device) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        json j;
        if constexpr (std::is_same_v<T, DgUnit>) {
          j = {{"kind", "dg"}, {"bus", d.bus}, {"p_min", d.p_min}, {"p_max", d.p_max},
               {"q_min", d.q_min}, {"q_max", d.q_max}, {"r_max", d.r_max}};
          if (d.p_init) j["p_init"] = *d.p_init;
        } else if constexpr (std::is_same_v<T, BessUnit>) {
          j = {{"kind", "bess"}, {"bus", d.bus}, {"p_dis_max", d.p_dis_max},
               {"p_cha_max", d.p_cha_max}, {"soc_min", d.soc_min}, {"soc_max", d.soc_max},
               {"soc_init", d.soc_init}, {"eta", d.eta}, {"e_cap", d.e_cap}};
        } else if constexpr (std::is_same_v<T, PvUnit>) {
          j = {{"kind", "pv"}, {"bus", d.bus}, {"s_max", d.s_max}, {"p_avail", d.p_avail},
               {"curtailable", d.curtailable}};
        } else {
          j = {{"kind", "svc"}, {"bus", d.bus}, {"q_max", d.q_max}};
        }
        return j;
      },
      device);
}

void check_profile(const std::vector<double>& profile, int steps, const std::string& where,
                   std::vector<Violation>& out) {
  if (static_cast<int>(profile.size()) != steps)
    out.push_back({where, "profile length " + std::to_string(profile.size()) + " != T=" + std::to_string(steps)});
  for (double v : profile)
    if (!std::isfinite(v)) {
      out.push_back({where, "non-finite profile entry"});
      break;
    }
}

}  // namespace

NetworkCase load_case(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw CaseError(std::string("malformed case document: ") + e.what());
  }
  ObjectReader top(doc, "$");
  NetworkCase c;
  const auto& district = top.required("district");
  if (!district.is_string()) throw CaseError("$.district: expected a string");
  c.district_id = district.get<std::string>();

  {
    ObjectReader h(top.required("horizon"), "$.horizon");
    c.horizon.steps = h.integer("T");
    c.horizon.dt_hours = h.number("dt_hours");
    h.finish();
  }

  const auto& buses = top.required("buses");
  if (!buses.is_array()) throw CaseError("$.buses: expected an array");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    ObjectReader b(buses[i], "$.buses[" + std::to_string(i) + "]");
    Bus bus;
    bus.id = b.integer("id");
    bus.p_load = b.series("p_load");
    bus.q_load = b.series("q_load");
    b.finish();
    c.buses.push_back(std::move(bus));
  }

  const auto& branches = top.required("branches");
  if (!branches.is_array()) throw CaseError("$.branches: expected an array");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    ObjectReader b(branches[i], "$.branches[" + std::to_string(i) + "]");
    Branch br;
    br.from_bus = b.integer("from");
    br.to_bus = b.integer("to");
    br.r = b.number("r");
    br.x = b.number("x");
    b.finish();
    c.branches.push_back(br);
  }

  if (const auto* devices = top.optional("devices")) {
    if (!devices->is_array()) throw CaseError("$.devices: expected an array");
    for (std::size_t i = 0; i < devices->size(); ++i)
      c.devices.push_back(read_device((*devices)[i], "$.devices[" + std::to_string(i) + "]"));
  }

  {
    ObjectReader p(top.required("prices"), "$.prices");
    const auto& rho0 = p.required("rho0");
    if (rho0.is_array()) {
      c.prices.rho0 = p.series("rho0");
    } else {
      c.prices.rho0 = {ObjectReader::as_number(rho0, "$.prices.rho0")};
    }
    c.prices.rho_dg = p.number("rho_dg");
    c.prices.rho_bess_dis = p.number("rho_bess_dis");
    c.prices.rho_bess_cha = p.number("rho_bess_cha");
    p.finish();
  }
  {
    ObjectReader l(top.required("limits"), "$.limits");
    c.limits.v_min = l.number("v_min");
    c.limits.v_max = l.number("v_max");
    c.limits.s_branch_max = l.number("s_branch_max");
    l.finish();
  }
  top.finish();

  const auto violations = validate_case(c);
  if (!violations.empty()) throw CaseError(violations.front().message());
  return c;
}

NetworkCase load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_case(ss.str());
}

std::string serialize_case(const NetworkCase& c) {
  json doc;
  doc["district"] = c.district_id;
  doc["horizon"] = {{"T", c.horizon.steps}, {"dt_hours", c.horizon.dt_hours}};
  json buses = json::array();
  for (const auto& b : c.buses) buses.push_back({{"id", b.id}, {"p_load", b.p_load}, {"q_load", b.q_load}});
  doc["buses"] = buses;
  json branches = json::array();
  for (const auto& br : c.branches)
    branches.push_back({{"from", br.from_bus}, {"to", br.to_bus}, {"r", br.r}, {"x", br.x}});
  doc["branches"] = branches;
  json devices = json::array();
  for (const auto& d : c.devices) devices.push_back(write_device(d));
  doc["devices"] = devices;
  json prices;
  if (c.prices.rho0.size() == 1) prices["rho0"] = c.prices.rho0.front();
  else prices["rho0"] = c.prices.rho0;
  prices["rho_dg"] = c.prices.rho_dg;
  prices["rho_bess_dis"] = c.prices.rho_bess_dis;
  prices["rho_bess_cha"] = c.prices.rho_bess_cha;
  doc["prices"] = prices;
  doc["limits"] = {{"v_min", c.limits.v_min}, {"v_max", c.limits.v_max}, {"s_branch_max", c.limits.s_branch_max}};
  return doc.dump(2);
}

std::vector<Violation> validate_case(const NetworkCase& c) {
  std::vector<Violation> out;
  const int n = c.bus_count();
  const int steps = c.horizon.steps;

  if (c.district_id.empty()) out.push_back({"district", "district id must be non-empty"});
  if (steps < 1) out.push_back({"horizon", "T must be >= 1"});
  if (!(c.horizon.dt_hours > 0)) out.push_back({"horizon", "dt_hours must be > 0"});
  if (!(c.limits.v_min < 1.0 && 1.0 < c.limits.v_max)) out.push_back({"limits", "v_min < 1.0 < v_max violated"});
  if (!(c.limits.s_branch_max > 0)) out.push_back({"limits", "s_branch_max must be > 0"});

  if (n == 0) {
    out.push_back({"buses", "at least one bus required"});
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const auto& b = c.buses[i];
    const std::string where = "buses[" + std::to_string(i) + "]";
    if (b.id != i) out.push_back({where, "bus ids must be 0..N-1 without gaps (found id " + std::to_string(b.id) + ")"});
    check_profile(b.p_load, steps, where + ".p_load", out);
    check_profile(b.q_load, steps, where + ".q_load", out);
  }

  if (c.branch_count() != n - 1) {
    out.push_back({"branches", "not radial: " + std::to_string(n) + " buses but " +
                                   std::to_string(c.branch_count()) + " branches (E != N-1)"});
  }
  bool endpoints_ok = true;
  for (int e = 0; e < c.branch_count(); ++e) {
    const auto& br = c.branches[e];
    const std::string where = "branches[" + std::to_string(e) + "]";
    if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n || br.from_bus == br.to_bus) {
      out.push_back({where, "endpoint out of range"});
      endpoints_ok = false;
    }
    if (!(br.r >= 0)) out.push_back({where, "r must be >= 0"});
    if (!(br.x >= 0)) out.push_back({where, "x must be >= 0"});
  }

  if (endpoints_ok && c.branch_count() == n - 1) {
    // Orientation check: every bus except the root has exactly one incoming branch,
    // and walking parents from any bus reaches bus 0.
    std::vector<int> parent(n, -1), incoming(n, 0);
    for (const auto& br : c.branches) {
      ++incoming[br.to_bus];
      parent[br.to_bus] = br.from_bus;
    }
    if (incoming[0] != 0) out.push_back({"branches", "root bus 0 must not be a branch destination"});
    for (int i = 1; i < n; ++i)
      if (incoming[i] != 1) out.push_back({"branches", "bus " + std::to_string(i) + " not oriented root-to-leaf"});
    std::vector<std::vector<int>> children(n);
    for (const auto& br : c.branches) children[br.from_bus].push_back(br.to_bus);
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
      int u = frontier.front();
      frontier.pop();
      for (int v : children[u])
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          frontier.push(v);
        }
    }
    if (reached != n) out.push_back({"branches", "not radial: branch graph is not connected from root"});
  }

  if (c.prices.rho0.size() != 1 && static_cast<int>(c.prices.rho0.size()) != steps)
    out.push_back({"prices.rho0", "profile length " + std::to_string(c.prices.rho0.size()) + " != T=" + std::to_string(steps)});

  for (std::size_t k = 0; k < c.devices.size(); ++k) {
    const std::string where = "devices[" + std::to_string(k) + "]";
    const int bus = bus_of(c.devices[k]);
    if (bus < 0 || bus >= n) out.push_back({where, "bus out of range"});
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, DgUnit>) {
            if (!(d.p_min <= d.p_max)) out.push_back({where, "DG.p_min <= p_max violated"});
            if (!(d.q_min <= d.q_max)) out.push_back({where, "DG.q_min <= q_max violated"});
            if (!(d.r_max >= 0)) out.push_back({where, "DG.r_max must be >= 0"});
          } else if constexpr (std::is_same_v<T, BessUnit>) {
            if (!(d.soc_min <= d.soc_init && d.soc_init <= d.soc_max))
              out.push_back({where, "BESS.soc_min <= soc_init <= soc_max violated"});
            if (!(d.eta > 0 && d.eta <= 1)) out.push_back({where, "BESS.eta out of (0,1]"});
            if (!(d.e_cap > 0)) out.push_back({where, "BESS.e_cap must be > 0"});
            if (!(d.p_dis_max >= 0 && d.p_cha_max >= 0)) out.push_back({where, "BESS power limits must be >= 0"});
          } else if constexpr (std::is_same_v<T, PvUnit>) {
            if (!(d.s_max >= 0)) out.push_back({where, "PV.s_max must be >= 0"});
            check_profile(d.p_avail, steps, where + ".p_avail", out);
            if (!d.curtailable)
              for (double p : d.p_avail)
                if (p > d.s_max) {
                  out.push_back({where, "PV.p_avail exceeds s_max on a non-curtailable unit"});
                  break;
                }
          } else {
            if (!(d.q_max >= 0)) out.push_back({where, "SVC.q_max must be >= 0"});
          }
        },
        c.devices[k]);
  }
  return out;
}

NetworkCase snapshot_at(const NetworkCase& c, int t_hat) {
  if (t_hat < 0 || t_hat >= c.horizon.steps)
    throw CaseError("snapshot timestep " + std::to_string(t_hat) + " outside [0, " +
                    std::to_string(c.horizon.steps) + ")");
  NetworkCase s = c;
  s.horizon.steps = 1;
  for (auto& b : s.buses) {
    b.p_load = {c.buses[b.id].p_load[t_hat]};
    b.q_load = {c.buses[b.id].q_load[t_hat]};
  }
  for (auto& d : s.devices)
    if (auto* pv = std::get_if<PvUnit>(&d)) pv->p_avail = {pv->p_avail[t_hat]};
  if (s.prices.rho0.size() > 1) s.prices.rho0 = {c.prices.rho0[t_hat]};
  return s;
}

std::vector<int> parent_branch_index(const NetworkCase& c) {
  std::vector<int> parent(c.bus_count(), -1);
  for (int e = 0; e < c.branch_count(); ++e) parent[c.branches[e].to_bus] = e;
  return parent;
}

}  // namespace adn
