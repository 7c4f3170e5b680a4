#include "adn/requirements.hpp"

#include "adn/util.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adn {

using nlohmann::json;

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::min_cost: return "min_cost";
    case Objective::min_loss: return "min_loss";
    case Objective::min_voltage_deviation: return "min_voltage_deviation";
    case Objective::eliminate_voltage_violation: return "eliminate_voltage_violation";
    case Objective::eliminate_branch_violation: return "eliminate_branch_violation";
  }
  return "?";
}

std::optional<Objective> objective_from_string(std::string_view name) {
  for (auto o : kAllObjectives)
    if (to_string(o) == name) return o;
  return std::nullopt;
}

bool is_single_timestep_objective(Objective objective) {
  return objective == Objective::eliminate_voltage_violation || objective == Objective::eliminate_branch_violation;
}

std::string_view to_string(ConstraintKind kind) {
  return kind == ConstraintKind::voltage_safety ? "voltage_safety" : "branch_safety";
}

std::optional<ConstraintKind> constraint_from_string(std::string_view name) {
  if (name == "voltage_safety") return ConstraintKind::voltage_safety;
  if (name == "branch_safety") return ConstraintKind::branch_safety;
  return std::nullopt;
}

bool StructuredRequirements::has_constraint(ConstraintKind kind) const { return constraint(kind) != nullptr; }

const ExtraConstraint* StructuredRequirements::constraint(ConstraintKind kind) const {
  for (const auto& c : extra_constraints)
    if (c.kind == kind) return &c;
  return nullptr;
}

std::string normalize_phrase(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == '-') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

RequestCatalog RequestCatalog::canonical_only() {
  RequestCatalog c;
  for (auto o : kAllObjectives) c.objective_phrases_[std::string(to_string(o))] = o;
  for (auto e : kAllEquipment) c.equipment_phrases_[std::string(to_string(e))] = e;
  for (auto k : {ConstraintKind::voltage_safety, ConstraintKind::branch_safety})
    c.constraint_phrases_[std::string(to_string(k))] = k;
  return c;
}

RequestCatalog RequestCatalog::load(std::string_view document) {
  RequestCatalog c = canonical_only();
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw RequirementsError(std::string("malformed catalog document: ") + e.what());
  }
  try {
    for (const auto& d : doc.at("districts")) {
      DistrictInfo info;
      info.id = d.at("id").get<std::string>();
      if (c.find_district(info.id)) throw RequirementsError("duplicate district id '" + info.id + "'");
      info.case_path = d.value("case", "");
      info.description = d.value("description", "");
      for (const auto& e : d.value("equipment", json::array())) {
        auto kind = equipment_from_string(e.get<std::string>());
        if (!kind) throw RequirementsError("catalog district '" + info.id + "': unknown equipment " + e.dump());
        info.equipment.insert(*kind);
      }
      for (const auto& a : d.value("aliases", json::array())) info.aliases.push_back(normalize_phrase(a.get<std::string>()));
      c.districts_.push_back(std::move(info));
    }
    const json objectives_doc = doc.value("objectives", json::object());
    for (const auto& [key, phrases] : objectives_doc.items()) {
      auto o = objective_from_string(key);
      if (!o) throw RequirementsError("catalog: unknown objective '" + key + "'");
      for (const auto& p : phrases) c.objective_phrases_[normalize_phrase(p.get<std::string>())] = *o;
    }
    const json equipment_doc = doc.value("equipment", json::object());
    for (const auto& [key, phrases] : equipment_doc.items()) {
      auto e = equipment_from_string(key);
      if (!e) throw RequirementsError("catalog: unknown equipment '" + key + "'");
      for (const auto& p : phrases) c.equipment_phrases_[normalize_phrase(p.get<std::string>())] = *e;
    }
    const json constraints_doc = doc.value("constraints", json::object());
    for (const auto& [key, phrases] : constraints_doc.items()) {
      auto k = constraint_from_string(key);
      if (!k) throw RequirementsError("catalog: unknown constraint kind '" + key + "'");
      for (const auto& p : phrases) c.constraint_phrases_[normalize_phrase(p.get<std::string>())] = *k;
    }
    for (const auto& p : doc.value("all_equipment", json::array())) c.all_equipment_phrases_.push_back(normalize_phrase(p.get<std::string>()));
    for (const auto& p : doc.value("negations", json::array())) c.negations_.push_back(normalize_phrase(p.get<std::string>()));
    for (const auto& p : doc.value("unavailable", json::array())) c.unavailable_.push_back(normalize_phrase(p.get<std::string>()));
  } catch (const json::exception& e) {
    throw RequirementsError(std::string("catalog schema error: ") + e.what());
  }
  return c;
}

RequestCatalog RequestCatalog::load_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw RequirementsError(std::string("catalog: ") + e.what());
  }
  RequestCatalog c = load(text);
  c.source_dir_ = std::filesystem::path(path).parent_path().string();
  return c;
}

const DistrictInfo* RequestCatalog::find_district(std::string_view id) const {
  for (const auto& d : districts_)
    if (d.id == id) return &d;
  return nullptr;
}

std::optional<std::string> RequestCatalog::normalize_district(std::string_view token) const {
  std::string phrase = normalize_phrase(token);
  if (phrase.empty()) return std::nullopt;
  for (const auto& d : districts_) {
    if (d.id == phrase) return d.id;
    if (std::find(d.aliases.begin(), d.aliases.end(), phrase) != d.aliases.end()) return d.id;
  }
  constexpr std::string_view suffix = " district";
  if (phrase.size() > suffix.size() && phrase.ends_with(suffix)) {
    std::string stem = phrase.substr(0, phrase.size() - suffix.size());
    for (const auto& d : districts_)
      if (d.id == stem) return d.id;
  }
  return phrase;
}

std::optional<Objective> RequestCatalog::normalize_objective(std::string_view token) const {
  auto it = objective_phrases_.find(normalize_phrase(token));
  if (it == objective_phrases_.end()) return std::nullopt;
  return it->second;
}

std::optional<EquipmentKind> RequestCatalog::normalize_equipment(std::string_view token) const {
  auto it = equipment_phrases_.find(normalize_phrase(token));
  if (it == equipment_phrases_.end()) return std::nullopt;
  return it->second;
}

std::optional<ConstraintKind> RequestCatalog::normalize_constraint(std::string_view token) const {
  auto it = constraint_phrases_.find(normalize_phrase(token));
  if (it == constraint_phrases_.end()) return std::nullopt;
  return it->second;
}

std::string RequestCatalog::describe() const {
  std::ostringstream out;
  out << "Districts:\n";
  for (const auto& d : districts_) {
    out << "- " << d.id << ": " << d.description << " Installed equipment:";
    if (d.equipment.empty()) out << " none";
    for (auto e : d.equipment) out << ' ' << to_string(e);
    out << ".\n";
  }
  out << "Dispatch objectives:\n"
      << "- min_cost: minimize operational cost over the day (day-ahead)\n"
      << "- min_loss: minimize network power loss over the day (day-ahead)\n"
      << "- min_voltage_deviation: minimize squared voltage deviation from 1.0 p.u. (day-ahead)\n"
      << "- eliminate_voltage_violation: minimize the worst squared voltage deviation at one timestep\n"
      << "- eliminate_branch_violation: minimize the worst branch apparent power at one timestep\n"
      << "Equipment: dg (diesel generator), bess (battery storage), pv (photovoltaic), svc (static var compensator)\n"
      << "Additional constraints: voltage_safety (bus voltage within [v_min, v_max]), "
         "branch_safety (branch apparent power within s_max)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Decorated text

namespace {

constexpr std::string_view kTagOrder[] = {"district", "objective", "timestep", "equipment", "constraints"};

std::optional<std::string> extract_tag(std::string_view text, std::string_view name) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  const auto first = text.find(open);
  if (first == std::string_view::npos) return std::nullopt;
  if (text.find(open, first + open.size()) != std::string_view::npos)
    throw RequirementsError("duplicate <" + std::string(name) + "> tag");
  const auto end = text.find(close, first + open.size());
  if (end == std::string_view::npos) throw RequirementsError("unterminated <" + std::string(name) + "> tag");
  return std::string(trim(text.substr(first + open.size(), end - first - open.size())));
}

// Splits on separators outside parentheses.
std::vector<std::string> split_items(std::string_view s, std::string_view separators) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) out.emplace_back(t);
    current.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (depth == 0 && separators.find(ch) != std::string_view::npos) {
      flush();
      continue;
    }
    if (depth == 0 && s.substr(i, 5) == " and ") {
      flush();
      i += 4;
      continue;
    }
    current.push_back(ch);
  }
  flush();
  return out;
}

double parse_number(std::string_view token, const std::string& context) {
  token = trim(token);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw RequirementsError(context + ": malformed number '" + std::string(token) + "'");
  return value;
}

}  // namespace

StructuredRequirements parse_decorated(std::string_view text, const RequestCatalog& catalog) {
  std::map<std::string_view, std::optional<std::string>> tags;
  for (auto name : kTagOrder) tags[name] = extract_tag(text, name);

  StructuredRequirements req;
  const auto& district = tags["district"];
  if (!district) throw RequirementsError("missing <district>");
  auto d = catalog.normalize_district(*district);
  if (!d) throw RequirementsError("empty <district>");
  req.district = *d;

  const auto& objective = tags["objective"];
  if (!objective) throw RequirementsError("missing <objective>");
  auto o = catalog.normalize_objective(*objective);
  if (!o) throw RequirementsError("unrecognized objective '" + *objective + "'");
  req.objective = *o;

  if (const auto& ts = tags["timestep"]) {
    const double t = parse_number(*ts, "<timestep>");
    if (t < 0 || t != static_cast<int>(t)) throw RequirementsError("<timestep> must be a non-negative integer");
    req.horizon = HorizonSpec::single(static_cast<int>(t));
  } else if (is_single_timestep_objective(req.objective)) {
    throw RequirementsError("missing <timestep> for single-timestep objective '" + std::string(to_string(req.objective)) + "'");
  }

  if (const auto& eq = tags["equipment"]) {
    const std::string phrase = normalize_phrase(*eq);
    if (phrase != "none") {
      for (const auto& item : split_items(*eq, ",;+/")) {
        auto kind = catalog.normalize_equipment(item);
        if (!kind) throw RequirementsError("unrecognized equipment '" + item + "'");
        req.equipment.insert(*kind);
      }
    }
  }

  if (const auto& cons = tags["constraints"]) {
    const std::string phrase = normalize_phrase(*cons);
    if (phrase != "none") {
      for (const auto& item : split_items(*cons, ",;")) {
        const auto paren = item.find('(');
        const std::string name(trim(std::string_view(item).substr(0, paren)));
        auto kind = catalog.normalize_constraint(name);
        if (!kind) throw RequirementsError("unrecognized constraint '" + name + "'");
        if (req.has_constraint(*kind)) throw RequirementsError("duplicate constraint '" + std::string(to_string(*kind)) + "'");
        ExtraConstraint ec{*kind, {}};
        if (paren != std::string::npos) {
          const auto close = item.rfind(')');
          if (close == std::string::npos || close < paren) throw RequirementsError("unbalanced parentheses in constraint '" + name + "'");
          for (const auto& kv : split_items(std::string_view(item).substr(paren + 1, close - paren - 1), ",;")) {
            const auto eq_pos = kv.find('=');
            if (eq_pos == std::string::npos) throw RequirementsError("constraint parameter '" + kv + "' lacks '='");
            const std::string key(trim(std::string_view(kv).substr(0, eq_pos)));
            const bool known = (*kind == ConstraintKind::voltage_safety && (key == "v_min" || key == "v_max")) ||
                               (*kind == ConstraintKind::branch_safety && key == "s_max");
            if (!known) throw RequirementsError("unknown parameter '" + key + "' for " + std::string(to_string(*kind)));
            ec.overrides[key] = parse_number(std::string_view(kv).substr(eq_pos + 1), key);
          }
        }
        req.extra_constraints.push_back(std::move(ec));
      }
    }
  }
  return req;
}

std::string render_decorated(const StructuredRequirements& req) {
  std::ostringstream out;
  out << "<district>" << req.district << "</district>\n";
  out << "<objective>" << to_string(req.objective) << "</objective>\n";
  if (req.horizon.is_single()) out << "<timestep>" << req.horizon.t_hat << "</timestep>\n";
  out << "<equipment>";
  bool first = true;
  for (auto e : req.equipment) {
    out << (first ? "" : ", ") << to_string(e);
    first = false;
  }
  out << "</equipment>\n<constraints>";
  first = true;
  for (const auto& c : req.extra_constraints) {
    out << (first ? "" : ", ") << to_string(c.kind);
    if (!c.overrides.empty()) {
      out << '(';
      bool first_kv = true;
      for (const auto& [k, v] : c.overrides) {
        out << (first_kv ? "" : ", ") << k << '=' << format_number(v);
        first_kv = false;
      }
      out << ')';
    }
    first = false;
  }
  out << "</constraints>\n";
  return out.str();
}

std::vector<Violation> validate_requirements(const StructuredRequirements& req, const RequestCatalog& catalog,
                                             const NetworkCase& c) {
  std::vector<Violation> out;
  if (req.district.empty()) out.push_back({"district", "district must be non-empty"});
  else if (!catalog.districts().empty() && !catalog.find_district(req.district))
    out.push_back({"district", "unknown district '" + req.district + "'"});
  if (!req.district.empty() && req.district != c.district_id)
    out.push_back({"district", "requirements district '" + req.district + "' does not match case district '" +
                                   c.district_id + "'"});

  const auto installed = c.installed_equipment();
  for (auto e : req.equipment)
    if (!installed.contains(e))
      out.push_back({"equipment", "equipment '" + std::string(to_string(e)) + "' not installed in district"});

  const bool single_objective = is_single_timestep_objective(req.objective);
  if (single_objective && !req.horizon.is_single())
    out.push_back({"objective", "horizon mismatch: '" + std::string(to_string(req.objective)) +
                                    "' requires a single timestep"});
  if (!single_objective && req.horizon.is_single())
    out.push_back({"objective", "horizon mismatch: '" + std::string(to_string(req.objective)) +
                                    "' is a day-ahead objective"});
  if (req.horizon.is_single() && (req.horizon.t_hat < 0 || req.horizon.t_hat >= c.steps()))
    out.push_back({"timestep", "timestep " + std::to_string(req.horizon.t_hat) + " outside the case horizon"});

  for (const auto& ec : req.extra_constraints) {
    if (ec.kind == ConstraintKind::voltage_safety) {
      const double lo = ec.overrides.contains("v_min") ? ec.overrides.at("v_min") : c.limits.v_min;
      const double hi = ec.overrides.contains("v_max") ? ec.overrides.at("v_max") : c.limits.v_max;
      if (!(0 < lo && lo < hi)) out.push_back({"constraints", "voltage_safety requires 0 < v_min < v_max"});
    } else if (ec.overrides.contains("s_max") && !(ec.overrides.at("s_max") > 0)) {
      out.push_back({"constraints", "branch_safety requires s_max > 0"});
    }
  }
  return out;
}

}  // namespace adn
