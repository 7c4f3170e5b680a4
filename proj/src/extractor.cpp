#include "adn/extractor.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace adn {

namespace {

enum class TokenKind { district, objective, equipment, constraint, all_equipment, negation, unavailable, boundary };

struct Token {
  TokenKind kind;
  std::string value;  // canonical id for districts, enum names otherwise
  std::size_t word = 0;
};

bool is_boundary_char(char ch) { return std::string_view(".,;:!?()\"\n").find(ch) != std::string_view::npos; }

bool is_filler(const std::string& w) {
  static const std::set<std::string> kFiller = {"the", "a", "an", "our", "my", "its", "their", "this", "that",
                                                "please", "total", "overall", "kindly"};
  return kFiller.contains(w);
}

// Lower-cased words without fillers; clause punctuation becomes a "|" word.
std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !is_filler(cur)) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == '-' || ch == '/') {
      flush();
    } else if (is_boundary_char(ch)) {
      flush();
      out.emplace_back("|");
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

struct Phrase {
  std::vector<std::string> words;
  TokenKind kind;
  std::string value;
};

std::vector<Phrase> phrase_table(const RequestCatalog& catalog) {
  std::vector<Phrase> out;
  auto add = [&](std::string_view text, TokenKind kind, std::string value) {
    auto w = words_of(text);
    if (!w.empty()) out.push_back({std::move(w), kind, std::move(value)});
  };
  for (const auto& d : catalog.districts()) {
    add(d.id, TokenKind::district, d.id);
    for (const auto& a : d.aliases) add(a, TokenKind::district, d.id);
  }
  for (const auto& [p, o] : catalog.objective_phrases()) add(p, TokenKind::objective, std::string(to_string(o)));
  for (auto o : kAllObjectives) add(to_string(o), TokenKind::objective, std::string(to_string(o)));
  for (const auto& [p, e] : catalog.equipment_phrases()) add(p, TokenKind::equipment, std::string(to_string(e)));
  for (auto e : kAllEquipment) add(to_string(e), TokenKind::equipment, std::string(to_string(e)));
  for (const auto& [p, k] : catalog.constraint_phrases()) add(p, TokenKind::constraint, std::string(to_string(k)));
  for (auto k : {ConstraintKind::voltage_safety, ConstraintKind::branch_safety})
    add(to_string(k), TokenKind::constraint, std::string(to_string(k)));
  for (const auto& p : catalog.all_equipment_phrases()) add(p, TokenKind::all_equipment, "");
  for (const auto& p : catalog.negation_phrases()) add(p, TokenKind::negation, "");
  for (const auto& p : catalog.unavailability_phrases()) add(p, TokenKind::unavailable, "");
  // Longest first so multi-word phrases shadow their prefixes.
  std::stable_sort(out.begin(), out.end(),
                   [](const Phrase& a, const Phrase& b) { return a.words.size() > b.words.size(); });
  return out;
}

std::vector<Token> tokenize(const std::vector<std::string>& words, const std::vector<Phrase>& table) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < words.size()) {
    if (words[i] == "|") {
      out.push_back({TokenKind::boundary, "", i});
      ++i;
      continue;
    }
    const Phrase* hit = nullptr;
    for (const auto& p : table) {
      if (i + p.words.size() > words.size()) continue;
      if (std::equal(p.words.begin(), p.words.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        hit = &p;
        break;
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    out.push_back({hit->kind, hit->value, i});
    i += hit->words.size();
  }
  return out;
}

std::optional<int> find_timestep(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
  std::smatch m;
  static const std::regex keyed(R"(\b(?:hour|timestep|time step|step|interval|t)\s*(?:=|#|no\.)?\s*(\d{1,2})\b)");
  static const std::regex clock(R"(\b(\d{1,2}):(\d{2})\b)");
  static const std::regex ampm(R"(\b(\d{1,2})\s*(am|pm)\b)");
  static const std::regex noon(R"(\b(noon|midday)\b)");
  static const std::regex midnight(R"(\bmidnight\b)");
  if (std::regex_search(text, m, keyed)) return std::stoi(m[1]);
  if (std::regex_search(text, m, clock)) return std::stoi(m[1]);
  if (std::regex_search(text, m, ampm)) {
    int h = std::stoi(m[1]) % 12;
    return m[2] == "pm" ? h + 12 : h;
  }
  if (std::regex_search(text, noon)) return 12;
  if (std::regex_search(text, midnight)) return 0;
  return std::nullopt;
}

// "between 0.95 and 1.05" near a voltage phrase, "below 0.3" / "limit of 0.3" near a branch phrase.
std::map<std::string, double> find_overrides(const std::string& lower, ConstraintKind kind) {
  std::map<std::string, double> out;
  std::smatch m;
  if (kind == ConstraintKind::voltage_safety) {
    static const std::regex range(R"(voltage[^.;]*?between\s+(\d*\.\d+|\d+)\s*(?:p\.u\.|pu)?\s*and\s+(\d*\.\d+|\d+))");
    if (std::regex_search(lower, m, range)) {
      out["v_min"] = std::stod(m[1]);
      out["v_max"] = std::stod(m[2]);
    }
  } else {
    static const std::regex cap(R"((?:branch|line)[^.;]*?(?:below|under|limit of|at most|within)\s+(\d*\.\d+|\d+))");
    if (std::regex_search(lower, m, cap)) out["s_max"] = std::stod(m[1]);
  }
  return out;
}

}  // namespace

StructuredRequirements extract_reference(std::string_view request, const RequestCatalog& catalog) {
  const auto tokens = tokenize(words_of(request), phrase_table(catalog));
  StructuredRequirements req;
  std::optional<Objective> objective;
  std::set<EquipmentKind> mentioned, excluded;
  std::set<ConstraintKind> constraints;
  bool all_equipment = false;

  // Clause-level bookkeeping for negations and unavailability.
  bool negated = false;
  std::vector<EquipmentKind> clause_equipment;
  for (const auto& t : tokens) {
    switch (t.kind) {
      case TokenKind::boundary:
        negated = false;
        clause_equipment.clear();
        break;
      case TokenKind::district:
        if (req.district.empty()) req.district = t.value;
        break;
      case TokenKind::objective:
        if (!objective) objective = objective_from_string(t.value);
        break;
      case TokenKind::constraint:
        constraints.insert(*constraint_from_string(t.value));
        break;
      case TokenKind::all_equipment:
        all_equipment = true;
        break;
      case TokenKind::negation:
        negated = true;
        break;
      case TokenKind::unavailable:
        for (auto e : clause_equipment) excluded.insert(e);
        break;
      case TokenKind::equipment: {
        const auto e = *equipment_from_string(t.value);
        clause_equipment.push_back(e);
        if (negated) excluded.insert(e);
        else mentioned.insert(e);
        break;
      }
    }
  }

  if (req.district.empty()) throw ExtractionError("no known district named in the request");
  if (!objective) throw ExtractionError("no dispatch objective recognized in the request");
  req.objective = *objective;

  EquipmentSet equipment = mentioned;
  if (all_equipment)
    if (const auto* d = catalog.find_district(req.district)) equipment.insert(d->equipment.begin(), d->equipment.end());
  for (auto e : excluded) equipment.erase(e);
  req.equipment = std::move(equipment);

  std::string lower(request);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto k : constraints) req.extra_constraints.push_back({k, find_overrides(lower, k)});

  if (is_single_timestep_objective(req.objective))
    req.horizon = HorizonSpec::single(find_timestep(std::string(request)).value_or(kDefaultTimestep));
  return req;
}

}  // namespace adn
