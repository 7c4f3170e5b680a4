#include "adn/prompts.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "adn/util.hpp"

namespace adn {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<Ablation, std::string_view> kAblationNames[] = {
    {Ablation::full, "full"},       {Ablation::no_ie, "no_ie"}, {Ablation::no_pf, "no_pf"},
    {Ablation::no_iepf, "no_iepf"}, {Ablation::no_ek, "no_ek"}, {Ablation::no_fs, "no_fs"},
    {Ablation::no_rag, "no_rag"}};

constexpr AgentKind kAgents[] = {AgentKind::extractor, AgentKind::formulator, AgentKind::programmer};
constexpr const char* kSectionFiles[] = {"role", "task", "output_format", "cot"};

std::string trimmed(std::string_view s) { return std::string(trim(s)); }

}  // namespace

std::string_view to_string(Ablation a) {
  for (const auto& [k, n] : kAblationNames)
    if (k == a) return n;
  return "?";
}

std::optional<Ablation> ablation_from_string(std::string_view name) {
  for (const auto& [k, n] : kAblationNames)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view to_string(AgentKind a) {
  switch (a) {
    case AgentKind::extractor: return "extractor";
    case AgentKind::formulator: return "formulator";
    case AgentKind::programmer: return "programmer";
  }
  return "?";
}

std::string PromptBundle::render() const {
  std::string examples;
  for (std::size_t i = 0; i < few_shot.size(); ++i) {
    if (i) examples += "\n\n";
    examples += "Example " + std::to_string(i + 1) + "\n" + trimmed(few_shot[i]);
  }
  const std::string* bodies[] = {&role, &task, &environment, &output_format, &examples, &cot};
  std::string out;
  for (std::size_t i = 0; i < std::size(bodies); ++i) {
    const std::string body = trimmed(*bodies[i]);
    if (body.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += kSectionHeaders[i];
    out += "\n";
    out += body;
  }
  return out + "\n";
}

std::string render_example(const FewShotExample& e) {
  return "Input:\n" + trimmed(e.input) + "\nOutput:\n" + trimmed(e.output);
}

PromptLibrary PromptLibrary::load(const std::string& data_dir) {
  PromptLibrary lib;
  const fs::path root(data_dir);
  for (auto agent : kAgents) {
    const fs::path dir = root / "prompts" / std::string(to_string(agent));
    for (const char* name : kSectionFiles) {
      const fs::path file = dir / (std::string(name) + ".md");
      if (!fs::exists(file)) throw PromptError("missing prompt template " + file.string());
      lib.sections_[std::string(to_string(agent)) + "/" + name] = read_file(file.string());
    }
    const fs::path ex = dir / "examples.json";
    auto& list = lib.examples_[agent];
    if (fs::exists(ex)) {
      try {
        for (const auto& e : nlohmann::json::parse(read_file(ex.string())))
          list.push_back({e.at("input").get<std::string>(), e.at("output").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw PromptError(ex.string() + ": " + e.what());
      }
    }
  }
  const fs::path kdir = root / "knowledge";
  if (!fs::is_directory(kdir)) throw PromptError("missing knowledge directory " + kdir.string());
  for (const auto& entry : fs::recursive_directory_iterator(kdir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".md") continue;
    std::string key = fs::relative(entry.path(), kdir).replace_extension().generic_string();
    lib.knowledge_[key] = read_file(entry.path().string());
  }
  return lib;
}

const std::string& PromptLibrary::section(AgentKind agent, const std::string& name) const {
  auto it = sections_.find(std::string(to_string(agent)) + "/" + name);
  if (it == sections_.end()) throw PromptError("no prompt section " + std::string(to_string(agent)) + "/" + name);
  return it->second;
}

const std::vector<FewShotExample>& PromptLibrary::examples(AgentKind agent) const {
  static const std::vector<FewShotExample> kNone;
  auto it = examples_.find(agent);
  return it == examples_.end() ? kNone : it->second;
}

const std::string& PromptLibrary::knowledge(const std::string& key) const {
  auto it = knowledge_.find(key);
  if (it == knowledge_.end()) throw PromptError("no knowledge slice '" + key + "'");
  return it->second;
}

std::vector<std::string> PromptLibrary::knowledge_keys(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : knowledge_)
    if (k.starts_with(prefix)) out.push_back(k);
  return out;
}

PromptBundle assemble_prompt(AgentKind agent, const PromptLibrary& library, const RequestCatalog& catalog,
                             Ablation ablation, std::vector<std::string> few_shot) {
  PromptBundle b;
  b.role = library.section(agent, "role");
  b.task = library.section(agent, "task");
  b.output_format = library.section(agent, "output_format");
  b.cot = library.section(agent, "cot");
  if (uses_knowledge(ablation)) {
    switch (agent) {
      case AgentKind::extractor:
        b.environment = catalog.describe();
        break;
      case AgentKind::formulator:
        b.environment = catalog.describe() + "\n" + library.knowledge("case_format");
        break;
      case AgentKind::programmer:
        b.environment = library.knowledge("case_format") + "\n" + library.knowledge("dsl");
        break;
    }
  }
  if (uses_few_shot(ablation)) b.few_shot = std::move(few_shot);
  return b;
}

std::vector<std::string> round_knowledge_keys(int round, const StructuredRequirements* req) {
  std::vector<std::string> out;
  switch (round) {
    case 1:
      if (req) {
        out.push_back("objective/" + std::string(to_string(req->objective)));
      } else {
        for (auto o : kAllObjectives) out.push_back("objective/" + std::string(to_string(o)));
      }
      break;
    case 2:
      if (req) {
        for (auto e : req->equipment) out.push_back("equipment/" + std::string(to_string(e)));
      } else {
        for (auto e : kAllEquipment) out.push_back("equipment/" + std::string(to_string(e)));
      }
      break;
    case 3:
      out = {"power_flow", "injections"};
      break;
    case 4:
      if (req) {
        for (const auto& c : req->extra_constraints) out.push_back("constraint/" + std::string(to_string(c.kind)));
      } else {
        for (auto k : {ConstraintKind::voltage_safety, ConstraintKind::branch_safety})
          out.push_back("constraint/" + std::string(to_string(k)));
      }
      break;
    case 5:
      out = {"dsl"};
      break;
    case 6:
      out = {"convexification"};
      break;
    default:
      throw PromptError("formulation round " + std::to_string(round) + " out of range");
  }
  return out;
}

}  // namespace adn
