#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adn/requirements.hpp"

namespace adn {

enum class Ablation { full, no_ie, no_pf, no_iepf, no_ek, no_fs, no_rag };

inline constexpr Ablation kAllAblations[] = {Ablation::full,  Ablation::no_ie, Ablation::no_pf, Ablation::no_iepf,
                                             Ablation::no_ek, Ablation::no_fs, Ablation::no_rag};

std::string_view to_string(Ablation a);
std::optional<Ablation> ablation_from_string(std::string_view name);

inline bool skips_extraction(Ablation a) { return a == Ablation::no_ie || a == Ablation::no_iepf; }
inline bool skips_formulation(Ablation a) { return a == Ablation::no_pf || a == Ablation::no_iepf; }
inline bool uses_knowledge(Ablation a) { return a != Ablation::no_ek; }
inline bool uses_few_shot(Ablation a) { return a != Ablation::no_fs; }

enum class AgentKind { extractor, formulator, programmer };
std::string_view to_string(AgentKind a);

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Section headers in render order.
inline constexpr const char* kSectionHeaders[] = {"### Role", "### Task", "### Environment", "### Output format",
                                                  "### Examples", "### Reasoning steps"};

struct PromptBundle {
  std::string role;
  std::string task;
  std::string environment;
  std::string output_format;
  std::vector<std::string> few_shot;
  std::string cot;

  // Non-blank sections only, each under its header.
  std::string render() const;
};

struct FewShotExample {
  std::string input;
  std::string output;
};

std::string render_example(const FewShotExample& e);

// Templates and knowledge slices read from a data directory:
//   prompts/<agent>/{role,task,output_format,cot}.md, prompts/<agent>/examples.json
//   knowledge/objective/<name>.md, knowledge/equipment/<kind>.md, knowledge/constraint/<kind>.md,
//   knowledge/{power_flow,injections,convexification,case_format,dsl}.md
class PromptLibrary {
 public:
  static PromptLibrary load(const std::string& data_dir);

  const std::string& section(AgentKind agent, const std::string& name) const;
  const std::vector<FewShotExample>& examples(AgentKind agent) const;
  // Knowledge slice by relative key, e.g. "objective/min_loss" or "dsl".
  const std::string& knowledge(const std::string& key) const;
  std::vector<std::string> knowledge_keys(const std::string& prefix) const;

 private:
  std::map<std::string, std::string> sections_;  // "<agent>/<name>"
  std::map<AgentKind, std::vector<FewShotExample>> examples_;
  std::map<std::string, std::string> knowledge_;
};

// environment is the agent's background text; no_ek blanks it, no_fs drops the examples.
PromptBundle assemble_prompt(AgentKind agent, const PromptLibrary& library, const RequestCatalog& catalog,
                             Ablation ablation, std::vector<std::string> few_shot);

// Knowledge keys for one formulation round (1..6). Without requirements every slice of the round's
// category is returned.
std::vector<std::string> round_knowledge_keys(int round, const StructuredRequirements* req);

}  // namespace adn
