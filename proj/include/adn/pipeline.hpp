#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adn/case.hpp"
#include "adn/chat.hpp"
#include "adn/model.hpp"
#include "adn/prompts.hpp"
#include "adn/rag.hpp"
#include "adn/requirements.hpp"
#include "adn/solver.hpp"
#include "adn/strategy.hpp"

namespace adn {

enum class RunMode { reference, llm, replay };
std::string_view to_string(RunMode m);
std::optional<RunMode> run_mode_from_string(std::string_view name);

struct StageRecord {
  std::string stage;   // extraction, review, formulation, code, solve
  int round = 0;       // formulation rounds 1..6
  std::string status;  // ok, skipped, error
  std::vector<ChatMessage> prompt;  // messages added by this stage or round
  std::string output;
  std::string artifact;
  std::string error;
  std::vector<std::string> exemplars;  // code stage
  std::optional<double> wall_ms;

  bool operator==(const StageRecord&) const = default;
};

struct SolveSummary {
  std::string status;
  double objective = 0.0;
  int nodes = 0;
  int iterations = 0;
  double max_violation = 0.0;
  bool reduced_accuracy = false;
  std::optional<Kpis> kpis;

  bool operator==(const SolveSummary& o) const;
};

struct PipelineTrace {
  std::string request;
  RunMode mode = RunMode::reference;
  Ablation ablation = Ablation::full;
  // Reference mode has no prompts, so every ablation runs as full.
  Ablation applied_ablation = Ablation::full;
  std::optional<int> seed;
  std::string client;
  std::vector<StageRecord> records;
  std::optional<std::string> requirements;  // decorated form
  bool executable = false;
  std::optional<SolveSummary> solve;
  bool succeeded = false;
  std::string error_stage;
  std::string error;

  bool has_stage(std::string_view stage) const;
  std::vector<const StageRecord*> stage_records(std::string_view stage) const;
  bool operator==(const PipelineTrace&) const = default;
};

nlohmann::json to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(const nlohmann::json& doc);

struct PipelineResult {
  PipelineTrace trace;
  std::optional<StructuredRequirements> requirements;
  std::optional<Model> formulation_model;  // round 6 output
  std::optional<Model> model;              // canonical executable model
  std::optional<Solution> solution;
  std::optional<DispatchStrategy> strategy;
};

// Shared read-only resources.
struct PipelineResources {
  const RequestCatalog& catalog;
  const PromptLibrary& prompts;
  const RagStore& rag;
  const Embedder& embedder;
};

struct StageOptions {
  Ablation ablation = Ablation::full;
  GenerationParams params;
  bool record_timing = true;
};

struct ExtractionOutcome {
  std::optional<StructuredRequirements> requirements;
  StageRecord record;
};

// One chat turn parsed as decorated requirements and checked against the case. Skipped under no_ie/no_iepf.
ExtractionOutcome run_extraction(const std::string& request, const NetworkCase& c, ChatClient& client,
                                 const PipelineResources& res, const StageOptions& opts);

struct FormulationOutcome {
  std::optional<Model> model;
  std::vector<StageRecord> records;
};

// Six dialogue rounds; rounds 1-4 return fragments, rounds 5-6 complete scripts. Without requirements the
// raw request is sent and every knowledge slice of each round's category is embedded.
FormulationOutcome run_formulation(const StructuredRequirements* req, const std::string& request,
                                   const NetworkCase& c, ChatClient& client, const PipelineResources& res,
                                   const StageOptions& opts);

struct CodeOutcome {
  std::optional<Model> model;  // canonical
  std::optional<Solution> solution;
  StageRecord code;
  StageRecord solve;
  bool executable = false;
};

// Executable means the reply parses, canonicalizes and reaches a solver status without throwing.
CodeOutcome run_code_stage(const Model* upstream, const StructuredRequirements* req, const std::string& request,
                           const NetworkCase& c, ChatClient& client, const PipelineResources& res,
                           const StageOptions& opts, const SolveOptions& solve_opts = {});

// Called after extraction with the parsed requirements; returns edited requirements, or nullopt to
// approve as is. May throw to abandon the run.
using ReviewHook = std::function<std::optional<StructuredRequirements>(const StructuredRequirements&)>;
using ProgressHook = std::function<void(const PipelineTrace&)>;

struct RunOptions {
  RunMode mode = RunMode::reference;
  Ablation ablation = Ablation::full;
  std::optional<int> seed;
  GenerationParams params;
  SolveOptions solve;
  ReviewHook review;
  ProgressHook progress;
};

PipelineResult run_pipeline(const std::string& request, const NetworkCase& c, ChatClient& client,
                            const PipelineResources& res, const RunOptions& opts);

// Exemplar library over the toy fixtures under <data_dir>/cases; the first three entries are fixed.
RagStore build_reference_library(const std::string& data_dir, const Embedder& embedder);

}  // namespace adn
