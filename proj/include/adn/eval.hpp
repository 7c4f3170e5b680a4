#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adn/canonical.hpp"
#include "adn/pipeline.hpp"

namespace adn {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const StructuredRequirements& req);
// Throws RequirementsError on unknown names or a malformed document.
StructuredRequirements requirements_from_json(const nlohmann::json& doc);

// Five 20-point components scored on the structural component diff: match 20, partial 10, missing 0.
struct GradeReport {
  std::map<Component, int> scores;
  int total = 0;
  ModelDiff evidence;
};

int rubric_score(DiffOutcome outcome);
GradeReport grade_formulation(const Model& generated, const Model& reference);
nlohmann::json to_json(const GradeReport& g);

struct RunRecord {
  std::string request_id;
  int seed = 0;
  Ablation ablation = Ablation::full;
  bool executable = false;
  std::optional<std::string> solve_status;  // absent unless executable
  std::optional<GradeReport> formulation_grade;
  std::optional<GradeReport> code_grade;
  std::optional<bool> extraction_correct;
  std::string trace_path;
  std::string error;
};

// Executable fraction. Throws EvalError on an empty set.
double pass_at_1(const std::vector<RunRecord>& records);
// Fraction of requests with at least one executable record. Throws EvalError on an empty set.
double pass_at_3(const std::vector<RunRecord>& records);
// Two decimals, as rates are reported.
std::string format_rate(double rate);

struct SuiteRequest {
  std::string id;
  std::string district;
  std::string text;
  std::optional<StructuredRequirements> expected;
};

std::vector<SuiteRequest> load_suite(const std::string& path);

struct AblationSummary {
  Ablation ablation = Ablation::full;
  int runs = 0;
  std::optional<double> mean_formulation_score;  // absent when the ablation skips formulation
  double mean_code_score = 0.0;
  double pass_at_1 = 0.0;
  double pass_at_3 = 0.0;
  std::optional<double> extraction_accuracy;
};

struct SuiteReport {
  RunMode mode = RunMode::reference;
  std::vector<int> seeds;
  std::vector<AblationSummary> ablations;
  std::vector<RunRecord> records;  // ordered by (ablation, request, seed)
  std::vector<std::string> errors;
};

nlohmann::json to_json(const SuiteReport& r);
// Per-ablation aggregates recomputed from records alone.
std::vector<AblationSummary> aggregate(const std::vector<RunRecord>& records, const std::vector<Ablation>& ablations);

using ClientFactory = std::function<std::unique_ptr<ChatClient>(const SuiteRequest& request, int seed,
                                                                Ablation ablation, const NetworkCase& c)>;

struct SuiteOptions {
  RunMode mode = RunMode::reference;
  std::vector<Ablation> ablations{Ablation::full};
  int repeats = 3;
  std::vector<int> seeds{1, 2, 3};  // first `repeats` are used
  int parallelism = 4;
  std::string trace_dir;  // traces persisted here when set
  SolveOptions solve;
};

// Cases come from the catalog district entries.
SuiteReport run_suite(const std::vector<SuiteRequest>& requests, const PipelineResources& res,
                      const ClientFactory& make_client, const SuiteOptions& opts);

// Transcript fixture path for one run: <dir>/<request>__s<seed>__<ablation>.json
std::string fixture_path(const std::string& dir, const std::string& request_id, int seed, Ablation ablation);

}  // namespace adn
