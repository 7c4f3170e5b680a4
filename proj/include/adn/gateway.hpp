#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "adn/eval.hpp"
#include "adn/pipeline.hpp"

namespace httplib {
class Server;
}

namespace adn {

// Carries the HTTP status that the route handlers answer with.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  RunMode default_mode = RunMode::reference;
  std::string data_dir;    // catalog.json, prompts/, knowledge/, rag/
  std::string state_dir;   // runs/ and cases/ are written here
  std::string fixtures_dir;
  bool review_gate = false;
  int max_parallel_runs = 4;
  // Environment only; never read from or written to files.
  HttpChatConfig chat;
  std::string embed_endpoint;

  // JSON document; unspecified keys keep their defaults. Credentials come from the environment.
  static ServiceConfig load_file(const std::string& path, const std::string& default_data_dir);
  static ServiceConfig from_json(const nlohmann::json& doc, const std::string& default_data_dir);
};

// Shared pipeline resources for one data directory.
class Workspace {
 public:
  // The embedder is the HTTP endpoint when one is given, the hashing fallback otherwise.
  explicit Workspace(const std::string& data_dir, const std::string& embed_endpoint = "");

  const RequestCatalog& catalog() const { return catalog_; }
  const PromptLibrary& prompts() const { return prompts_; }
  const RagStore& rag() const { return rag_; }
  const Embedder& embedder() const { return *embedder_; }
  PipelineResources resources() const { return {catalog_, prompts_, rag_, *embedder_}; }
  const std::string& data_dir() const { return data_dir_; }
  // Case registered for a catalog district.
  NetworkCase district_case(const std::string& district) const;

 private:
  std::string data_dir_;
  RequestCatalog catalog_;
  PromptLibrary prompts_;
  RagStore rag_;
  std::unique_ptr<Embedder> embedder_;
};

nlohmann::json to_json(const DispatchStrategy& s);

// bus,t,v_before,v_after with v_before from the passive baseline power flow.
std::string voltage_profile_csv(const NetworkCase& c, const DispatchStrategy& s);
// `status <word>` then `<var> <value>` lines; readable by read_exchange_solution.
std::string solution_text(const Solution& sol);

// Writes trace.json and whichever of model.dsl, solution.txt, strategy.json, voltage.csv exist, with
// every non-empty secret replaced.
void write_run_artifacts(const std::string& dir, const PipelineResult& result, const NetworkCase& c,
                         const std::vector<std::string>& secrets = {});

std::string redact(std::string text, const std::vector<std::string>& secrets);
// Credentials present in the environment (ADN_CHAT_KEY, ADN_EMBED_KEY).
std::vector<std::string> environment_secrets();

enum class RunStatus { running, awaiting_review, succeeded, failed };
std::string_view to_string(RunStatus s);

struct SubmitParams {
  std::string case_id;
  std::string request;
  std::optional<RunMode> mode;
  Ablation ablation = Ablation::full;
  std::optional<int> seed;
  std::string fixture;  // transcript file under fixtures_dir, replay mode only
  std::optional<bool> review_gate;
};

struct RunHandle {
  std::string id;
  RunStatus status = RunStatus::running;
  std::string stage;  // last recorded stage
  std::string created;
  std::string updated;
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Validates and stores a case document; returns its id.
  std::string add_case(const std::string& document);
  std::vector<std::string> case_ids() const;

  RunHandle submit(const SubmitParams& params);
  // Approve (nullopt) or replace the extracted requirements of a run awaiting review.
  RunHandle review(const std::string& id, const std::optional<StructuredRequirements>& edit);
  RunHandle handle(const std::string& id) const;
  nlohmann::json run_view(const std::string& id, const std::string& detail = "full") const;
  nlohmann::json strategy_view(const std::string& id) const;
  nlohmann::json evaluate(const nlohmann::json& body);

  // Blocks until the run leaves `running` (or reaches a terminal state when `terminal` is set).
  RunHandle wait(const std::string& id, bool terminal = true) const;
  void install_routes(httplib::Server& server);
  // Serves until stop() is called from another thread.
  void listen();
  void stop();

  const ServiceConfig& config() const { return config_; }
  const Workspace& workspace() const { return workspace_; }

 private:
  struct Run;

  std::shared_ptr<Run> find(const std::string& id) const;
  std::string next_run_id();
  void execute(std::shared_ptr<Run> run);
  std::unique_ptr<ChatClient> make_client(const Run& run) const;
  std::string run_dir(const std::string& id) const;
  void log_event(const Run& run, const std::string& event) const;
  RunHandle handle_locked(const Run& run) const;

  ServiceConfig config_;
  Workspace workspace_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, NetworkCase> cases_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::vector<std::thread> workers_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<int> active_{0};
  bool stopping_ = false;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace adn
