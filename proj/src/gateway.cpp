#include "adn/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "adn/dsl.hpp"
#include "adn/power_flow.hpp"
#include "adn/util.hpp"

namespace adn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and workspace

ServiceConfig ServiceConfig::from_json(const json& doc, const std::string& default_data_dir) {
  ServiceConfig c;
  c.data_dir = default_data_dir;
  c.host = doc.value("host", c.host);
  c.port = doc.value("port", c.port);
  if (doc.contains("mode")) {
    auto m = run_mode_from_string(doc.at("mode").get<std::string>());
    if (!m) throw std::runtime_error("config: unknown mode '" + doc.at("mode").get<std::string>() + "'");
    c.default_mode = *m;
  }
  c.data_dir = doc.value("data_dir", c.data_dir);
  c.state_dir = doc.value("state_dir", (fs::path(c.data_dir).parent_path() / "state").string());
  c.fixtures_dir = doc.value("fixtures_dir", (fs::path(c.data_dir) / "fixtures").string());
  c.review_gate = doc.value("review_gate", false);
  c.max_parallel_runs = doc.value("max_parallel_runs", c.max_parallel_runs);
  if (c.max_parallel_runs < 1) throw std::runtime_error("config: max_parallel_runs must be positive");
  c.chat = HttpChatConfig::from_env();
  c.embed_endpoint = env_or_empty("ADN_EMBED_ENDPOINT");
  return c;
}

ServiceConfig ServiceConfig::load_file(const std::string& path, const std::string& default_data_dir) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  for (const char* key : {"api_key", "chat_key", "credential"})
    if (doc.contains(key)) throw std::runtime_error(path + ": credentials are read from the environment only");
  return from_json(doc, default_data_dir);
}

Workspace::Workspace(const std::string& data_dir, const std::string& embed_endpoint)
    : data_dir_(data_dir),
      catalog_(RequestCatalog::load_file((fs::path(data_dir) / "catalog.json").string())),
      prompts_(PromptLibrary::load(data_dir)) {
  if (embed_endpoint.empty()) {
    embedder_ = std::make_unique<HashingEmbedder>();
  } else {
    embedder_ = std::make_unique<HttpEmbedder>(embed_endpoint, env_or_empty("ADN_EMBED_KEY"),
                                               env_or_empty("ADN_EMBED_MODEL"));
  }
  const fs::path lib = fs::path(data_dir) / "rag" / "library.json";
  if (embed_endpoint.empty() && fs::exists(lib)) {
    rag_ = RagStore::load_file(lib.string());
  } else if (fs::exists(lib)) {
    // Stored vectors come from the fallback embedder; re-embed with the live one.
    const RagStore stored = RagStore::load_file(lib.string());
    RagStore live(embedder_->dimension());
    std::vector<std::string> fixed;
    for (const auto& e : stored.fixed()) fixed.push_back(e.id);
    for (auto e : stored.entries()) {
      e.vector = embedder_->embed(e.text);
      live.add(std::move(e));
    }
    live.set_fixed(fixed);
    rag_ = live;
  } else {
    rag_ = build_reference_library(data_dir, *embedder_);
  }
}

NetworkCase Workspace::district_case(const std::string& district) const {
  const DistrictInfo* d = catalog_.find_district(district);
  if (!d) throw std::runtime_error("unknown district '" + district + "'");
  return load_case_file((fs::path(catalog_.source_dir()) / d->case_path).string());
}

// ---------------------------------------------------------------------------
// Artifacts

json to_json(const DispatchStrategy& s) {
  json doc;
  doc["steps"] = s.steps;
  doc["devices"] = json::array();
  for (const auto& d : s.devices)
    doc["devices"].push_back({{"kind", to_string(d.kind)}, {"bus", d.bus}, {"series", d.series}});
  doc["voltage"] = s.voltage;
  doc["p_branch"] = s.p_branch;
  doc["q_branch"] = s.q_branch;
  doc["l_branch"] = s.l_branch;
  doc["p_grid"] = s.p_grid;
  doc["q_grid"] = s.q_grid;
  doc["kpis"] = {{"total_losses", s.kpis.total_losses},
                 {"total_cost", s.kpis.total_cost},
                 {"max_voltage_deviation", s.kpis.max_voltage_deviation},
                 {"max_branch_apparent_power", s.kpis.max_branch_apparent_power}};
  doc["max_simultaneous_bess"] = s.max_simultaneous_bess;
  doc["warnings"] = s.warnings;
  return doc;
}

std::string voltage_profile_csv(const NetworkCase& c, const DispatchStrategy& s) {
  const PowerFlowResult base = baseline_power_flow(c);
  std::string out = "bus,t,v_before,v_after\n";
  for (std::size_t k = 0; k < s.steps.size(); ++k) {
    const int t = s.steps[k];
    const auto& before = base.steps.at(static_cast<std::size_t>(t)).v;
    for (std::size_t i = 0; i < c.buses.size(); ++i)
      out += std::to_string(c.buses[i].id) + "," + std::to_string(t) + "," + format_number(std::sqrt(before[i])) +
             "," + format_number(s.voltage[k][i]) + "\n";
  }
  return out;
}

std::string solution_text(const Solution& sol) {
  std::string out = "status " + std::string(to_string(sol.status)) + "\n";
  for (const auto& [name, value] : sol.values) out += name + " " + format_number(value) + "\n";
  return out;
}

std::string redact(std::string text, const std::vector<std::string>& secrets) {
  for (const auto& s : secrets) {
    if (s.empty()) continue;
    for (std::size_t pos = text.find(s); pos != std::string::npos; pos = text.find(s, pos + 10))
      text.replace(pos, s.size(), "[redacted]");
  }
  return text;
}

std::vector<std::string> environment_secrets() {
  std::vector<std::string> out;
  for (const char* name : {"ADN_CHAT_KEY", "ADN_EMBED_KEY"})
    if (auto v = env_or_empty(name); !v.empty()) out.push_back(v);
  return out;
}

void write_run_artifacts(const std::string& dir, const PipelineResult& result, const NetworkCase& c,
                         const std::vector<std::string>& secrets) {
  fs::create_directories(dir);
  auto put = [&](const char* name, const std::string& content) {
    write_file((fs::path(dir) / name).string(), redact(content, secrets));
  };
  put("trace.json", to_json(result.trace).dump(1) + "\n");
  if (result.model) put("model.dsl", print_model(*result.model));
  if (result.solution) put("solution.txt", solution_text(*result.solution));
  if (result.strategy) {
    put("strategy.json", to_json(*result.strategy).dump(1) + "\n");
    put("voltage.csv", voltage_profile_csv(c, *result.strategy));
  }
}

// ---------------------------------------------------------------------------
// Service

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::awaiting_review: return "awaiting_review";
    case RunStatus::succeeded: return "succeeded";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

struct Service::Run {
  std::string id;
  SubmitParams params;
  RunMode mode = RunMode::reference;
  bool gate = false;
  NetworkCase network;
  RunStatus status = RunStatus::running;
  PipelineTrace trace;
  std::optional<PipelineResult> result;
  std::optional<StructuredRequirements> extracted;
  std::optional<std::optional<StructuredRequirements>> decision;
  std::string created;
  std::string updated;
};

Service::Service(ServiceConfig config)
    : config_(std::move(config)), workspace_(config_.data_dir, config_.embed_endpoint) {
  if (config_.state_dir.empty()) throw std::runtime_error("service needs a state directory");
  fs::create_directories(fs::path(config_.state_dir) / "runs");
  fs::create_directories(fs::path(config_.state_dir) / "cases");
  for (const auto& d : workspace_.catalog().districts()) cases_.emplace(d.id, workspace_.district_case(d.id));
  for (const auto& entry : fs::directory_iterator(fs::path(config_.state_dir) / "cases")) {
    if (entry.path().extension() != ".json") continue;
    try {
      cases_.emplace(entry.path().stem().string(), load_case_file(entry.path().string()));
    } catch (const std::exception&) {
      // Unreadable uploads are skipped; they were validated when stored.
    }
  }
}

Service::~Service() {
  stop();
  for (auto& t : workers_)
    if (t.joinable()) t.join();
}

std::string Service::add_case(const std::string& document) {
  NetworkCase c;
  try {
    c = load_case(document);
  } catch (const std::exception& e) {
    throw ServiceError(422, std::string("invalid case: ") + e.what());
  }
  const auto violations = validate_case(c);
  if (!violations.empty()) {
    std::string msg = "invalid case:";
    for (const auto& v : violations) msg += " " + v.location + ": " + v.invariant + ";";
    throw ServiceError(422, msg);
  }
  const std::string text = serialize_case(c);
  const std::string id = c.district_id + "-" + sha256_hex(text).substr(0, 12);
  std::lock_guard lock(mu_);
  if (!cases_.contains(id)) {
    write_file((fs::path(config_.state_dir) / "cases" / (id + ".json")).string(), text);
    cases_.emplace(id, std::move(c));
  }
  return id;
}

std::vector<std::string> Service::case_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : cases_) out.push_back(id);
  return out;
}

std::string Service::next_run_id() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  char buf[48];
  std::snprintf(buf, sizeof buf, "r%013lld-%06llu", static_cast<long long>(ms),
                static_cast<unsigned long long>(++counter_));
  return buf;
}

std::string Service::run_dir(const std::string& id) const { return (fs::path(config_.state_dir) / "runs" / id).string(); }

void Service::log_event(const Run& run, const std::string& event) const {
  fs::create_directories(run_dir(run.id));
  std::ofstream out(fs::path(run_dir(run.id)) / "events.log", std::ios::app);
  out << run.updated << " " << event << "\n";
}

RunHandle Service::handle_locked(const Run& run) const {
  RunHandle h;
  h.id = run.id;
  h.status = run.status;
  h.stage = run.trace.records.empty() ? "" : run.trace.records.back().stage;
  h.created = run.created;
  h.updated = run.updated;
  return h;
}

std::shared_ptr<Service::Run> Service::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(id);
  if (it == runs_.end()) throw ServiceError(404, "unknown run '" + id + "'");
  return it->second;
}

RunHandle Service::submit(const SubmitParams& params) {
  if (trim(params.request).empty()) throw ServiceError(422, "request text is empty");
  const RunMode mode = params.mode.value_or(config_.default_mode);
  if (mode == RunMode::replay && params.fixture.empty()) throw ServiceError(422, "replay mode needs a fixture");
  if (mode == RunMode::replay && params.fixture.find("..") != std::string::npos)
    throw ServiceError(422, "fixture names may not leave the fixtures directory");
  auto run = std::make_shared<Run>();
  run->params = params;
  run->mode = mode;
  run->gate = params.review_gate.value_or(config_.review_gate);
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw ServiceError(503, "service is stopping");
    auto it = cases_.find(params.case_id);
    if (it == cases_.end()) throw ServiceError(404, "unknown case '" + params.case_id + "'");
    run->network = it->second;
    run->id = next_run_id();
    run->created = run->updated = utc_now();
    run->trace.request = params.request;
    run->trace.mode = mode;
    run->trace.ablation = params.ablation;
    run->trace.seed = params.seed;
    runs_.emplace(run->id, run);
    log_event(*run, "submitted case=" + params.case_id + " mode=" + std::string(to_string(mode)) +
                        " ablation=" + std::string(to_string(params.ablation)));
    workers_.emplace_back([this, run] { execute(run); });
    return handle_locked(*run);
  }
}

std::unique_ptr<ChatClient> Service::make_client(const Run& run) const {
  switch (run.mode) {
    case RunMode::reference:
      return std::make_unique<ReferenceClient>(workspace_.catalog(), run.network);
    case RunMode::llm:
      return std::make_unique<HttpChatClient>(config_.chat);
    case RunMode::replay:
      return std::make_unique<ReplayClient>(
          Transcript::load_file((fs::path(config_.fixtures_dir) / run.params.fixture).string()));
  }
  throw std::logic_error("unknown run mode");
}

void Service::execute(std::shared_ptr<Run> run) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return stopping_ || active_ < config_.max_parallel_runs; });
    ++active_;
  }
  PipelineResult result;
  try {
    auto client = make_client(*run);
    RunOptions ro;
    ro.mode = run->mode;
    ro.ablation = run->params.ablation;
    ro.seed = run->params.seed;
    ro.progress = [&](const PipelineTrace& t) {
      std::lock_guard lock(mu_);
      run->trace = t;
      run->updated = utc_now();
    };
    if (run->gate) {
      ro.review = [&](const StructuredRequirements& req) -> std::optional<StructuredRequirements> {
        std::unique_lock lock(mu_);
        run->extracted = req;
        run->status = RunStatus::awaiting_review;
        run->updated = utc_now();
        log_event(*run, "awaiting_review");
        cv_.notify_all();
        cv_.wait(lock, [&] { return run->decision.has_value() || stopping_; });
        if (!run->decision) throw std::runtime_error("service stopped while awaiting review");
        return *run->decision;
      };
    }
    result = run_pipeline(run->params.request, run->network, *client, workspace_.resources(), ro);
  } catch (const std::exception& e) {
    result.trace = run->trace;
    result.trace.error_stage = "setup";
    result.trace.error = e.what();
    result.trace.succeeded = false;
  }
  try {
    write_run_artifacts(run_dir(run->id), result, run->network, environment_secrets());
  } catch (const std::exception& e) {
    result.trace.succeeded = false;
    result.trace.error_stage = "persist";
    result.trace.error = e.what();
  }
  std::lock_guard lock(mu_);
  run->trace = result.trace;
  run->status = result.trace.succeeded ? RunStatus::succeeded : RunStatus::failed;
  run->result = std::move(result);
  run->updated = utc_now();
  log_event(*run, std::string(to_string(run->status)));
  --active_;
  cv_.notify_all();
}

RunHandle Service::review(const std::string& id, const std::optional<StructuredRequirements>& edit) {
  auto run = find(id);
  std::lock_guard lock(mu_);
  // Compare-and-swap on status: only one review can move the run out of awaiting_review.
  if (run->status != RunStatus::awaiting_review)
    throw ServiceError(409, "run " + id + " is " + std::string(to_string(run->status)) + ", not awaiting_review");
  if (edit) {
    const auto violations = validate_requirements(*edit, workspace_.catalog(), run->network);
    if (!violations.empty()) {
      std::string msg = "invalid requirements:";
      for (const auto& v : violations) msg += " " + v.location + ": " + v.invariant + ";";
      throw ServiceError(422, msg);
    }
  }
  run->decision = edit;
  run->status = RunStatus::running;
  run->updated = utc_now();
  log_event(*run, edit ? "review edited" : "review approved");
  cv_.notify_all();
  return handle_locked(*run);
}

RunHandle Service::handle(const std::string& id) const {
  auto run = find(id);
  std::lock_guard lock(mu_);
  return handle_locked(*run);
}

RunHandle Service::wait(const std::string& id, bool terminal) const {
  auto run = find(id);
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] {
    if (run->status == RunStatus::succeeded || run->status == RunStatus::failed) return true;
    return !terminal && run->status == RunStatus::awaiting_review;
  });
  return handle_locked(*run);
}

json Service::run_view(const std::string& id, const std::string& detail) const {
  auto run = find(id);
  std::lock_guard lock(mu_);
  json trace = json::parse(redact(to_json(run->trace).dump(), environment_secrets()));
  json view;
  view["id"] = run->id;
  view["status"] = to_string(run->status);
  view["case"] = run->params.case_id;
  view["mode"] = to_string(run->mode);
  view["ablation"] = to_string(run->params.ablation);
  view["seed"] = run->params.seed ? json(*run->params.seed) : json(nullptr);
  view["created"] = run->created;
  view["updated"] = run->updated;
  view["review_gate"] = run->gate;
  if (run->status == RunStatus::awaiting_review && run->extracted) {
    view["review"] = {{"requirements", to_json(*run->extracted)}, {"decorated", render_decorated(*run->extracted)}};
  }
  json groups{{"extraction", json::array()}, {"formulation", json::array()}, {"code", json::array()}};
  for (auto& s : trace["stages"]) {
    if (detail == "summary") {
      s.erase("prompt");
      s.erase("output");
      s.erase("artifact");
    }
    const std::string stage = s["stage"];
    if (stage == "extraction" || stage == "review") groups["extraction"].push_back(s);
    else if (stage == "formulation") groups["formulation"].push_back(s);
    else groups["code"].push_back(s);
  }
  view["stages"] = std::move(groups);
  view["requirements"] = trace["requirements"];
  view["executable"] = trace["executable"];
  view["solve"] = trace["solve"];
  if (run->status == RunStatus::failed) view["error"] = trace["error"];
  return view;
}

json Service::strategy_view(const std::string& id) const {
  auto run = find(id);
  std::lock_guard lock(mu_);
  if (run->status != RunStatus::succeeded || !run->result || !run->result->strategy)
    throw ServiceError(409, "run " + id + " has no strategy (status " + std::string(to_string(run->status)) + ")");
  const auto& s = *run->result->strategy;
  json view = to_json(s);
  const PowerFlowResult base = baseline_power_flow(run->network);
  double base_losses = 0.0;
  std::vector<std::vector<double>> before;
  for (int t : s.steps) {
    const auto& step = base.steps.at(static_cast<std::size_t>(t));
    base_losses += step.losses;
    std::vector<double> v;
    for (double x : step.v) v.push_back(std::sqrt(x));
    before.push_back(std::move(v));
  }
  view["id"] = run->id;
  view["voltage_before"] = before;
  view["buses"] = json::array();
  for (const auto& b : run->network.buses) view["buses"].push_back(b.id);
  view["baseline_losses"] = base_losses;
  view["loss_reduction_pct"] = base_losses > 0 ? 100.0 * (base_losses - s.kpis.total_losses) / base_losses : 0.0;
  view["voltage_csv"] = voltage_profile_csv(run->network, s);
  return view;
}

json Service::evaluate(const json& body) {
  SuiteOptions opts;
  opts.mode = config_.default_mode;
  std::string suite = (fs::path(config_.data_dir) / "requests.json").string();
  std::vector<std::string> ids;
  try {
    if (body.contains("mode")) {
      auto m = run_mode_from_string(body.at("mode").get<std::string>());
      if (!m) throw ServiceError(422, "unknown mode");
      opts.mode = *m;
    }
    if (body.contains("ablations")) {
      opts.ablations.clear();
      for (const auto& a : body.at("ablations")) {
        auto ab = ablation_from_string(a.get<std::string>());
        if (!ab) throw ServiceError(422, "unknown ablation '" + a.get<std::string>() + "'");
        opts.ablations.push_back(*ab);
      }
    }
    opts.repeats = body.value("repeats", opts.repeats);
    if (body.contains("seeds")) opts.seeds = body.at("seeds").get<std::vector<int>>();
    if (body.contains("ids")) ids = body.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ServiceError(422, e.what());
  }
  if (opts.mode == RunMode::llm && config_.chat.endpoint.empty())
    throw ServiceError(422, "llm mode needs ADN_CHAT_ENDPOINT");
  auto requests = load_suite(suite);
  if (!ids.empty())
    std::erase_if(requests, [&](const SuiteRequest& r) { return std::find(ids.begin(), ids.end(), r.id) == ids.end(); });
  opts.parallelism = config_.max_parallel_runs;
  const RequestCatalog& catalog = workspace_.catalog();
  const std::string fixtures = config_.fixtures_dir;
  const HttpChatConfig chat = config_.chat;
  ClientFactory factory = [&](const SuiteRequest& r, int seed, Ablation a,
                              const NetworkCase& c) -> std::unique_ptr<ChatClient> {
    switch (opts.mode) {
      case RunMode::reference: return std::make_unique<ReferenceClient>(catalog, c);
      case RunMode::llm: return std::make_unique<HttpChatClient>(chat);
      case RunMode::replay:
        return std::make_unique<ReplayClient>(Transcript::load_file(fixture_path(fixtures, r.id, seed, a)));
    }
    throw std::logic_error("unknown mode");
  };
  try {
    const auto report = run_suite(requests, workspace_.resources(), factory, opts);
    json doc = to_json(report);
    const fs::path dir = fs::path(config_.state_dir) / "reports";
    fs::create_directories(dir);
    const std::string name = next_run_id() + ".json";
    write_file((dir / name).string(), redact(doc.dump(1) + "\n", environment_secrets()));
    doc["report_file"] = (dir / name).string();
    return doc;
  } catch (const EvalError& e) {
    throw ServiceError(422, e.what());
  }
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    send_json(res, e.status(), {{"error", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 422, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const RequirementsError& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

json handle_json(const RunHandle& h) {
  return {{"id", h.id}, {"status", to_string(h.status)}, {"stage", h.stage}, {"created", h.created}, {"updated", h.updated}};
}

}  // namespace

void Service::install_routes(httplib::Server& server) {
  server.Post("/api/cases", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, {{"id", add_case(req.body)}}); });
  });
  server.Get("/api/cases", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, {{"cases", case_ids()}}); });
  });
  server.Post("/api/runs", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      SubmitParams p;
      p.case_id = body.at("case_id").get<std::string>();
      p.request = body.at("request").get<std::string>();
      if (body.contains("mode")) {
        p.mode = run_mode_from_string(body.at("mode").get<std::string>());
        if (!p.mode) throw ServiceError(422, "unknown mode");
      }
      if (body.contains("ablation")) {
        auto a = ablation_from_string(body.at("ablation").get<std::string>());
        if (!a) throw ServiceError(422, "unknown ablation");
        p.ablation = *a;
      }
      if (body.contains("seed") && !body.at("seed").is_null()) p.seed = body.at("seed").get<int>();
      p.fixture = body.value("fixture", "");
      if (body.contains("review_gate")) p.review_gate = body.at("review_gate").get<bool>();
      send_json(res, 202, handle_json(submit(p)));
    });
  });
  server.Get(R"(/api/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string detail = req.has_param("detail") ? req.get_param_value("detail") : "full";
      send_json(res, 200, run_view(req.matches[1], detail));
    });
  });
  server.Post(R"(/api/runs/([^/]+)/review)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      std::optional<StructuredRequirements> edit;
      if (body.contains("requirements")) edit = requirements_from_json(body.at("requirements"));
      else if (body.value("action", "approve") != "approve") throw ServiceError(422, "action must be approve");
      send_json(res, 200, handle_json(review(req.matches[1], edit)));
    });
  });
  server.Get(R"(/api/runs/([^/]+)/strategy)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, strategy_view(req.matches[1])); });
  });
  server.Get(R"(/api/runs/([^/]+)/voltage\.csv)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json view = strategy_view(req.matches[1]);
      res.status = 200;
      res.set_content(view.at("voltage_csv").get<std::string>(), "text/csv");
    });
  });
  server.Post("/api/eval", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, evaluate(req.body.empty() ? json::object() : json::parse(req.body))); });
  });
}

void Service::listen() {
  {
    std::lock_guard lock(mu_);
    server_ = std::make_unique<httplib::Server>();
  }
  install_routes(*server_);
  if (!server_->listen(config_.host, config_.port))
    throw std::runtime_error("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
}

void Service::stop() {
  std::lock_guard lock(mu_);
  stopping_ = true;
  if (server_) server_->stop();
  cv_.notify_all();
}

}  // namespace adn
