// adnctl: command-line front end for cases, pipeline runs, suite evaluation and the HTTP service.

#include <pthread.h>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "adn/dsl.hpp"
#include "adn/gateway.hpp"
#include "adn/util.hpp"

#ifndef ADN_DEFAULT_DATA_DIR
#define ADN_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kPipeline = 3;
constexpr int kSolver = 4;

std::string data_dir_or_default(const std::string& d) {
  if (!d.empty()) return d;
  if (const char* env = std::getenv("ADN_DATA_DIR")) return env;
  return ADN_DEFAULT_DATA_DIR;
}

std::string request_text(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') return std::string(adn::trim(adn::read_file(arg.substr(1))));
  return arg;
}

adn::Ablation parse_ablation(const std::string& name) {
  auto a = adn::ablation_from_string(name);
  if (!a) throw CLI::ValidationError("--ablation", "unknown ablation '" + name + "'");
  return *a;
}

adn::RunMode parse_mode(const std::string& name) {
  auto m = adn::run_mode_from_string(name);
  if (!m) throw CLI::ValidationError("--mode", "unknown mode '" + name + "'");
  return *m;
}

std::vector<adn::Ablation> parse_ablations(const std::vector<std::string>& names) {
  std::vector<adn::Ablation> out;
  for (const auto& n : names) {
    if (n == "all") return {std::begin(adn::kAllAblations), std::end(adn::kAllAblations)};
    out.push_back(parse_ablation(n));
  }
  return out;
}

int cmd_case_validate(const std::string& file) {
  try {
    const auto c = adn::load_case_file(file);
    std::cout << file << ": ok (" << c.buses.size() << " buses, " << c.branches.size() << " branches, "
              << c.devices.size() << " devices)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kPipeline;
  }
}

struct RunArgs {
  std::string case_file;
  std::string request;
  std::string mode = "reference";
  std::string ablation = "full";
  std::optional<int> seed;
  std::string out;
  std::string fixture;
  std::string data_dir;
};

int cmd_run(const RunArgs& a) {
  const adn::RunMode mode = parse_mode(a.mode);
  const adn::Ablation ablation = parse_ablation(a.ablation);
  if (mode == adn::RunMode::replay && a.fixture.empty()) throw CLI::ValidationError("--fixture", "replay needs a transcript");
  const adn::NetworkCase network = adn::load_case_file(a.case_file);
  const std::string text = request_text(a.request);
  adn::Workspace ws(data_dir_or_default(a.data_dir), std::getenv("ADN_EMBED_ENDPOINT") ? std::getenv("ADN_EMBED_ENDPOINT") : "");

  std::unique_ptr<adn::ChatClient> client;
  switch (mode) {
    case adn::RunMode::reference: client = std::make_unique<adn::ReferenceClient>(ws.catalog(), network); break;
    case adn::RunMode::llm: client = std::make_unique<adn::HttpChatClient>(adn::HttpChatConfig::from_env()); break;
    case adn::RunMode::replay:
      client = std::make_unique<adn::ReplayClient>(adn::Transcript::load_file(a.fixture));
      break;
  }
  adn::RunOptions ro;
  ro.mode = mode;
  ro.ablation = ablation;
  ro.seed = a.seed;
  const auto result = adn::run_pipeline(text, network, *client, ws.resources(), ro);
  adn::write_run_artifacts(a.out, result, network, adn::environment_secrets());

  const auto& t = result.trace;
  if (t.succeeded) {
    std::cout << "objective " << adn::format_number(t.solve->objective) << "\n";
    if (t.solve->kpis)
      std::cout << "losses " << adn::format_number(t.solve->kpis->total_losses) << "\n";
    std::cout << "artifacts in " << a.out << "\n";
    return 0;
  }
  std::cerr << t.error_stage << ": " << t.error << "\n";
  return t.error_stage == "solve" ? kSolver : kPipeline;
}

struct EvalArgs {
  std::string suite;
  std::string mode = "reference";
  int repeats = 3;
  std::vector<std::string> ablations{"full"};
  std::string out;
  std::string fixtures;
  int parallel = 4;
  std::string data_dir;
};

int cmd_eval(const EvalArgs& a) {
  adn::SuiteOptions opts;
  opts.mode = parse_mode(a.mode);
  opts.ablations = parse_ablations(a.ablations);
  opts.repeats = a.repeats;
  opts.parallelism = a.parallel;
  opts.trace_dir = (fs::path(a.out) / "traces").string();
  const std::string data = data_dir_or_default(a.data_dir);
  const std::string suite = a.suite.empty() ? (fs::path(data) / "requests.json").string() : a.suite;
  const std::string fixtures = a.fixtures.empty() ? (fs::path(data) / "fixtures").string() : a.fixtures;
  adn::Workspace ws(data, std::getenv("ADN_EMBED_ENDPOINT") ? std::getenv("ADN_EMBED_ENDPOINT") : "");
  const auto chat = adn::HttpChatConfig::from_env();
  adn::ClientFactory factory = [&](const adn::SuiteRequest& r, int seed, adn::Ablation ab,
                                   const adn::NetworkCase& c) -> std::unique_ptr<adn::ChatClient> {
    switch (opts.mode) {
      case adn::RunMode::reference: return std::make_unique<adn::ReferenceClient>(ws.catalog(), c);
      case adn::RunMode::llm: return std::make_unique<adn::HttpChatClient>(chat);
      case adn::RunMode::replay:
        return std::make_unique<adn::ReplayClient>(adn::Transcript::load_file(adn::fixture_path(fixtures, r.id, seed, ab)));
    }
    throw std::logic_error("unknown mode");
  };
  const auto report = adn::run_suite(adn::load_suite(suite), ws.resources(), factory, opts);
  fs::create_directories(a.out);
  adn::write_file((fs::path(a.out) / "report.json").string(),
                  adn::redact(adn::to_json(report).dump(1) + "\n", adn::environment_secrets()));
  std::cout << "ablation  runs  formulation  code  pass@1  pass@3\n";
  for (const auto& s : report.ablations) {
    std::cout << adn::to_string(s.ablation) << "  " << s.runs << "  "
              << (s.mean_formulation_score ? adn::format_number(*s.mean_formulation_score) : "-") << "  "
              << adn::format_number(s.mean_code_score) << "  " << adn::format_rate(s.pass_at_1) << "  "
              << adn::format_rate(s.pass_at_3) << "\n";
  }
  for (const auto& e : report.errors) std::cerr << e << "\n";
  return report.errors.empty() ? 0 : kPipeline;
}

struct RecordArgs {
  std::string suite;
  std::vector<std::string> ids;
  std::vector<std::string> ablations{"full"};
  std::vector<int> seeds{1};
  std::string out;
  std::string data_dir;
};

// Reference responses captured as replay transcripts, one per (request, seed, ablation).
int cmd_record(const RecordArgs& a) {
  const std::string data = data_dir_or_default(a.data_dir);
  adn::Workspace ws(data);
  const auto requests = adn::load_suite(a.suite.empty() ? (fs::path(data) / "requests.json").string() : a.suite);
  fs::create_directories(a.out);
  int written = 0;
  for (const auto& r : requests) {
    if (!a.ids.empty() && std::find(a.ids.begin(), a.ids.end(), r.id) == a.ids.end()) continue;
    const auto network = ws.district_case(r.district);
    for (auto ab : parse_ablations(a.ablations)) {
      for (int seed : a.seeds) {
        adn::ReferenceClient inner(ws.catalog(), network);
        adn::RecordingClient rec(inner);
        adn::RunOptions ro;
        ro.mode = adn::RunMode::replay;
        ro.ablation = ab;
        ro.seed = seed;
        adn::run_pipeline(r.text, network, rec, ws.resources(), ro);
        adn::write_file(adn::fixture_path(a.out, r.id, seed, ab), rec.transcript().dump());
        ++written;
      }
    }
  }
  std::cout << written << " transcripts in " << a.out << "\n";
  return written ? 0 : kUsage;
}

int cmd_solve(const std::string& file, const std::string& out) {
  const adn::Model m = adn::canonicalize(adn::parse_model(adn::read_file(file)));
  const adn::Solution sol = adn::solve_misocp(m);
  const std::string text = adn::solution_text(sol);
  if (out.empty()) std::cout << text;
  else adn::write_file(out, text);
  if (!sol.optimal()) {
    std::cerr << "solver status " << adn::to_string(sol.status) << "\n";
    return kSolver;
  }
  return 0;
}

int cmd_library_build(const std::string& out, const std::string& data_dir) {
  const std::string data = data_dir_or_default(data_dir);
  adn::HashingEmbedder embedder;
  const auto store = adn::build_reference_library(data, embedder);
  const std::string path = out.empty() ? (fs::path(data) / "rag" / "library.json").string() : out;
  fs::create_directories(fs::path(path).parent_path());
  adn::write_file(path, store.dump());
  std::cout << store.size() << " entries in " << path << "\n";
  return 0;
}

int cmd_serve(const std::string& config_file, const std::string& data_dir) {
  const std::string data = data_dir_or_default(data_dir);
  adn::ServiceConfig cfg = config_file.empty() ? adn::ServiceConfig::from_json(json::object(), data)
                                               : adn::ServiceConfig::load_file(config_file, data);
  // Signals are taken synchronously by one thread; worker threads inherit the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  adn::Service service(cfg);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  int code = 0;
  try {
    std::cout << "listening on " << cfg.host << ":" << cfg.port << "\n" << std::flush;
    service.listen();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kPipeline;
  }
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active distribution network dispatch from natural-language requests"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data", data_dir, "Data directory (catalog, prompts, knowledge, library)");

  auto* case_cmd = app.add_subcommand("case", "Case documents");
  case_cmd->require_subcommand(1);
  std::string case_file;
  auto* validate = case_cmd->add_subcommand("validate", "Check a case document");
  validate->add_option("file", case_file)->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the pipeline on one request");
  run->add_option("--case", run_args.case_file, "Case document")->required();
  run->add_option("--request", run_args.request, "Request text, or @file")->required();
  run->add_option("--mode", run_args.mode, "reference, llm or replay");
  run->add_option("--ablation", run_args.ablation);
  run->add_option("--seed", run_args.seed);
  run->add_option("--out", run_args.out, "Artifact directory")->required();
  run->add_option("--fixture", run_args.fixture, "Transcript for replay mode");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a request suite");
  eval->add_option("--suite", eval_args.suite);
  eval->add_option("--mode", eval_args.mode);
  eval->add_option("--repeats", eval_args.repeats)->check(CLI::Range(1, 3));
  eval->add_option("--ablations", eval_args.ablations, "Ablation names, or all")->delimiter(',');
  eval->add_option("--out", eval_args.out)->required();
  eval->add_option("--fixtures", eval_args.fixtures, "Transcript directory for replay mode");
  eval->add_option("--parallel", eval_args.parallel)->check(CLI::PositiveNumber);

  RecordArgs record_args;
  auto* record = app.add_subcommand("record", "Capture reference transcripts for replay");
  record->add_option("--suite", record_args.suite);
  record->add_option("--ids", record_args.ids)->delimiter(',');
  record->add_option("--ablations", record_args.ablations)->delimiter(',');
  record->add_option("--seeds", record_args.seeds)->delimiter(',');
  record->add_option("--out", record_args.out)->required();

  std::string model_file, solution_out;
  auto* solve = app.add_subcommand("solve", "Solve a model script");
  solve->add_option("file", model_file)->required();
  solve->add_option("--out", solution_out);

  std::string library_out;
  auto* library = app.add_subcommand("library", "Exemplar library");
  library->require_subcommand(1);
  auto* build = library->add_subcommand("build", "Embed the reference exemplars");
  build->add_option("--out", library_out);

  std::string config_file;
  auto* serve = app.add_subcommand("serve", "HTTP service");
  serve->add_option("--config", config_file);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    run_args.data_dir = eval_args.data_dir = record_args.data_dir = data_dir;
    if (*validate) return cmd_case_validate(case_file);
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_eval(eval_args);
    if (*record) return cmd_record(record_args);
    if (*solve) return cmd_solve(model_file, solution_out);
    if (*build) return cmd_library_build(library_out, data_dir);
    if (*serve) return cmd_serve(config_file, data_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPipeline;
  }
  return kUsage;
}
