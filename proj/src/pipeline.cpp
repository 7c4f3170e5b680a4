#include "adn/pipeline.hpp"

#include <chrono>

#include "adn/canonical.hpp"
#include "adn/dsl.hpp"
#include "adn/formulator.hpp"
#include "adn/util.hpp"

namespace adn {

using nlohmann::json;

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::reference: return "reference";
    case RunMode::llm: return "llm";
    case RunMode::replay: return "replay";
  }
  return "?";
}

std::optional<RunMode> run_mode_from_string(std::string_view name) {
  for (auto m : {RunMode::reference, RunMode::llm, RunMode::replay})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

bool SolveSummary::operator==(const SolveSummary& o) const {
  auto same_kpis = [](const std::optional<Kpis>& a, const std::optional<Kpis>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->total_losses == b->total_losses && a->total_cost == b->total_cost &&
           a->max_voltage_deviation == b->max_voltage_deviation &&
           a->max_branch_apparent_power == b->max_branch_apparent_power;
  };
  return status == o.status && objective == o.objective && nodes == o.nodes && iterations == o.iterations &&
         max_violation == o.max_violation && reduced_accuracy == o.reduced_accuracy && same_kpis(kpis, o.kpis);
}

bool PipelineTrace::has_stage(std::string_view stage) const {
  for (const auto& r : records)
    if (r.stage == stage) return true;
  return false;
}

std::vector<const StageRecord*> PipelineTrace::stage_records(std::string_view stage) const {
  std::vector<const StageRecord*> out;
  for (const auto& r : records)
    if (r.stage == stage) out.push_back(&r);
  return out;
}

// ---------------------------------------------------------------------------
// Trace documents

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
  json out = json::array();
  for (const auto& m : messages) out.push_back({{"role", m.role}, {"content", m.content}});
  return out;
}

json kpis_json(const Kpis& k) {
  return {{"total_losses", k.total_losses},
          {"total_cost", k.total_cost},
          {"max_voltage_deviation", k.max_voltage_deviation},
          {"max_branch_apparent_power", k.max_branch_apparent_power}};
}

}  // namespace

json to_json(const PipelineTrace& t) {
  json doc;
  doc["request"] = t.request;
  doc["mode"] = to_string(t.mode);
  doc["ablation"] = to_string(t.ablation);
  doc["applied_ablation"] = to_string(t.applied_ablation);
  doc["seed"] = t.seed ? json(*t.seed) : json(nullptr);
  doc["client"] = t.client;
  doc["stages"] = json::array();
  for (const auto& r : t.records) {
    json s{{"stage", r.stage}, {"status", r.status}};
    if (r.stage == "formulation") s["round"] = r.round;
    s["prompt"] = messages_json(r.prompt);
    s["output"] = r.output;
    // null when the parsed artifact prints exactly as the raw output
    s["artifact"] = r.artifact == r.output && !r.output.empty() ? json(nullptr) : json(r.artifact);
    if (!r.error.empty()) s["error"] = r.error;
    if (r.stage == "code") s["exemplars"] = r.exemplars;
    if (r.wall_ms) s["wall_ms"] = *r.wall_ms;
    doc["stages"].push_back(std::move(s));
  }
  doc["requirements"] = t.requirements ? json(*t.requirements) : json(nullptr);
  doc["executable"] = t.executable;
  if (t.solve) {
    json s{{"status", t.solve->status},
           {"objective", t.solve->objective},
           {"nodes", t.solve->nodes},
           {"iterations", t.solve->iterations},
           {"max_violation", t.solve->max_violation},
           {"reduced_accuracy", t.solve->reduced_accuracy}};
    if (t.solve->kpis) s["kpis"] = kpis_json(*t.solve->kpis);
    doc["solve"] = std::move(s);
  } else {
    doc["solve"] = nullptr;
  }
  doc["outcome"] = t.succeeded ? "succeeded" : "failed";
  if (!t.succeeded) doc["error"] = {{"stage", t.error_stage}, {"message", t.error}};
  return doc;
}

PipelineTrace trace_from_json(const json& doc) {
  PipelineTrace t;
  t.request = doc.at("request").get<std::string>();
  auto mode = run_mode_from_string(doc.at("mode").get<std::string>());
  auto ablation = ablation_from_string(doc.at("ablation").get<std::string>());
  auto applied = ablation_from_string(doc.at("applied_ablation").get<std::string>());
  if (!mode || !ablation || !applied) throw std::runtime_error("trace has an unknown mode or ablation");
  t.mode = *mode;
  t.ablation = *ablation;
  t.applied_ablation = *applied;
  if (!doc.at("seed").is_null()) t.seed = doc.at("seed").get<int>();
  t.client = doc.at("client").get<std::string>();
  for (const auto& s : doc.at("stages")) {
    StageRecord r;
    r.stage = s.at("stage").get<std::string>();
    r.status = s.at("status").get<std::string>();
    r.round = s.value("round", 0);
    for (const auto& m : s.at("prompt"))
      r.prompt.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    r.output = s.at("output").get<std::string>();
    r.artifact = s.at("artifact").is_null() ? r.output : s.at("artifact").get<std::string>();
    r.error = s.value("error", "");
    if (s.contains("exemplars")) r.exemplars = s.at("exemplars").get<std::vector<std::string>>();
    if (s.contains("wall_ms")) r.wall_ms = s.at("wall_ms").get<double>();
    t.records.push_back(std::move(r));
  }
  if (!doc.at("requirements").is_null()) t.requirements = doc.at("requirements").get<std::string>();
  t.executable = doc.at("executable").get<bool>();
  if (!doc.at("solve").is_null()) {
    const auto& s = doc.at("solve");
    SolveSummary sum;
    sum.status = s.at("status").get<std::string>();
    sum.objective = s.at("objective").get<double>();
    sum.nodes = s.at("nodes").get<int>();
    sum.iterations = s.at("iterations").get<int>();
    sum.max_violation = s.at("max_violation").get<double>();
    sum.reduced_accuracy = s.at("reduced_accuracy").get<bool>();
    if (s.contains("kpis")) {
      const auto& k = s.at("kpis");
      sum.kpis = Kpis{k.at("total_losses").get<double>(), k.at("total_cost").get<double>(),
                      k.at("max_voltage_deviation").get<double>(), k.at("max_branch_apparent_power").get<double>()};
    }
    t.solve = std::move(sum);
  }
  t.succeeded = doc.at("outcome").get<std::string>() == "succeeded";
  if (!t.succeeded) {
    t.error_stage = doc.at("error").at("stage").get<std::string>();
    t.error = doc.at("error").at("message").get<std::string>();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  explicit StageTimer(bool enabled) : enabled_(enabled), start_(Clock::now()) {}
  void stop(StageRecord& r) const {
    if (enabled_) r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  }

 private:
  bool enabled_;
  Clock::time_point start_;
};

std::string knowledge_block(const PromptLibrary& lib, const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) out += std::string(trim(lib.knowledge(k))) + "\n";
  return out;
}


std::vector<std::string> rendered_examples(const PromptLibrary& lib, AgentKind agent) {
  std::vector<std::string> out;
  for (const auto& e : lib.examples(agent)) out.push_back(render_example(e));
  return out;
}

constexpr const char* kRoundTitles[] = {
    "",
    "Round 1 of 6: write the objective.",
    "Round 2 of 6: write the equipment constraints for the devices in use.",
    "Round 3 of 6: write the power flow model with nodal injections.",
    "Round 4 of 6: write the additional safety constraints (reply with nothing if none are requested).",
    "Round 5 of 6: assemble the complete model from the previous rounds.",
    "Round 6 of 6: convexify the complete model.",
};

constexpr Component kRoundComponents[] = {Component::objective, Component::objective, Component::equipment,
                                          Component::power_flow, Component::additional};

}  // namespace

ExtractionOutcome run_extraction(const std::string& request, const NetworkCase& c, ChatClient& client,
                                 const PipelineResources& res, const StageOptions& opts) {
  ExtractionOutcome out;
  out.record.stage = "extraction";
  if (skips_extraction(opts.ablation)) {
    out.record.status = "skipped";
    out.record.artifact = request;
    return out;
  }
  StageTimer timer(opts.record_timing);
  const PromptBundle bundle = assemble_prompt(AgentKind::extractor, res.prompts, res.catalog, opts.ablation,
                                              rendered_examples(res.prompts, AgentKind::extractor));
  ChatRequest req;
  req.messages = {{"system", bundle.render()}, {"user", "Dispatch request:\n" + request}};
  req.params = opts.params;
  req.context.stage = ChatStage::extraction;
  req.context.request_text = request;
  out.record.prompt = req.messages;
  try {
    out.record.output = client.complete(req);
  } catch (const std::exception& e) {
    out.record.status = "error";
    out.record.error = std::string("chat failure: ") + e.what();
    timer.stop(out.record);
    return out;
  }
  try {
    auto parsed = parse_decorated(out.record.output, res.catalog);
    const auto violations = validate_requirements(parsed, res.catalog, c);
    if (!violations.empty()) {
      std::string msg = "requirements rejected:";
      for (const auto& v : violations) msg += " " + v.location + ": " + v.invariant + ";";
      throw RequirementsError(msg);
    }
    out.record.artifact = render_decorated(parsed);
    out.record.status = "ok";
    out.requirements = std::move(parsed);
  } catch (const std::exception& e) {
    out.record.status = "error";
    out.record.error = e.what();
  }
  timer.stop(out.record);
  return out;
}

FormulationOutcome run_formulation(const StructuredRequirements* req, const std::string& request,
                                   const NetworkCase& c, ChatClient& client, const PipelineResources& res,
                                   const StageOptions& opts) {
  FormulationOutcome out;
  if (skips_formulation(opts.ablation)) return out;
  const PromptBundle bundle = assemble_prompt(AgentKind::formulator, res.prompts, res.catalog, opts.ablation,
                                              rendered_examples(res.prompts, AgentKind::formulator));
  std::vector<ChatMessage> messages{{"system", bundle.render()}};
  std::vector<Fragment> fragments;
  for (int round = 1; round <= 6; ++round) {
    StageTimer timer(opts.record_timing);
    StageRecord rec;
    rec.stage = "formulation";
    rec.round = round;
    std::string user = kRoundTitles[round];
    if (round == 1) {
      user += "\n\nRequirements:\n" + (req ? render_decorated(*req) : request + "\n");
      user += "\nCase document:\n" + serialize_case(c);
    }
    if (uses_knowledge(opts.ablation))
      user += "\n\nModelling knowledge:\n" + knowledge_block(res.prompts, round_knowledge_keys(round, req));
    messages.push_back({"user", user});

    ChatRequest creq;
    creq.messages = messages;
    creq.params = opts.params;
    creq.context.stage = ChatStage::formulation;
    creq.context.round = round;
    creq.context.request_text = request;
    if (req) creq.context.requirements = *req;
    // Earlier turns are already in the previous round records.
    rec.prompt.assign(messages.begin() + (round == 1 ? 0 : static_cast<std::ptrdiff_t>(messages.size()) - 1),
                      messages.end());
    try {
      rec.output = client.complete(creq);
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.error = std::string("chat failure: ") + e.what();
      timer.stop(rec);
      out.records.push_back(std::move(rec));
      return out;
    }
    messages.push_back({"assistant", rec.output});
    try {
      if (round <= 4) {
        fragments.push_back(parse_fragment(rec.output, kRoundComponents[round]));
        rec.artifact = print_fragment(fragments.back());
        if (round == 4) {
          std::vector<const Fragment*> ptrs;
          for (const auto& f : fragments) ptrs.push_back(&f);
          assemble_fragments("fragments", c.horizon, ptrs);
        }
      } else {
        Model m = parse_model(rec.output);
        rec.artifact = print_model(m);
        if (round == 6) out.model = std::move(m);
      }
      rec.status = "ok";
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.error = "round " + std::to_string(round) + ": " + std::string(e.what());
    }
    timer.stop(rec);
    const bool failed = rec.status == "error";
    out.records.push_back(std::move(rec));
    if (failed) {
      out.model.reset();
      return out;
    }
  }
  return out;
}

CodeOutcome run_code_stage(const Model* upstream, const StructuredRequirements* req, const std::string& request,
                           const NetworkCase& c, ChatClient& client, const PipelineResources& res,
                           const StageOptions& opts, const SolveOptions& solve_opts) {
  CodeOutcome out;
  out.code.stage = "code";
  out.solve.stage = "solve";
  StageTimer timer(opts.record_timing);

  std::string problem;
  if (upstream) {
    problem = print_model(*upstream);
  } else {
    problem = (req ? "Requirements:\n" + render_decorated(*req) : "Dispatch request:\n" + request + "\n") +
              "\nCase document:\n" + serialize_case(c);
  }

  std::vector<std::string> exemplars;
  try {
    std::vector<RagEntry> chosen;
    if (opts.ablation == Ablation::no_rag) {
      chosen = res.rag.fixed();
    } else if (uses_few_shot(opts.ablation)) {
      for (auto& r : res.rag.retrieve(res.embedder.embed(upstream ? print_model(canonicalize(*upstream)) : problem)))
        chosen.push_back(std::move(r.entry));
    }
    for (const auto& e : chosen) {
      out.code.exemplars.push_back(e.id);
      exemplars.push_back("Problem: " + e.id + "\n" + e.exemplar);
    }
  } catch (const std::exception& e) {
    out.code.status = "error";
    out.code.error = std::string("retrieval failure: ") + e.what();
    timer.stop(out.code);
    return out;
  }

  const PromptBundle bundle =
      assemble_prompt(AgentKind::programmer, res.prompts, res.catalog, opts.ablation, std::move(exemplars));
  ChatRequest creq;
  creq.messages = {{"system", bundle.render()}, {"user", "Write the model script for this problem.\n\n" + problem}};
  creq.params = opts.params;
  creq.context.stage = ChatStage::code;
  creq.context.request_text = request;
  if (req) creq.context.requirements = *req;
  if (upstream) creq.context.upstream_model = *upstream;
  out.code.prompt = creq.messages;
  try {
    out.code.output = client.complete(creq);
  } catch (const std::exception& e) {
    out.code.status = "error";
    out.code.error = std::string("chat failure: ") + e.what();
    timer.stop(out.code);
    return out;
  }

  Model canonical;
  try {
    canonical = canonicalize(parse_model(out.code.output));
    out.code.artifact = print_model(canonical);
    out.code.status = "ok";
  } catch (const DslError& e) {
    out.code.status = "error";
    out.code.error = "not executable: parse error: " + std::string(e.what());
  } catch (const std::exception& e) {
    out.code.status = "error";
    out.code.error = std::string("not executable: canonicalization failed: ") + e.what();
  }
  timer.stop(out.code);
  if (out.code.status != "ok") return out;

  StageTimer solve_timer(opts.record_timing);
  try {
    Solution sol = solve_misocp(canonical, solve_opts);
    out.solve.status = "ok";
    out.solve.artifact = "status " + std::string(to_string(sol.status)) +
                         (sol.optimal() ? " objective " + format_number(sol.objective) : "");
    out.executable = true;
    out.solution = std::move(sol);
    out.model = std::move(canonical);
  } catch (const std::exception& e) {
    out.solve.status = "error";
    out.solve.error = std::string("not executable: solver error: ") + e.what();
  }
  solve_timer.stop(out.solve);
  return out;
}

// ---------------------------------------------------------------------------
// Driver

PipelineResult run_pipeline(const std::string& request, const NetworkCase& c, ChatClient& client,
                            const PipelineResources& res, const RunOptions& opts) {
  PipelineResult result;
  PipelineTrace& t = result.trace;
  t.request = request;
  t.mode = opts.mode;
  t.ablation = opts.ablation;
  t.applied_ablation = opts.mode == RunMode::reference ? Ablation::full : opts.ablation;
  t.seed = opts.seed;
  t.client = client.name();

  StageOptions so;
  so.ablation = t.applied_ablation;
  so.params = opts.params;
  so.params.seed = opts.seed;
  so.record_timing = opts.mode != RunMode::replay;

  auto progress = [&] {
    if (opts.progress) opts.progress(t);
  };
  auto fail = [&](const StageRecord& r) {
    t.error_stage = r.stage;
    t.error = r.error;
    progress();
    return result;
  };

  auto ex = run_extraction(request, c, client, res, so);
  t.records.push_back(ex.record);
  if (ex.record.status == "error") return fail(ex.record);
  if (ex.requirements) t.requirements = render_decorated(*ex.requirements);
  progress();

  if (ex.requirements && opts.review) {
    StageRecord rec;
    rec.stage = "review";
    try {
      if (auto edited = opts.review(*ex.requirements)) {
        const auto violations = validate_requirements(*edited, res.catalog, c);
        if (!violations.empty()) throw RequirementsError("edited requirements rejected: " + violations.front().invariant);
        ex.requirements = std::move(*edited);
        rec.output = "edited";
      } else {
        rec.output = "approved";
      }
      rec.artifact = render_decorated(*ex.requirements);
      rec.status = "ok";
      t.requirements = rec.artifact;
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.error = e.what();
    }
    t.records.push_back(rec);
    if (rec.status == "error") return fail(rec);
    progress();
  }
  result.requirements = ex.requirements;
  const StructuredRequirements* req = ex.requirements ? &*ex.requirements : nullptr;

  auto form = run_formulation(req, request, c, client, res, so);
  for (auto& r : form.records) {
    t.records.push_back(std::move(r));
    progress();
  }
  if (!t.records.empty() && t.records.back().stage == "formulation" && t.records.back().status == "error")
    return fail(t.records.back());

  result.formulation_model = form.model;
  auto code = run_code_stage(form.model ? &*form.model : nullptr, req, request, c, client, res, so, opts.solve);
  t.records.push_back(code.code);
  if (code.code.status == "error") return fail(code.code);
  t.records.push_back(code.solve);
  if (code.solve.status == "error") return fail(code.solve);
  t.executable = code.executable;
  result.model = std::move(code.model);

  const Solution& sol = *code.solution;
  SolveSummary sum;
  sum.status = std::string(to_string(sol.status));
  sum.objective = sol.objective;
  sum.nodes = sol.branch.nodes;
  sum.iterations = sol.iterations;
  sum.max_violation = sol.max_violation;
  sum.reduced_accuracy = sol.reduced_accuracy;
  if (sol.optimal()) {
    try {
      result.strategy = extract_strategy(sol, *result.model, c);
      sum.kpis = result.strategy->kpis;
    } catch (const std::exception& e) {
      t.solve = sum;
      result.solution = code.solution;
      t.error_stage = "solve";
      t.error = std::string("strategy extraction failed: ") + e.what();
      progress();
      return result;
    }
  }
  t.solve = sum;
  result.solution = std::move(code.solution);
  if (!sol.optimal()) {
    t.error_stage = "solve";
    t.error = "solver finished with status " + sum.status;
  } else {
    t.succeeded = true;
  }
  progress();
  return result;
}

}  // namespace adn
