#include "adn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "adn/extractor.hpp"
#include "adn/formulator.hpp"
#include "adn/util.hpp"

namespace adn {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Requirements documents

json to_json(const StructuredRequirements& req) {
  json doc;
  doc["district"] = req.district;
  doc["objective"] = to_string(req.objective);
  doc["horizon"] = req.horizon.is_single() ? json{{"kind", "single_timestep"}, {"t_hat", req.horizon.t_hat}}
                                           : json{{"kind", "day_ahead"}};
  doc["equipment"] = json::array();
  for (auto e : req.equipment) doc["equipment"].push_back(to_string(e));
  doc["constraints"] = json::array();
  for (const auto& c : req.extra_constraints)
    doc["constraints"].push_back({{"kind", to_string(c.kind)}, {"overrides", c.overrides}});
  return doc;
}

StructuredRequirements requirements_from_json(const json& doc) {
  try {
    StructuredRequirements req;
    req.district = doc.at("district").get<std::string>();
    const auto obj = doc.at("objective").get<std::string>();
    auto o = objective_from_string(obj);
    if (!o) throw RequirementsError("unknown objective '" + obj + "'");
    req.objective = *o;
    if (doc.contains("horizon")) {
      const auto& h = doc.at("horizon");
      const auto kind = h.at("kind").get<std::string>();
      if (kind == "single_timestep") req.horizon = HorizonSpec::single(h.at("t_hat").get<int>());
      else if (kind != "day_ahead") throw RequirementsError("unknown horizon kind '" + kind + "'");
    }
    for (const auto& e : doc.value("equipment", json::array())) {
      auto k = equipment_from_string(e.get<std::string>());
      if (!k) throw RequirementsError("unknown equipment '" + e.get<std::string>() + "'");
      req.equipment.insert(*k);
    }
    for (const auto& c : doc.value("constraints", json::array())) {
      auto k = constraint_from_string(c.at("kind").get<std::string>());
      if (!k) throw RequirementsError("unknown constraint '" + c.at("kind").get<std::string>() + "'");
      ExtraConstraint ec{*k, {}};
      if (c.contains("overrides")) ec.overrides = c.at("overrides").get<std::map<std::string, double>>();
      req.extra_constraints.push_back(std::move(ec));
    }
    return req;
  } catch (const json::exception& e) {
    throw RequirementsError(std::string("malformed requirements document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grading

int rubric_score(DiffOutcome outcome) {
  switch (outcome) {
    case DiffOutcome::match: return 20;
    case DiffOutcome::partial: return 10;
    case DiffOutcome::missing: return 0;
  }
  return 0;
}

GradeReport grade_formulation(const Model& generated, const Model& reference) {
  GradeReport g;
  g.evidence = diff_components(reference, generated);
  for (auto c : kAllComponents) {
    auto it = g.evidence.find(c);
    const int s = it == g.evidence.end() ? 20 : rubric_score(it->second.outcome);
    g.scores[c] = s;
    g.total += s;
  }
  return g;
}

json to_json(const GradeReport& g) {
  json doc;
  doc["total"] = g.total;
  json comps = json::object();
  for (const auto& [c, s] : g.scores) {
    json entry{{"score", s}};
    if (auto it = g.evidence.find(c); it != g.evidence.end()) {
      const auto& d = it->second;
      entry["outcome"] = to_string(d.outcome);
      entry["reference_rows"] = d.reference_rows;
      entry["candidate_rows"] = d.candidate_rows;
      entry["matched"] = d.matched;
      entry["only_in_reference"] = d.only_in_reference;
      entry["only_in_candidate"] = d.only_in_candidate;
    }
    comps[std::string(to_string(c))] = std::move(entry);
  }
  doc["components"] = std::move(comps);
  return doc;
}

// ---------------------------------------------------------------------------
// Rates

double pass_at_1(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EvalError("pass@1 over an empty record set");
  const auto ok = std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.executable; });
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double pass_at_3(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EvalError("pass@3 over an empty record set");
  std::map<std::string, bool> passed;
  for (const auto& r : records) passed[r.request_id] = passed[r.request_id] || r.executable;
  const auto ok = std::count_if(passed.begin(), passed.end(), [](const auto& kv) { return kv.second; });
  return static_cast<double>(ok) / static_cast<double>(passed.size());
}

std::string format_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return buf;
}

// ---------------------------------------------------------------------------
// Suites

std::vector<SuiteRequest> load_suite(const std::string& path) {
  std::vector<SuiteRequest> out;
  try {
    const json doc = json::parse(read_file(path));
    std::set<std::string> ids;
    for (const auto& r : doc) {
      SuiteRequest s;
      s.id = r.at("id").get<std::string>();
      if (!ids.insert(s.id).second) throw EvalError(path + ": duplicate request id '" + s.id + "'");
      s.district = r.at("district").get<std::string>();
      s.text = r.at("text").get<std::string>();
      if (r.contains("expected") && !r.at("expected").is_null()) s.expected = requirements_from_json(r.at("expected"));
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw EvalError(path + ": " + e.what());
  }
  return out;
}

std::string fixture_path(const std::string& dir, const std::string& request_id, int seed, Ablation ablation) {
  return (fs::path(dir) / (request_id + "__s" + std::to_string(seed) + "__" + std::string(to_string(ablation)) + ".json"))
      .string();
}

std::vector<AblationSummary> aggregate(const std::vector<RunRecord>& records, const std::vector<Ablation>& ablations) {
  std::vector<AblationSummary> out;
  for (auto a : ablations) {
    std::vector<RunRecord> subset;
    for (const auto& r : records)
      if (r.ablation == a) subset.push_back(r);
    AblationSummary s;
    s.ablation = a;
    s.runs = static_cast<int>(subset.size());
    if (!subset.empty()) {
      s.pass_at_1 = pass_at_1(subset);
      s.pass_at_3 = pass_at_3(subset);
      double code = 0.0;
      for (const auto& r : subset) code += r.code_grade ? r.code_grade->total : 0;
      s.mean_code_score = code / static_cast<double>(subset.size());
      if (!skips_formulation(a)) {
        double form = 0.0;
        for (const auto& r : subset) form += r.formulation_grade ? r.formulation_grade->total : 0;
        s.mean_formulation_score = form / static_cast<double>(subset.size());
      }
      int judged = 0, correct = 0;
      for (const auto& r : subset)
        if (r.extraction_correct) {
          ++judged;
          correct += *r.extraction_correct ? 1 : 0;
        }
      if (judged) s.extraction_accuracy = static_cast<double>(correct) / judged;
    }
    out.push_back(s);
  }
  return out;
}

json to_json(const SuiteReport& r) {
  json doc;
  doc["grading"] = "automatic structural proxy: per-component row diff against the reference formulation";
  doc["mode"] = to_string(r.mode);
  doc["seeds"] = r.seeds;
  doc["ablations"] = json::array();
  for (const auto& a : r.ablations) {
    json row{{"ablation", to_string(a.ablation)},
             {"runs", a.runs},
             {"mean_formulation_score", a.mean_formulation_score ? json(*a.mean_formulation_score) : json(nullptr)},
             {"mean_code_score", a.mean_code_score},
             {"pass_at_1", a.pass_at_1},
             {"pass_at_3", a.pass_at_3},
             {"pass_at_1_text", format_rate(a.pass_at_1)},
             {"pass_at_3_text", format_rate(a.pass_at_3)},
             {"extraction_accuracy", a.extraction_accuracy ? json(*a.extraction_accuracy) : json(nullptr)}};
    doc["ablations"].push_back(std::move(row));
  }
  doc["records"] = json::array();
  for (const auto& rec : r.records) {
    json j{{"request", rec.request_id},
           {"seed", rec.seed},
           {"ablation", to_string(rec.ablation)},
           {"executable", rec.executable},
           {"solve_status", rec.solve_status ? json(*rec.solve_status) : json(nullptr)},
           {"formulation_score", rec.formulation_grade ? json(rec.formulation_grade->total) : json(nullptr)},
           {"code_score", rec.code_grade ? json(rec.code_grade->total) : json(nullptr)},
           {"extraction_correct", rec.extraction_correct ? json(*rec.extraction_correct) : json(nullptr)}};
    if (rec.code_grade && rec.code_grade->total < 100) j["code_grade"] = to_json(*rec.code_grade);
    if (rec.formulation_grade && rec.formulation_grade->total < 100)
      j["formulation_grade"] = to_json(*rec.formulation_grade);
    if (!rec.trace_path.empty()) j["trace"] = rec.trace_path;
    if (!rec.error.empty()) j["error"] = rec.error;
    doc["records"].push_back(std::move(j));
  }
  doc["errors"] = r.errors;
  return doc;
}

namespace {

struct Job {
  const SuiteRequest* request;
  const NetworkCase* network;
  const Model* reference;
  int seed;
  Ablation ablation;
};

RunRecord run_job(const Job& job, const PipelineResources& res, const ClientFactory& make_client,
                  const SuiteOptions& opts) {
  RunRecord rec;
  rec.request_id = job.request->id;
  rec.seed = job.seed;
  rec.ablation = job.ablation;
  PipelineResult result;
  try {
    auto client = make_client(*job.request, job.seed, job.ablation, *job.network);
    RunOptions ro;
    ro.mode = opts.mode;
    ro.ablation = job.ablation;
    ro.seed = job.seed;
    ro.solve = opts.solve;
    result = run_pipeline(job.request->text, *job.network, *client, res, ro);
  } catch (const std::exception& e) {
    rec.error = e.what();
    return rec;
  }
  const auto& t = result.trace;
  rec.executable = t.executable;
  if (t.executable && t.solve) rec.solve_status = t.solve->status;
  if (!t.succeeded) rec.error = t.error_stage + ": " + t.error;
  if (job.request->expected && result.requirements) rec.extraction_correct = *result.requirements == *job.request->expected;
  if (result.model) rec.code_grade = grade_formulation(*result.model, *job.reference);
  if (result.formulation_model) {
    try {
      rec.formulation_grade = grade_formulation(canonicalize(*result.formulation_model), *job.reference);
    } catch (const std::exception&) {
      // A non-convex round 6 model scores 0 on every component.
      GradeReport zero;
      for (auto c : kAllComponents) zero.scores[c] = 0;
      rec.formulation_grade = zero;
    }
  }
  if (!opts.trace_dir.empty()) {
    const fs::path dir = fs::path(opts.trace_dir) / std::string(to_string(job.ablation));
    fs::create_directories(dir);
    const fs::path file = dir / (job.request->id + "__s" + std::to_string(job.seed) + ".json");
    write_file(file.string(), to_json(t).dump(1) + "\n");
    rec.trace_path = file.string();
  }
  return rec;
}

}  // namespace

SuiteReport run_suite(const std::vector<SuiteRequest>& requests, const PipelineResources& res,
                      const ClientFactory& make_client, const SuiteOptions& opts) {
  if (opts.repeats < 1 || static_cast<std::size_t>(opts.repeats) > opts.seeds.size())
    throw EvalError("repeats must be between 1 and the number of seeds");
  if (opts.ablations.empty()) throw EvalError("no ablations selected");
  SuiteReport report;
  report.mode = opts.mode;
  report.seeds.assign(opts.seeds.begin(), opts.seeds.begin() + opts.repeats);

  // Cases and reference models, one per district and request.
  std::map<std::string, NetworkCase> cases;
  std::map<std::string, Model> references;
  std::vector<const SuiteRequest*> runnable;
  for (const auto& r : requests) {
    const DistrictInfo* d = res.catalog.find_district(r.district);
    if (!d) {
      report.errors.push_back(r.id + ": unknown district '" + r.district + "'");
      continue;
    }
    try {
      if (!cases.contains(d->id))
        cases.emplace(d->id, load_case_file((fs::path(res.catalog.source_dir()) / d->case_path).string()));
      const auto req = r.expected ? *r.expected : extract_reference(r.text, res.catalog);
      references.emplace(r.id, canonicalize(formulate(req, cases.at(d->id))));
      runnable.push_back(&r);
    } catch (const std::exception& e) {
      report.errors.push_back(r.id + ": no reference formulation: " + e.what());
    }
  }

  std::vector<Job> jobs;
  for (auto a : opts.ablations)
    for (const auto* r : runnable)
      for (int seed : report.seeds)
        jobs.push_back({r, &cases.at(res.catalog.find_district(r->district)->id), &references.at(r->id), seed, a});

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) records[i] = run_job(jobs[i], res, make_client, opts);
  };
  const int n = std::max(1, std::min<int>(opts.parallelism, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  report.records = std::move(records);
  report.ablations = aggregate(report.records, opts.ablations);
  return report;
}

}  // namespace adn
