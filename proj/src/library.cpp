#include <filesystem>

#include "adn/canonical.hpp"
#include "adn/dsl.hpp"
#include "adn/formulator.hpp"
#include "adn/pipeline.hpp"

namespace adn {

namespace {

struct Seed {
  const char* fixture;
  Objective objective;
  EquipmentSet equipment;
  std::vector<ConstraintKind> constraints;
  int t_hat = -1;
};

std::string entry_id(const Seed& s) {
  std::string id = std::string(s.fixture) + "/" + std::string(to_string(s.objective));
  if (s.t_hat >= 0) id += "@" + std::to_string(s.t_hat);
  id += "/";
  if (s.equipment.empty()) id += "none";
  bool first = true;
  for (auto e : s.equipment) {
    id += (first ? "" : "+") + std::string(to_string(e));
    first = false;
  }
  for (auto k : s.constraints) id += "/" + std::string(to_string(k));
  return id;
}

}  // namespace

RagStore build_reference_library(const std::string& data_dir, const Embedder& embedder) {
  using E = EquipmentKind;
  using K = ConstraintKind;
  const std::vector<Seed> seeds = {
      {"toy_full", Objective::min_cost, {E::dg, E::bess, E::pv, E::svc}, {K::voltage_safety}},
      {"toy_full", Objective::min_loss, {E::pv, E::svc}, {K::voltage_safety}},
      {"toy", Objective::min_voltage_deviation, {}, {}},
      {"toy", Objective::min_loss, {}, {}},
      {"toy", Objective::eliminate_voltage_violation, {}, {}, 0},
      {"toy_bess", Objective::min_cost, {E::bess}, {}},
      {"toy_bess", Objective::min_loss, {E::bess}, {K::branch_safety}},
      {"toy_full", Objective::min_voltage_deviation, {E::dg, E::svc}, {}},
      {"toy_full", Objective::eliminate_branch_violation, {E::dg, E::svc}, {K::branch_safety}, 1},
      {"toy_full", Objective::eliminate_voltage_violation, {E::pv, E::svc}, {}, 2},
      {"toy_full", Objective::min_cost, {E::dg, E::bess}, {K::branch_safety}},
      {"toy_full", Objective::min_loss, {E::dg, E::bess, E::pv, E::svc}, {K::voltage_safety, K::branch_safety}},
  };
  RagStore store(embedder.dimension());
  std::vector<std::string> fixed;
  for (const auto& s : seeds) {
    const auto c = load_case_file((std::filesystem::path(data_dir) / "cases" / (std::string(s.fixture) + ".json")).string());
    StructuredRequirements req;
    req.district = c.district_id;
    req.objective = s.objective;
    req.equipment = s.equipment;
    for (auto k : s.constraints) req.extra_constraints.push_back({k, {}});
    if (s.t_hat >= 0) req.horizon = HorizonSpec::single(s.t_hat);
    const Model m = formulate(req, c);
    RagEntry e;
    e.id = entry_id(s);
    e.text = print_model(canonicalize(m));
    e.vector = embedder.embed(e.text);
    e.exemplar = print_model(m);
    if (fixed.size() < 3) fixed.push_back(e.id);
    store.add(std::move(e));
  }
  store.set_fixed(fixed);
  return store;
}

}  // namespace adn
