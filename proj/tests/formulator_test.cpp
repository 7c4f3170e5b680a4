#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "adn/canonical.hpp"
#include "adn/dsl.hpp"
#include "adn/formulator.hpp"
#include "adn/power_flow.hpp"
#include "support.hpp"

using namespace adn;

namespace {

StructuredRequirements requirements(std::string district, Objective obj, EquipmentSet eq = {},
                                    std::vector<ExtraConstraint> extra = {}) {
  StructuredRequirements r;
  r.district = std::move(district);
  r.objective = obj;
  r.equipment = std::move(eq);
  r.extra_constraints = std::move(extra);
  if (is_single_timestep_objective(obj)) r.horizon = HorizonSpec::single(0);
  return r;
}

int count_prefix(const std::vector<Constraint>& rows, const std::string& prefix) {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [&](const Constraint& c) { return c.name.rfind(prefix, 0) == 0; }));
}

int count_prefix(const Model& m, const std::string& prefix) { return count_prefix(m.constraints, prefix); }

FormulationContext staged(const StructuredRequirements& r, const NetworkCase& c, int stages) {
  FormulationContext ctx(r, c);
  if (stages > 0) ctx.append(build_objective(ctx));
  if (stages > 1) ctx.append(build_equipment_constraints(ctx));
  if (stages > 2) ctx.append(build_power_flow(ctx));
  if (stages > 3) ctx.append(build_additional_constraints(ctx));
  return ctx;
}

NetworkCase truncate(NetworkCase c, int steps) {
  c.horizon.steps = steps;
  for (auto& b : c.buses) {
    b.p_load.resize(steps);
    b.q_load.resize(steps);
  }
  for (auto& d : c.devices)
    if (auto* pv = std::get_if<PvUnit>(&d)) pv->p_avail.resize(steps);
  if (c.prices.rho0.size() > 1) c.prices.rho0.resize(steps);
  return c;
}

const LinearRow& linear(const Model& m, const std::string& name) {
  const Constraint* c = m.find_constraint(name);
  if (!c) throw std::runtime_error("no row " + name);
  return std::get<LinearRow>(c->body);
}

}  // namespace

TEST(BuildObjective, MinCostKeepsOnlyRequestedEquipment) {
  const auto c = test::load_fixture("toy_full");
  const auto ctx = staged(requirements("toy_full", Objective::min_cost, {EquipmentKind::dg}), c, 0);
  const auto f = build_objective(ctx);
  ASSERT_TRUE(f.objective);
  std::map<std::string, double> expected;
  for (int t = 0; t < 3; ++t) {
    expected["P_dg_1_" + std::to_string(t)] = c.prices.rho_dg;
    expected["P_grid_0_" + std::to_string(t)] = c.prices.rho0_at(t);
  }
  EXPECT_EQ(f.objective->expr.linear, expected);
  EXPECT_TRUE(f.objective->expr.quadratic.empty());
}

TEST(BuildObjective, MinLossHasOneTermPerBranchAndStep) {
  const auto c = test::load_fixture("valley33");
  const auto f = build_objective(staged(requirements("valley", Objective::min_loss), c, 0));
  EXPECT_EQ(f.objective->expr.linear.size(), 32u * 24u);
  EXPECT_DOUBLE_EQ(f.objective->expr.linear.at("l_0_1_5"), c.branches[0].r);
}

TEST(BuildObjective, EliminateVoltageViolationRecordsIntent) {
  const auto c = test::load_fixture("toy");
  const auto f = build_objective(staged(requirements("toy", Objective::eliminate_voltage_violation), c, 0));
  ASSERT_EQ(f.objective->max_terms.size(), 2u);
  Assignment a{{"v_0_0", 1.0}, {"v_1_0", 0.9}};
  EXPECT_NEAR(f.objective->max_terms[1].evaluate(a), 0.01, 1e-15);
}

TEST(BuildEquipment, DgRowsOverThreeSteps) {
  const auto c = test::load_fixture("toy_full");
  const auto f =
      build_equipment_constraints(staged(requirements("toy_full", Objective::min_cost, {EquipmentKind::dg}), c, 1));
  // 3 steps x (P, Q) bound pairs, plus ramp pairs at t = 1, 2.
  EXPECT_EQ(count_prefix(f.constraints, "eq.dg.p.") + count_prefix(f.constraints, "eq.dg.q."), 12);
  EXPECT_EQ(count_prefix(f.constraints, "eq.dg.ramp."), 4);
  EXPECT_EQ(f.constraints.size(), 16u);
}

TEST(BuildEquipment, DgInitialRamp) {
  auto c = test::load_fixture("toy_full");
  std::get<DgUnit>(c.devices[0]).p_init = 0.01;
  const auto f =
      build_equipment_constraints(staged(requirements("toy_full", Objective::min_cost, {EquipmentKind::dg}), c, 1));
  EXPECT_EQ(count_prefix(f.constraints, "eq.dg.ramp."), 6);
}

TEST(BuildEquipment, BessDayAhead) {
  const auto c = test::load_fixture("toy_bess");
  const auto f = build_equipment_constraints(
      staged(requirements("toy_bess", Objective::min_cost, {EquipmentKind::bess}), c, 1));
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.soc."), 6);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.dyn."), 2);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.init."), 1);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.final."), 1);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.comp."), 3);
}

TEST(BuildEquipment, BessSingleTimestepDropsTemporalRows) {
  const auto c = test::load_fixture("toy_bess");
  auto r = requirements("toy_bess", Objective::eliminate_voltage_violation, {EquipmentKind::bess});
  r.horizon = HorizonSpec::single(1);
  const auto f = build_equipment_constraints(staged(r, c, 1));
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.soc."), 0);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.dyn."), 0);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.init."), 0);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.final."), 0);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.dis."), 2);
  EXPECT_EQ(count_prefix(f.constraints, "eq.bess.comp."), 1);
}

TEST(BuildEquipment, SvcBounds) {
  const auto c = test::load_fixture("toy_full");
  const auto f = build_equipment_constraints(
      staged(requirements("toy_full", Objective::min_loss, {EquipmentKind::svc}), c, 1));
  ASSERT_EQ(f.constraints.size(), 6u);
  for (const auto& row : f.constraints) {
    const auto& lr = std::get<LinearRow>(row.body);
    EXPECT_DOUBLE_EQ(lr.rhs, lr.rel == Relation::ge ? 0.0 : 0.03) << row.name;
  }
}

TEST(BuildEquipment, AbsentEquipmentRejected) {
  const auto c = test::load_fixture("toy");
  auto ctx = staged(requirements("toy", Objective::min_loss, {EquipmentKind::bess}), c, 1);
  EXPECT_THROW(build_equipment_constraints(ctx), FormulationError);
}

TEST(BuildPowerFlow, ToyRowCount) {
  const auto c = test::load_fixture("toy");
  const auto f = build_power_flow(staged(requirements("toy", Objective::min_loss), c, 2));
  EXPECT_EQ(f.constraints.size(), 7u);
  EXPECT_EQ(count_prefix(f.constraints, "pf.p."), 2);
  EXPECT_EQ(count_prefix(f.constraints, "pf.q."), 2);
  EXPECT_EQ(count_prefix(f.constraints, "pf.drop."), 1);
  EXPECT_EQ(count_prefix(f.constraints, "pf.current."), 1);
  EXPECT_EQ(count_prefix(f.constraints, "pf.root."), 1);
}

TEST(BuildPowerFlow, InjectionTermsAtDeviceBuses) {
  const auto c = test::load_fixture("toy_full");
  const auto f = build_power_flow(
      staged(requirements("toy_full", Objective::min_loss, {EquipmentKind::pv, EquipmentKind::svc}), c, 2));
  Model m;
  m.constraints = f.constraints;
  EXPECT_TRUE(linear(m, "pf.q.2.t1").expr.linear.contains("Q_pv_2_1"));
  EXPECT_TRUE(linear(m, "pf.q.1.t1").expr.linear.contains("Q_svc_1_1"));
  // Fixed PV output shifts the active balance rhs: -load + p_avail.
  EXPECT_NEAR(linear(m, "pf.p.2.t1").rhs, -c.buses[2].p_load[1] + 0.04, 1e-15);
  EXPECT_DOUBLE_EQ(linear(m, "pf.root.t1").rhs, 1.0);
}

TEST(BuildPowerFlow, ExactPowerFlowSatisfiesRows) {
  for (const char* name : {"toy", "toy_full", "hamlet6", "harbor12", "valley33"}) {
    const auto c = test::load_fixture(name);
    auto r = requirements(name, Objective::min_loss, c.installed_equipment());
    const auto f = build_power_flow(staged(r, c, 2));
    const auto pf = baseline_power_flow(c);
    const auto inj = passive_injections(c);
    for (int t = 0; t < c.steps(); ++t) {
      Assignment a;
      const auto& s = pf.steps[t];
      const std::string ts = "_" + std::to_string(t);
      for (int i = 0; i < c.bus_count(); ++i) a["v_" + std::to_string(i) + ts] = s.v[i];
      for (int e = 0; e < c.branch_count(); ++e) {
        const auto& br = c.branches[e];
        const std::string key = std::to_string(br.from_bus) + "_" + std::to_string(br.to_bus) + ts;
        a["P_" + key] = s.p_branch[e];
        a["Q_" + key] = s.q_branch[e];
        a["l_" + key] = s.l_branch[e];
      }
      a["P_grid_0" + ts] = s.p_root;
      a["Q_grid_0" + ts] = s.q_root;
      for (const auto& d : c.devices) {
        const std::string b = std::to_string(bus_of(d)) + ts;
        if (const auto* dg = std::get_if<DgUnit>(&d)) {
          a["P_dg_" + b] = std::clamp(0.0, dg->p_min, dg->p_max);
          a["Q_dg_" + b] = std::clamp(0.0, dg->q_min, dg->q_max);
        } else if (std::holds_alternative<BessUnit>(d)) {
          a["P_dis_" + b] = 0.0;
          a["P_cha_" + b] = 0.0;
        } else if (const auto* pv = std::get_if<PvUnit>(&d)) {
          a["P_pv_" + b] = inj.p[t][pv->bus];
          a["Q_pv_" + b] = 0.0;
        } else {
          a["Q_svc_" + b] = 0.0;
        }
      }
      const std::string suffix = ".t" + std::to_string(t);
      for (const auto& row : f.constraints) {
        if (row.name.size() < suffix.size() || row.name.compare(row.name.size() - suffix.size(), suffix.size(), suffix))
          continue;
        const auto& lr = std::get<LinearRow>(row.body);
        EXPECT_NEAR(lr.expr.evaluate(a), lr.rhs, 1e-9) << name << " " << row.name;
      }
    }
  }
}

TEST(BuildAdditional, VoltageSafetySquaresLimits) {
  const auto c = test::load_fixture("toy");
  const auto f = build_additional_constraints(
      staged(requirements("toy", Objective::min_loss, {}, {{ConstraintKind::voltage_safety, {}}}), c, 3));
  ASSERT_EQ(f.constraints.size(), 4u);
  Model m;
  m.constraints = f.constraints;
  EXPECT_NEAR(linear(m, "add.vmin.1.t0").rhs, 0.9025, 1e-15);
  EXPECT_NEAR(linear(m, "add.vmax.1.t0").rhs, 1.1025, 1e-15);
}

TEST(BuildAdditional, OverridesAndBranchSafety) {
  const auto c = test::load_fixture("toy");
  const auto f = build_additional_constraints(
      staged(requirements("toy", Objective::min_loss, {},
                          {{ConstraintKind::voltage_safety, {{"v_min", 0.9}}},
                           {ConstraintKind::branch_safety, {{"s_max", 0.5}}}}),
             c, 3));
  Model m;
  m.constraints = f.constraints;
  EXPECT_NEAR(linear(m, "add.vmin.1.t0").rhs, 0.81, 1e-15);
  const auto* br = m.find_constraint("add.branch.0_1.t0");
  ASSERT_TRUE(br && br->is_quad());
  const auto& q = std::get<QuadRow>(br->body);
  EXPECT_EQ(print_expr(q.lhs), "P_0_1_0*P_0_1_0 + Q_0_1_0*Q_0_1_0");
  EXPECT_DOUBLE_EQ(q.rhs.constant, 0.25);
}

TEST(BuildAdditional, EmptyRequestEmptyFragment) {
  const auto c = test::load_fixture("toy");
  EXPECT_TRUE(build_additional_constraints(staged(requirements("toy", Objective::min_loss), c, 3)).empty());
}

TEST(StageOrder, PreconditionsEnforced) {
  const auto c = test::load_fixture("toy");
  const auto r = requirements("toy", Objective::min_loss);
  FormulationContext ctx(r, c);
  EXPECT_THROW(build_equipment_constraints(ctx), FormulationError);
  EXPECT_THROW(build_power_flow(ctx), FormulationError);
  EXPECT_THROW(assemble(ctx), FormulationError);
  ctx.append(build_objective(ctx));
  EXPECT_THROW(ctx.append(build_objective(ctx)), FormulationError);
}

TEST(Assemble, ToyMinLoss) {
  const auto c = test::load_fixture("toy");
  const auto ctx = staged(requirements("toy", Objective::min_loss), c, 4);
  const auto m = assemble(ctx);
  EXPECT_EQ(m.rows_with(Component::power_flow).size(), 7u);
  EXPECT_EQ(m.rows_with(Component::equipment).size(), 0u);
  EXPECT_EQ(m.objective.expr.linear.size(), 1u);
  EXPECT_EQ(print_model(assemble(ctx)), print_model(m));
}

TEST(Assemble, ValleyRequestTags) {
  const auto c = test::load_fixture("valley33");
  const auto r = requirements("valley", Objective::min_loss, {EquipmentKind::pv, EquipmentKind::svc},
                              {{ConstraintKind::voltage_safety, {}}});
  const auto m = assemble(staged(r, c, 4));
  EXPECT_FALSE(m.rows_with(Component::power_flow).empty());
  EXPECT_FALSE(m.rows_with(Component::equipment).empty());
  EXPECT_FALSE(m.rows_with(Component::additional).empty());
  EXPECT_TRUE(m.rows_with(Component::convexification).empty());
  EXPECT_EQ(print_model(m), print_model(assemble(staged(r, c, 4))));
}

TEST(Convexify, CurrentRowBecomesFourDimensionalCone) {
  const auto c = test::load_fixture("toy");
  const auto m = convexify(assemble(staged(requirements("toy", Objective::min_loss), c, 4)));
  EXPECT_EQ(m.find_constraint("pf.current.0_1.t0"), nullptr);
  const auto* cone = m.find_constraint("pf.cone.0_1.t0");
  ASSERT_TRUE(cone && cone->is_cone());
  EXPECT_EQ(cone->tag, Component::convexification);
  const auto& row = std::get<ConeRow>(cone->body);
  EXPECT_EQ(row.args.size() + 1, 4u);
  // Any point with l*v = P^2 + Q^2 lies on the cone boundary.
  Assignment a{{"P_0_1_0", 0.3}, {"Q_0_1_0", 0.4}, {"v_0_0", 1.0}, {"l_0_1_0", 0.25}};
  double norm = 0.0;
  for (const auto& e : row.args) norm += e.evaluate(a) * e.evaluate(a);
  EXPECT_NEAR(std::sqrt(norm), row.bound.evaluate(a), 1e-12);
}

TEST(Convexify, BessComplementarityTwoSteps) {
  const auto c = truncate(test::load_fixture("toy_bess"), 2);
  const auto m = convexify(assemble(staged(requirements("toy_bess", Objective::min_cost, {EquipmentKind::bess}), c, 4)));
  EXPECT_EQ(m.binary_count(), 2);
  EXPECT_EQ(count_prefix(m, "cvx.bess."), 4);
  EXPECT_EQ(count_prefix(m, "eq.bess.comp."), 0);
  const auto& dis = linear(m, "cvx.bess.dis.1.t0");
  EXPECT_DOUBLE_EQ(dis.expr.linear.at("u_bess_1_0"), -0.05);
  const auto& cha = linear(m, "cvx.bess.cha.1.t1");
  EXPECT_DOUBLE_EQ(cha.expr.linear.at("u_bess_1_1"), 0.05);
  EXPECT_DOUBLE_EQ(cha.rhs, 0.05);
}

TEST(Convexify, BranchEpigraph) {
  const auto c = test::load_fixture("toy");
  const auto m = convexify(assemble(staged(requirements("toy", Objective::eliminate_branch_violation), c, 4)));
  ASSERT_TRUE(m.has_var("z"));
  EXPECT_EQ(count_prefix(m, "cvx.epi."), 1);
  EXPECT_FALSE(m.objective.is_min_max());
  EXPECT_EQ(print_expr(m.objective.expr), "z");
}

TEST(Convexify, RejectsUnknownNonConvexRow) {
  Model m;
  m.add_var({"a", VarKind::continuous, 0, 1, {}});
  m.add_var({"b", VarKind::continuous, 0, 1, {}});
  Expr e = Expr::square("a");
  e.add_term("b", 1.0);
  m.add_constraint("odd", Component::additional, LinearRow{e, Relation::eq, 1.0});
  EXPECT_THROW(convexify(m), FormulationError);
}

TEST(Formulate, EveryFixtureAndObjectiveCanonicalizes) {
  int checked = 0;
  for (const char* name : {"toy", "toy_bess", "toy_full", "hamlet6", "harbor12", "valley33"}) {
    const auto c = test::load_fixture(name);
    for (auto obj : kAllObjectives) {
      auto r = requirements(name, obj, c.installed_equipment(),
                            {{ConstraintKind::voltage_safety, {}}, {ConstraintKind::branch_safety, {}}});
      if (r.horizon.is_single()) r.horizon = HorizonSpec::single(c.steps() - 1);
      const auto m = formulate(r, c);
      Model canon;
      ASSERT_NO_THROW(canon = canonicalize(m)) << name << " " << to_string(obj);
      for (const auto& row : canon.constraints) EXPECT_FALSE(row.is_quad()) << row.name;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 30);
}

TEST(Formulate, SingleTimestepHasNoCrossStepRows) {
  const auto c = test::load_fixture("harbor12");
  auto r = requirements("harbor", Objective::eliminate_voltage_violation, c.installed_equipment());
  r.horizon = HorizonSpec::single(12);
  const auto m = formulate(r, c);
  for (const auto& v : m.vars) {
    if (v.name == "z") continue;
    EXPECT_TRUE(v.name.size() > 3 && v.name.substr(v.name.size() - 3) == "_12") << v.name;
  }
}

TEST(Formulate, EquipmentMonotonicity) {
  const auto c = test::load_fixture("harbor12");
  for (auto drop : kAllEquipment) {
    auto full = requirements("harbor", Objective::min_cost, c.installed_equipment(),
                             {{ConstraintKind::voltage_safety, {}}});
    auto reduced = full;
    reduced.equipment.erase(drop);
    const auto m_full = formulate(full, c);
    const auto m_reduced = formulate(reduced, c);

    // Strip every variable owned by the dropped kind from the full model.
    const std::vector<std::string> prefixes =
        drop == EquipmentKind::dg     ? std::vector<std::string>{"P_dg_", "Q_dg_"}
        : drop == EquipmentKind::bess ? std::vector<std::string>{"P_dis_", "P_cha_", "SOC_", "u_bess_"}
        : drop == EquipmentKind::pv   ? std::vector<std::string>{"P_pv_", "Q_pv_"}
                                      : std::vector<std::string>{"Q_svc_"};
    auto owned = [&](const std::string& v) {
      return std::any_of(prefixes.begin(), prefixes.end(), [&](const auto& p) { return v.rfind(p, 0) == 0; });
    };
    Model stripped = m_full;
    std::erase_if(stripped.vars, [&](const Var& v) { return owned(v.name); });
    std::erase_if(stripped.constraints, [&](const Constraint& row) {
      const auto vars = row.variables();
      return row.tag != Component::power_flow && std::any_of(vars.begin(), vars.end(), owned);
    });
    for (auto& row : stripped.constraints) {
      auto* lr = std::get_if<LinearRow>(&row.body);
      if (!lr) continue;
      for (auto it = lr->expr.linear.begin(); it != lr->expr.linear.end();)
        it = owned(it->first) ? lr->expr.linear.erase(it) : std::next(it);
    }
    for (auto it = stripped.objective.expr.linear.begin(); it != stripped.objective.expr.linear.end();)
      it = owned(it->first) ? stripped.objective.expr.linear.erase(it) : std::next(it);
    if (drop == EquipmentKind::pv) {
      // Fixed PV output enters the balance right-hand sides.
      for (const auto& pv : c.devices_of<PvUnit>())
        for (int t = 0; t < c.steps(); ++t)
          if (!pv.curtailable) {
            auto* row = std::get_if<LinearRow>(
                &const_cast<Constraint*>(stripped.find_constraint("pf.p." + std::to_string(pv.bus) + ".t" +
                                                                  std::to_string(t)))
                     ->body);
            row->rhs -= pv.p_avail[t];
          }
    }
    EXPECT_EQ(print_model(stripped), print_model(m_reduced)) << to_string(drop);
  }
}

TEST(Formulate, Deterministic) {
  const auto c = test::load_fixture("harbor12");
  const auto r = requirements("harbor", Objective::min_cost, c.installed_equipment(),
                              {{ConstraintKind::voltage_safety, {}}, {ConstraintKind::branch_safety, {}}});
  EXPECT_EQ(print_model(formulate(r, c)), print_model(formulate(r, c)));
}

TEST(Fragment, TextRoundTrip) {
  const auto c = test::load_fixture("toy_full");
  auto ctx = staged(requirements("toy_full", Objective::eliminate_voltage_violation, c.installed_equipment(),
                                 {{ConstraintKind::branch_safety, {}}}),
                    c, 4);
  for (auto comp : {Component::objective, Component::equipment, Component::power_flow, Component::additional}) {
    const auto text = print_fragment(ctx.fragment(comp));
    EXPECT_EQ(print_fragment(parse_fragment(text, comp)), text) << to_string(comp);
  }
}
