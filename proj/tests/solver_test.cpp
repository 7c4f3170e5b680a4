#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "adn/canonical.hpp"
#include "adn/dsl.hpp"
#include "adn/formulator.hpp"
#include "adn/power_flow.hpp"
#include "adn/solver.hpp"
#include "support.hpp"

using namespace adn;

namespace {

Model dsl(const char* text) { return parse_model(text); }

StructuredRequirements loss_request(const std::string& district, EquipmentSet eq = {},
                                    std::vector<ExtraConstraint> extra = {}) {
  StructuredRequirements r;
  r.district = district;
  r.objective = Objective::min_loss;
  r.equipment = std::move(eq);
  r.extra_constraints = std::move(extra);
  return r;
}

}  // namespace

TEST(SolveSocp, BoundedScalar) {
  const auto sol = solve_socp(dsl("problem p\nvar x lb=0 ub=1\nmin: x\nlin c tag=additional: x >= 0.5\n"));
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_NEAR(sol.value("x"), 0.5, 1e-7);
  EXPECT_NEAR(sol.objective, 0.5, 1e-7);
}

TEST(SolveSocp, EuclideanNorm) {
  const auto sol = solve_socp(dsl(
      "problem p\nvar x\nvar y\nvar z\nmin: x\n"
      "soc c tag=additional: norm(y, z) <= x\nlin fy tag=additional: y = 3\nlin fz tag=additional: z = 4\n"));
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_NEAR(sol.value("x"), 5.0, 1e-7);
}

TEST(SolveSocp, FixedVariablesSubstituted) {
  const auto sol = solve_socp(dsl("problem p\nvar x lb=2 ub=2\nvar y lb=0\nmin: y\nlin c tag=additional: y - x >= 1\n"));
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_NEAR(sol.value("x"), 2.0, 0.0);
  EXPECT_NEAR(sol.value("y"), 3.0, 1e-7);
}

TEST(SolveSocp, SmallLp) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  x = 1.6, y = 1.2.
  const auto sol = solve_socp(dsl(
      "problem p\nvar x lb=0\nvar y lb=0\nmin: -x - y\n"
      "lin a tag=additional: x + 2*y <= 4\nlin b tag=additional: 3*x + y <= 6\n"));
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_NEAR(sol.value("x"), 1.6, 1e-7);
  EXPECT_NEAR(sol.value("y"), 1.2, 1e-7);
}

TEST(SolveSocp, InfeasibleCertificate) {
  const auto sol = solve_socp(dsl(
      "problem p\nvar x\nvar y\nmin: x\nlin a tag=additional: x + y >= 2\nlin b tag=additional: x + y <= 1\n"
      "lin c tag=additional: x - y = 0\n"));
  ASSERT_EQ(sol.status, SolveStatus::infeasible);
  ASSERT_TRUE(sol.certificate_residual);
  EXPECT_LE(*sol.certificate_residual, 1e-6);
}

TEST(SolveSocp, InfeasibleCone) {
  const auto sol = solve_socp(dsl(
      "problem p\nvar x\nvar y\nmin: x\nsoc c tag=additional: norm(y) <= x\nlin a tag=additional: x <= 1\n"
      "lin b tag=additional: y >= 2\n"));
  ASSERT_EQ(sol.status, SolveStatus::infeasible);
  EXPECT_LE(*sol.certificate_residual, 1e-6);
}

TEST(SolveSocp, Unbounded) {
  const auto sol = solve_socp(dsl("problem p\nvar x\nvar y lb=0\nmin: x + y\nlin a tag=additional: x <= 1\n"));
  EXPECT_EQ(sol.status, SolveStatus::unbounded);
}

TEST(SolveSocp, RejectsFreeBinary) {
  EXPECT_THROW(solve_socp(dsl("problem p\nvar u kind=bin\nmin: u\n")), SolverError);
}

TEST(SolveSocp, RejectsQuadraticRow) {
  EXPECT_THROW(solve_socp(dsl("problem p\nvar x\nmin: x\nquad q tag=additional: x^2 <= 1\n")), SolverError);
}

TEST(SolveSocp, ToyLossesMatchExactPowerFlow) {
  const auto c = test::load_fixture("toy");
  const auto m = canonicalize(formulate(loss_request("toy"), c));
  const auto sol = solve_socp(m);
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_NEAR(sol.objective, baseline_power_flow(c).total_losses(), 1e-6);
}

TEST(SolveSocp, SixBusLossesMatchExactPowerFlow) {
  const auto c = test::load_fixture("hamlet6");
  const auto m = canonicalize(formulate(loss_request("hamlet"), c));
  const auto start = std::chrono::steady_clock::now();
  const auto sol = solve_socp(m);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  // Without devices the feeder is passive: the exact sweep uses zero injections here.
  EXPECT_NEAR(sol.objective, baseline_power_flow(c, zero_injections(c)).total_losses(), 1e-6);
  EXPECT_LT(secs, 1.0);
}

TEST(SolveSocp, ValleyLossWithVoltageSafety) {
  const auto c = test::load_fixture("valley33");
  const auto m = canonicalize(formulate(
      loss_request("valley", {EquipmentKind::pv, EquipmentKind::svc}, {{ConstraintKind::voltage_safety, {}}}), c));
  const auto start = std::chrono::steady_clock::now();
  const auto sol = solve_socp(m);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(sol.status, SolveStatus::optimal) << sol.iterations;
  EXPECT_LT(sol.objective, baseline_power_flow(c).total_losses());
  EXPECT_LE(sol.max_violation, 1e-6);
  RecordProperty("seconds", std::to_string(secs));
}
