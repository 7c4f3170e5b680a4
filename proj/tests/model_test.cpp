#include <gtest/gtest.h>

#include <random>

#include "adn/canonical.hpp"
#include "adn/dsl.hpp"
#include "random_model.hpp"

using namespace adn;

namespace {

Model smallest() {
  Model m;
  m.name = "tiny";
  m.add_var({"x", VarKind::continuous, 0.0, 1.0, std::nullopt});
  m.objective.expr = Expr::term("x");
  m.add_constraint("c1", Component::additional, LinearRow{Expr::term("x"), Relation::ge, 0.5});
  return m;
}

int error_line(const std::string& text) {
  try {
    parse_model(text);
  } catch (const DslError& e) {
    return e.line();
  }
  return -1;
}

Model sorted(Model m) {
  sort_model(m);
  return m;
}

}  // namespace

TEST(PrintModel, SmallestModel) {
  EXPECT_EQ(print_model(smallest()),
            "problem tiny\n"
            "var x kind=cont lb=0 ub=1\n"
            "min: x\n"
            "lin c1 tag=additional: x >= 0.5\n");
}

TEST(PrintModel, DistFlowCone) {
  Model m;
  for (const char* v : {"P_01_0", "Q_01_0", "l_01_0", "v_0_0"}) m.add_var({v, VarKind::continuous, -kInf, kInf, {}});
  ConeRow row;
  row.args = {Expr::term("P_01_0", 2.0), Expr::term("Q_01_0", 2.0), Expr::term("l_01_0") - Expr::term("v_0_0")};
  row.bound = Expr::term("l_01_0") + Expr::term("v_0_0");
  m.add_constraint("pf.cone.0.t0", Component::convexification, row);
  const auto text = print_model(m);
  EXPECT_NE(text.find("soc pf.cone.0.t0 tag=convexification: norm(2*P_01_0, 2*Q_01_0, l_01_0 - v_0_0) <= l_01_0 + v_0_0\n"),
            std::string::npos)
      << text;
}

TEST(PrintModel, Idempotent) {
  const auto once = print_model(smallest());
  EXPECT_EQ(print_model(parse_model(once)), once);
}

TEST(ParseModel, RoundTripSmallest) { EXPECT_EQ(parse_model(print_model(smallest())), smallest()); }

TEST(ParseModel, TolerantInput) {
  const auto m = parse_model(
      "# generated\n\n"
      "lin c1 tag=additional: x >= 0.5   # lower\n"
      "min: x\n"
      "var x kind=cont lb=0 ub=1\n"
      "problem tiny\n");
  EXPECT_EQ(sorted(m), smallest());
}

TEST(ParseModel, UndeclaredVariableLine) {
  EXPECT_EQ(error_line("problem p\nvar x kind=cont lb=0 ub=1\nmin: x\nlin c tag=equipment: x + P_99 <= 1\n"), 4);
  try {
    parse_model("problem p\nvar x kind=cont lb=0 ub=1\nmin: x\nlin c tag=equipment: x + P_99 <= 1\n");
  } catch (const DslError& e) {
    EXPECT_EQ(e.column(), 26);
    EXPECT_NE(std::string(e.what()).find("P_99"), std::string::npos);
  }
}

TEST(ParseModel, BinaryBoundsInvariant) {
  EXPECT_EQ(error_line("problem p\nvar u kind=bin lb=0 ub=2\nmin: u\n"), 2);
}

TEST(ParseModel, LexicalAndDirectiveErrors) {
  EXPECT_EQ(error_line("problem p\nvar x kind=cont lb=0 ub=1\nmin: x\nmaximize: x\n"), 4);
  EXPECT_EQ(error_line("problem p\nvar x kind=cont lb=0 ub=1\nmin: 1.2.3*x\n"), 3);
  EXPECT_EQ(error_line("problem p\nvar x kind=cont lb=0 ub=1\nmin: x $ 2\n"), 3);
  EXPECT_EQ(error_line("problem p\nvar x kind=cont lb=0 ub=1\nmin: 3x\n"), 3);
}

TEST(ParseModel, LenientArithmetic) {
  const auto m = parse_model(
      "problem p\nvar v kind=cont lb=0 ub=2\nvar z kind=cont\nmin: z\n"
      "quad e tag=convexification: (v - 1)^2 <= z\n");
  const auto& q = std::get<QuadRow>(m.constraints[0].body);
  EXPECT_DOUBLE_EQ(q.lhs.quadratic.at({"v", "v"}), 1.0);
  EXPECT_DOUBLE_EQ(q.lhs.linear.at("v"), -2.0);
  EXPECT_DOUBLE_EQ(q.lhs.constant, 1.0);
}

TEST(ParseModel, RandomRoundTrip) {
  std::mt19937 rng(20240601);
  for (int i = 0; i < 200; ++i) {
    const auto m = test::random_model(rng);
    const auto text = print_model(m);
    Model back;
    ASSERT_NO_THROW(back = parse_model(text)) << text;
    EXPECT_EQ(sorted(back), sorted(m)) << text;
    EXPECT_EQ(print_model(back), text);
  }
}

TEST(Canonicalize, PvDiscBecomesCone) {
  Model m;
  m.add_var({"P_pv_1_0", VarKind::continuous, -kInf, kInf, {}});
  m.add_var({"Q_pv_1_0", VarKind::continuous, -kInf, kInf, {}});
  m.add_constraint("eq.pv.cap.1.t0", Component::equipment,
                   QuadRow{Expr::square("P_pv_1_0") + Expr::square("Q_pv_1_0"), Expr::number(0.25 * 0.25)});
  const auto c = canonicalize(m);
  ASSERT_EQ(c.constraints.size(), 1u);
  const auto* cone = std::get_if<ConeRow>(&c.constraints[0].body);
  ASSERT_NE(cone, nullptr);
  EXPECT_EQ(cone->args, (std::vector<Expr>{Expr::term("P_pv_1_0"), Expr::term("Q_pv_1_0")}));
  EXPECT_EQ(cone->bound, Expr::number(0.25));
  EXPECT_NE(print_model(c).find("norm(P_pv_1_0, Q_pv_1_0) <= 0.25"), std::string::npos);
}

TEST(Canonicalize, VoltageDeviationObjective) {
  Model m;
  Expr obj;
  for (const char* v : {"v_1_0", "v_1_1"}) {
    m.add_var({v, VarKind::continuous, 0.0, kInf, {}});
    Expr d = Expr::term(v) - Expr::number(1.0);
    obj.add(multiply(d, d));
  }
  m.objective.expr = obj;
  const auto c = canonicalize(m);
  EXPECT_TRUE(is_canonical(c));
  EXPECT_TRUE(c.objective.expr.is_affine());
  EXPECT_EQ(c.objective.expr.linear.size(), 2u);
  int cones = 0;
  for (const auto& row : c.constraints) cones += row.is_cone();
  EXPECT_EQ(cones, 2);
  EXPECT_TRUE(c.has_var("epi_v_1_0"));
  EXPECT_NEAR(c.objective.expr.constant, 0.0, 1e-15);
}

TEST(Canonicalize, IndefiniteRejected) {
  Model m;
  m.add_var({"x", VarKind::continuous, -kInf, kInf, {}});
  m.add_var({"y", VarKind::continuous, -kInf, kInf, {}});
  Expr xy;
  xy.add_quad("x", "y", 1.0);
  m.add_constraint("bad", Component::equipment, QuadRow{xy, Expr::number(1.0)});
  try {
    canonicalize(m);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("non-convex quadratic"), std::string::npos);
  }
  Model obj;
  obj.vars = m.vars;
  obj.objective.expr = xy;
  EXPECT_THROW(canonicalize(obj), ModelError);
}

TEST(Canonicalize, BilinearEqualityRejected) {
  Model m;
  m.add_var({"a", VarKind::continuous, 0.0, 1.0, {}});
  m.add_var({"b", VarKind::continuous, 0.0, 1.0, {}});
  Expr ab;
  ab.add_quad("a", "b", 1.0);
  m.add_constraint("comp", Component::equipment, LinearRow{ab, Relation::eq, 0.0});
  EXPECT_THROW(canonicalize(m), ModelError);
}

TEST(Canonicalize, CorrelatedSquaresViaEigen) {
  // (x + y)^2 <= z: rank-one form, rotated cone.
  Model m;
  for (const char* v : {"x", "y", "z"}) m.add_var({v, VarKind::continuous, -kInf, kInf, {}});
  Expr s = Expr::term("x") + Expr::term("y");
  m.add_constraint("q", Component::additional, QuadRow{multiply(s, s), Expr::term("z")});
  const auto c = canonicalize(m);
  const auto& cone = std::get<ConeRow>(c.constraints[0].body);
  ASSERT_EQ(cone.args.size(), 2u);
  // Check the cone on a few points against the original inequality.
  for (auto [x, y, z] : {std::tuple{0.3, 0.2, 0.3}, {0.3, 0.2, 0.2}, {-1.0, 0.5, 0.26}, {-1.0, 0.5, 0.24}}) {
    Assignment a{{"x", x}, {"y", y}, {"z", z}};
    double norm2 = 0.0;
    for (const auto& arg : cone.args) norm2 += std::pow(arg.evaluate(a), 2);
    const bool cone_ok = std::sqrt(norm2) <= cone.bound.evaluate(a) + 1e-12;
    EXPECT_EQ(cone_ok, (x + y) * (x + y) <= z) << x << "," << y << "," << z;
  }
}

TEST(Canonicalize, IdempotentOnRandomModels) {
  std::mt19937 rng(7);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    auto m = test::random_model(rng);
    m.objective.max_terms.clear();
    Model c;
    try {
      c = canonicalize(m);
    } catch (const ModelError&) {
      continue;  // random quadratics are often indefinite
    }
    ++checked;
    EXPECT_TRUE(is_canonical(c));
    EXPECT_EQ(canonicalize(c), c) << print_model(m);
  }
  EXPECT_GT(checked, 25);
}

TEST(DiffComponents, Identity) {
  Model m = smallest();
  m.add_var({"y", VarKind::continuous, 0.0, kInf, {}});
  m.add_constraint("e1", Component::equipment, LinearRow{Expr::term("y"), Relation::le, 3.0});
  m.add_constraint("e2", Component::equipment, LinearRow{Expr::term("y") - Expr::term("x"), Relation::ge, -1.0});
  const auto d = diff_components(m, m);
  for (auto comp : kAllComponents) EXPECT_EQ(d.at(comp).outcome, DiffOutcome::match) << to_string(comp);
}

TEST(DiffComponents, MissingAndPartial) {
  Model a = smallest();
  a.add_var({"y", VarKind::continuous, 0.0, kInf, {}});
  a.add_constraint("e1", Component::equipment, LinearRow{Expr::term("y"), Relation::le, 3.0});
  a.add_constraint("e2", Component::equipment, LinearRow{Expr::term("y") - Expr::term("x"), Relation::ge, -1.0});

  Model no_additional = a;
  std::erase_if(no_additional.constraints, [](const Constraint& c) { return c.tag == Component::additional; });
  auto d = diff_components(a, no_additional);
  EXPECT_EQ(d.at(Component::additional).outcome, DiffOutcome::missing);
  EXPECT_EQ(d.at(Component::equipment).outcome, DiffOutcome::match);
  EXPECT_EQ(d.at(Component::objective).outcome, DiffOutcome::match);

  Model one_less = a;
  std::erase_if(one_less.constraints, [](const Constraint& c) { return c.name == "e2"; });
  d = diff_components(a, one_less);
  EXPECT_EQ(d.at(Component::equipment).outcome, DiffOutcome::partial);
  EXPECT_EQ(d.at(Component::equipment).only_in_reference, std::vector<std::string>{"e2"});
}

TEST(DiffComponents, ScaleAndNameInvariant) {
  Model a = smallest();
  Model b = smallest();
  b.constraints[0].name = "renamed";
  b.constraints[0].body = LinearRow{Expr::term("x", -2.0), Relation::le, -1.0};
  EXPECT_EQ(diff_components(a, b).at(Component::additional).outcome, DiffOutcome::match);
  b.constraints[0].body = LinearRow{Expr::term("x", -2.0), Relation::le, -1.0 + 1e-6};
  EXPECT_EQ(diff_components(a, b).at(Component::additional).outcome, DiffOutcome::missing);
}
