#include <gtest/gtest.h>

#include "adn/requirements.hpp"
#include "support.hpp"

using namespace adn;

namespace {

StructuredRequirements valley_pv_svc() {
  StructuredRequirements r;
  r.district = "valley";
  r.objective = Objective::min_loss;
  r.equipment = {EquipmentKind::pv, EquipmentKind::svc};
  r.extra_constraints = {{ConstraintKind::voltage_safety, {}}};
  return r;
}

std::string error_of(const std::string& text, const RequestCatalog& catalog = RequestCatalog::canonical_only()) {
  try {
    parse_decorated(text, catalog);
  } catch (const RequirementsError& e) {
    return e.what();
  }
  return "";
}

const RequestCatalog& catalog() {
  static const RequestCatalog c = RequestCatalog::load_file(test::source_path("data/catalog.json"));
  return c;
}

}  // namespace

TEST(ParseDecorated, ValleyLossExample) {
  const auto r = parse_decorated(
      "<district>valley</district><objective>min_loss</objective><equipment>pv, svc</equipment>"
      "<constraints>voltage_safety</constraints>");
  EXPECT_EQ(r, valley_pv_svc());
  EXPECT_FALSE(r.horizon.is_single());
}

TEST(ParseDecorated, EmbeddedInProse) {
  const auto r = parse_decorated(
      "Sure, here is what I found in the request.\n<equipment> pv ,svc </equipment> The operator wants "
      "<objective>min_loss</objective> for <district>valley</district>. \n\n"
      "Keep <constraints>voltage_safety</constraints> in mind. That is all.");
  EXPECT_EQ(r, valley_pv_svc());
}

TEST(ParseDecorated, MissingDistrict) {
  EXPECT_EQ(error_of("<objective>min_loss</objective>"), "missing <district>");
}

TEST(ParseDecorated, DuplicateTag) {
  EXPECT_EQ(error_of("<district>a</district><district>b</district><objective>min_loss</objective>"),
            "duplicate <district> tag");
}

TEST(ParseDecorated, UnknownTokensNamed) {
  EXPECT_NE(error_of("<district>a</district><objective>maximize fun</objective>").find("'maximize fun'"),
            std::string::npos);
  EXPECT_NE(error_of("<district>a</district><objective>min_loss</objective><equipment>pv, flux</equipment>")
                .find("'flux'"),
            std::string::npos);
}

TEST(ParseDecorated, SingleTimestepNeedsTimestep) {
  EXPECT_NE(error_of("<district>a</district><objective>eliminate_voltage_violation</objective>").find("timestep"),
            std::string::npos);
  const auto r = parse_decorated(
      "<district>a</district><objective>eliminate_voltage_violation</objective><timestep>12</timestep>");
  EXPECT_TRUE(r.horizon.is_single());
  EXPECT_EQ(r.horizon.t_hat, 12);
}

TEST(ParseDecorated, SynonymsFromCatalog) {
  const auto r = parse_decorated(
      "<district>Harbour District</district><objective>minimize power loss</objective>"
      "<equipment>battery and photovoltaic</equipment><constraints>voltage limits</constraints>",
      catalog());
  EXPECT_EQ(r.district, "harbor");
  EXPECT_EQ(r.objective, Objective::min_loss);
  EXPECT_EQ(r.equipment, (EquipmentSet{EquipmentKind::bess, EquipmentKind::pv}));
  ASSERT_EQ(r.extra_constraints.size(), 1u);
  EXPECT_EQ(r.extra_constraints[0].kind, ConstraintKind::voltage_safety);
}

TEST(ParseDecorated, ConstraintOverrides) {
  const auto r = parse_decorated(
      "<district>valley</district><objective>min_loss</objective>"
      "<constraints>voltage_safety(v_min=0.93, v_max=1.07), branch_safety(s_max=0.4)</constraints>");
  ASSERT_EQ(r.extra_constraints.size(), 2u);
  EXPECT_DOUBLE_EQ(r.extra_constraints[0].overrides.at("v_min"), 0.93);
  EXPECT_DOUBLE_EQ(r.extra_constraints[0].overrides.at("v_max"), 1.07);
  EXPECT_DOUBLE_EQ(r.extra_constraints[1].overrides.at("s_max"), 0.4);
  EXPECT_EQ(parse_decorated(render_decorated(r)), r);
}

TEST(RenderDecorated, CanonicalString) {
  EXPECT_EQ(render_decorated(valley_pv_svc()),
            "<district>valley</district>\n<objective>min_loss</objective>\n<equipment>pv, svc</equipment>\n"
            "<constraints>voltage_safety</constraints>\n");
}

TEST(RenderDecorated, EmptyEquipment) {
  auto r = valley_pv_svc();
  r.equipment.clear();
  const auto text = render_decorated(r);
  EXPECT_NE(text.find("<equipment></equipment>"), std::string::npos);
  EXPECT_TRUE(parse_decorated(text).equipment.empty());
}

TEST(RenderDecorated, Timestep) {
  StructuredRequirements r;
  r.district = "valley";
  r.objective = Objective::eliminate_voltage_violation;
  r.horizon = HorizonSpec::single(12);
  const auto text = render_decorated(r);
  EXPECT_NE(text.find("<timestep>12</timestep>"), std::string::npos);
  EXPECT_EQ(parse_decorated(text), r);
}

TEST(ValidateRequirements, EquipmentNotInstalled) {
  const auto c = test::load_fixture("valley33");
  auto r = valley_pv_svc();
  r.equipment.insert(EquipmentKind::bess);
  const auto vs = validate_requirements(r, catalog(), c);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].invariant, "equipment 'bess' not installed in district");
}

TEST(ValidateRequirements, HorizonMismatch) {
  const auto c = test::load_fixture("valley33");
  auto r = valley_pv_svc();
  r.objective = Objective::eliminate_voltage_violation;
  const auto vs = validate_requirements(r, catalog(), c);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_NE(vs[0].invariant.find("horizon mismatch"), std::string::npos);
}

TEST(ValidateRequirements, Consistent) {
  EXPECT_TRUE(validate_requirements(valley_pv_svc(), catalog(), test::load_fixture("valley33")).empty());
}

TEST(ValidateRequirements, UnknownDistrict) {
  auto r = valley_pv_svc();
  r.district = "atlantis";
  const auto vs = validate_requirements(r, catalog(), test::load_fixture("valley33"));
  EXPECT_FALSE(vs.empty());
  EXPECT_NE(vs[0].invariant.find("unknown district 'atlantis'"), std::string::npos);
}

TEST(Catalog, DistrictsMatchCases) {
  for (const auto& d : catalog().districts()) {
    const auto c = load_case_file(catalog().source_dir() + "/" + d.case_path);
    EXPECT_EQ(c.district_id, d.id);
    EXPECT_EQ(c.installed_equipment(), d.equipment) << d.id;
  }
}
