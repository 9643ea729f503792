#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "shadowlab/errors.hpp"
#include "shadowlab/glue.hpp"

using namespace shadowlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct DiskSetup {
  FlowPtr disk = build_disk_flow();
  ConstantsBundle consts;
  Theorem1Params params;
};

const DiskSetup& disk_setup() {
  static const DiskSetup s = [] {
    DiskSetup s;
    const auto trap = estimate_trap_radius(s.disk, 0, 0.3 / 4, 0.01, 0.25, 1);
    ConstantsOptions o;
    o.T0 = 0.25;
    o.T0_margin = 1e-6;
    s.consts = estimate_constants(*s.disk, trap.U / 3, 0.25, o);
    s.params.search.s_window = 30;
    s.params.search.dp_eps = 0.08;
    return s;
  }();
  return s;
}

struct ProductSetup {
  FlowPtr disk = build_disk_flow();
  FlowPtr ns = build_north_south_circle();
  FlowPtr prod = build_product_flow(disk, ns);
  ProductConstants pc;
  ConstantsBundle consts1;
  Theorem2Params params;
};

const ProductSetup& product_setup() {
  static const ProductSetup s = [] {
    ProductSetup s;
    s.pc = estimate_product_constants(*s.ns, 0.05, 0.3, 0.3, 0.04);
    ConstantsOptions o;
    o.T0 = 0.25;
    s.consts1 = estimate_constants(*s.disk, 0.3, s.pc.eps_mid, o);
    s.params.search.s_window = 30;
    s.params.search.dp_eps = 0.08;
    return s;
  }();
  return s;
}

Theorem1Outcome run_disk(int case_id, double d, std::uint64_t seed) {
  const auto& s = disk_setup();
  auto make = [&](double dd) { return disk_scenario(s.disk, case_id, dd, ScenarioWindow{}, seed); };
  return theorem1_trial(make, d, s.consts, s.params, seed);
}

}  // namespace

TEST(ClassifyCase, InvariantCircleIsCaseOne) {
  const auto disk = build_disk_flow();
  const auto xi = generate_pt(disk, polar_point(1.0, 0.0), 1e-12, 0.25, -40, 40, 1);
  const auto c = classify_case(xi, {0.05}, {0.075}, xi.t_lo(), xi.t_hi());
  EXPECT_EQ(c.case_id, 1);
  EXPECT_FALSE(c.stable_hit.has_value());
  EXPECT_FALSE(c.unstable_hit.has_value());
}

TEST(ClassifyCase, ScenariosHitTheirCase) {
  const auto disk = build_disk_flow();
  for (int cs : {2, 3, 4}) {
    const auto xi = disk_scenario(disk, cs, 0.01, ScenarioWindow{}, 3);
    // Hit radius 2 r0 with r0 = U / 3, as in the pipeline.
    const auto c = classify_case(xi, {0.025}, {0.075}, xi.t_lo(), xi.t_hi());
    EXPECT_EQ(c.case_id, cs);
  }
}

TEST(TrapRadius, DiskOrigin) {
  const auto disk = build_disk_flow();
  const auto t = estimate_trap_radius(disk, 0, 0.075, 0.01, 0.25, 1);
  EXPECT_GT(t.U, 0.0);
  EXPECT_LT(t.U, 0.075);
}

TEST(Theorem1, TrueOrbitGivesIdentity) {
  const auto& s = disk_setup();
  auto make = [&](double dd) {
    return generate_pt(s.disk, polar_point(0.7, 0.0), dd, 0.25, -40, 40, 1);
  };
  const auto out = theorem1_trial(make, 1e-12, s.consts, s.params, 1);
  EXPECT_EQ(out.case_id, 1);
  ASSERT_TRUE(out.oriented_ok && out.standard_ok);
  for (double t : {-5.0, 0.0, 5.0}) EXPECT_NEAR(out.standard->h(t), t, 1e-3);
}

TEST(Theorem1, SpiralIntoOrigin) {
  const auto out = run_disk(2, 0.01, 2);
  EXPECT_EQ(out.case_id, 2);
  ASSERT_TRUE(out.oriented_ok);
  EXPECT_TRUE(out.standard_ok);
  EXPECT_LT(out.sup_error, 0.3);
}

TEST(Theorem1, BothRolesSplice) {
  const auto out = run_disk(4, 0.01, 3);
  EXPECT_EQ(out.case_id, 4);
  ASSERT_TRUE(out.oriented_ok);
  EXPECT_TRUE(out.standard_ok);
  EXPECT_FALSE(out.counterexample());
  const auto j = out.to_json();
  EXPECT_EQ(j.at("case_id"), 4);
}

TEST(ProductConstants, NorthSouthValues) {
  const auto& pc = product_setup().pc;
  EXPECT_NEAR(pc.S0, 5.5, 1e-9);
  EXPECT_NEAR(pc.tau0, 0.0718, 5e-4);
  EXPECT_NEAR(pc.eps_mid, pc.tau0 / (2 * pc.S0), 1e-15);
  EXPECT_LE(pc.eps_mid, std::min({0.05, 0.3, 0.04, 0.3 / 4}));
}

TEST(FactorChain, Components) {
  const auto& s = product_setup();
  const auto xi = product_scenario(s.prod, 1, 0, 0.002, ScenarioWindow{}, 1);
  const auto a = factor_chain(xi, 0);
  const auto b = factor_chain(xi, 1);
  EXPECT_EQ(a.flow->space(), SpaceKind::disk);
  EXPECT_EQ(b.flow->space(), SpaceKind::circle);
  for (double t : {-3.0, 0.1, 4.0}) {
    const Point p = xi.at(t);
    EXPECT_NEAR(a.at(t)[0], p[0], 1e-12);
    EXPECT_NEAR(b.at(t)[0], p[2], 1e-12);
  }
}

TEST(Theorem2, TrueProductOrbit) {
  const auto& s = product_setup();
  auto make = [&](double dd) {
    return generate_pt(s.prod, Point{0.7, 0.0, 1.0}, dd, 0.25, -40, 40, 1);
  };
  const auto out = theorem2_trial(make, 1e-12, s.consts1, s.pc, s.params, 1);
  ASSERT_TRUE(out.ok);
  ASSERT_TRUE(out.certificate.has_value());
  EXPECT_LT(out.sup_error, 1e-3);
  for (double t : {-5.0, 0.0, 5.0}) EXPECT_NEAR(out.certificate->h(t), t, 1e-2);
}

TEST(Theorem2, CaseOneScenario) {
  const auto& s = product_setup();
  auto make = [&](double dd) { return product_scenario(s.prod, 1, 0, dd, ScenarioWindow{}, 2); };
  const auto out = theorem2_trial(make, 0.002, s.consts1, s.pc, s.params, 2);
  EXPECT_EQ(out.case_id, 1);
  EXPECT_TRUE(out.ok);
  EXPECT_LT(out.sup_error, 0.3);
}

TEST(Theorem2, CaseTwoCrossingMiddlePiece) {
  const auto& s = product_setup();
  auto make = [&](double dd) { return product_scenario(s.prod, 2, 2, dd, ScenarioWindow{}, 2); };
  const auto out = theorem2_trial(make, 0.002, s.consts1, s.pc, s.params, 2);
  EXPECT_EQ(out.case_id, 2);
  EXPECT_EQ(out.subcase, 2);
  EXPECT_TRUE(out.ok);
  EXPECT_TRUE(out.middle_ok);
}

TEST(Scenarios, Deterministic) {
  const auto disk = build_disk_flow();
  const auto a = disk_scenario(disk, 4, 0.01, ScenarioWindow{}, 9);
  const auto b = disk_scenario(disk, 4, 0.01, ScenarioWindow{}, 9);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_LT(a.anchor_defect(), 0.01);
}

TEST(Scenarios, RadialGapChain) {
  const auto disk = build_disk_flow();
  const auto xi = radial_gap_chain(disk, 0.1, ScenarioWindow{});
  double lo = 1.0, hi = 0.0;
  for (const auto& p : xi.anchors) {
    lo = std::min(lo, radius_of(p));
    hi = std::max(hi, radius_of(p));
  }
  EXPECT_LE(lo, 0.5 + 1e-9);
  EXPECT_NEAR(hi, 1.0, 1e-9);
  EXPECT_LT(xi.anchor_defect(), xi.defect);
  EXPECT_GE(xi.anchor_defect(), 0.1 - kTolFlow);
}

TEST(Scenarios, CircleChain) {
  const auto ns = build_north_south_circle();
  const auto xi = circle_scenario(ns, 0.01, ScenarioWindow{}, 4);
  EXPECT_LT(xi.anchor_defect(), 0.01);
  for (const auto& p : xi.anchors) EXPECT_TRUE(ns->contains(p));
  (void)kPi;
}
