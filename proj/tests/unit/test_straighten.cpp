#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "shadowlab/errors.hpp"
#include "shadowlab/glue.hpp"
#include "shadowlab/shadow_search.hpp"
#include "shadowlab/straighten.hpp"

using namespace shadowlab;

namespace {

constexpr double kPi = std::numbers::pi;

const ConstantsBundle& disk_consts() {
  static const ConstantsBundle c = [] {
    ConstantsOptions o;
    o.T0 = 0.25;
    return estimate_constants(*build_disk_flow(), 0.3, 0.25, o);
  }();
  return c;
}

CompactRegion ns_region() {
  const auto ns = build_north_south_circle();
  return make_region(*ns, {Point{0.0}, Point{kPi}}, {0.3, 0.3}, 0.01);
}

}  // namespace

TEST(EstimateT0, NorthSouth) {
  const auto ns = build_north_south_circle();
  EXPECT_GE(estimate_T0(*ns, ns_region(), 0.01), 0.1);
}

TEST(EstimateT0, DiskAnnulus) {
  const auto disk = build_disk_flow();
  const auto K = make_region(*disk, {Point{0.0, 0.0}}, {0.3}, 0.05);
  const double T0 = estimate_T0(*disk, K, 0.01);
  EXPECT_GT(T0, 0.0);
  EXPECT_TRUE(check_T0(*disk, K, T0, 0.01));
}

TEST(EstimateT0, RestPointInRegion) {
  const auto ns = build_north_south_circle();
  const auto K = make_region(*ns, {Point{kPi}}, {0.3}, 0.05);
  try {
    estimate_T0(*ns, K, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::region);
  }
}

TEST(EstimateDelta, FinerGridFindsNoViolation) {
  const auto ns = build_north_south_circle();
  const auto K = ns_region();
  const double T0 = 0.5, eps_time = 0.05;
  const double delta = estimate_delta(*ns, K, T0, eps_time);
  ASSERT_GT(delta, 0.0);
  for (const auto& x : K.samples) {
    for (int k = 0; k <= 16; ++k) {
      const double s = T0 * k / 16.0;
      for (double t = s + eps_time; t <= T0 + 1e-12; t += eps_time / 8.0)
        ASSERT_GE(ns->distance(ns->advance(t, x), ns->advance(s, x)), delta);
    }
  }
  EXPECT_THROW(estimate_delta(*ns, K, T0, T0), Error);
}

TEST(EstimateDelta, DiskChordBound) {
  const auto disk = build_disk_flow();
  const auto K = make_region(*disk, {Point{0.0, 0.0}}, {0.3}, 0.05);
  const double eps_time = 0.05;
  const double delta = estimate_delta(*disk, K, 0.25, eps_time);
  const double chord = 2.0 * 0.3 * std::sin(kPi * eps_time);
  EXPECT_GT(delta, 0.5 * (1.0 - kDeltaSafety) * chord);
  EXPECT_LT(delta, 1.5 * (1.0 - kDeltaSafety) * chord);
}

TEST(EstimateRho, Bounds) {
  const auto disk = build_disk_flow();
  const auto K = make_region(*disk, {Point{0.0, 0.0}}, {0.3}, 0.05);
  const double rho = estimate_rho(*disk, K, 0.1);
  EXPECT_LE(rho, 0.5 * disk->diameter());
  // Points of K have r >= 0.3 and drift inward to at least radial_flow(0.1, 0.3) while
  // turning by 0.2 pi, so the displacement is at least that chord.
  const double chord = 2.0 * radial_flow(0.1, 0.3) * std::sin(0.1 * kPi);
  EXPECT_GE(rho, 0.5 * (1.0 - kDeltaSafety) * chord);
  Rng rng(5);
  int checked = 0;
  while (checked < 1000) {
    const Point x = polar_point(rng.uniform(0.3, 1.0), rng.uniform(0.0, 2 * kPi));
    if (!K.contains(*disk, x)) continue;
    ++checked;
    EXPECT_GE(disk->distance(disk->advance(0.1, x), x), 2.0 * rho);
  }
}

TEST(EpsPrime, BoundsAndMonotone) {
  const auto& c = disk_consts();
  EXPECT_LE(c.eps_prime, c.eps / 4.0);
  EXPECT_LE(c.eps1, c.eps_prime);
  const auto disk = build_disk_flow();
  double prev = HUGE_VAL;
  for (double eps : {0.4, 0.25, 0.1, 0.05}) {
    const double e = estimate_eps_prime(*disk, c.Khat, eps, c.T, c.T0);
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST(EpsPrime, RandomizedContract) {
  const auto& c = disk_consts();
  const auto chk = check_eps_prime_contract(*build_disk_flow(), c.Khat, c.eps, c.eps_prime, c.T,
                                            1000, 17);
  EXPECT_EQ(chk.trials, 1000u);
  EXPECT_GT(chk.matched, 50u);
  EXPECT_EQ(chk.violations, 0u);
}

TEST(Eps1, LongerWindowNeverLarger) {
  const auto& c = disk_consts();
  const auto disk = build_disk_flow();
  EXPECT_LE(estimate_eps1(*disk, c.Ktilde, c.eps_prime, 2 * c.T),
            estimate_eps1(*disk, c.Ktilde, c.eps_prime, c.T));
}

TEST(ChooseT, GridInequality) {
  const auto& c = disk_consts();
  EXPECT_TRUE(grid_inequality_holds(c.eps, c.T, c.T0));
  EXPECT_NEAR(c.T0 / c.T, std::round(c.T0 / c.T), 1e-9);
  EXPECT_FALSE(grid_inequality_holds(0.25, c.T0 / 2, c.T0));
}

TEST(Constants, JsonRoundTrip) {
  const auto& c = disk_consts();
  const auto back = ConstantsBundle::from_json(*build_disk_flow(), c.to_json());
  EXPECT_EQ(back.T, c.T);
  EXPECT_EQ(back.eps1, c.eps1);
  EXPECT_EQ(back.K.samples.size(), c.K.samples.size());
}

TEST(Straighten, IdentityOnTrueOrbit) {
  const auto disk = build_disk_flow();
  const Point y = polar_point(0.7, 0.0);
  const auto xi = generate_pt(disk, y, 1e-14, 0.25, 0, 40, 1);
  const auto r = straighten(xi, 0.0, 8.0, Reparam{}, y, 0.25, disk_consts());
  EXPECT_TRUE(r.p1 && r.p2 && r.p3);
  for (double t : {0.0, 1.3, 4.0, 8.0}) EXPECT_NEAR(r.g_tilde(t), t, 1e-9);
}

TEST(Straighten, OrientedMatchOnAnnulus) {
  const auto disk = build_disk_flow();
  const auto& c = disk_consts();
  const auto xi = generate_pt(disk, polar_point(0.65, 0.3), 0.01, 0.25, -40, 40, 1);
  SearchParams p;
  p.s_window = 30;
  p.dp_eps = 0.15;
  const auto cert = search_oriented(xi, 0.05, default_candidates(xi, 0.05, p), p);
  ASSERT_TRUE(cert.has_value());
  const auto r = straighten_absolute(xi, cert->x, cert->h, -9, 9, 0.25, c);
  const auto& d = r.detail;
  EXPECT_TRUE(d.p1 && d.p2 && d.p3);
  for (double q : d.block_ratios) EXPECT_LE(std::abs(q - 1.0), 0.25 / 4.0);
  EXPECT_LT(d.sup_h_ghat, 2.0 * c.T);
  EXPECT_LE(d.sup_gtilde_h, 2.0 * c.T);
  const double hi = (1 + 0.25 / 4) * (1 + 2 * c.T / c.T0) / (1 - 0.25 / 4);
  EXPECT_LE(d.scale, hi);
  EXPECT_GE(d.scale, 1.0 / hi);
  EXPECT_EQ(r.H(-9.0), cert->h(-9.0));
  EXPECT_EQ(r.H(9.0), cert->h(9.0));
  EXPECT_LT(sup_distance(xi, cert->x, r.H, -9, 9, 0.03125), 0.25);
}

TEST(Straighten, BadMatchIsPreconditionError) {
  const auto disk = build_disk_flow();
  const Point y = polar_point(0.7, 0.0);
  const auto xi = generate_pt(disk, y, 1e-14, 0.25, 0, 40, 1);
  try {
    straighten(xi, 0.0, 8.0, shifted(Reparam{}, 0.0, 0.2), y, 0.25, disk_consts());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
}
