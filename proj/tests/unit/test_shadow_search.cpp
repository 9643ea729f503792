#include <cmath>

#include <gtest/gtest.h>

#include "shadowlab/errors.hpp"
#include "shadowlab/shadow_search.hpp"

using namespace shadowlab;

namespace {

FreeSpaceGrid filled(std::size_t rows, std::size_t cols, bool value) {
  FreeSpaceGrid g;
  g.xi_times.assign(rows, 0.0);
  g.orbit_times.assign(cols, 0.0);
  g.dist.assign(rows * cols, 0.0);
  g.cells.assign(rows * cols, value ? 1 : 0);
  return g;
}

// Holds the angle fixed by undoing the flow at every step.
StepPseudotrajectory paused_chain(const FlowPtr& ns, double theta, double d) {
  auto hold = [&](long, const Point& p, Rng&) { return ns->chart_delta(p, Point{theta}); };
  return build_chain(ns, Point{theta}, d, 0.25, -20, 20, hold, hold, 1);
}

}  // namespace

TEST(FreeSpace, TrueOrbitDiagonal) {
  const auto disk = build_disk_flow();
  const Point x = polar_point(0.7, 0.2);
  const auto xi = generate_pt(disk, x, 1e-14, 0.5, -4, 4, 1);
  const auto g = build_free_space(xi, x, 0.01, 0.25, 0.25, -1.0, 1.0, -1.0, 1.0);
  ASSERT_EQ(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) EXPECT_TRUE(g.free(i, i));
  const auto none = build_free_space(xi, x, 0.0, 0.25, 0.25, -1.0, 1.0, -1.0, 1.0);
  for (auto c : none.cells) EXPECT_EQ(c, 0);
}

TEST(FreeSpace, RadialGapBlocksEverything) {
  const auto disk = build_disk_flow();
  const auto xi = generate_pt(disk, polar_point(1.0, 0.0), 1e-14, 0.5, -4, 4, 1);
  const auto g = build_free_space(xi, polar_point(0.5, 0.0), 0.499, 0.25, 0.125, -2, 2, -3, 3);
  for (auto c : g.cells) EXPECT_EQ(c, 0);
}

TEST(PathDecision, SmallCases) {
  EXPECT_TRUE(dp_path_exists(filled(3, 3, true), {0, 2}));
  EXPECT_TRUE(brute_oracle(filled(3, 3, true), {0, 2}));
  auto g = filled(4, 4, true);
  for (std::size_t j = 0; j < 4; ++j) g.cells[2 * 4 + j] = 0;  // blocked time row
  EXPECT_FALSE(dp_path_exists(g, {0, 3}));
  EXPECT_FALSE(brute_oracle(g, {0, 3}));
  EXPECT_THROW(brute_oracle(filled(13, 4, true), {0, 1}), Error);
}

TEST(PathDecision, DpMatchesOracleOnRandomGrids) {
  Rng rng(11);
  int disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_free_space(8, 8, 0.45 + 0.3 * rng.uniform(), rng);
    for (AdvanceRange r : {AdvanceRange{0, 3}, AdvanceRange{1, 2}})
      disagreements += dp_path_exists(g, r) != brute_oracle(g, r);
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(BottleneckPath, ReportsMaxCell) {
  const auto r = bottleneck_path(
      3, 3, [](std::size_t i, std::size_t j) { return i == j ? 0.1 * double(i + 1) : 1.0; }, 0.5,
      {1, 1}, 1);
  ASSERT_TRUE(r.found);
  EXPECT_DOUBLE_EQ(r.bottleneck, 0.3);
  EXPECT_EQ(r.columns, (std::vector<long>{0, 1, 2}));
}

TEST(SearchOriented, TrueOrbitGivesIdentity) {
  const auto disk = build_disk_flow();
  const Point x = polar_point(0.7, 0.2);
  const auto xi = generate_pt(disk, x, 1e-14, 0.25, -20, 20, 1);
  const auto cert = search_oriented(xi, 0.05, {x});
  ASSERT_TRUE(cert.has_value());
  EXPECT_LE(cert->sup_error, 1e-6);
  for (double t : {-3.0, 0.0, 2.0}) EXPECT_NEAR(cert->h(t), t, 1e-6);
  EXPECT_TRUE(verify_certificate(xi, *cert).ok());
}

TEST(SearchOriented, CrossingTowardAttractingCircle) {
  const auto disk = build_disk_flow();
  const double d = 0.02;
  auto outward = [&](long, const Point& p, Rng& rng) {
    const double r = radius_of(p);
    const double step = 0.9 * d * rng.uniform();
    return std::vector<double>{step * p[0] / r, step * p[1] / r};
  };
  auto none = [](long, const Point&, Rng&) { return std::vector<double>{0.0, 0.0}; };
  const auto xi = build_chain(disk, polar_point(0.38, 0.0), d, 0.25, -20, 20, outward, none, 2);
  SearchParams sp;
  const auto cert = search_oriented(xi, 0.2, default_candidates(xi, 0.2, sp), sp);
  ASSERT_TRUE(cert.has_value());
  EXPECT_LT(cert->sup_error, 0.2);
  EXPECT_TRUE(verify_certificate(xi, *cert).ok());
}

TEST(SearchStandard, TrueOrbitIdentity) {
  const auto ns = build_north_south_circle();
  const auto xi = generate_pt(ns, Point{2.0}, 1e-14, 0.25, -20, 20, 1);
  const auto cert = search_standard(xi, 0.05, 0.2, {Point{2.0}});
  ASSERT_TRUE(cert.has_value());
  for (double t : {-3.0, 0.0, 2.0}) EXPECT_NEAR(cert->h(t), t, 1e-6);
  EXPECT_TRUE(verify_rep_eps(cert->h, 0.2, xi.t_lo(), xi.t_hi()).ok);
}

TEST(SearchStandard, LongPauseRejected) {
  const auto ns = build_north_south_circle();
  const auto xi = paused_chain(ns, 0.2, 0.06);
  SearchParams sp;
  const auto cands = default_candidates(xi, 0.03, sp);
  EXPECT_TRUE(search_oriented(xi, 0.03, cands, sp).has_value());
  EXPECT_FALSE(search_standard(xi, 0.03, 0.2, cands, sp).has_value());
}

TEST(SearchStandard, EmptyAdvanceRange) {
  const auto ns = build_north_south_circle();
  const auto xi = generate_pt(ns, Point{2.0}, 1e-14, 0.25, -4, 4, 1);
  SearchParams sp;
  sp.dt = 0.125;
  sp.ds = 0.1;
  try {
    search_standard(xi, 0.05, 0.1, {Point{2.0}}, sp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::grid);
  }
}

TEST(Certificate, JsonRoundTripAndTamper) {
  const auto ns = build_north_south_circle();
  const auto xi = generate_pt(ns, Point{2.0}, 0.01, 0.25, -20, 20, 3);
  SearchParams sp;
  const auto cert = search_oriented(xi, 0.1, default_candidates(xi, 0.1, sp), sp);
  ASSERT_TRUE(cert.has_value());
  auto back = ShadowingCertificate::from_json(cert->to_json());
  EXPECT_TRUE(verify_certificate(xi, back).ok());
  EXPECT_EQ(back.h.knots().size(), cert->h.knots().size());
  back.x = Point{back.x[0] + 0.5};
  EXPECT_FALSE(verify_certificate(xi, back).ok());
}
