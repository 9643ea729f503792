#include <numbers>

#include <gtest/gtest.h>

#include "shadowlab/glue.hpp"
#include "shadowlab/singularities.hpp"

using namespace shadowlab;

namespace {
constexpr double kPi = std::numbers::pi;
const std::vector<double> kRadii{0.5, 0.25, 0.1};
}  // namespace

TEST(Classify, NorthSouthPoles) {
  const auto ns = build_north_south_circle();
  const auto south = classify_singularity(*ns, Point{0.0}, kRadii);
  EXPECT_EQ(south.stable.verdict, Verdict::holds);
  EXPECT_EQ(south.unstable.verdict, Verdict::fails);
  EXPECT_TRUE(south.unstable.escape_start.has_value());
  const auto north = classify_singularity(*ns, Point{kPi}, kRadii);
  EXPECT_EQ(north.stable.verdict, Verdict::fails);
  EXPECT_EQ(north.unstable.verdict, Verdict::holds);
}

TEST(Classify, DiskOriginBothWays) {
  const auto disk = build_disk_flow();
  const auto r = classify_singularity(*disk, Point{0.0, 0.0}, kRadii);
  EXPECT_EQ(r.stable.verdict, Verdict::holds);
  EXPECT_EQ(r.unstable.verdict, Verdict::holds);
  ASSERT_FALSE(r.stable.pairs.empty());
  for (const auto& w : r.stable.pairs) {
    EXPECT_GT(w.U, 0.0);
    EXPECT_LT(w.U, w.V);
  }
  EXPECT_TRUE(r.to_json().contains("stable"));
}

TEST(Reach, ShrinksWithDefect) {
  const auto disk = build_disk_flow();
  const auto coarse = reachable_set(*disk, Point{0.0, 0.0}, 1.0 / 8, Direction::forward);
  const auto fine = reachable_set(*disk, Point{0.0, 0.0}, 1.0 / 32, Direction::forward);
  EXPECT_LT(fine.diameter, coarse.diameter);
  EXPECT_TRUE(fine.closed);
}

TEST(Reach, AttractorAbsorbsSmallChains) {
  const auto ns = build_north_south_circle();
  const double d = 0.01;
  const auto r = reachable_set(*ns, Point{0.0}, d, Direction::forward);
  double far = 0.0;
  bool has_p = false;
  for (const auto& q : r.points) {
    far = std::max(far, ns->distance(q, Point{0.0}));
    has_p = has_p || ns->distance(q, Point{0.0}) <= r.cell;
  }
  EXPECT_TRUE(has_p);
  EXPECT_LT(far, 5.0 * d);
}

TEST(Reach, WitnessChainsAreValid) {
  const auto ns = build_north_south_circle();
  const double d = 0.05;
  const auto r = reachable_set(*ns, Point{kPi}, d, Direction::forward);
  ASSERT_GT(r.points.size(), 1u);
  const auto chain = r.witness(r.points.size() - 1);
  for (std::size_t i = 1; i < chain.size(); ++i)
    EXPECT_LT(ns->distance(ns->evaluate(1.0, chain[i - 1]), chain[i]), d);
}

TEST(Visits, CircleOrbitMissesOrigin) {
  const auto disk = build_disk_flow();
  const auto xi = generate_pt(disk, polar_point(1.0, 0.0), 1e-12, 0.5, -10, 10, 1);
  EXPECT_TRUE(visited_singularities(xi, {0.1}).empty());
}

TEST(Visits, EntryTime) {
  const auto disk = build_disk_flow();
  StepPseudotrajectory xi;
  xi.flow = disk;
  xi.T0 = 0.5;
  xi.n_min = 0;
  xi.n_max = 12;
  for (long n = 0; n <= 12; ++n) xi.anchors.push_back(polar_point(n < 6 ? 0.6 : 0.01, 0.0));
  xi.defect = 0.6;
  const auto v = visited_singularities(xi, {0.05});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(radius_of(v[0].point), 0.0);
  EXPECT_LE(v[0].first_entry, 3.0);
}

TEST(Visits, ProductSecondFactorCrossing) {
  const auto prod = build_product_flow(build_disk_flow(), build_north_south_circle());
  const auto xi = product_scenario(prod, 2, 2, 0.002, ScenarioWindow{}, 3);
  const auto second = factor_chain(xi, 1);
  const auto v = visited_singularities(second, {0.3, 0.3});
  ASSERT_EQ(v.size(), 2u);
  std::vector<double> poles;
  for (const auto& s : v) poles.push_back(s.point[0]);
  std::sort(poles.begin(), poles.end());
  EXPECT_NEAR(poles[0], 0.0, 1e-12);
  EXPECT_NEAR(poles[1], kPi, 1e-12);
}

TEST(Trapping, NorthSouthSink) {
  const auto ns = build_north_south_circle();
  const auto fwd = probe_trapping(ns, Point{0.0}, 0.05, 0.2, 0.005, 0.25, 20.0,
                                  Direction::forward, 1);
  EXPECT_TRUE(fwd.trapped);
  const auto bwd = probe_trapping(ns, Point{0.0}, 0.05, 0.2, 0.005, 0.25, 20.0,
                                  Direction::backward, 1);
  EXPECT_FALSE(bwd.trapped);
}

TEST(BallOffsets, InsideBall) {
  const auto prod = build_product_flow(build_disk_flow(), build_north_south_circle());
  const auto offs = ball_offsets(*prod, 0.1);
  ASSERT_FALSE(offs.empty());
  for (const auto& v : offs) {
    ASSERT_EQ(v.size(), 3u);
    EXPECT_LT(std::hypot(v[0], v[1]), 0.1);
    EXPECT_LT(std::abs(v[2]), 0.1);
  }
}
