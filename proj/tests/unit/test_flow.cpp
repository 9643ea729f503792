#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "shadowlab/errors.hpp"
#include "shadowlab/flow.hpp"

using namespace shadowlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent evaluation of the three-piece map and the radial map.
double f0_ref(double u) {
  if (u <= -1.0 / 3.0) return -1.0 + (u + 1.0) / 2.0;
  if (u <= 1.0 / 3.0) return 2.0 * u;
  return 1.0 + (u - 1.0) / 2.0;
}

double f_ref(double x) {
  if (x == 0.0) return 0.0;
  int n = 0;
  while (x <= std::ldexp(1.0, -(n + 1))) ++n;
  const double s = std::ldexp(1.0, -(n + 2));
  return s * f0_ref((x - 3.0 * s) / s) + 3.0 * s;
}

// RK4 for theta' = -sin(theta).
double ns_ref(double theta, double t) {
  const int steps = 20000;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = -std::sin(theta);
    const double k2 = -std::sin(theta + 0.5 * h * k1);
    const double k3 = -std::sin(theta + 0.5 * h * k2);
    const double k4 = -std::sin(theta + h * k3);
    theta += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
  }
  return theta;
}

double wrap(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

}  // namespace

TEST(RadialMap, FixedValues) {
  EXPECT_EQ(time_one_map_radial(0.0), 0.0);
  EXPECT_NEAR(time_one_map_radial(0.5), 0.5, 1e-15);
  EXPECT_NEAR(time_one_map_radial(0.375), 0.375, 1e-15);
  EXPECT_NEAR(time_one_map_radial(1.0), 1.0, 1e-15);
  // 0.3 lies in (1/4, 1/2]: 1/8 * f0(-0.6) + 3/8 = 0.275, which is below 0.3.
  EXPECT_NEAR(time_one_map_radial(0.3), 0.275, 1e-15);
}

TEST(RadialMap, MatchesReferenceOnGrid) {
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    EXPECT_NEAR(time_one_map_radial(x), f_ref(x), 1e-12) << x;
    EXPECT_NEAR(time_one_map_radial_inverse(time_one_map_radial(x)), x, 1e-12) << x;
  }
}

TEST(RadialMap, ThreePieceMap) {
  for (double u : {-1.0, -0.6, -1.0 / 3.0, 0.0, 0.2, 0.5, 1.0}) {
    EXPECT_NEAR(remark_f0(u), f0_ref(u), 1e-15);
    EXPECT_NEAR(remark_f0_inverse(remark_f0(u)), u, 1e-15);
  }
}

TEST(FlowLaws, IdentityAtTimeZero) {
  for (const auto& flow : {build_disk_flow(), build_north_south_circle(),
                           build_radial_interval_flow()}) {
    for (const auto& x : flow->cover(0.2)) {
      const Point y = flow->evaluate(0.0, x);
      EXPECT_LT(flow->distance(x, y), kTolFlow);
    }
  }
}

TEST(FlowLaws, GroupLaw) {
  const auto disk = build_disk_flow();
  for (const auto& x : disk->cover(0.25)) {
    const Point a = disk->evaluate(0.7, disk->evaluate(-1.9, x));
    const Point b = disk->evaluate(-1.2, x);
    EXPECT_LT(disk->distance(a, b), 1e-9);
  }
}

TEST(IntervalSuspension, TimeOneIsTheMap) {
  const auto flow = build_radial_interval_flow();
  for (double x : {0.3, 0.6, 0.7, 0.9}) {
    EXPECT_NEAR(flow->evaluate(1.0, Point{x})[0], f_ref(x), 1e-9);
    const Point half = flow->evaluate(0.5, flow->evaluate(0.5, Point{x}));
    EXPECT_NEAR(half[0], f_ref(x), kTolFlow);
  }
  for (double p : {0.0, 0.25, 0.375, 0.5, 0.75, 1.0})
    EXPECT_NEAR(flow->evaluate(3.3, Point{p})[0], p, 1e-12);
}

TEST(IntervalSuspension, PiecewiseLinearMap) {
  auto map = piecewise_linear_map({{0, 0}, {0.5, 0.3}, {1, 1}});
  const auto fwd = map.forward;
  const auto flow = build_interval_suspension(std::move(map));
  for (double x : {0.3, 0.6, 0.9}) EXPECT_NEAR(flow->evaluate(1.0, Point{x})[0], fwd(x), 1e-9);
}

TEST(DiskFlow, OriginFixed) {
  const auto disk = build_disk_flow();
  for (double t : {-3.0, 0.5, 7.0}) {
    const Point y = disk->evaluate(t, Point{0.0, 0.0});
    EXPECT_EQ(radius_of(y), 0.0);
  }
}

TEST(DiskFlow, RadialComponentIsTheMap) {
  const auto disk = build_disk_flow();
  for (double theta : {0.0, 1.0, 4.0}) {
    const Point y = disk->evaluate(1.0, polar_point(0.7, theta));
    EXPECT_NEAR(radius_of(y), time_one_map_radial(0.7), 1e-9);
    EXPECT_NEAR(radial_flow(1.0, 0.7), time_one_map_radial(0.7), 1e-12);
  }
}

TEST(DiskFlow, InvariantCircles) {
  const auto disk = build_disk_flow();
  for (int n = 0; n <= 2; ++n) {
    for (double r : {std::ldexp(1.0, -n), 3.0 * std::ldexp(1.0, -(n + 2))}) {
      for (double t : {-2.5, 0.3, 4.0})
        EXPECT_NEAR(radius_of(disk->evaluate(t, polar_point(r, 0.4))), r, 1e-12);
    }
  }
}

TEST(DiskFlow, OrbitSegmentOnUnitCircle) {
  const auto disk = build_disk_flow();
  const auto seg = orbit_segment(*disk, polar_point(1.0, 0.0), 0.0, 1.0, 0.25);
  ASSERT_EQ(seg.points.size(), 5u);
  for (const auto& p : seg.points) EXPECT_NEAR(radius_of(p), 1.0, 1e-12);
  const auto two = orbit_segment(*disk, polar_point(0.6, 0.0), 0.0, 0.1, 0.1);
  ASSERT_EQ(two.points.size(), 2u);
  EXPECT_LT(disk->distance(two.points[0], polar_point(0.6, 0.0)), 1e-15);
}

TEST(NorthSouth, AgainstReferenceIntegrator) {
  const auto ns = build_north_south_circle();
  for (double th : {0.1, 1.0, 2.5, 4.0, 6.0}) {
    for (double t : {-2.0, 0.5, 3.0}) {
      const double got = ns->evaluate(t, Point{th})[0];
      EXPECT_LT(ns->distance(Point{got}, Point{wrap(ns_ref(th, t))}), 1e-9) << th << " " << t;
    }
  }
  EXPECT_NEAR(ns->evaluate(5.0, Point{kPi})[0], kPi, 1e-12);
  EXPECT_LT(ns->distance(ns->evaluate(10.0, Point{0.1}), Point{0.0}), 1e-3);
  EXPECT_LT(ns->distance(ns->evaluate(-10.0, Point{kPi - 0.1}), Point{kPi}), 1e-3);
  EXPECT_LT(ns->distance(ns->evaluate(50.0, Point{2.0}), Point{0.0}), 1e-3);
}

TEST(NorthSouth, ArcLengthMetric) {
  const auto ns = build_north_south_circle();
  EXPECT_NEAR(ns->distance(Point{0.1}, Point{2 * kPi - 0.1}), 0.2, 1e-12);
  EXPECT_NEAR(ns->distance(Point{0.0}, Point{kPi}), kPi, 1e-12);
}

TEST(Product, ComponentwiseAndMaxMetric) {
  const auto disk = build_disk_flow();
  const auto ns = build_north_south_circle();
  const auto prod = build_product_flow(disk, ns);
  const Point a{0.5, 0.1, 1.0};
  const Point y = prod->evaluate(1.3, a);
  const Point y1 = disk->evaluate(1.3, Point{0.5, 0.1});
  const Point y2 = ns->evaluate(1.3, Point{1.0});
  EXPECT_LT(disk->distance(y.slice(0, 2), y1), 1e-15);
  EXPECT_LT(ns->distance(y.slice(2, 1), y2), 1e-15);
  EXPECT_NEAR(prod->distance(Point{0.5, 0.1, 1.0}, Point{0.5, 0.1, 1.7}), 0.7, 1e-12);
  const auto [f1, f2] = product_factors(*prod);
  EXPECT_EQ(f1->space(), SpaceKind::disk);
  EXPECT_EQ(f2->space(), SpaceKind::circle);
}

TEST(Reversed, SwapsTime) {
  const auto ns = build_north_south_circle();
  const auto rev = build_reversed_flow(ns);
  EXPECT_NEAR(rev->evaluate(2.0, Point{1.0})[0], ns->evaluate(-2.0, Point{1.0})[0], 1e-15);
}

TEST(Descriptor, RoundTrip) {
  const auto prod = build_product_flow(build_disk_flow(), build_north_south_circle());
  const auto back = flow_from_json(prod->descriptor());
  const Point a{0.3, -0.2, 2.0};
  EXPECT_LT(prod->distance(prod->evaluate(0.8, a), back->evaluate(0.8, a)), 1e-15);
}

TEST(Domain, OutsideSpaceThrows) {
  const auto disk = build_disk_flow();
  try {
    disk->evaluate(1.0, Point{1.5, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  EXPECT_THROW(flow_from_json({{"kind", "torus"}}), Error);
}
