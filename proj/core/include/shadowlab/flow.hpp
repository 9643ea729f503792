#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shadowlab/point.hpp"

namespace shadowlab {

using json = nlohmann::json;

/// Identity/group-law tolerance for the exact constructions in this file.
inline constexpr double kTolFlow = 1e-9;

/// Chart bound past which the conjugating coordinate is treated as having
/// reached the limiting fixed point.
inline constexpr double kChartBound = 1e3;

enum class SpaceKind { interval, disk, circle, product };

struct Stability {
  bool stable = false;
  bool unstable = false;

  friend bool operator==(const Stability&, const Stability&) = default;
};

std::string to_string(Stability s);

struct Singularity {
  Point point;
  Stability stability;
};

/// A topological flow on one of the supported compact spaces. Instances are
/// immutable after construction and all methods are pure, so a FlowPtr may
/// be shared freely between threads.
class Flow {
 public:
  virtual ~Flow() = default;

  virtual SpaceKind space() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;

  /// phi(t, x) without the domain check; x must already lie in the space.
  virtual Point advance(double t, const Point& x) const = 0;

  virtual double distance(const Point& a, const Point& b) const = 0;
  virtual bool contains(const Point& x, double tol = kTolFlow) const = 0;

  /// Nearest point of the space (wraps angles, clamps radii and intervals).
  virtual Point project(const Point& x) const = 0;

  /// x + v in chart coordinates, projected back into the space.
  virtual Point displace(const Point& x, std::span<const double> v) const;

  /// Chart-coordinate vector from `from` towards `to` along the shortest way.
  virtual std::vector<double> chart_delta(const Point& from,
                                          const Point& to) const;

  /// Per-factor dimensions (one entry for non-product spaces). Jumps in the
  /// max metric are bounded factor by factor.
  virtual std::vector<std::size_t> factor_dims() const { return {dim()}; }

  /// Period of each chart coordinate (0 for non-periodic coordinates).
  virtual std::vector<double> periods() const { return std::vector<double>(dim(), 0.0); }

  /// Finite sample of the space with mesh at most `mesh`.
  virtual std::vector<Point> cover(double mesh) const = 0;

  virtual double diameter() const noexcept = 0;

  /// Upper bound of dist(x, phi(t, x)) / |t| over the space (speed bound).
  virtual double speed_bound() const noexcept = 0;

  virtual json descriptor() const = 0;

  const std::vector<Singularity>& singularities() const noexcept {
    return singularities_;
  }

  /// True when the limit set of the flow is exactly its singularity set.
  bool limit_set_is_singular() const noexcept { return limit_set_singular_; }

  /// phi(t, x); throws a domain error when x is outside the space.
  Point evaluate(double t, const Point& x) const;

 protected:
  std::vector<Singularity> singularities_;
  bool limit_set_singular_ = false;
};

using FlowPtr = std::shared_ptr<const Flow>;

inline Point evaluate(const Flow& flow, double t, const Point& x) {
  return flow.evaluate(t, x);
}

/// Strictly increasing self-homeomorphism of an interval together with its
/// (finite) fixed-point list.
struct MonotoneMap {
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::vector<double> fixed_points;
  json descriptor;
};

/// Monotone piecewise-linear map of [0, 1] through the given knots; the
/// first knot must be (0, 0) and the last (1, 1).
MonotoneMap piecewise_linear_map(std::vector<std::pair<double, double>> knots);

/// The three-piece map on [-1, 1] used to build the radial map.
double remark_f0(double u);
double remark_f0_inverse(double v);

/// f(r) on [0, 1]: the self-similar radial map with attracting fixed points
/// 2^-n and repelling fixed points 3 * 2^-(n+2).
double time_one_map_radial(double r);
double time_one_map_radial_inverse(double r);

/// Flow on an interval whose time-one map equals a given monotone map,
/// obtained by conjugating each gap between consecutive fixed points to the
/// unit translation.
class SuspensionChart {
 public:
  SuspensionChart(std::function<double(double)> forward,
                  std::function<double(double)> inverse,
                  std::vector<double> fixed_points);

  double flow(double t, double x) const;

  /// Conjugating coordinate of x inside its gap (undefined at fixed points).
  double chart_coordinate(double x) const;

  const std::vector<double>& fixed_points() const noexcept { return fixed_; }

 private:
  struct Gap {
    double lo, hi;       // adjacent fixed points
    double x0, fx0;      // fundamental domain [x0, f(x0)] (or reversed)
  };

  std::function<double(double)> f_;
  std::function<double(double)> finv_;
  std::vector<double> fixed_;
  std::vector<Gap> gaps_;
};

/// Radial component of the disk flow: phi_r(1, r) = time_one_map_radial(r).
double radial_flow(double t, double r);

FlowPtr build_disk_flow();
FlowPtr build_north_south_circle();
FlowPtr build_interval_suspension(MonotoneMap map);
/// The one-dimensional radial flow on [0, 1] (suspension of the radial map).
FlowPtr build_radial_interval_flow();
FlowPtr build_product_flow(FlowPtr first, FlowPtr second);
/// phi_rev(t, x) = phi(-t, x), stability tags swapped.
FlowPtr build_reversed_flow(FlowPtr inner);

FlowPtr flow_from_json(const json& j);

/// Components of a product flow (nullptr for other spaces).
std::pair<FlowPtr, FlowPtr> product_factors(const Flow& flow);

Point polar_point(double r, double theta);
double radius_of(const Point& disk_point);

struct SampledOrbit {
  Point start;
  std::vector<double> times;
  std::vector<Point> points;
};

SampledOrbit orbit_segment(const Flow& flow, const Point& x, double t0,
                           double t1, double step);

}  // namespace shadowlab
