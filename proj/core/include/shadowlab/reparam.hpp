#pragma once

#include <vector>

#include <json.hpp>

namespace shadowlab {

/// Minimum increase between consecutive knots, in both coordinates.
inline constexpr double kKnotStrictness = 1e-12;

struct Knot {
  double t;
  double v;
};

/// Orientation-preserving homeomorphism of the real line: monotone
/// piecewise-linear through its knots, affine with positive slope beyond them.
class Reparam {
 public:
  /// Identity.
  Reparam();

  /// Throws a parameter error unless knots increase strictly (by at least
  /// kKnotStrictness) in both coordinates and both tail slopes are positive.
  Reparam(std::vector<Knot> knots, double left_slope, double right_slope);

  double operator()(double t) const;

  const std::vector<Knot>& knots() const noexcept { return knots_; }
  double left_slope() const noexcept { return left_; }
  double right_slope() const noexcept { return right_; }

  /// Slopes of every linear piece in order: left tail, segments, right tail.
  std::vector<double> slopes() const;

  nlohmann::json to_json() const;
  static Reparam from_json(const nlohmann::json& j);

 private:
  std::vector<Knot> knots_;
  double left_ = 1.0;
  double right_ = 1.0;
};

Reparam make_piecewise_linear(std::vector<Knot> knots, double left_slope = 1.0,
                              double right_slope = 1.0);

struct RepCheck {
  bool ok = true;
  double worst_slope = 1.0;  // slope farthest from 1 on the domain
  double a = 0.0, b = 0.0;   // the piece attaining it, clipped to the domain
};

/// h restricted to [a, b] lies in Rep(eps): every difference quotient is in
/// (1 - eps, 1 + eps). Checking the slope of each piece is exact.
RepCheck verify_rep_eps(const Reparam& h, double eps, double a, double b);

/// Brute-force variant over all pairs of breakpoints in [a, b]; used as an
/// oracle for verify_rep_eps.
RepCheck verify_rep_eps_pairs(const Reparam& h, double eps, double a, double b);

/// outer o inner.
Reparam compose(const Reparam& outer, const Reparam& inner);
Reparam invert(const Reparam& h);

/// g(t) = g0 + s (h(t) - h(0)) on [0, T1] with s chosen so g(T1) = g1;
/// g0 + t before 0 and g1 + t - T1 after T1.
Reparam rescale_to_endpoints(const Reparam& h, double T1, double g0, double g1);

/// t -> -h(-t); carries a match of a time-reversed problem back.
Reparam reflect(const Reparam& h);

/// t -> h(t + dt) + dv.
Reparam shifted(const Reparam& h, double dt, double dv);

}  // namespace shadowlab
