#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "shadowlab/flow.hpp"

namespace shadowlab {

/// Deterministic generator: mt19937_64 with a fixed 53-bit conversion, so
/// sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/// Step pseudotrajectory: anchors at n*T0 for n in [n_min, n_max], flowed
/// exactly in between.
struct StepPseudotrajectory {
  FlowPtr flow;
  double T0 = 0.5;
  long n_min = 0;
  long n_max = 0;
  std::vector<Point> anchors;
  double defect = 0.0;
  std::uint64_t seed = 0;

  double t_lo() const noexcept { return static_cast<double>(n_min) * T0; }
  double t_hi() const noexcept { return static_cast<double>(n_max) * T0; }
  const Point& anchor(long n) const { return anchors.at(static_cast<std::size_t>(n - n_min)); }

  /// xi(t); throws a window error outside [t_lo, t_hi].
  Point at(double t) const;

  /// max_n dist(phi(T0, xi(n T0)), xi((n+1) T0)).
  double anchor_defect() const;

  json to_json() const;
  static StepPseudotrajectory from_json(const json& j);
};

/// Samples of a continuous pseudotrajectory on an increasing time grid.
struct ContinuousPseudotrajectory {
  FlowPtr flow;
  std::vector<double> times;
  std::vector<Point> samples;
  double defect = 0.0;
};

struct JumpModel {
  enum class Kind { uniform_ball, directed };
  Kind kind = Kind::uniform_ball;
  Point target;

  static JumpModel uniform() { return {}; }
  static JumpModel toward(Point p) { return {Kind::directed, p}; }
};

/// Jump vector in chart coordinates given the flowed point; its per-factor
/// Euclidean norms must stay below the defect.
using JumpRule = std::function<std::vector<double>(long n, const Point& flowed, Rng& rng)>;

/// Uniform jump in the ball of radius scale*d, factor by factor.
std::vector<double> uniform_jump(const Flow& flow, double radius, Rng& rng);

/// Jump of length min(0.9 d, distance) toward target.
std::vector<double> directed_jump(const Flow& flow, const Point& from,
                                  const Point& target, double d);

/// Forward anchors a_{n+1} = displace(phi(T0, a_n), jump); backward anchors
/// a_{n-1} = phi(-T0, displace(a_n, jump)), so every defect equals a jump.
StepPseudotrajectory build_chain(FlowPtr flow, const Point& x0, double d, double T0,
                                 long n_min, long n_max, const JumpRule& forward,
                                 const JumpRule& backward, std::uint64_t seed);

StepPseudotrajectory generate_pt(FlowPtr flow, const Point& x0, double d, double T0,
                                 long n_min, long n_max, std::uint64_t seed,
                                 const JumpModel& model = JumpModel::uniform());

/// Sup over t on the T0/8 grid and s in [0, 1] of dist(xi(t+s), phi(s, xi(t))).
double validate_ps(const StepPseudotrajectory& xi);
double validate_ps(const ContinuousPseudotrajectory& xi);

/// Samples xi on a grid of pitch dt (anchor times included when dt divides T0).
ContinuousPseudotrajectory sample_continuous(const StepPseudotrajectory& xi, double dt);

struct PtConversion {
  StepPseudotrajectory step;
  double L_estimate = 0.0;
  double sup_distance = 0.0;
};

/// Step pseudotrajectory agreeing with xi at the anchor times; the anchor at
/// n T0 is obtained by flowing from the last sample at or before n T0.
PtConversion ps_to_pt(const ContinuousPseudotrajectory& xi, double T0);

}  // namespace shadowlab
