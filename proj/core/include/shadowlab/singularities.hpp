#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "shadowlab/flow.hpp"
#include "shadowlab/pseudo.hpp"

namespace shadowlab {

enum class Verdict { holds, fails, inconclusive };
enum class Direction { forward, backward };

std::string to_string(Verdict v);
std::string to_string(Direction d);

struct WitnessPair {
  double V = 0.0;
  double U = 0.0;
};

struct DirectionVerdict {
  Verdict verdict = Verdict::inconclusive;
  std::vector<WitnessPair> pairs;   // one per target radius that was met
  std::optional<Point> escape_start;  // orbit leaving B(V, p) from B(V/256, p)
  double escape_time = 0.0;
  double escape_radius = 0.0;       // the V it escaped
};

struct StabilityReport {
  Point point;
  DirectionVerdict stable;
  DirectionVerdict unstable;
  double horizon = 50.0;

  json to_json() const;
};

/// Sampling-based Lyapunov classification. For each V in radii, candidate
/// U = V/2, ..., V/256 are tried until all sampled orbits from B(U, p) stay
/// in B(V, p) on [0, horizon] (backward in time for instability).
StabilityReport classify_singularity(const Flow& flow, const Point& p,
                                     const std::vector<double>& radii,
                                     double horizon = 50.0);

struct ReachableSetEstimate {
  Point center;
  double defect = 0.0;
  Direction direction = Direction::forward;
  double cell = 0.0;               // grid pitch
  std::vector<Point> points;       // reached cell representatives
  std::vector<long> parent;        // witness chain links (-1 for seeds)
  double diameter = 0.0;
  bool closed = true;              // false when the budget ran out
  std::size_t expansions = 0;

  /// Chain of points, seed first, ending at points[i]; consecutive entries
  /// satisfy dist(phi(+-1, a), b) < defect.
  std::vector<Point> witness(std::size_t i) const;

  json to_json() const;
};

/// Breadth-first estimate of the set reachable from B(d, p) by chains of
/// time-one steps with jumps below d, on a grid of pitch cell (default d/4).
ReachableSetEstimate reachable_set(const Flow& flow, const Point& p, double d,
                                   Direction direction, std::size_t budget = 2'000'000,
                                   double cell = 0.0);

struct SingularityVisit {
  std::size_t index = 0;   // into flow.singularities()
  Point point;
  Stability stability;
  double radius = 0.0;
  double first_entry = 0.0;
  double last_exit = 0.0;  // last time inside U_p
};

/// Singularities whose neighborhood B(radius, p) is entered by xi within its
/// window, sampled at pitch T0/8. radii[i] belongs to singularities()[i].
std::vector<SingularityVisit> visited_singularities(const StepPseudotrajectory& xi,
                                                    const std::vector<double>& radii);

struct TrapProbe {
  bool trapped = true;
  double max_excursion = 0.0;
  std::size_t chains = 0;
};

/// Chains of defect d and step T0 started on the sphere of radius U about p,
/// with outward-directed and random jumps, run for `horizon` time units in
/// the given direction; trapped iff every sample stays in B(V, p).
TrapProbe probe_trapping(const FlowPtr& flow, const Point& p, double U, double V,
                         double d, double T0, double horizon, Direction direction,
                         std::uint64_t seed, int random_chains = 8);

/// Offsets of norm < r in each factor of the space: a deterministic sample
/// of directions and radius fractions, combined across factors.
std::vector<std::vector<double>> ball_offsets(const Flow& flow, double r);

}  // namespace shadowlab
