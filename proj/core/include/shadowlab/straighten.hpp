#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shadowlab/flow.hpp"
#include "shadowlab/pseudo.hpp"
#include "shadowlab/reparam.hpp"

namespace shadowlab {

/// Compact set described as the complement of open balls B(r_i, p_i), pulled
/// back along the flow: x belongs iff phi(s, x) avoids every ball for all s
/// in [s_from, s_to] (a single instant when s_from == s_to == 0).
struct CompactRegion {
  std::string label = "K";
  std::vector<Point> excluded;
  std::vector<double> radii;
  double s_from = 0.0;
  double s_to = 0.0;
  double mesh = 0.0;
  std::vector<Point> samples;

  bool contains(const Flow& flow, const Point& x) const;
  json to_json() const;
};

/// Samples the region on flow.cover(mesh).
CompactRegion make_region(const Flow& flow, std::vector<Point> excluded,
                          std::vector<double> radii, double mesh, double s_from = 0.0,
                          double s_to = 0.0, std::string label = "K");

/// The same balls pulled back over a time interval.
CompactRegion pulled_back(const Flow& flow, const CompactRegion& K, double s_from,
                          double s_to, std::string label);

/// Largest T0 = j / 64 (at most T0_max) such that dist(phi(t, x), x) >= margin
/// for sampled x in K and t in [T0/16, 2 T0].
double estimate_T0(const Flow& flow, const CompactRegion& K, double margin,
                   double T0_max = 63.0 / 64.0);

/// True iff dist(phi(t, x), x) >= margin on the sampled [T0/16, 2 T0] grid.
bool check_T0(const Flow& flow, const CompactRegion& K, double T0, double margin);

inline constexpr double kDeltaSafety = 0.1;

/// (1 - safety) times the sampled minimum of dist(phi(t, x), phi(s, x)) over
/// x in K and s, t in [0, T0] with |s - t| >= eps_time.
double estimate_delta(const Flow& flow, const CompactRegion& K, double T0, double eps_time);

/// Half the sampled minimum of dist(phi(T, x), x) over K, less the delta
/// safety margin (off-sample points come slightly closer).
double estimate_rho(const Flow& flow, const CompactRegion& K, double T);

/// min(eps / 4, delta(Khat and its T-image, eps T) / 2).
double estimate_eps_prime(const Flow& flow, const CompactRegion& Khat, double eps, double T,
                          double T0);

struct ContractCheck {
  std::size_t trials = 0;
  std::size_t matched = 0;     // triples meeting the distance hypothesis
  std::size_t violations = 0;  // of those, |g(T)/T - 1| > eps
  double worst_ratio = 1.0;
};

/// Randomized check of eps_prime: x in Khat, y near x, g a monotone map on
/// the T/8 grid; whenever dist(phi(t, x), phi(g(t), y)) <= eps_prime on the
/// grid, g(T)/T must lie within eps of 1.
ContractCheck check_eps_prime_contract(const Flow& flow, const CompactRegion& Khat, double eps,
                                       double eps_prime, double T, std::size_t trials,
                                       std::uint64_t seed);

/// Largest eps_prime 2^-k such that sampled pairs of Ktilde at distance at
/// most that value stay eps_prime-close over t in [-T, T].
double estimate_eps1(const Flow& flow, const CompactRegion& Ktilde, double eps_prime,
                     double T);

/// The two algebraic bounds tying T / T0 to eps.
bool grid_inequality_holds(double eps, double T, double T0);

/// Largest T = T0 / k with sup dist(x, phi(t, x)) < eps / 4 over sampled x in
/// M and t in [0, 2T], and the algebraic bounds.
double choose_T(const Flow& flow, double eps, double T0, double mesh);

struct ConstantsBundle {
  double eps = 0.0;        // straightening target the bundle was built for
  double T0 = 0.0;
  double T = 0.0;
  double delta = 0.0;
  double eps_time = 0.0;
  double rho = 0.0;
  double eps_prime = 0.0;
  double eps1 = 0.0;
  double r0 = 0.0;         // radius of the excluded balls
  CompactRegion K, Ktilde, Khat;
  json provenance;

  json to_json() const;
  static ConstantsBundle from_json(const Flow& flow, const json& j);
};

struct ConstantsOptions {
  double mesh = 0.02;
  double T0 = 0.0;         // 0: estimate; otherwise checked and used
  double T0_margin = 0.01;
  double T0_max = 63.0 / 64.0;
};

/// Estimates every constant for straightening at eps away from the balls
/// B(r0, p) around the flow's singularities.
ConstantsBundle estimate_constants(const Flow& flow, double r0, double eps,
                                   const ConstantsOptions& opts = {});

enum class HypothesisRoute { strict, direct };

struct StraightenResult {
  Reparam g_tilde;
  Reparam h;                   // grid interpolation before rescaling
  HypothesisRoute route = HypothesisRoute::strict;
  double hypothesis_sup = 0.0; // sup dist(xi(t + t0), phi(g(t), y))
  double grid_slack = 0.0;
  double t_x = 0.0, t_y = 0.0;
  long blocks = 0;
  std::vector<double> block_ratios;  // g_n(T) / T
  double max_block_deviation = 0.0;
  double sup_h_ghat = 0.0;
  double sup_gtilde_h = 0.0;
  double scale = 1.0;                // g(T1) / (h(T1) - h(0))
  double sup_error = 0.0;            // P3 value
  bool p1 = false, p2 = false, p3 = false;

  json to_json() const;
};

/// Converts a match dist(xi(t + t0), phi(g(t), y)) on [0, T1] into one with a
/// time change in Rep(eps) and the same endpoint values. The hypothesis is
/// accepted on the strict route (sup below eps1 with both curves in Ktilde)
/// or the direct route (sup plus grid slack below eps / 4 and every block
/// ratio within eps / 4).
StraightenResult straighten(const StepPseudotrajectory& xi, double t0, double T1,
                            const Reparam& g, const Point& y, double eps,
                            const ConstantsBundle& consts);

/// Straightens an absolute match t -> phi(H(t), x) on [a, b]: t0 = a,
/// y = phi(H(a), x), g(t) = H(t + a) - H(a). The returned map is absolute
/// (slope-one tails, equal to H at a and b).
struct AbsoluteStraighten {
  Reparam H;
  StraightenResult detail;
};
AbsoluteStraighten straighten_absolute(const StepPseudotrajectory& xi, const Point& x,
                                       const Reparam& H, double a, double b, double eps,
                                       const ConstantsBundle& consts);

}  // namespace shadowlab
