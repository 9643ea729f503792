#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shadowlab/flow.hpp"
#include "shadowlab/pseudo.hpp"
#include "shadowlab/reparam.hpp"
#include "shadowlab/shadow_search.hpp"
#include "shadowlab/singularities.hpp"
#include "shadowlab/straighten.hpp"

namespace shadowlab {

/// Reparametrization piece valid on [lo, hi] (infinite ends allowed).
struct SplicePiece {
  double lo;
  double hi;
  Reparam h;
};

/// Tolerance for matching piece values at shared breakpoints.
inline constexpr double kSpliceTolerance = 1e-9;

/// Single reparametrization equal to each piece on its interval. Pieces must
/// be ordered and contiguous; a value jump above kSpliceTolerance at a shared
/// breakpoint is a splice error, smaller jumps snap to the left piece.
Reparam splice_reparam(const std::vector<SplicePiece>& pieces);

// ---------------------------------------------------------------------------
// Oriented to standard (one flow).

struct SingularHit {
  std::size_t index = 0;  // into flow.singularities()
  Point point;
  double time = 0.0;      // entry time for a stable hit, exit time for an unstable one
};

struct CaseClassification {
  int case_id = 1;
  std::optional<SingularHit> stable_hit;
  std::optional<SingularHit> unstable_hit;
  std::vector<std::pair<double, double>> windows;  // free segments to straighten

  json to_json() const;
};

/// Case split of a chain on [t_lo, t_hi]. A singularity counts as hit when
/// the chain enters B(hit_radius[i], p). A stable hit must stay in
/// B(trap_radius, p) afterwards, an unstable hit before; a singularity with
/// both tags confines the whole chain, and its first and last visits give the
/// unstable and stable roles. Broken trapping throws a constants error.
CaseClassification classify_case(const StepPseudotrajectory& xi,
                                 const std::vector<double>& hit_radius, double trap_radius,
                                 double t_lo, double t_hi);

struct TrapRadius {
  double U = 0.0;
  bool chain_trapping = false;  // false: no chain probe was trapped, U from true orbits
};

/// Largest U = V 2^-k (k = 1..8) whose chain probes at defect d stay in
/// B(V, p) in every direction matching p's stability tags.
TrapRadius estimate_trap_radius(const FlowPtr& flow, std::size_t index, double V, double d,
                                double T0, std::uint64_t seed);

struct Theorem1Params {
  double eps0 = 0.3;
  double eps1 = 0.04;            // oriented search threshold
  SearchParams search;
  std::vector<double> hit_radius;  // per singularity; empty: 2 r0 from consts
  double trap_radius = 0.0;        // 0: eps0 / 4
  int max_retries = 4;
};

struct Theorem1Outcome {
  std::uint64_t seed = 0;
  int case_id = 0;
  double d = 0.0;
  bool oriented_ok = false;
  bool standard_ok = false;
  double sup_error = 0.0;
  int retries = 0;
  CaseClassification cases;
  std::optional<ShadowingCertificate> oriented;
  std::optional<ShadowingCertificate> standard;
  std::vector<StraightenResult> straightened;
  std::string note;

  bool counterexample() const noexcept { return oriented_ok && !standard_ok; }
  json to_json() const;
};

/// Straightens the oriented certificate on each free window and continues it
/// with slope one near the hit singularities. The result is a standard
/// certificate at eps0 (Rep(eps0) and sup < eps0 on the certificate window),
/// re-verified end to end; standard_ok reports that check.
Theorem1Outcome standard_from_oriented(const StepPseudotrajectory& xi,
                                       const ShadowingCertificate& oriented,
                                       const CaseClassification& cases, double eps0,
                                       const ConstantsBundle& consts);

using ChainFactory = std::function<StepPseudotrajectory(double d)>;

/// Oriented search at eps1 followed by standard_from_oriented, regenerating
/// the chain with d halved after a constants or precondition failure.
Theorem1Outcome theorem1_trial(const ChainFactory& make_chain, double d,
                               const ConstantsBundle& consts, const Theorem1Params& params,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Products.

struct ProductConstants {
  double r1 = 0.0;    // neighborhoods of Sing(phi1)
  double r2 = 0.0;    // neighborhoods of Sing(phi2); F is their complement
  double S0 = 0.0;    // transit bound from F into B(r2 / 2, Sing(phi2)), plus one
  double tau0 = 0.0;  // sup dist(x, phi2(t, x)) < min(r2, eps0 / 4) for |t| <= tau0
  double eps_mid = 0.0;

  json to_json() const;
};

ProductConstants estimate_product_constants(const Flow& flow2, double r1, double r2,
                                            double eps0, double eps1);

/// Factor k (0 or 1) of a chain of a product flow.
StepPseudotrajectory factor_chain(const StepPseudotrajectory& xi, int k);

struct ProductOutcome {
  std::uint64_t seed = 0;
  int case_id = 0;
  int subcase = 0;          // Case 2: number of visited singularities of phi2
  double d = 0.0;
  bool factor_ok = false;   // oriented certificate for the first factor
  bool ok = false;          // product certificate re-verified
  bool middle_ok = true;    // Case 2 two-singularity: middle piece in Rep(eps_mid)
  double sup_error = 0.0;
  int retries = 0;
  double s0 = 0.0;
  std::pair<double, double> window{0.0, 0.0};  // trap window (Case 1) or crossing (Case 2)
  std::optional<ShadowingCertificate> certificate;
  std::string note;

  json to_json() const;
};

struct Theorem2Params {
  double eps0 = 0.3;
  double eps1 = 0.04;
  SearchParams search;
  int max_retries = 4;
};

/// Product oriented certificate assembled from a first-factor match and the
/// splices of the two cases.
ProductOutcome product_shadow(const StepPseudotrajectory& xi, double eps0,
                              const ConstantsBundle& consts1, const ProductConstants& pc,
                              const Theorem2Params& params);

ProductOutcome theorem2_trial(const ChainFactory& make_chain, double d,
                              const ConstantsBundle& consts1, const ProductConstants& pc,
                              const Theorem2Params& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scenario generators. Chains use step T0 on [n_min T0, n_max T0].

struct ScenarioWindow {
  double T0 = 0.25;
  long n_min = -40;
  long n_max = 40;
};

/// Disk flow: annulus chain (Case 1), or a chain held on a small circle about
/// the origin that sinks into it forward (Case 2), backward (Case 3) or both
/// (Case 4).
StepPseudotrajectory disk_scenario(const FlowPtr& disk, int case_id, double d,
                                   const ScenarioWindow& w, std::uint64_t seed);

/// Disk x north-south: first factor parked at the origin while the second
/// crosses (Case 1); first factor in the annulus while the second crosses
/// (Case 2) or rests near a pole (Case 2, one singularity).
StepPseudotrajectory product_scenario(const FlowPtr& product, int case_id, int subcase,
                                      double d, const ScenarioWindow& w, std::uint64_t seed);

/// North-south circle chain with uniform jumps started at a random angle.
StepPseudotrajectory circle_scenario(const FlowPtr& circle, double d, const ScenarioWindow& w,
                                     std::uint64_t seed);

/// Chain on the disk alternating between the circles r = 1/2 and r = 1 with
/// radial jumps of the given size (negative control).
StepPseudotrajectory radial_gap_chain(const FlowPtr& disk, double jump, const ScenarioWindow& w);

}  // namespace shadowlab
