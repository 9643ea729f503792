#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "shadowlab/flow.hpp"
#include "shadowlab/pseudo.hpp"
#include "shadowlab/reparam.hpp"

namespace shadowlab {

/// Boolean free-space matrix: free(i, j) iff dist(xi(t_i), phi(s_j, x)) < eps.
struct FreeSpaceGrid {
  std::vector<double> xi_times;
  std::vector<double> orbit_times;
  std::vector<double> dist;          // row-major distances, rows() x cols()
  std::vector<std::uint8_t> cells;   // row-major free flags
  Point x;
  double eps = 0.0;

  std::size_t rows() const noexcept { return xi_times.size(); }
  std::size_t cols() const noexcept { return orbit_times.size(); }
  bool free(std::size_t i, std::size_t j) const { return cells[i * cols() + j] != 0; }
};

FreeSpaceGrid build_free_space(const StepPseudotrajectory& xi, const Point& x, double eps,
                               double dt, double ds, double t_lo, double t_hi, double s_lo,
                               double s_hi);

/// Random boolean grid for oracle tests (free with probability p_free).
FreeSpaceGrid random_free_space(std::size_t rows, std::size_t cols, double p_free, Rng& rng);

/// Per-column advance range [lo, hi] of a monotone path.
struct AdvanceRange {
  long lo = 0;
  long hi = 0;
};

struct PathResult {
  bool found = false;
  double bottleneck = 0.0;   // max cell value along the path
  std::vector<long> columns; // one column index per row
};

/// Min-bottleneck monotone path through a rows x cols field of cell values;
/// cells with value >= eps are blocked. Sliding-window minima make it
/// O(rows * cols). Among optimal predecessors the one whose advance is
/// closest to `prefer` is kept.
PathResult bottleneck_path(std::size_t rows, std::size_t cols,
                           const std::function<double(std::size_t, std::size_t)>& value,
                           double eps, AdvanceRange range, long prefer);

/// Monotone path through cells below eps minimizing the total deviation of
/// the per-row advance from `prefer` (plus a small closeness term). Used to
/// build certificates: it avoids paths that alias a periodic orbit.
PathResult smooth_path(std::size_t rows, std::size_t cols,
                       const std::function<double(std::size_t, std::size_t)>& value,
                       double eps, AdvanceRange range, long prefer);

/// Dynamic-programming decision on a boolean grid.
bool dp_path_exists(const FreeSpaceGrid& grid, AdvanceRange range);

/// Exhaustive depth-first enumeration of monotone paths (dead states are
/// memoized); limited to 12 x 12.
bool brute_oracle(const FreeSpaceGrid& grid, AdvanceRange range);

enum class ShadowMode { oriented, standard };

struct ShadowingCertificate {
  Point x;
  Reparam h;
  double sup_error = 0.0;
  ShadowMode mode = ShadowMode::oriented;
  double eps = 0.0;
  double eps_rep = 0.0;       // Rep class certified (standard mode)
  double t_lo = 0.0, t_hi = 0.0;
  double verify_pitch = 0.0;
  std::size_t candidate = 0;

  json to_json() const;
  static ShadowingCertificate from_json(const json& j);
};

struct SearchParams {
  double dt = 0.0;             // 0: T0 / 2
  double ds = 0.0;             // 0: T0 / 8
  double slope_cap = 16.0;
  int candidate_anchors = 4;   // anchors spread over the window, middle first
  int ball_points = 5;         // cover points per anchor ball
  double s_window = 0.0;       // half-width of orbit times; 0: slope_cap * W
  double margin = -1.0;        // excluded at each end; negative: T0
  double dp_eps = 0.0;         // DP threshold if positive (acceptance still at eps)
  int eps_retries = 3;         // DP rerun at eps (1 - 0.1 k) on a failed verification
  bool refine = true;          // per-knot local improvement (oriented mode)
};

/// Anchors at window fractions 1/2, 0, 1/4, 3/4, ... plus points of their
/// eps balls.
std::vector<Point> default_candidates(const StepPseudotrajectory& xi, double eps,
                                      const SearchParams& params);

/// sup over t in [t_lo, t_hi] on a grid of the given pitch of
/// dist(xi(t), phi(h(t), x)).
double sup_distance(const StepPseudotrajectory& xi, const Point& x, const Reparam& h,
                    double t_lo, double t_hi, double pitch);

/// Candidates are tried in order; the certificate of the first one that
/// verifies is returned.
std::optional<ShadowingCertificate> search_oriented(const StepPseudotrajectory& xi,
                                                    double eps,
                                                    const std::vector<Point>& candidates,
                                                    const SearchParams& params = {});

/// Slope-constrained search; throws a grid error when the advance range
/// [ceil((1 - eps_rep) dt / ds), floor((1 + eps_rep) dt / ds)] is empty.
std::optional<ShadowingCertificate> search_standard(const StepPseudotrajectory& xi,
                                                    double eps, double eps_rep,
                                                    const std::vector<Point>& candidates,
                                                    const SearchParams& params = {});

struct CertificateCheck {
  double sup_error = 0.0;
  bool sup_ok = false;
  bool rep_ok = true;
  bool matches_stored = false;  // recomputed sup within 1e-9 of the stored one
  bool ok() const noexcept { return sup_ok && rep_ok && matches_stored; }
};

/// Recomputes a certificate from scratch.
CertificateCheck verify_certificate(const StepPseudotrajectory& xi,
                                    const ShadowingCertificate& cert);

}  // namespace shadowlab
