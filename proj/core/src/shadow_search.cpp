#include "shadowlab/shadow_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"

namespace shadowlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FreeSpaceGrid build_free_space(const StepPseudotrajectory& xi, const Point& x, double eps,
                               double dt, double ds, double t_lo, double t_hi, double s_lo,
                               double s_hi) {
  require(dt > 0 && ds > 0, ErrorKind::parameter, "grid pitches must be positive");
  require(t_lo <= t_hi && s_lo <= s_hi, ErrorKind::window, "empty grid window");
  FreeSpaceGrid g;
  g.x = x;
  g.eps = eps;
  for (long i = 0;; ++i) {
    const double t = t_lo + static_cast<double>(i) * dt;
    if (t > t_hi + 1e-12) break;
    g.xi_times.push_back(t);
  }
  for (long j = 0;; ++j) {
    const double s = s_lo + static_cast<double>(j) * ds;
    if (s > s_hi + 1e-12) break;
    g.orbit_times.push_back(s);
  }
  std::vector<Point> orbit(g.cols());
  for (std::size_t j = 0; j < g.cols(); ++j) orbit[j] = xi.flow->evaluate(g.orbit_times[j], x);
  g.dist.resize(g.rows() * g.cols());
  g.cells.resize(g.rows() * g.cols());
  parallel_for(g.rows(), [&](std::size_t i) {
    const Point p = xi.at(g.xi_times[i]);
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double d = xi.flow->distance(p, orbit[j]);
      g.dist[i * g.cols() + j] = d;
      g.cells[i * g.cols() + j] = d < eps ? 1 : 0;
    }
  });
  return g;
}

FreeSpaceGrid random_free_space(std::size_t rows, std::size_t cols, double p_free, Rng& rng) {
  FreeSpaceGrid g;
  g.eps = 1.0;
  for (std::size_t i = 0; i < rows; ++i) g.xi_times.push_back(static_cast<double>(i));
  for (std::size_t j = 0; j < cols; ++j) g.orbit_times.push_back(static_cast<double>(j));
  g.cells.resize(rows * cols);
  g.dist.resize(rows * cols);
  for (std::size_t k = 0; k < rows * cols; ++k) {
    g.cells[k] = rng.uniform() < p_free ? 1 : 0;
    g.dist[k] = g.cells[k] ? 0.0 : 2.0;
  }
  return g;
}

PathResult bottleneck_path(std::size_t rows, std::size_t cols,
                           const std::function<double(std::size_t, std::size_t)>& value,
                           double eps, AdvanceRange range, long prefer) {
  require(range.lo >= 0 && range.lo <= range.hi, ErrorKind::parameter,
          "advance range must satisfy 0 <= lo <= hi");
  PathResult res;
  if (rows == 0 || cols == 0) return res;
  const long J = static_cast<long>(cols);

  // Finite values of each row on the column span [a, a + v.size()).
  struct Row {
    long a = 0;
    std::vector<double> v;
  };
  std::vector<Row> table(rows);

  auto trim = [](Row& r) {
    std::size_t first = 0;
    while (first < r.v.size() && r.v[first] == kInf) ++first;
    std::size_t last = r.v.size();
    while (last > first && r.v[last - 1] == kInf) --last;
    r.v = std::vector<double>(r.v.begin() + static_cast<long>(first),
                              r.v.begin() + static_cast<long>(last));
    r.a += static_cast<long>(first);
    return !r.v.empty();
  };

  table[0].v.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const double d = value(0, j);
    table[0].v[j] = d < eps ? d : kInf;
  }
  if (!trim(table[0])) return res;

  for (std::size_t i = 1; i < rows; ++i) {
    const Row& prev = table[i - 1];
    const long pa = prev.a;
    const long pb = prev.a + static_cast<long>(prev.v.size()) - 1;
    const long ca = pa + range.lo;
    const long cb = std::min(J - 1, pb + range.hi);
    if (ca > cb) return res;
    Row cur;
    cur.a = ca;
    cur.v.assign(static_cast<std::size_t>(cb - ca + 1), kInf);
    std::deque<long> window;  // indices into prev with increasing values
    long next_k = pa;
    for (long j = ca; j <= cb; ++j) {
      const long upper = std::min(j - range.lo, pb);
      const long lower = j - range.hi;
      for (; next_k <= upper; ++next_k) {
        const double val = prev.v[static_cast<std::size_t>(next_k - pa)];
        while (!window.empty() &&
               prev.v[static_cast<std::size_t>(window.back() - pa)] >= val)
          window.pop_back();
        window.push_back(next_k);
      }
      while (!window.empty() && window.front() < lower) window.pop_front();
      if (window.empty()) continue;
      const double wmin = prev.v[static_cast<std::size_t>(window.front() - pa)];
      if (wmin == kInf) continue;
      const double d = value(i, static_cast<std::size_t>(j));
      if (d < eps) cur.v[static_cast<std::size_t>(j - ca)] = std::max(d, wmin);
    }
    if (!trim(cur)) return res;
    table[i] = std::move(cur);
  }

  const Row& last = table[rows - 1];
  std::size_t best = 0;
  for (std::size_t k = 1; k < last.v.size(); ++k)
    if (last.v[k] < last.v[best]) best = k;
  res.found = true;
  res.bottleneck = last.v[best];
  res.columns.assign(rows, 0);
  long j = last.a + static_cast<long>(best);
  res.columns[rows - 1] = j;
  for (std::size_t i = rows - 1; i > 0; --i) {
    const Row& prev = table[i - 1];
    long pick = -1;
    long pick_gap = 0;
    for (long k = std::max(prev.a, j - range.hi);
         k <= std::min(prev.a + static_cast<long>(prev.v.size()) - 1, j - range.lo); ++k) {
      if (prev.v[static_cast<std::size_t>(k - prev.a)] > res.bottleneck) continue;
      const long gap = std::abs((j - k) - prefer);
      if (pick < 0 || gap < pick_gap) {
        pick = k;
        pick_gap = gap;
      }
    }
    j = pick;
    res.columns[i - 1] = j;
  }
  return res;
}

bool dp_path_exists(const FreeSpaceGrid& grid, AdvanceRange range) {
  const auto r = bottleneck_path(
      grid.rows(), grid.cols(),
      [&](std::size_t i, std::size_t j) { return grid.free(i, j) ? 0.0 : 2.0; }, 1.0, range,
      range.lo);
  return r.found;
}

PathResult smooth_path(std::size_t rows, std::size_t cols,
                       const std::function<double(std::size_t, std::size_t)>& value,
                       double eps, AdvanceRange range, long prefer) {
  require(range.lo >= 0 && range.lo <= range.hi, ErrorKind::parameter,
          "advance range must satisfy 0 <= lo <= hi");
  PathResult res;
  if (rows == 0 || cols == 0) return res;
  const long J = static_cast<long>(cols);
  struct Row {
    long a = 0;
    std::vector<double> cost, val;
    std::vector<long> from;
  };
  std::vector<Row> table(rows);
  auto trim = [](Row& r) {
    std::size_t first = 0, last = r.cost.size();
    while (first < last && r.cost[first] == kInf) ++first;
    while (last > first && r.cost[last - 1] == kInf) --last;
    auto cut = [&](auto& v) {
      v = std::vector<typename std::decay_t<decltype(v)>::value_type>(
          v.begin() + static_cast<long>(first), v.begin() + static_cast<long>(last));
    };
    cut(r.cost);
    cut(r.val);
    cut(r.from);
    r.a += static_cast<long>(first);
    return !r.cost.empty();
  };
  {
    Row& r0 = table[0];
    r0.cost.assign(cols, kInf);
    r0.val.assign(cols, kInf);
    r0.from.assign(cols, -1);
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = value(0, j);
      if (d < eps) {
        r0.val[j] = d;
        r0.cost[j] = 0.5 * d / eps;
      }
    }
    if (!trim(r0)) return res;
  }
  for (std::size_t i = 1; i < rows; ++i) {
    const Row& prev = table[i - 1];
    const long pa = prev.a, pb = prev.a + static_cast<long>(prev.cost.size()) - 1;
    const long ca = pa + range.lo, cb = std::min(J - 1, pb + range.hi);
    if (ca > cb) return res;
    Row cur;
    cur.a = ca;
    const auto n = static_cast<std::size_t>(cb - ca + 1);
    cur.cost.assign(n, kInf);
    cur.val.assign(n, kInf);
    cur.from.assign(n, -1);
    for (long j = ca; j <= cb; ++j) {
      double best = kInf;
      long arg = -1;
      for (long k = std::max(pa, j - range.hi); k <= std::min(pb, j - range.lo); ++k) {
        const double c = prev.cost[static_cast<std::size_t>(k - pa)];
        if (c == kInf) continue;
        const double total = c + static_cast<double>(std::abs((j - k) - prefer));
        if (total < best) {
          best = total;
          arg = k;
        }
      }
      if (arg < 0) continue;
      const double d = value(i, static_cast<std::size_t>(j));
      if (!(d < eps)) continue;
      const auto q = static_cast<std::size_t>(j - ca);
      cur.cost[q] = best + 0.5 * d / eps;
      cur.val[q] = d;
      cur.from[q] = arg;
    }
    if (!trim(cur)) return res;
    table[i] = std::move(cur);
  }
  const Row& last = table[rows - 1];
  std::size_t best = 0;
  for (std::size_t k = 1; k < last.cost.size(); ++k)
    if (last.cost[k] < last.cost[best]) best = k;
  res.found = true;
  res.columns.assign(rows, 0);
  long j = last.a + static_cast<long>(best);
  for (std::size_t i = rows; i-- > 0;) {
    const Row& r = table[i];
    const auto q = static_cast<std::size_t>(j - r.a);
    res.columns[i] = j;
    res.bottleneck = std::max(res.bottleneck, r.val[q]);
    j = r.from[q];
  }
  return res;
}

bool brute_oracle(const FreeSpaceGrid& grid, AdvanceRange range) {
  if (grid.rows() > 12 || grid.cols() > 12)
    fail(ErrorKind::size, "brute-force oracle is limited to 12 x 12 grids");
  const std::size_t R = grid.rows(), C = grid.cols();
  if (R == 0 || C == 0) return false;
  std::vector<std::uint8_t> dead(R * C, 0);
  std::function<bool(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    if (!grid.free(i, j) || dead[i * C + j]) return false;
    if (i + 1 == R) return true;
    for (long a = range.lo; a <= range.hi; ++a) {
      const long nj = static_cast<long>(j) + a;
      if (nj >= static_cast<long>(C)) break;
      if (walk(i + 1, static_cast<std::size_t>(nj))) return true;
    }
    dead[i * C + j] = 1;
    return false;
  };
  for (std::size_t j = 0; j < C; ++j)
    if (walk(0, j)) return true;
  return false;
}

json ShadowingCertificate::to_json() const {
  return {{"x", std::vector<double>(x.coords().begin(), x.coords().end())},
          {"h", h.to_json()},
          {"sup_error", sup_error},
          {"mode", mode == ShadowMode::oriented ? "oriented" : "standard"},
          {"eps", eps},
          {"eps_rep", eps_rep},
          {"window", {t_lo, t_hi}},
          {"verify_pitch", verify_pitch},
          {"candidate", candidate}};
}

ShadowingCertificate ShadowingCertificate::from_json(const json& j) {
  ShadowingCertificate c;
  const auto xs = j.at("x").get<std::vector<double>>();
  c.x = Point(std::span<const double>(xs.data(), xs.size()));
  c.h = Reparam::from_json(j.at("h"));
  c.sup_error = j.at("sup_error");
  const auto mode = j.at("mode").get<std::string>();
  require(mode == "oriented" || mode == "standard", ErrorKind::config,
          "certificate mode must be oriented or standard");
  c.mode = mode == "oriented" ? ShadowMode::oriented : ShadowMode::standard;
  c.eps = j.at("eps");
  c.eps_rep = j.value("eps_rep", 0.0);
  c.t_lo = j.at("window").at(0);
  c.t_hi = j.at("window").at(1);
  c.verify_pitch = j.at("verify_pitch");
  c.candidate = j.value("candidate", std::size_t{0});
  return c;
}

double sup_distance(const StepPseudotrajectory& xi, const Point& x, const Reparam& h,
                    double t_lo, double t_hi, double pitch) {
  require(pitch > 0, ErrorKind::parameter, "verification pitch must be positive");
  double m = 0.0;
  for (long k = 0;; ++k) {
    double t = t_lo + static_cast<double>(k) * pitch;
    const bool last = t >= t_hi - 1e-12;
    if (last) t = t_hi;
    m = std::max(m, xi.flow->distance(xi.at(t), xi.flow->advance(h(t), x)));
    if (last) break;
  }
  return m;
}

namespace {

struct Resolved {
  double dt, ds, t_start, t_last, s_lo;
  std::size_t rows, cols;
};

Resolved resolve(const StepPseudotrajectory& xi, const SearchParams& p) {
  Resolved r{};
  r.dt = p.dt > 0 ? p.dt : xi.T0 / 2.0;
  r.ds = p.ds > 0 ? p.ds : xi.T0 / 8.0;
  const double margin = p.margin >= 0 ? p.margin : xi.T0;
  r.t_start = xi.t_lo() + margin;
  const double t_end = xi.t_hi() - margin;
  require(t_end > r.t_start, ErrorKind::window, "search window is empty after margins");
  r.rows = static_cast<std::size_t>(std::floor((t_end - r.t_start) / r.dt + 1e-9)) + 1;
  r.t_last = r.t_start + static_cast<double>(r.rows - 1) * r.dt;
  const double half =
      p.s_window > 0 ? p.s_window : p.slope_cap * (xi.t_hi() - xi.t_lo());
  r.s_lo = -half;
  r.cols = static_cast<std::size_t>(std::floor(2.0 * half / r.ds + 1e-9)) + 1;
  return r;
}

// Knots through the matched cells; runs of equal columns are spread over
// [s_j, s_j + ds/2) so the map stays strictly increasing.
Reparam knots_from_path(const std::vector<long>& cols, const Resolved& r) {
  std::vector<Knot> k;
  std::size_t i = 0;
  while (i < cols.size()) {
    std::size_t e = i;
    while (e + 1 < cols.size() && cols[e + 1] == cols[i]) ++e;
    const double s = r.s_lo + static_cast<double>(cols[i]) * r.ds;
    const double run = static_cast<double>(e - i + 1);
    for (std::size_t q = i; q <= e; ++q)
      k.push_back({r.t_start + static_cast<double>(q) * r.dt,
                   s + 0.5 * r.ds * static_cast<double>(q - i) / run});
    i = e + 1;
  }
  return Reparam(std::move(k), 1.0, 1.0);
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

Reparam refine_knots(const StepPseudotrajectory& xi, const Point& x, const Reparam& h,
                     double ds) {
  std::vector<Knot> k = h.knots();
  for (auto& kn : k) {
    const Point target = xi.at(kn.t);
    auto f = [&](double v) { return xi.flow->distance(target, xi.flow->advance(v, x)); };
    const double v = golden_min(f, kn.v - ds, kn.v + ds);
    if (f(v) < f(kn.v)) kn.v = v;
  }
  const double gap = 1e-3 * ds;
  for (std::size_t i = 1; i < k.size(); ++i) k[i].v = std::max(k[i].v, k[i - 1].v + gap);
  return Reparam(std::move(k), 1.0, 1.0);
}

std::optional<ShadowingCertificate> run_search(const StepPseudotrajectory& xi, double eps,
                                               const std::vector<Point>& candidates,
                                               const SearchParams& params, AdvanceRange range,
                                               ShadowMode mode, double eps_rep) {
  require(!candidates.empty(), ErrorKind::parameter, "empty candidate set");
  require(eps > 0, ErrorKind::parameter, "eps must be positive");
  const Resolved r = resolve(xi, params);
  const double pitch = r.dt / 4.0;
  std::vector<Point> xi_pts(r.rows);
  for (std::size_t i = 0; i < r.rows; ++i)
    xi_pts[i] = xi.at(r.t_start + static_cast<double>(i) * r.dt);
  const long prefer = std::lround(r.dt / r.ds);

  std::vector<std::optional<ShadowingCertificate>> found(candidates.size());
  std::atomic<std::size_t> first_found{candidates.size()};
  parallel_for(candidates.size(), [&](std::size_t c) {
    if (c > first_found.load()) return;
    const Point& x = candidates[c];
    if (!xi.flow->contains(x)) return;
    std::vector<Point> orbit(r.cols);
    for (std::size_t j = 0; j < r.cols; ++j)
      orbit[j] = xi.flow->advance(r.s_lo + static_cast<double>(j) * r.ds, x);
    auto value = [&](std::size_t i, std::size_t j) {
      return xi.flow->distance(xi_pts[i], orbit[j]);
    };
    const double base = params.dp_eps > 0 ? params.dp_eps : eps;
    for (int k = 0; k <= params.eps_retries; ++k) {
      const double thr = base * (1.0 - 0.1 * k);
      if (thr <= 0) break;
      const auto path = smooth_path(r.rows, r.cols, value, thr, range, prefer);
      if (!path.found) break;
      Reparam h = knots_from_path(path.columns, r);
      double sup = sup_distance(xi, x, h, r.t_start, r.t_last, pitch);
      if (mode == ShadowMode::oriented && params.refine) {
        Reparam h2 = refine_knots(xi, x, h, r.ds);
        const double sup2 = sup_distance(xi, x, h2, r.t_start, r.t_last, pitch);
        if (sup2 < sup) {
          h = std::move(h2);
          sup = sup2;
        }
      }
      if (sup < eps) {
        ShadowingCertificate cert;
        cert.x = x;
        cert.h = std::move(h);
        cert.sup_error = sup;
        cert.mode = mode;
        cert.eps = eps;
        cert.eps_rep = eps_rep;
        cert.t_lo = r.t_start;
        cert.t_hi = r.t_last;
        cert.verify_pitch = pitch;
        cert.candidate = c;
        found[c] = std::move(cert);
        std::size_t cur = first_found.load();
        while (c < cur && !first_found.compare_exchange_weak(cur, c)) {
        }
        return;
      }
    }
  });
  for (auto& f : found)
    if (f) return std::move(f);
  return std::nullopt;
}

}  // namespace

std::vector<Point> default_candidates(const StepPseudotrajectory& xi, double eps,
                                      const SearchParams& params) {
  const double margin = params.margin >= 0 ? params.margin : xi.T0;
  const long n0 = std::clamp(
      static_cast<long>(std::ceil((xi.t_lo() + margin) / xi.T0 - 1e-9)), xi.n_min, xi.n_max);
  const long n1 = std::clamp(
      static_cast<long>(std::floor((xi.t_hi() - margin) / xi.T0 + 1e-9)), n0, xi.n_max);
  const std::size_t dim = xi.flow->dim();
  std::vector<std::vector<double>> offsets;
  for (double scale : {0.5, 0.25, 0.75})
    for (std::size_t axis = 0; axis < dim; ++axis)
      for (double sign : {1.0, -1.0}) {
        std::vector<double> v(dim, 0.0);
        v[axis] = sign * scale * eps;
        offsets.push_back(v);
      }
  // Window fractions 1/2, 0, 1/4, 3/4, 1/8, 3/8, ...
  std::vector<double> fractions{0.5, 0.0};
  for (int level = 2; static_cast<int>(fractions.size()) < params.candidate_anchors; level *= 2)
    for (int q = 1; q < level; q += 2) fractions.push_back(static_cast<double>(q) / level);
  fractions.resize(static_cast<std::size_t>(std::max(params.candidate_anchors, 0)));
  std::vector<Point> out;
  std::vector<long> used;
  for (double f : fractions) {
    const long n = n0 + std::lround(f * static_cast<double>(n1 - n0));
    if (std::find(used.begin(), used.end(), n) != used.end()) continue;
    used.push_back(n);
    const Point& base = xi.anchor(n);
    out.push_back(base);
    for (int k = 0; k + 1 < params.ball_points && k < static_cast<int>(offsets.size()); ++k)
      out.push_back(xi.flow->displace(base, offsets[static_cast<std::size_t>(k)]));
  }
  return out;
}

std::optional<ShadowingCertificate> search_oriented(const StepPseudotrajectory& xi,
                                                    double eps,
                                                    const std::vector<Point>& candidates,
                                                    const SearchParams& params) {
  require(params.slope_cap >= 1, ErrorKind::parameter, "slope cap must be at least 1");
  const Resolved r = resolve(xi, params);
  const AdvanceRange range{0, static_cast<long>(std::floor(params.slope_cap * r.dt / r.ds + 1e-9))};
  return run_search(xi, eps, candidates, params, range, ShadowMode::oriented, 0.0);
}

std::optional<ShadowingCertificate> search_standard(const StepPseudotrajectory& xi,
                                                    double eps, double eps_rep,
                                                    const std::vector<Point>& candidates,
                                                    const SearchParams& params) {
  require(eps_rep > 0 && eps_rep < 1, ErrorKind::parameter, "eps_rep must lie in (0, 1)");
  const Resolved r = resolve(xi, params);
  const double ratio = r.dt / r.ds;
  const AdvanceRange range{static_cast<long>(std::ceil((1.0 - eps_rep) * ratio - 1e-9)),
                           static_cast<long>(std::floor((1.0 + eps_rep) * ratio + 1e-9))};
  if (range.lo > range.hi || range.lo < 1)
    fail(ErrorKind::grid, "slope constraint admits no column advance; refine ds");
  SearchParams p = params;
  p.refine = false;
  return run_search(xi, eps, candidates, p, range, ShadowMode::standard,
                    eps_rep + r.ds / r.dt);
}

CertificateCheck verify_certificate(const StepPseudotrajectory& xi,
                                    const ShadowingCertificate& cert) {
  CertificateCheck c;
  c.sup_error = sup_distance(xi, cert.x, cert.h, cert.t_lo, cert.t_hi, cert.verify_pitch);
  c.sup_ok = c.sup_error < cert.eps;
  c.matches_stored = std::abs(c.sup_error - cert.sup_error) <= 1e-9;
  if (cert.mode == ShadowMode::standard)
    c.rep_ok = verify_rep_eps(cert.h, cert.eps_rep, cert.t_lo, cert.t_hi).ok;
  return c;
}

}  // namespace shadowlab
