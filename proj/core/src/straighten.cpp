#include "shadowlab/straighten.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"
#include "shadowlab/singularities.hpp"

namespace shadowlab {

namespace {

std::vector<Point> subsample(const std::vector<Point>& pts, std::size_t max_count) {
  if (pts.size() <= max_count) return pts;
  std::vector<Point> out;
  const double stride = static_cast<double>(pts.size()) / static_cast<double>(max_count);
  for (std::size_t k = 0; k < max_count; ++k)
    out.push_back(pts[static_cast<std::size_t>(static_cast<double>(k) * stride)]);
  return out;
}

// Parallel minimum of f over [0, n).
template <class F>
double parallel_min(std::size_t n, F&& f) {
  std::vector<double> v(n, HUGE_VAL);
  parallel_for(n, [&](std::size_t i) { v[i] = f(i); });
  return n == 0 ? HUGE_VAL : *std::min_element(v.begin(), v.end());
}

json point_json(const Point& p) {
  return std::vector<double>(p.coords().begin(), p.coords().end());
}

}  // namespace

bool CompactRegion::contains(const Flow& flow, const Point& x) const {
  const int n = s_from == s_to ? 1 : 33;
  for (int k = 0; k < n; ++k) {
    const double s = n == 1 ? s_from : s_from + (s_to - s_from) * k / (n - 1);
    const Point y = s == 0.0 ? x : flow.advance(s, x);
    for (std::size_t i = 0; i < excluded.size(); ++i)
      if (flow.distance(y, excluded[i]) < radii[i]) return false;
  }
  return true;
}

json CompactRegion::to_json() const {
  json ex = json::array();
  for (std::size_t i = 0; i < excluded.size(); ++i)
    ex.push_back({{"point", point_json(excluded[i])}, {"radius", radii[i]}});
  return {{"label", label}, {"excluded", ex},  {"s_from", s_from},
          {"s_to", s_to},   {"mesh", mesh},    {"sample_count", samples.size()}};
}

CompactRegion make_region(const Flow& flow, std::vector<Point> excluded,
                          std::vector<double> radii, double mesh, double s_from, double s_to,
                          std::string label) {
  require(excluded.size() == radii.size(), ErrorKind::parameter,
          "one radius per excluded point is required");
  require(mesh > 0, ErrorKind::parameter, "region mesh must be positive");
  CompactRegion R;
  R.label = std::move(label);
  R.excluded = std::move(excluded);
  R.radii = std::move(radii);
  R.s_from = s_from;
  R.s_to = s_to;
  R.mesh = mesh;
  const auto cover = flow.cover(mesh);
  std::vector<std::uint8_t> keep(cover.size(), 0);
  parallel_for(cover.size(), [&](std::size_t i) { keep[i] = R.contains(flow, cover[i]); });
  for (std::size_t i = 0; i < cover.size(); ++i)
    if (keep[i]) R.samples.push_back(cover[i]);
  return R;
}

CompactRegion pulled_back(const Flow& flow, const CompactRegion& K, double s_from,
                          double s_to, std::string label) {
  return make_region(flow, K.excluded, K.radii, K.mesh, s_from, s_to, std::move(label));
}

bool check_T0(const Flow& flow, const CompactRegion& K, double T0, double margin) {
  const auto pts = subsample(K.samples, 1500);
  std::atomic<bool> ok{true};
  parallel_for(pts.size(), [&](std::size_t i) {
    for (int k = 1; k <= 32 && ok.load(std::memory_order_relaxed); ++k) {
      const double t = T0 * k / 16.0;
      if (flow.distance(flow.advance(t, pts[i]), pts[i]) < margin) {
        ok = false;
        return;
      }
    }
  });
  return ok;
}

double estimate_T0(const Flow& flow, const CompactRegion& K, double margin, double T0_max) {
  require(!K.samples.empty(), ErrorKind::region, "region has no sample points");
  for (const auto& s : flow.singularities())
    if (K.contains(flow, s.point))
      fail(ErrorKind::region, "region contains a rest point");
  for (int j = 63; j >= 1; --j) {
    const double T0 = j / 64.0;
    if (T0 > T0_max) continue;
    if (check_T0(flow, K, T0, margin)) return T0;
  }
  fail(ErrorKind::region, "no admissible T0: the region approaches a rest point");
}

double estimate_delta(const Flow& flow, const CompactRegion& K, double T0, double eps_time) {
  require(eps_time > 0 && eps_time < T0, ErrorKind::parameter, "eps_time must lie in (0, T0)");
  const auto pts = subsample(K.samples, 600);
  std::vector<double> lags;
  for (double u = eps_time; u <= T0 + 1e-15;) {
    lags.push_back(u);
    u = lags.size() < 12 ? u + 0.25 * eps_time : u * 1.25;
  }
  const double m = parallel_min(pts.size(), [&](std::size_t i) {
    double best = HUGE_VAL;
    for (int k = 0; k <= 8; ++k) {
      const double s = T0 * k / 8.0;
      const Point a = flow.advance(s, pts[i]);
      for (double u : lags) {
        if (s + u > T0 + 1e-15) break;
        best = std::min(best, flow.distance(flow.advance(s + u, pts[i]), a));
      }
    }
    return best;
  });
  if (!(m > kTolFlow)) fail(ErrorKind::resolution, "delta vanishes at grid resolution");
  return (1.0 - kDeltaSafety) * m;
}

double estimate_rho(const Flow& flow, const CompactRegion& K, double T) {
  require(T > 0, ErrorKind::parameter, "T must be positive");
  const auto pts = subsample(K.samples, 3000);
  const double m = parallel_min(pts.size(), [&](std::size_t i) {
    return flow.distance(flow.advance(T, pts[i]), pts[i]);
  });
  if (!(m > kTolFlow)) fail(ErrorKind::resolution, "rho vanishes at grid resolution");
  return 0.5 * (1.0 - kDeltaSafety) * m;
}

double estimate_eps_prime(const Flow& flow, const CompactRegion& Khat, double eps, double T,
                          double T0) {
  require(eps > 0 && eps < 1, ErrorKind::parameter, "eps must lie in (0, 1)");
  require(T > 0 && T < T0, ErrorKind::parameter, "T must lie in (0, T0)");
  CompactRegion both = Khat;
  both.samples = subsample(Khat.samples, 300);
  const std::size_t n = both.samples.size();
  for (std::size_t i = 0; i < n; ++i) both.samples.push_back(flow.advance(T, both.samples[i]));
  const double delta = estimate_delta(flow, both, T0, eps * T);
  return std::min(eps / 4.0, delta / 2.0);
}

ContractCheck check_eps_prime_contract(const Flow& flow, const CompactRegion& Khat, double eps,
                                       double eps_prime, double T, std::size_t trials,
                                       std::uint64_t seed) {
  require(!Khat.samples.empty(), ErrorKind::region, "empty region");
  ContractCheck out;
  Rng rng(seed);
  constexpr int kSteps = 8;
  for (std::size_t n = 0; n < trials; ++n) {
    const Point& x = Khat.samples[rng.next() % Khat.samples.size()];
    std::vector<double> v(flow.dim());
    double norm = 0.0;
    for (auto& c : v) {
      c = rng.uniform(-1.0, 1.0);
      norm += c * c;
    }
    const double len = rng.uniform() * eps_prime / std::max(std::sqrt(norm), 1e-12);
    for (auto& c : v) c *= len;
    const Point y = flow.displace(x, v);
    // Spread of the step ratios: small spreads meet the hypothesis, large ones probe it.
    const double spread = rng.uniform(0.0, 3.0 * eps);
    std::vector<double> g{0.0};
    for (int k = 0; k < kSteps; ++k)
      g.push_back(g.back() + T / kSteps * std::exp(spread * rng.uniform(-1.0, 1.0)));
    bool close = true;
    for (int k = 0; k <= kSteps && close; ++k)
      close = flow.distance(flow.advance(T * k / kSteps, x), flow.advance(g[k], y)) <= eps_prime;
    ++out.trials;
    if (!close) continue;
    ++out.matched;
    const double ratio = g.back() / T;
    if (std::abs(ratio - 1.0) > std::abs(out.worst_ratio - 1.0)) out.worst_ratio = ratio;
    if (std::abs(ratio - 1.0) > eps) ++out.violations;
  }
  return out;
}

double estimate_eps1(const Flow& flow, const CompactRegion& Ktilde, double eps_prime,
                     double T) {
  require(eps_prime > 0, ErrorKind::parameter, "eps_prime must be positive");
  const auto pts = subsample(Ktilde.samples, 400);
  for (int k = 0; k < 60; ++k) {
    const double e1 = eps_prime * std::ldexp(1.0, -k);
    const auto offs = ball_offsets(flow, e1);
    std::atomic<bool> ok{true};
    parallel_for(pts.size(), [&](std::size_t i) {
      for (const auto& off : offs) {
        if (!ok.load(std::memory_order_relaxed)) return;
        const Point y = flow.displace(pts[i], off);
        if (flow.distance(y, pts[i]) > e1) continue;
        for (int q = -4; q <= 4; ++q) {
          const double t = T * q / 4.0;
          if (flow.distance(flow.advance(t, pts[i]), flow.advance(t, y)) >= eps_prime) {
            ok = false;
            return;
          }
        }
      }
    });
    if (ok) return e1;
  }
  return eps_prime * std::ldexp(1.0, -60);
}

bool grid_inequality_holds(double eps, double T, double T0) {
  const double e = eps / 4.0;
  const double lo = (1.0 - e) * (1.0 - e) * (1.0 - 2.0 * T / T0) / (1.0 + e);
  const double hi = (1.0 + e) * (1.0 + e) * (1.0 + 2.0 * T / T0) / (1.0 - e);
  return 1.0 - eps <= lo && lo < hi && hi <= 1.0 + eps;
}

double choose_T(const Flow& flow, double eps, double T0, double mesh) {
  require(eps > 0 && eps < 0.8, ErrorKind::precondition, "eps must lie in (0, 4/5)");
  require(T0 > 0 && T0 < 1, ErrorKind::parameter, "T0 must lie in (0, 1)");
  const auto pts = subsample(flow.cover(mesh), 4000);
  for (long k = 2; k <= 10'000'000; ++k) {
    const double T = T0 / static_cast<double>(k);
    if (!grid_inequality_holds(eps, T, T0)) continue;
    std::atomic<bool> ok{true};
    parallel_for(pts.size(), [&](std::size_t i) {
      for (int q = 1; q <= 8 && ok.load(std::memory_order_relaxed); ++q)
        if (flow.distance(pts[i], flow.advance(2.0 * T * q / 8.0, pts[i])) >= eps / 4.0) {
          ok = false;
          return;
        }
    });
    if (ok) return T;
  }
  fail(ErrorKind::constants, "no admissible T found");
}

json ConstantsBundle::to_json() const {
  return {{"eps", eps},
          {"T0", T0},
          {"T", T},
          {"delta", delta},
          {"eps_time", eps_time},
          {"rho", rho},
          {"eps_prime", eps_prime},
          {"eps1", eps1},
          {"r0", r0},
          {"K", K.to_json()},
          {"Ktilde", Ktilde.to_json()},
          {"Khat", Khat.to_json()},
          {"provenance", provenance}};
}

ConstantsBundle ConstantsBundle::from_json(const Flow& flow, const json& j) {
  ConstantsBundle c;
  c.eps = j.at("eps");
  c.T0 = j.at("T0");
  c.T = j.at("T");
  c.delta = j.at("delta");
  c.eps_time = j.value("eps_time", 0.0);
  c.rho = j.at("rho");
  c.eps_prime = j.at("eps_prime");
  c.eps1 = j.at("eps1");
  c.r0 = j.at("r0");
  c.provenance = j.value("provenance", json::object());
  auto region = [&](const json& r) {
    std::vector<Point> ex;
    std::vector<double> radii;
    for (const auto& e : r.at("excluded")) {
      const auto v = e.at("point").get<std::vector<double>>();
      ex.emplace_back(std::span<const double>(v.data(), v.size()));
      radii.push_back(e.at("radius"));
    }
    return make_region(flow, ex, radii, r.at("mesh"), r.at("s_from"), r.at("s_to"),
                       r.at("label"));
  };
  c.K = region(j.at("K"));
  c.Ktilde = region(j.at("Ktilde"));
  c.Khat = region(j.at("Khat"));
  return c;
}

ConstantsBundle estimate_constants(const Flow& flow, double r0, double eps,
                                   const ConstantsOptions& opts) {
  require(eps > 0 && eps < 0.8, ErrorKind::precondition, "eps must lie in (0, 4/5)");
  require(r0 > 0, ErrorKind::parameter, "r0 must be positive");
  ConstantsBundle c;
  c.eps = eps;
  c.r0 = r0;
  std::vector<Point> ex;
  for (const auto& s : flow.singularities()) ex.push_back(s.point);
  c.K = make_region(flow, ex, std::vector<double>(ex.size(), r0), opts.mesh, 0, 0, "K");
  require(!c.K.samples.empty(), ErrorKind::region, "K is empty at this r0");
  if (opts.T0 > 0) {
    if (!check_T0(flow, c.K, opts.T0, opts.T0_margin))
      fail(ErrorKind::constants, "requested T0 violates the no-return condition on K");
    c.T0 = opts.T0;
    c.provenance["T0"] = "given; no-return condition checked on K";
  } else {
    c.T0 = estimate_T0(flow, c.K, opts.T0_margin, opts.T0_max);
    c.provenance["T0"] = "estimate_T0 on the j/64 grid";
  }
  c.Ktilde = pulled_back(flow, c.K, -2.0 * c.T0, 2.0 * c.T0, "Ktilde");
  c.Khat = pulled_back(flow, c.K, 0.0, c.T0, "Khat");
  require(!c.Ktilde.samples.empty() && !c.Khat.samples.empty(), ErrorKind::region,
          "pulled-back regions are empty");
  c.T = choose_T(flow, eps, c.T0, opts.mesh);
  c.provenance["T"] = "largest T0/k passing the displacement sample check and the bounds";
  c.eps_time = c.T0 / 4.0;
  c.delta = estimate_delta(flow, c.K, c.T0, c.eps_time);
  c.provenance["delta"] = "sampled minimum over K, eps_time = T0/4, safety 0.1";
  c.rho = estimate_rho(flow, c.K, c.T);
  c.provenance["rho"] = "half the sampled minimum displacement at time T over K, safety 0.1";
  c.eps_prime = estimate_eps_prime(flow, c.Khat, eps, c.T, c.T0);
  c.provenance["eps_prime"] = "min(eps/4, delta(Khat and its T-image, eps T)/2)";
  for (int halvings = 0;; ++halvings) {
    const auto chk = check_eps_prime_contract(flow, c.Khat, eps, c.eps_prime, c.T, 1000, 1);
    c.provenance["eps_prime_contract"] = {{"trials", chk.trials},
                                          {"matched", chk.matched},
                                          {"violations", chk.violations},
                                          {"halvings", halvings}};
    if (chk.violations == 0) break;
    if (halvings == 8) fail(ErrorKind::constants, "eps_prime contract keeps failing");
    c.eps_prime *= 0.5;
  }
  c.eps1 = estimate_eps1(flow, c.Ktilde, c.eps_prime, c.T);
  c.provenance["eps1"] = "largest eps_prime 2^-k passing the sampled continuity check";
  require(grid_inequality_holds(eps, c.T, c.T0), ErrorKind::constants,
          "grid inequality fails for the chosen T");
  return c;
}

json StraightenResult::to_json() const {
  return {{"route", route == HypothesisRoute::strict ? "strict" : "direct"},
          {"hypothesis_sup", hypothesis_sup},
          {"grid_slack", grid_slack},
          {"t_x", t_x},
          {"t_y", t_y},
          {"blocks", blocks},
          {"max_block_deviation", max_block_deviation},
          {"sup_h_ghat", sup_h_ghat},
          {"sup_gtilde_h", sup_gtilde_h},
          {"scale", scale},
          {"sup_error", sup_error},
          {"P1", p1},
          {"P2", p2},
          {"P3", p3},
          {"g_tilde", g_tilde.to_json()}};
}

StraightenResult straighten(const StepPseudotrajectory& xi, double t0, double T1,
                            const Reparam& g, const Point& y, double eps,
                            const ConstantsBundle& consts) {
  require(eps > 0 && eps < 0.8, ErrorKind::precondition, "eps must lie in (0, 4/5)");
  require(std::abs(xi.T0 - consts.T0) <= 1e-12, ErrorKind::constants,
          "pseudotrajectory step differs from the bundle's T0");
  require(eps >= consts.eps * (1.0 - 1e-12), ErrorKind::constants,
          "bundle was estimated for a larger eps");
  require(T1 >= consts.T0 - 1e-12, ErrorKind::precondition, "segment shorter than T0");
  require(std::abs(g(0.0)) <= 1e-12, ErrorKind::precondition, "g(0) must be 0");
  const Flow& flow = *xi.flow;
  const double T = consts.T;
  StraightenResult res;

  auto ghat = [&](double t) {
    if (t <= 0.0) return t;
    if (t >= T1) return g(T1) + t - T1;
    return g(t);
  };

  // Hypothesis on a grid of pitch at most T/2.
  const auto samples = static_cast<long>(std::ceil(T1 / (0.5 * T)));
  const double pitch = T1 / static_cast<double>(samples);
  double max_slope = 0.0;
  for (double s : g.slopes()) max_slope = std::max(max_slope, s);
  res.grid_slack = 0.5 * pitch * flow.speed_bound() * (1.0 + max_slope);
  double worst_t = 0.0;
  {
    std::vector<double> d(static_cast<std::size_t>(samples) + 1);
    parallel_for(d.size(), [&](std::size_t k) {
      const double t = pitch * static_cast<double>(k);
      d[k] = flow.distance(xi.at(t + t0), flow.advance(g(t), y));
    });
    const auto it = std::max_element(d.begin(), d.end());
    res.hypothesis_sup = *it;
    worst_t = pitch * static_cast<double>(it - d.begin());
  }

  // Alignment with the T-grid.
  res.t_x = t0 - T * std::floor(t0 / T + 1e-9);
  if (res.t_x >= T - 1e-12 || res.t_x < 1e-12) res.t_x = 0.0;
  const double end = t0 + T1;
  res.t_y = T * std::ceil(end / T - 1e-9) - end;
  if (res.t_y >= T - 1e-12 || res.t_y < 1e-12) res.t_y = 0.0;
  const double T1p = T1 + res.t_x + res.t_y;
  res.blocks = std::lround(T1p / T);
  std::vector<Knot> hk;
  for (long n = 0; n <= res.blocks; ++n) {
    const double tau = -res.t_x + static_cast<double>(n) * T;
    hk.push_back({tau, ghat(tau)});
  }
  for (long n = 0; n < res.blocks; ++n) {
    const double r = (hk[static_cast<std::size_t>(n + 1)].v - hk[static_cast<std::size_t>(n)].v) / T;
    res.block_ratios.push_back(r);
    res.max_block_deviation = std::max(res.max_block_deviation, std::abs(r - 1.0));
  }

  bool strict = res.hypothesis_sup < consts.eps1;
  if (strict) {
    const double kp = consts.T0 / 8.0;
    for (double t = 0.0; t <= T1 + 1e-12 && strict; t += kp)
      strict = consts.Ktilde.contains(flow, xi.at(t + t0)) &&
               consts.Ktilde.contains(flow, flow.advance(g(t), y));
  }
  const bool direct = res.hypothesis_sup + res.grid_slack < eps / 4.0 &&
                      res.max_block_deviation <= eps / 4.0;
  if (!strict && !direct)
    fail(ErrorKind::precondition,
         "straightening hypothesis fails at t = " + std::to_string(worst_t) +
             " (sup " + std::to_string(res.hypothesis_sup) + ", block deviation " +
             std::to_string(res.max_block_deviation) + ")");
  res.route = strict ? HypothesisRoute::strict : HypothesisRoute::direct;

  res.h = Reparam(hk, 1.0, 1.0);
  {
    std::vector<double> pts;
    for (const auto& k : hk) pts.push_back(k.t);
    for (const auto& k : g.knots())
      if (k.t > hk.front().t && k.t < hk.back().t) pts.push_back(k.t);
    for (double t : {0.0, T1}) pts.push_back(t);
    for (double t : pts) res.sup_h_ghat = std::max(res.sup_h_ghat, std::abs(res.h(t) - ghat(t)));
  }

  res.g_tilde = rescale_to_endpoints(res.h, T1, 0.0, g(T1));
  res.scale = g(T1) / (res.h(T1) - res.h(0.0));
  {
    std::vector<double> pts{0.0, T1};
    for (const auto& k : hk)
      if (k.t > 0.0 && k.t < T1) pts.push_back(k.t);
    for (double t : pts)
      res.sup_gtilde_h = std::max(res.sup_gtilde_h, std::abs(res.g_tilde(t) - res.h(t)));
  }

  res.p1 = verify_rep_eps(res.g_tilde, eps, 0.0, T1).ok;
  res.p2 = res.g_tilde(0.0) == 0.0 && std::abs(res.g_tilde(T1) - g(T1)) <= 1e-9;
  {
    std::vector<double> d(static_cast<std::size_t>(samples) + 1);
    parallel_for(d.size(), [&](std::size_t k) {
      const double t = pitch * static_cast<double>(k);
      d[k] = flow.distance(xi.at(t + t0), flow.advance(res.g_tilde(t), y));
    });
    res.sup_error = *std::max_element(d.begin(), d.end());
  }
  res.p3 = res.sup_error < eps;
  if (!(res.p1 && res.p2 && res.p3))
    fail(ErrorKind::constants,
         std::string("straightened map fails ") + (res.p1 ? "" : "P1 ") + (res.p2 ? "" : "P2 ") +
             (res.p3 ? "" : "P3 ") + "(sup " + std::to_string(res.sup_error) + ")");
  return res;
}

AbsoluteStraighten straighten_absolute(const StepPseudotrajectory& xi, const Point& x,
                                       const Reparam& H, double a, double b, double eps,
                                       const ConstantsBundle& consts) {
  require(b > a, ErrorKind::window, "empty straightening segment");
  const double Ha = H(a);
  const Point y = xi.flow->advance(Ha, x);
  const Reparam g = shifted(H, a, -Ha);
  AbsoluteStraighten out;
  out.detail = straighten(xi, a, b - a, g, y, eps, consts);
  out.H = shifted(out.detail.g_tilde, -a, Ha);
  return out;
}

}  // namespace shadowlab
