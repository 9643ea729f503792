#include "shadowlab/glue.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"

namespace shadowlab {

Reparam splice_reparam(const std::vector<SplicePiece>& pieces) {
  require(!pieces.empty(), ErrorKind::parameter, "nothing to splice");
  require(pieces.front().lo == -HUGE_VAL && pieces.back().hi == HUGE_VAL, ErrorKind::parameter,
          "pieces must cover the real line");
  std::vector<Knot> k;
  auto push = [&](double t, double v) {
    if (!k.empty() && (t - k.back().t < kKnotStrictness)) return;
    k.push_back({t, v});
  };
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    require(p.lo < p.hi, ErrorKind::parameter, "empty splice piece");
    if (i > 0)
      require(std::abs(pieces[i - 1].hi - p.lo) <= 1e-12, ErrorKind::parameter,
              "splice pieces are not contiguous");
    for (const auto& kn : p.h.knots())
      if (kn.t > p.lo + kKnotStrictness && kn.t < p.hi - kKnotStrictness) push(kn.t, kn.v);
    if (i + 1 < pieces.size()) {
      const double b = p.hi;
      const double vl = p.h(b), vr = pieces[i + 1].h(b);
      if (std::abs(vl - vr) > kSpliceTolerance)
        fail(ErrorKind::splice, "pieces disagree at t = " + std::to_string(b) + " by " +
                                    std::to_string(std::abs(vl - vr)));
      push(b, vl);
    }
  }
  if (k.empty()) return pieces.front().h;
  return Reparam(std::move(k), pieces.front().h.left_slope(), pieces.back().h.right_slope());
}

json CaseClassification::to_json() const {
  auto hit = [](const std::optional<SingularHit>& h) -> json {
    if (!h) return nullptr;
    return {{"index", h->index},
            {"point", std::vector<double>(h->point.coords().begin(), h->point.coords().end())},
            {"time", h->time}};
  };
  json w = json::array();
  for (const auto& [a, b] : windows) w.push_back({a, b});
  return {{"case_id", case_id},
          {"stable_hit", hit(stable_hit)},
          {"unstable_hit", hit(unstable_hit)},
          {"windows", w}};
}

CaseClassification classify_case(const StepPseudotrajectory& xi,
                                 const std::vector<double>& hit_radius, double trap_radius,
                                 double t_lo, double t_hi) {
  const Flow& flow = *xi.flow;
  const auto& sing = flow.singularities();
  require(hit_radius.size() == sing.size(), ErrorKind::parameter,
          "one hit radius per singularity is required");
  require(t_lo < t_hi, ErrorKind::window, "empty classification window");
  const double dt = xi.T0 / 8.0;
  const auto nt = static_cast<std::size_t>(std::floor((t_hi - t_lo) / dt + 1e-9)) + 1;
  std::vector<Point> samples(nt);
  for (std::size_t k = 0; k < nt; ++k) samples[k] = xi.at(t_lo + static_cast<double>(k) * dt);
  auto time = [&](std::size_t k) { return t_lo + static_cast<double>(k) * dt; };

  CaseClassification c;
  for (std::size_t i = 0; i < sing.size(); ++i) {
    std::vector<double> dist(nt);
    for (std::size_t k = 0; k < nt; ++k) dist[k] = flow.distance(samples[k], sing[i].point);
    std::vector<std::size_t> hits;
    for (std::size_t k = 0; k < nt; ++k)
      if (dist[k] < hit_radius[i]) hits.push_back(k);
    if (hits.empty()) continue;
    auto trapped = [&](std::size_t a, std::size_t b) {  // on samples [a, b)
      for (std::size_t k = a; k < b; ++k)
        if (!(dist[k] < trap_radius)) return false;
      return true;
    };
    const auto& st = sing[i].stability;
    std::optional<std::size_t> t0, t1;
    if (st.stable && st.unstable) {
      // Trapping in both time directions confines the whole chain.
      if (!trapped(0, nt))
        fail(ErrorKind::constants, "chain leaves B(trap, p) around singularity " +
                                       std::to_string(i));
      std::size_t first_end = hits.front();
      while (first_end + 1 < nt && dist[first_end + 1] < hit_radius[i]) ++first_end;
      std::size_t last_start = hits.back();
      while (last_start > 0 && dist[last_start - 1] < hit_radius[i]) --last_start;
      const bool head = hits.front() == 0, tail = hits.back() + 1 == nt;
      if (head && tail && first_end < last_start) {
        t1 = first_end;
        t0 = last_start;
      } else if (head && !tail) {
        t1 = hits.back();
      } else {
        t0 = hits.front();
      }
    } else if (st.stable) {
      if (!trapped(hits.front(), nt))
        fail(ErrorKind::constants, "trapping fails after entering singularity " +
                                       std::to_string(i) + " at t = " +
                                       std::to_string(time(hits.front())));
      t0 = hits.front();
    } else if (st.unstable) {
      if (!trapped(0, hits.back() + 1))
        fail(ErrorKind::constants, "trapping fails before leaving singularity " +
                                       std::to_string(i) + " at t = " +
                                       std::to_string(time(hits.back())));
      t1 = hits.back();
    } else {
      fail(ErrorKind::precondition, "singularity " + std::to_string(i) +
                                        " is neither stable nor unstable");
    }
    if (t0) {
      if (c.stable_hit) fail(ErrorKind::constants, "chain trapped at two stable singularities");
      c.stable_hit = SingularHit{i, sing[i].point, time(*t0)};
    }
    if (t1) {
      if (c.unstable_hit)
        fail(ErrorKind::constants, "chain trapped at two unstable singularities");
      c.unstable_hit = SingularHit{i, sing[i].point, time(*t1)};
    }
  }
  // Too short a free stretch: the stable trapping covers it.
  if (c.stable_hit && c.unstable_hit && c.stable_hit->time - c.unstable_hit->time < xi.T0) {
    c.stable_hit->time = std::min(c.stable_hit->time, c.unstable_hit->time);
    c.unstable_hit.reset();
  }
  c.case_id = c.stable_hit ? (c.unstable_hit ? 4 : 2) : (c.unstable_hit ? 3 : 1);
  const double a = c.unstable_hit ? c.unstable_hit->time : t_lo;
  const double b = c.stable_hit ? c.stable_hit->time : t_hi;
  if (b - a >= xi.T0) c.windows.push_back({a, b});
  return c;
}

TrapRadius estimate_trap_radius(const FlowPtr& flow, std::size_t index, double V, double d,
                                double T0, std::uint64_t seed) {
  const auto& s = flow->singularities().at(index);
  for (int k = 1; k <= 8; ++k) {
    const double U = std::ldexp(V, -k);
    bool ok = true;
    if (s.stability.stable)
      ok = probe_trapping(flow, s.point, U, V, d, T0, 20.0, Direction::forward, seed).trapped;
    if (ok && s.stability.unstable)
      ok = probe_trapping(flow, s.point, U, V, d, T0, 20.0, Direction::backward, seed).trapped;
    if (ok) return {U, true};
  }
  const auto rep = classify_singularity(*flow, s.point, {V});
  double U = 0.0;
  for (const auto* dv : {&rep.stable, &rep.unstable})
    if (dv->verdict == Verdict::holds && !dv->pairs.empty())
      U = U == 0.0 ? dv->pairs.front().U : std::min(U, dv->pairs.front().U);
  if (U == 0.0) fail(ErrorKind::constants, "no trapping neighborhood found");
  return {U, false};
}

json Theorem1Outcome::to_json() const {
  json s = json::array();
  for (const auto& r : straightened) {
    json j = r.to_json();
    j.erase("g_tilde");
    s.push_back(j);
  }
  return {{"seed", seed},
          {"case_id", case_id},
          {"d", d},
          {"oriented_ok", oriented_ok},
          {"standard_ok", standard_ok},
          {"sup_error", sup_error},
          {"retries", retries},
          {"cases", cases.to_json()},
          {"oriented", oriented ? oriented->to_json() : json(nullptr)},
          {"standard", standard ? standard->to_json() : json(nullptr)},
          {"straightened", s},
          {"note", note}};
}

Theorem1Outcome standard_from_oriented(const StepPseudotrajectory& xi,
                                       const ShadowingCertificate& oriented,
                                       const CaseClassification& cases, double eps0,
                                       const ConstantsBundle& consts) {
  require(eps0 > consts.eps, ErrorKind::constants,
          "constants must be estimated for an eps below eps0");
  const auto& sing = xi.flow->singularities();
  for (const auto& s : sing)
    require(s.stability.stable || s.stability.unstable, ErrorKind::precondition,
            "every singularity must be stable or unstable");
  for (std::size_t i = 0; i < sing.size(); ++i)
    for (std::size_t j = i + 1; j < sing.size(); ++j)
      require(3.0 * eps0 < xi.flow->distance(sing[i].point, sing[j].point),
              ErrorKind::precondition, "eps0 does not separate the singularities");

  Theorem1Outcome out;
  out.case_id = cases.case_id;
  out.cases = cases;
  out.oriented = oriented;
  out.oriented_ok = true;
  out.d = xi.defect;
  out.seed = xi.seed;

  Reparam H;
  if (cases.windows.empty()) {
    const double m = oriented.t_lo;
    H = Reparam({{m, oriented.h(m)}}, 1.0, 1.0);
  } else {
    std::vector<SplicePiece> pieces;
    double prev = -HUGE_VAL;
    for (const auto& [a, b] : cases.windows) {
      auto s = straighten_absolute(xi, oriented.x, oriented.h, a, b, consts.eps, consts);
      out.straightened.push_back(s.detail);
      pieces.push_back({prev, b, s.H});
      prev = b;
    }
    pieces.back().hi = HUGE_VAL;
    H = splice_reparam(pieces);
  }

  ShadowingCertificate st;
  st.x = oriented.x;
  st.h = H;
  st.mode = ShadowMode::standard;
  st.eps = eps0;
  st.eps_rep = eps0;
  st.t_lo = oriented.t_lo;
  st.t_hi = oriented.t_hi;
  st.verify_pitch = oriented.verify_pitch;
  st.sup_error = sup_distance(xi, st.x, st.h, st.t_lo, st.t_hi, st.verify_pitch);
  out.sup_error = st.sup_error;
  out.standard_ok = verify_certificate(xi, st).ok();
  if (!out.standard_ok) out.note = "standard certificate fails re-verification";
  out.standard = std::move(st);
  return out;
}

Theorem1Outcome theorem1_trial(const ChainFactory& make_chain, double d,
                               const ConstantsBundle& consts, const Theorem1Params& params,
                               std::uint64_t seed) {
  const double trap = params.trap_radius > 0 ? params.trap_radius : params.eps0 / 4.0;
  Theorem1Outcome out;
  for (int r = 0; r <= params.max_retries; ++r) {
    const double dr = std::ldexp(d, -r);
    const StepPseudotrajectory xi = make_chain(dr);
    std::vector<double> hits = params.hit_radius;
    if (hits.empty()) hits.assign(xi.flow->singularities().size(), 2.0 * consts.r0);
    const auto cands = default_candidates(xi, params.eps1, params.search);
    auto cert = search_oriented(xi, params.eps1, cands, params.search);
    if (!cert) {
      out = Theorem1Outcome{};
      out.d = dr;
      out.retries = r;
      out.note = "oriented search fails at eps1";
      try {
        out.case_id = classify_case(xi, hits, trap, xi.t_lo(), xi.t_hi()).case_id;
      } catch (const Error&) {
      }
      break;
    }
    try {
      const auto cases = classify_case(xi, hits, trap, cert->t_lo, cert->t_hi);
      out = standard_from_oriented(xi, *cert, cases, params.eps0, consts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::constants && e.kind() != ErrorKind::precondition) throw;
      out = Theorem1Outcome{};
      out.oriented = cert;
      out.oriented_ok = true;
      out.sup_error = cert->sup_error;
      out.note = e.what();
    }
    out.d = dr;
    out.retries = r;
    if (out.standard_ok) break;
  }
  out.seed = seed;
  return out;
}

json ProductConstants::to_json() const {
  return {{"r1", r1}, {"r2", r2}, {"S0", S0}, {"tau0", tau0}, {"eps_mid", eps_mid}};
}

ProductConstants estimate_product_constants(const Flow& flow2, double r1, double r2,
                                            double eps0, double eps1) {
  require(r1 > 0 && r2 > 0 && eps0 > 0 && eps1 > 0, ErrorKind::parameter,
          "product constants need positive radii and tolerances");
  const auto& sing = flow2.singularities();
  require(!sing.empty(), ErrorKind::precondition, "second factor has no singularities");
  auto near = [&](const Point& x, double r, bool stable_side) {
    for (const auto& s : sing)
      if ((stable_side ? s.stability.stable : s.stability.unstable) &&
          flow2.distance(x, s.point) < r)
        return true;
    return false;
  };
  auto in_F = [&](const Point& x) {
    for (const auto& s : sing)
      if (flow2.distance(x, s.point) < r2) return false;
    return true;
  };
  std::vector<Point> F;
  for (const auto& x : flow2.cover(0.01))
    if (in_F(x)) F.push_back(x);
  require(!F.empty(), ErrorKind::region, "F is empty at this r2");

  constexpr double kStep = 0.05;
  constexpr double kHorizon = 200.0;
  std::vector<double> transit(F.size(), 0.0);
  parallel_for(F.size(), [&](std::size_t i) {
    double worst = 0.0;
    for (double sign : {1.0, -1.0}) {
      double t = 0.0;
      while (!near(flow2.advance(sign * t, F[i]), 0.5 * r2, sign > 0)) {
        t += kStep;
        if (t > kHorizon) {
          t = HUGE_VAL;
          break;
        }
      }
      worst = std::max(worst, t);
    }
    transit[i] = worst;
  });
  ProductConstants pc;
  pc.r1 = r1;
  pc.r2 = r2;
  const double worst = *std::max_element(transit.begin(), transit.end());
  if (!std::isfinite(worst)) fail(ErrorKind::constants, "an orbit from F never reaches Sing");
  pc.S0 = worst + 1.0;

  const double bound = std::min(r2, eps0 / 4.0);
  const auto pts = flow2.cover(0.01);
  for (double tau = 1.0; tau > 1e-9; tau *= 0.9) {
    double sup = 0.0;
    for (const auto& x : pts)
      for (double s : {tau, -tau, 0.5 * tau, -0.5 * tau})
        sup = std::max(sup, flow2.distance(x, flow2.advance(s, x)));
    if (sup < bound) {
      pc.tau0 = tau;
      break;
    }
  }
  require(pc.tau0 > 0, ErrorKind::constants, "no admissible tau0");
  pc.eps_mid = std::min({r1, r2, eps1, eps0 / 4.0, pc.tau0 / (2.0 * pc.S0)});
  return pc;
}

StepPseudotrajectory factor_chain(const StepPseudotrajectory& xi, int k) {
  const auto [f1, f2] = product_factors(*xi.flow);
  require(f1 && f2, ErrorKind::parameter, "chain is not on a product flow");
  require(k == 0 || k == 1, ErrorKind::parameter, "factor index must be 0 or 1");
  StepPseudotrajectory out;
  out.flow = k == 0 ? f1 : f2;
  out.T0 = xi.T0;
  out.n_min = xi.n_min;
  out.n_max = xi.n_max;
  out.defect = xi.defect;
  out.seed = xi.seed;
  const std::size_t off = k == 0 ? 0 : f1->dim();
  for (const auto& a : xi.anchors) out.anchors.push_back(a.slice(off, out.flow->dim()));
  return out;
}

json ProductOutcome::to_json() const {
  return {{"seed", seed},
          {"case_id", case_id},
          {"subcase", subcase},
          {"d", d},
          {"factor_ok", factor_ok},
          {"ok", ok},
          {"middle_ok", middle_ok},
          {"sup_error", sup_error},
          {"retries", retries},
          {"s0", s0},
          {"window", {window.first, window.second}},
          {"certificate", certificate ? certificate->to_json() : json(nullptr)},
          {"note", note}};
}

namespace {

Reparam line_through(double t0, double v0, double t1, double v1) {
  return Reparam({{t0, v0}, {t1, v1}}, 1.0, 1.0);
}

double dist_to_sing(const Flow& f, const Point& x) {
  double m = HUGE_VAL;
  for (const auto& s : f.singularities()) m = std::min(m, f.distance(x, s.point));
  return m;
}

}  // namespace

ProductOutcome product_shadow(const StepPseudotrajectory& xi, double eps0,
                              const ConstantsBundle& consts1, const ProductConstants& pc,
                              const Theorem2Params& params) {
  const auto [f1, f2] = product_factors(*xi.flow);
  require(f1 && f2, ErrorKind::parameter, "chain is not on a product flow");
  require(f2->limit_set_is_singular(), ErrorKind::precondition,
          "second factor's limit set is not its singularity set");
  ProductOutcome out;
  out.d = xi.defect;
  out.seed = xi.seed;
  const auto xi1 = factor_chain(xi, 0);
  const auto xi2 = factor_chain(xi, 1);
  const auto cert1 = search_oriented(xi1, params.eps1,
                                     default_candidates(xi1, params.eps1, params.search),
                                     params.search);
  if (!cert1) {
    out.note = "first factor has no oriented certificate at eps1";
    return out;
  }
  out.factor_ok = true;
  const double lo = cert1->t_lo, hi = cert1->t_hi;
  const Point& x0 = cert1->x;
  const Reparam& h = cert1->h;

  const double dt = xi.T0 / 8.0;
  const auto nt = static_cast<std::size_t>(std::floor((hi - lo) / dt + 1e-9)) + 1;
  auto time = [&](std::size_t k) { return lo + static_cast<double>(k) * dt; };
  std::vector<Point> s1(nt), s2(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    s1[k] = xi1.at(time(k));
    s2[k] = xi2.at(time(k));
  }

  // Case 1: some s0 with xi1(s0) near Sing(phi1) and xi2(s0) in F.
  std::optional<std::size_t> run_a, run_b;
  for (std::size_t k = 0; k < nt; ++k) {
    const bool hit = dist_to_sing(*f1, s1[k]) < 3.0 * pc.r1 && dist_to_sing(*f2, s2[k]) >= pc.r2;
    if (hit && !run_a) run_a = k;
    if (hit) run_b = k;
    if (!hit && run_a) break;
  }

  Point point;
  Reparam hh;
  if (run_a) {
    out.case_id = 1;
    const std::size_t ks = (*run_a + *run_b) / 2;
    const double s0 = time(ks);
    out.s0 = s0;
    Point p1;
    double best = HUGE_VAL;
    for (const auto& s : f1->singularities())
      if (f1->distance(s1[ks], s.point) < best) {
        best = f1->distance(s1[ks], s.point);
        p1 = s.point;
      }
    auto trapped = [&](std::size_t k) {
      return f1->distance(s1[k], p1) < eps0 / 2.0 &&
             f1->distance(f1->advance(h(time(k)), x0), p1) < eps0 / 2.0;
    };
    if (!trapped(ks)) {
      out.note = "first factor match is not trapped at s0";
      return out;
    }
    std::size_t ka = ks, kb = ks;
    while (ka > 0 && trapped(ka - 1)) --ka;
    while (kb + 1 < nt && trapped(kb + 1)) ++kb;
    out.window = {time(ka), time(kb)};
    const double L = ka == 0 ? std::min(lo, s0 - pc.S0) - 1.0 : time(ka);
    const double R = kb + 1 == nt ? std::max(hi, s0 + pc.S0) + 1.0 : time(kb);
    const double I_lo = std::max(s0 - pc.S0, L + 0.25 * (s0 - L));
    const double I_hi = std::min(s0 + pc.S0, R - 0.25 * (R - s0));
    const double hs0 = h(s0);
    const Reparam outer = shifted(h, 0.0, -hs0);
    if (!(outer(L) < I_lo - s0 && I_hi - s0 < outer(R))) {
      out.note = "trap window too short for a monotone splice around s0";
      return out;
    }
    hh = splice_reparam({{-HUGE_VAL, L, outer},
                         {L, I_lo, line_through(L, outer(L), I_lo, I_lo - s0)},
                         {I_lo, I_hi, line_through(I_lo, I_lo - s0, I_hi, I_hi - s0)},
                         {I_hi, R, line_through(I_hi, I_hi - s0, R, outer(R))},
                         {R, HUGE_VAL, outer}});
    point = Point::concat(f1->advance(hs0, x0), s2[ks]);
  } else {
    out.case_id = 2;
    std::vector<int> owner(nt, -1);  // index of the r2-ball containing xi2, or -1 in F
    const auto& sing2 = f2->singularities();
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t i = 0; i < sing2.size(); ++i)
        if (f2->distance(s2[k], sing2[i].point) < pc.r2) owner[k] = static_cast<int>(i);
    const bool never_free = std::none_of(owner.begin(), owner.end(), [](int o) { return o < 0; });
    if (never_free && std::all_of(owner.begin(), owner.end(),
                                  [&](int o) { return o == owner.front(); })) {
      out.subcase = 1;
      hh = h;
      point = Point::concat(x0, sing2[static_cast<std::size_t>(owner.front())].point);
    } else {
      // Crossing: last time near an unstable q before the first later time near a stable p.
      std::optional<std::size_t> ka, kb;
      for (std::size_t k = 0; k < nt; ++k) {
        if (owner[k] >= 0 && sing2[static_cast<std::size_t>(owner[k])].stability.unstable &&
            !kb)
          ka = k;
        if (ka && k > *ka && owner[k] >= 0 && owner[k] != owner[*ka] &&
            sing2[static_cast<std::size_t>(owner[k])].stability.stable) {
          kb = k;
          break;
        }
      }
      if (!ka || !kb) {
        out.note = "crossing window not found: second factor segment at t = " +
                   std::to_string(lo) + ".." + std::to_string(hi) + " is not q to p";
        return out;
      }
      out.subcase = 2;
      double a = time(*ka), b = time(*kb);
      if (b - a < xi.T0) {
        const double pad = 0.5 * (xi.T0 - (b - a)) + 1e-9;
        a = std::max(lo, a - pad);
        b = std::min(hi, b + pad);
      }
      out.window = {a, b};
      const auto st = straighten_absolute(xi1, x0, h, a, b, pc.eps_mid, consts1);
      hh = splice_reparam({{-HUGE_VAL, a, h}, {a, b, st.H}, {b, HUGE_VAL, h}});
      out.middle_ok = verify_rep_eps(hh, pc.eps_mid, a, b).ok;
      point = Point::concat(x0, f2->advance(-hh(a), xi2.at(a)));
    }
  }

  ShadowingCertificate cert;
  cert.x = point;
  cert.h = hh;
  cert.mode = ShadowMode::oriented;
  cert.eps = eps0;
  cert.t_lo = lo;
  cert.t_hi = hi;
  cert.verify_pitch = cert1->verify_pitch;
  cert.sup_error = sup_distance(xi, cert.x, cert.h, lo, hi, cert.verify_pitch);
  out.sup_error = cert.sup_error;
  out.ok = verify_certificate(xi, cert).ok() && out.middle_ok;
  if (!out.ok) out.note = "product certificate fails re-verification";
  out.certificate = std::move(cert);
  return out;
}

ProductOutcome theorem2_trial(const ChainFactory& make_chain, double d,
                              const ConstantsBundle& consts1, const ProductConstants& pc,
                              const Theorem2Params& params, std::uint64_t seed) {
  ProductOutcome out;
  for (int r = 0; r <= params.max_retries; ++r) {
    const double dr = std::ldexp(d, -r);
    const auto xi = make_chain(dr);
    try {
      out = product_shadow(xi, params.eps0, consts1, pc, params);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::constants && e.kind() != ErrorKind::precondition) throw;
      out = ProductOutcome{};
      out.factor_ok = true;
      out.note = e.what();
    }
    out.d = dr;
    out.retries = r;
    if (out.ok || !out.factor_ok) break;
  }
  out.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

JumpRule uniform_rule(const Flow& f, double d) {
  return [&f, d](long, const Point&, Rng& rng) { return uniform_jump(f, 0.999 * d, rng); };
}

JumpRule toward_rule(const Flow& f, Point target, double d) {
  return [&f, target, d](long, const Point& from, Rng&) {
    return directed_jump(f, from, target, d);
  };
}

// Radial jump toward the circle of radius rho (disk chart).
JumpRule hold_rule(double rho, double d) {
  return [rho, d](long, const Point& x, Rng&) -> std::vector<double> {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return {std::min(0.9 * d, rho), 0.0};
    const double step = std::clamp(rho - r, -0.9 * d, 0.9 * d);
    return {step * x[0] / r, step * x[1] / r};
  };
}

// Rule a for |n| < n_switch, rule b beyond.
JumpRule switch_rule(JumpRule a, JumpRule b, long n_switch) {
  return [a = std::move(a), b = std::move(b), n_switch](long n, const Point& x, Rng& rng) {
    return std::labs(n) < n_switch ? a(n, x, rng) : b(n, x, rng);
  };
}

// Concatenates per-factor rules for a product flow.
JumpRule product_rule(JumpRule first, JumpRule second, const Flow& f1, const Flow& f2) {
  return [first = std::move(first), second = std::move(second), &f1, &f2](
             long n, const Point& x, Rng& rng) {
    auto v = first(n, x.slice(0, f1.dim()), rng);
    const auto w = second(n, x.slice(f1.dim(), f2.dim()), rng);
    v.insert(v.end(), w.begin(), w.end());
    return v;
  };
}

}  // namespace

StepPseudotrajectory disk_scenario(const FlowPtr& disk, int case_id, double d,
                                   const ScenarioWindow& w, std::uint64_t seed) {
  require(disk->space() == SpaceKind::disk, ErrorKind::parameter, "disk scenario needs the disk");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  const Point origin{0.0, 0.0};
  const Flow& f = *disk;
  switch (case_id) {
    case 1:
      return build_chain(disk, polar_point(rng.uniform(0.6, 0.8), theta), d, w.T0, w.n_min,
                         w.n_max, uniform_rule(f, d), uniform_rule(f, d), seed);
    case 2:
    case 3:
    case 4: {
      const double rho = rng.uniform(0.028, 0.034);
      const long n_switch = 8 + static_cast<long>(8.0 * rng.uniform());
      const JumpRule sink = switch_rule(hold_rule(rho, d), toward_rule(f, origin, d), n_switch);
      const JumpRule hold = hold_rule(rho, d);
      return build_chain(disk, polar_point(rho, theta), d, w.T0, w.n_min, w.n_max,
                         case_id == 3 ? hold : sink, case_id == 2 ? hold : sink, seed);
    }
    default:
      fail(ErrorKind::parameter, "disk scenario case must be 1..4");
  }
}

StepPseudotrajectory product_scenario(const FlowPtr& product, int case_id, int subcase,
                                      double d, const ScenarioWindow& w, std::uint64_t seed) {
  const auto [f1, f2] = product_factors(*product);
  require(f1 && f2 && f1->space() == SpaceKind::disk && f2->space() == SpaceKind::circle,
          ErrorKind::parameter, "product scenario needs disk x circle");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  const Point origin{0.0, 0.0};
  Point a, b;
  JumpRule r1f, r1b, r2f, r2b;
  if (case_id == 1) {
    a = polar_point(rng.uniform(0.0, 0.01), theta);
    r1f = r1b = toward_rule(*f1, origin, d);
  } else {
    a = polar_point(rng.uniform(0.6, 0.8), theta);
    r1f = r1b = uniform_rule(*f1, d);
  }
  if (case_id == 2 && subcase == 1) {
    b = Point{rng.uniform(0.0, 2.0 * d)};
    r2f = r2b = toward_rule(*f2, Point{0.0}, d);
  } else {
    b = Point{std::numbers::pi / 2.0 + rng.uniform(-0.3, 0.3)};
    r2f = r2b = uniform_rule(*f2, d);
  }
  return build_chain(product, Point::concat(a, b), d, w.T0, w.n_min, w.n_max,
                     product_rule(r1f, r2f, *f1, *f2), product_rule(r1b, r2b, *f1, *f2), seed);
}

StepPseudotrajectory circle_scenario(const FlowPtr& circle, double d, const ScenarioWindow& w,
                                     std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const Point x0{rng.uniform(0.0, 2.0 * std::numbers::pi)};
  return build_chain(circle, x0, d, w.T0, w.n_min, w.n_max, uniform_rule(*circle, d),
                     uniform_rule(*circle, d), seed);
}

StepPseudotrajectory radial_gap_chain(const FlowPtr& disk, double jump, const ScenarioWindow& w) {
  require(disk->space() == SpaceKind::disk, ErrorKind::parameter, "radial gap chain needs the disk");
  // Outward jumps until r = 1, a dwell of 8 steps, inward jumps until r <= 1/2, repeat.
  struct State {
    bool outward = true;
    int dwell = 0;
  };
  auto state = std::make_shared<State>();
  JumpRule forward = [state, jump](long, const Point& x, Rng&) -> std::vector<double> {
    const double r = std::hypot(x[0], x[1]);
    if (state->dwell > 0) {
      --state->dwell;
      return {0.0, 0.0};
    }
    double step = 0.0;
    if (state->outward) {
      step = std::min(jump, 1.0 - r);
      if (r + step >= 1.0 - 1e-12) {
        state->outward = false;
        state->dwell = 8;
      }
    } else {
      step = -std::min(jump, r - 0.5);
      if (r + step <= 0.5 + 1e-12) {
        state->outward = true;
        state->dwell = 8;
      }
    }
    return {step * x[0] / r, step * x[1] / r};
  };
  JumpRule none = [](long, const Point&, Rng&) { return std::vector<double>{0.0, 0.0}; };
  return build_chain(disk, polar_point(0.5, 0.0), jump * (1.0 + 1e-9), w.T0, w.n_min, w.n_max,
                     forward, none, 0);
}

}  // namespace shadowlab
