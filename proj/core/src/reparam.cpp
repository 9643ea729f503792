#include "shadowlab/reparam.hpp"

#include <algorithm>
#include <cmath>

#include "shadowlab/errors.hpp"

namespace shadowlab {

Reparam::Reparam() : knots_{{0.0, 0.0}, {1.0, 1.0}} {}

Reparam::Reparam(std::vector<Knot> knots, double left_slope, double right_slope)
    : knots_(std::move(knots)), left_(left_slope), right_(right_slope) {
  require(!knots_.empty(), ErrorKind::parameter, "reparametrization needs a knot");
  require(left_ > 0 && right_ > 0 && std::isfinite(left_) && std::isfinite(right_),
          ErrorKind::parameter, "tail slopes must be positive");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const auto& p = knots_[i - 1];
    const auto& q = knots_[i];
    if (!(q.t - p.t >= kKnotStrictness && q.v - p.v >= kKnotStrictness))
      fail(ErrorKind::parameter,
           "non-monotone knots at index " + std::to_string(i) + " (t=" +
               std::to_string(q.t) + ")");
  }
}

double Reparam::operator()(double t) const {
  const auto& k = knots_;
  if (t <= k.front().t) return k.front().v + left_ * (t - k.front().t);
  if (t >= k.back().t) return k.back().v + right_ * (t - k.back().t);
  auto it = std::upper_bound(k.begin(), k.end(), t,
                             [](double x, const Knot& kn) { return x < kn.t; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  return a.v + (t - a.t) * (b.v - a.v) / (b.t - a.t);
}

std::vector<double> Reparam::slopes() const {
  std::vector<double> s{left_};
  for (std::size_t i = 1; i < knots_.size(); ++i)
    s.push_back((knots_[i].v - knots_[i - 1].v) / (knots_[i].t - knots_[i - 1].t));
  s.push_back(right_);
  return s;
}

nlohmann::json Reparam::to_json() const {
  nlohmann::json k = nlohmann::json::array();
  for (const auto& kn : knots_) k.push_back({kn.t, kn.v});
  return {{"knots", k}, {"tail_slopes", {left_, right_}}};
}

Reparam Reparam::from_json(const nlohmann::json& j) {
  std::vector<Knot> k;
  for (const auto& e : j.at("knots")) k.push_back({e.at(0), e.at(1)});
  const auto& s = j.at("tail_slopes");
  return Reparam(std::move(k), s.at(0), s.at(1));
}

Reparam make_piecewise_linear(std::vector<Knot> knots, double left_slope,
                              double right_slope) {
  return Reparam(std::move(knots), left_slope, right_slope);
}

namespace {

void consider(RepCheck& r, double eps, double slope, double a, double b) {
  if (std::abs(slope - 1.0) > std::abs(r.worst_slope - 1.0) || (r.a == r.b && a != b)) {
    r.worst_slope = slope;
    r.a = a;
    r.b = b;
  }
  if (!(slope > 1.0 - eps && slope < 1.0 + eps)) r.ok = false;
}

}  // namespace

RepCheck verify_rep_eps(const Reparam& h, double eps, double a, double b) {
  require(eps > 0, ErrorKind::parameter, "eps must be positive");
  require(a <= b, ErrorKind::parameter, "empty domain");
  RepCheck r;
  r.a = r.b = a;
  const auto& k = h.knots();
  const auto s = h.slopes();
  // Piece i spans [edge(i-1), edge(i)] with edges at the knots.
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double lo = i == 0 ? -HUGE_VAL : k[i - 1].t;
    const double hi = i == k.size() ? HUGE_VAL : k[i].t;
    const double ca = std::max(lo, a), cb = std::min(hi, b);
    if (cb > ca || (a == b && ca <= cb)) consider(r, eps, s[i], ca, cb);
  }
  return r;
}

RepCheck verify_rep_eps_pairs(const Reparam& h, double eps, double a, double b) {
  require(eps > 0, ErrorKind::parameter, "eps must be positive");
  std::vector<double> pts{a, b};
  for (const auto& kn : h.knots())
    if (kn.t > a && kn.t < b) pts.push_back(kn.t);
  std::sort(pts.begin(), pts.end());
  RepCheck r;
  r.a = r.b = a;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[j] <= pts[i]) continue;
      consider(r, eps, (h(pts[j]) - h(pts[i])) / (pts[j] - pts[i]), pts[i], pts[j]);
    }
  return r;
}

namespace {

// Builds a reparametrization through the given (unsorted, possibly nearly
// duplicated) breakpoints of a monotone function.
template <class F>
Reparam through(std::vector<double> ts, F&& f, double left, double right) {
  std::sort(ts.begin(), ts.end());
  std::vector<Knot> k;
  for (double t : ts) {
    const double v = f(t);
    if (!k.empty() && (t - k.back().t < kKnotStrictness || v - k.back().v < kKnotStrictness))
      continue;
    k.push_back({t, v});
  }
  return Reparam(std::move(k), left, right);
}

}  // namespace

Reparam compose(const Reparam& outer, const Reparam& inner) {
  const Reparam inner_inv = invert(inner);
  std::vector<double> ts;
  for (const auto& kn : inner.knots()) ts.push_back(kn.t);
  for (const auto& kn : outer.knots()) ts.push_back(inner_inv(kn.t));
  return through(
      std::move(ts), [&](double t) { return outer(inner(t)); },
      outer.left_slope() * inner.left_slope(), outer.right_slope() * inner.right_slope());
}

Reparam invert(const Reparam& h) {
  std::vector<Knot> k;
  k.reserve(h.knots().size());
  for (const auto& kn : h.knots()) k.push_back({kn.v, kn.t});
  return Reparam(std::move(k), 1.0 / h.left_slope(), 1.0 / h.right_slope());
}

Reparam rescale_to_endpoints(const Reparam& h, double T1, double g0, double g1) {
  require(T1 > 0, ErrorKind::parameter, "rescale needs T1 > 0");
  const double h0 = h(0.0), h1 = h(T1);
  if (!(h1 > h0)) fail(ErrorKind::degenerate, "h is constant on [0, T1]");
  require(g1 > g0, ErrorKind::parameter, "rescale target must increase");
  const double s = (g1 - g0) / (h1 - h0);
  std::vector<Knot> k{{0.0, g0}};
  for (const auto& kn : h.knots()) {
    if (kn.t <= 0.0 || kn.t >= T1) continue;
    const double v = g0 + s * (kn.v - h0);
    if (kn.t - k.back().t < kKnotStrictness || v - k.back().v < kKnotStrictness) continue;
    k.push_back({kn.t, v});
  }
  if (T1 - k.back().t < kKnotStrictness || g1 - k.back().v < kKnotStrictness) k.pop_back();
  k.push_back({T1, g1});
  return Reparam(std::move(k), 1.0, 1.0);
}

Reparam reflect(const Reparam& h) {
  std::vector<Knot> k;
  for (auto it = h.knots().rbegin(); it != h.knots().rend(); ++it)
    k.push_back({-it->t, -it->v});
  return Reparam(std::move(k), h.right_slope(), h.left_slope());
}

Reparam shifted(const Reparam& h, double dt, double dv) {
  std::vector<Knot> k;
  for (const auto& kn : h.knots()) k.push_back({kn.t - dt, kn.v + dv});
  return Reparam(std::move(k), h.left_slope(), h.right_slope());
}

}  // namespace shadowlab
