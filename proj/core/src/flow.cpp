#include "shadowlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shadowlab/errors.hpp"

namespace shadowlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Signed shortest angular difference b - a in (-pi, pi].
double angle_delta(double a, double b) {
  double d = std::fmod(b - a, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  if (d > std::numbers::pi) d -= kTwoPi;
  return d;
}

// Self-similar band [1/2, 1] of the radial map.
double band_map(double m) { return (remark_f0(4.0 * m - 3.0) + 3.0) / 4.0; }
double band_map_inverse(double m) {
  return (remark_f0_inverse(4.0 * m - 3.0) + 3.0) / 4.0;
}

const SuspensionChart& radial_band_chart() {
  static const SuspensionChart chart(band_map, band_map_inverse,
                                     {0.5, 0.75, 1.0});
  return chart;
}

// One-dimensional stability of the fixed points of a suspension chart.
std::vector<Singularity> interval_singularities(const SuspensionChart& chart,
                                                const std::function<double(double)>& f) {
  const auto& fp = chart.fixed_points();
  std::vector<Singularity> out;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    // +1: gap moves up, -1: moves down, 0: no gap on that side.
    int left = 0, right = 0;
    if (i > 0) {
      double mid = 0.5 * (fp[i - 1] + fp[i]);
      left = f(mid) > mid ? 1 : -1;
    }
    if (i + 1 < fp.size()) {
      double mid = 0.5 * (fp[i] + fp[i + 1]);
      right = f(mid) > mid ? 1 : -1;
    }
    Stability s;
    s.stable = left >= 0 && right <= 0;
    s.unstable = left <= 0 && right >= 0;
    out.push_back({Point{fp[i]}, s});
  }
  return out;
}

class DiskFlow final : public Flow {
 public:
  DiskFlow() {
    singularities_.push_back({Point{0.0, 0.0}, Stability{true, true}});
    limit_set_singular_ = false;
  }

  SpaceKind space() const noexcept override { return SpaceKind::disk; }
  std::size_t dim() const noexcept override { return 2; }

  Point advance(double t, const Point& x) const override {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return Point{0.0, 0.0};
    const double theta = std::atan2(x[1], x[0]);
    const double r_new = std::min(1.0, radial_flow(t, std::min(r, 1.0)));
    const double turn = t - std::nearbyint(t);
    return polar_point(r_new, theta + kTwoPi * turn);
  }

  double distance(const Point& a, const Point& b) const override {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
  }

  bool contains(const Point& x, double tol) const override {
    return x.dim() == 2 && std::isfinite(x[0]) && std::isfinite(x[1]) &&
           std::hypot(x[0], x[1]) <= 1.0 + tol;
  }

  Point project(const Point& x) const override {
    const double r = std::hypot(x[0], x[1]);
    if (r <= 1.0) return x;
    return Point{x[0] / r, x[1] / r};
  }

  std::vector<Point> cover(double mesh) const override {
    require(mesh > 0, ErrorKind::parameter, "cover mesh must be positive");
    const auto n = static_cast<long>(std::ceil(2.0 / mesh));
    const double h = 2.0 / static_cast<double>(n);
    std::vector<Point> pts;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) {
        Point p{-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h};
        if (std::hypot(p[0], p[1]) <= 1.0) pts.push_back(p);
      }
    return pts;
  }

  double diameter() const noexcept override { return 2.0; }
  double speed_bound() const noexcept override { return kTwoPi + 0.5; }
  json descriptor() const override { return {{"kind", "disk"}}; }
};

// theta' = -sin(theta): tan(theta/2) decays like exp(-t), so the flow has the
// closed form theta(t) = 2 atan(tan(theta0/2) exp(-t)).
class NorthSouthFlow final : public Flow {
 public:
  NorthSouthFlow() {
    singularities_.push_back({Point{0.0}, Stability{true, false}});
    singularities_.push_back({Point{std::numbers::pi}, Stability{false, true}});
    limit_set_singular_ = true;
  }

  SpaceKind space() const noexcept override { return SpaceKind::circle; }
  std::size_t dim() const noexcept override { return 1; }

  Point advance(double t, const Point& x) const override {
    double th = wrap_angle(x[0]);
    if (th > std::numbers::pi) th -= kTwoPi;
    if (th == std::numbers::pi || th == 0.0) return Point{wrap_angle(th)};
    const double v = std::tan(0.5 * th) * std::exp(-t);
    if (!std::isfinite(v)) return Point{std::numbers::pi};
    return Point{wrap_angle(2.0 * std::atan(v))};
  }

  double distance(const Point& a, const Point& b) const override {
    return std::abs(angle_delta(a[0], b[0]));
  }

  bool contains(const Point& x, double tol) const override {
    return x.dim() == 1 && std::isfinite(x[0]) && x[0] >= -tol &&
           x[0] <= kTwoPi + tol;
  }

  Point project(const Point& x) const override { return Point{wrap_angle(x[0])}; }

  std::vector<double> chart_delta(const Point& from,
                                  const Point& to) const override {
    return {angle_delta(from[0], to[0])};
  }

  std::vector<Point> cover(double mesh) const override {
    require(mesh > 0, ErrorKind::parameter, "cover mesh must be positive");
    const auto n = static_cast<long>(std::ceil(kTwoPi / mesh));
    std::vector<Point> pts;
    for (long i = 0; i < n; ++i) pts.push_back(Point{(i + 0.5) * kTwoPi / n});
    return pts;
  }

  std::vector<double> periods() const override { return {kTwoPi}; }

  double diameter() const noexcept override { return std::numbers::pi; }
  double speed_bound() const noexcept override { return 1.0; }
  json descriptor() const override { return {{"kind", "north_south"}}; }
};

class IntervalFlow final : public Flow {
 public:
  // Generic suspension of a monotone map with finitely many fixed points.
  explicit IntervalFlow(MonotoneMap map)
      : map_(std::move(map)),
        chart_(std::make_shared<SuspensionChart>(map_.forward, map_.inverse,
                                                 map_.fixed_points)) {
    singularities_ = interval_singularities(*chart_, map_.forward);
    limit_set_singular_ = true;
    init_speed();
  }

  // Self-similar suspension of the radial map.
  IntervalFlow() : radial_(true) {
    map_.forward = time_one_map_radial;
    map_.inverse = time_one_map_radial_inverse;
    map_.descriptor = {{"type", "remark"}};
    singularities_.push_back({Point{0.0}, Stability{true, true}});
    for (int n = 0; n <= 20; ++n) {
      singularities_.push_back({Point{std::ldexp(1.0, -n)}, Stability{true, false}});
      singularities_.push_back(
          {Point{3.0 * std::ldexp(1.0, -(n + 2))}, Stability{false, true}});
    }
    limit_set_singular_ = true;
    init_speed();
  }

  SpaceKind space() const noexcept override { return SpaceKind::interval; }
  std::size_t dim() const noexcept override { return 1; }

  Point advance(double t, const Point& x) const override {
    const double v = std::clamp(x[0], 0.0, 1.0);
    return Point{radial_ ? radial_flow(t, v) : chart_->flow(t, v)};
  }

  double distance(const Point& a, const Point& b) const override {
    return std::abs(a[0] - b[0]);
  }

  bool contains(const Point& x, double tol) const override {
    return x.dim() == 1 && std::isfinite(x[0]) && x[0] >= -tol &&
           x[0] <= 1.0 + tol;
  }

  Point project(const Point& x) const override {
    return Point{std::clamp(x[0], 0.0, 1.0)};
  }

  std::vector<Point> cover(double mesh) const override {
    require(mesh > 0, ErrorKind::parameter, "cover mesh must be positive");
    const auto n = static_cast<long>(std::ceil(1.0 / mesh));
    std::vector<Point> pts;
    for (long i = 0; i < n; ++i) pts.push_back(Point{(i + 0.5) / n});
    return pts;
  }

  double diameter() const noexcept override { return 1.0; }
  double speed_bound() const noexcept override { return speed_; }

  json descriptor() const override {
    return {{"kind", "interval_suspension"}, {"map", map_.descriptor}};
  }

 private:
  void init_speed() {
    double s = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      s = std::max(s, std::abs(advance(0.01, Point{x})[0] - x) / 0.01);
    }
    speed_ = 1.5 * s + 1e-3;
  }

  MonotoneMap map_;
  std::shared_ptr<SuspensionChart> chart_;
  bool radial_ = false;
  double speed_ = 1.0;
};

class ProductFlow final : public Flow {
 public:
  ProductFlow(FlowPtr a, FlowPtr b) : a_(std::move(a)), b_(std::move(b)) {
    require(a_ && b_, ErrorKind::parameter, "product of null flows");
    require(a_->dim() + b_->dim() <= Point::kMaxDim, ErrorKind::parameter,
            "product dimension exceeds the supported maximum");
    for (const auto& s1 : a_->singularities())
      for (const auto& s2 : b_->singularities()) {
        Stability s{s1.stability.stable && s2.stability.stable,
                    s1.stability.unstable && s2.stability.unstable};
        singularities_.push_back({Point::concat(s1.point, s2.point), s});
      }
    limit_set_singular_ = a_->limit_set_is_singular() && b_->limit_set_is_singular();
  }

  SpaceKind space() const noexcept override { return SpaceKind::product; }
  std::size_t dim() const noexcept override { return a_->dim() + b_->dim(); }

  Point advance(double t, const Point& x) const override {
    return Point::concat(a_->advance(t, first(x)), b_->advance(t, second(x)));
  }

  double distance(const Point& x, const Point& y) const override {
    return std::max(a_->distance(first(x), first(y)),
                    b_->distance(second(x), second(y)));
  }

  bool contains(const Point& x, double tol) const override {
    return x.dim() == dim() && a_->contains(first(x), tol) &&
           b_->contains(second(x), tol);
  }

  Point project(const Point& x) const override {
    return Point::concat(a_->project(first(x)), b_->project(second(x)));
  }

  Point displace(const Point& x, std::span<const double> v) const override {
    return Point::concat(a_->displace(first(x), v.subspan(0, a_->dim())),
                         b_->displace(second(x), v.subspan(a_->dim())));
  }

  std::vector<double> chart_delta(const Point& from,
                                  const Point& to) const override {
    auto d = a_->chart_delta(first(from), first(to));
    auto e = b_->chart_delta(second(from), second(to));
    d.insert(d.end(), e.begin(), e.end());
    return d;
  }

  std::vector<std::size_t> factor_dims() const override {
    return {a_->dim(), b_->dim()};
  }

  std::vector<double> periods() const override {
    auto p = a_->periods();
    auto q = b_->periods();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  std::vector<Point> cover(double mesh) const override {
    std::vector<Point> out;
    const auto ca = a_->cover(mesh);
    const auto cb = b_->cover(mesh);
    out.reserve(ca.size() * cb.size());
    for (const auto& p : ca)
      for (const auto& q : cb) out.push_back(Point::concat(p, q));
    return out;
  }

  double diameter() const noexcept override {
    return std::max(a_->diameter(), b_->diameter());
  }
  double speed_bound() const noexcept override {
    return std::max(a_->speed_bound(), b_->speed_bound());
  }

  json descriptor() const override {
    return {{"kind", "product"}, {"first", a_->descriptor()},
            {"second", b_->descriptor()}};
  }

  const FlowPtr& first_flow() const noexcept { return a_; }
  const FlowPtr& second_flow() const noexcept { return b_; }

 private:
  Point first(const Point& x) const { return x.slice(0, a_->dim()); }
  Point second(const Point& x) const { return x.slice(a_->dim(), b_->dim()); }

  FlowPtr a_, b_;
};

class ReversedFlow final : public Flow {
 public:
  explicit ReversedFlow(FlowPtr inner) : inner_(std::move(inner)) {
    for (auto s : inner_->singularities()) {
      std::swap(s.stability.stable, s.stability.unstable);
      singularities_.push_back(s);
    }
    limit_set_singular_ = inner_->limit_set_is_singular();
  }

  SpaceKind space() const noexcept override { return inner_->space(); }
  std::size_t dim() const noexcept override { return inner_->dim(); }
  Point advance(double t, const Point& x) const override {
    return inner_->advance(-t, x);
  }
  double distance(const Point& a, const Point& b) const override {
    return inner_->distance(a, b);
  }
  bool contains(const Point& x, double tol) const override {
    return inner_->contains(x, tol);
  }
  Point project(const Point& x) const override { return inner_->project(x); }
  Point displace(const Point& x, std::span<const double> v) const override {
    return inner_->displace(x, v);
  }
  std::vector<double> chart_delta(const Point& a, const Point& b) const override {
    return inner_->chart_delta(a, b);
  }
  std::vector<std::size_t> factor_dims() const override {
    return inner_->factor_dims();
  }
  std::vector<double> periods() const override { return inner_->periods(); }
  std::vector<Point> cover(double mesh) const override { return inner_->cover(mesh); }
  double diameter() const noexcept override { return inner_->diameter(); }
  double speed_bound() const noexcept override { return inner_->speed_bound(); }
  json descriptor() const override {
    return {{"kind", "reversed"}, {"inner", inner_->descriptor()}};
  }

 private:
  FlowPtr inner_;
};

}  // namespace

std::string to_string(Stability s) {
  if (s.stable && s.unstable) return "both";
  if (s.stable) return "stable";
  if (s.unstable) return "unstable";
  return "none";
}

Point Flow::evaluate(double t, const Point& x) const {
  if (!contains(x)) fail(ErrorKind::domain, "point outside the flow's space");
  require(std::isfinite(t), ErrorKind::parameter, "time must be finite");
  return advance(t, x);
}

Point Flow::displace(const Point& x, std::span<const double> v) const {
  Point p = x;
  for (std::size_t i = 0; i < p.dim(); ++i) p[i] += v[i];
  return project(p);
}

std::vector<double> Flow::chart_delta(const Point& from, const Point& to) const {
  std::vector<double> d(from.dim());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = to[i] - from[i];
  return d;
}

double remark_f0(double u) {
  if (u <= -1.0 / 3.0) return -1.0 + (u + 1.0) / 2.0;
  if (u <= 1.0 / 3.0) return 2.0 * u;
  return 1.0 + (u - 1.0) / 2.0;
}

double remark_f0_inverse(double v) {
  if (v <= -2.0 / 3.0) return 2.0 * v + 1.0;
  if (v <= 2.0 / 3.0) return v / 2.0;
  return 2.0 * v - 1.0;
}

namespace {

// n with r in (2^-(n+1), 2^-n].
int dyadic_band(double r) {
  int n = 0;
  while (r <= std::ldexp(1.0, -(n + 1))) ++n;
  return n;
}

}  // namespace

double time_one_map_radial(double r) {
  require(r >= 0.0 && r <= 1.0, ErrorKind::domain, "radial map needs r in [0, 1]");
  if (r == 0.0) return 0.0;
  const int n = dyadic_band(r);
  const double scale = std::ldexp(1.0, -(n + 2));
  return scale * remark_f0((r - 3.0 * scale) / scale) + 3.0 * scale;
}

double time_one_map_radial_inverse(double r) {
  require(r >= 0.0 && r <= 1.0, ErrorKind::domain, "radial map needs r in [0, 1]");
  if (r == 0.0) return 0.0;
  const int n = dyadic_band(r);
  const double scale = std::ldexp(1.0, -(n + 2));
  return scale * remark_f0_inverse((r - 3.0 * scale) / scale) + 3.0 * scale;
}

SuspensionChart::SuspensionChart(std::function<double(double)> forward,
                                 std::function<double(double)> inverse,
                                 std::vector<double> fixed_points)
    : f_(std::move(forward)), finv_(std::move(inverse)), fixed_(std::move(fixed_points)) {
  std::sort(fixed_.begin(), fixed_.end());
  fixed_.erase(std::unique(fixed_.begin(), fixed_.end()), fixed_.end());
  require(fixed_.size() >= 2, ErrorKind::parameter,
          "suspension needs at least the two endpoint fixed points");
  for (std::size_t i = 0; i + 1 < fixed_.size(); ++i) {
    Gap g;
    g.lo = fixed_[i];
    g.hi = fixed_[i + 1];
    g.x0 = 0.5 * (g.lo + g.hi);
    g.fx0 = f_(g.x0);
    require(g.fx0 != g.x0 && g.fx0 > g.lo && g.fx0 < g.hi, ErrorKind::parameter,
            "fixed-point list misses a fixed point of the map");
    gaps_.push_back(g);
  }
}

double SuspensionChart::chart_coordinate(double x) const {
  auto it = std::upper_bound(fixed_.begin(), fixed_.end(), x);
  require(it != fixed_.begin() && it != fixed_.end() && *(it - 1) != x,
          ErrorKind::domain, "chart coordinate requested at a fixed point");
  const Gap& g = gaps_[static_cast<std::size_t>(it - fixed_.begin()) - 1];
  const double width = g.fx0 - g.x0;
  double z = x;
  long n = 0;
  for (int iter = 0; iter < 4 * static_cast<int>(kChartBound); ++iter) {
    const double u = (z - g.x0) / width;
    if (u < 0.0) {
      const double nz = f_(z);
      if (nz == z) return -HUGE_VAL;
      z = nz;
      ++n;
    } else if (u >= 1.0) {
      const double nz = finv_(z);
      if (nz == z) return HUGE_VAL;
      z = nz;
      --n;
    } else {
      return u - static_cast<double>(n);
    }
  }
  return (z - g.x0) / width < 0.0 ? -HUGE_VAL : HUGE_VAL;
}

double SuspensionChart::flow(double t, double x) const {
  if (x <= fixed_.front()) return fixed_.front();
  if (x >= fixed_.back()) return fixed_.back();
  auto it = std::upper_bound(fixed_.begin(), fixed_.end(), x);
  if (*(it - 1) == x) return x;
  const Gap& g = gaps_[static_cast<std::size_t>(it - fixed_.begin()) - 1];
  const double width = g.fx0 - g.x0;
  const double forward_limit = width > 0 ? g.hi : g.lo;
  const double backward_limit = width > 0 ? g.lo : g.hi;

  const double s = chart_coordinate(x) + t;
  if (s > kChartBound) return forward_limit;
  if (s < -kChartBound) return backward_limit;

  const double k = std::floor(s);
  double y = g.x0 + (s - k) * width;
  if (k > 0) {
    for (long i = 0; i < static_cast<long>(k); ++i) {
      const double ny = f_(y);
      if (ny == y) break;
      y = ny;
    }
  } else {
    for (long i = 0; i < static_cast<long>(-k); ++i) {
      const double ny = finv_(y);
      if (ny == y) break;
      y = ny;
    }
  }
  return std::clamp(y, g.lo, g.hi);
}

double radial_flow(double t, double r) {
  if (r <= 0.0) return 0.0;
  int e = 0;
  const double m = std::frexp(r, &e);
  if (m == 0.5) return r;
  return std::ldexp(radial_band_chart().flow(t, m), e);
}

MonotoneMap piecewise_linear_map(std::vector<std::pair<double, double>> knots) {
  require(knots.size() >= 2, ErrorKind::parameter, "map needs at least two knots");
  require(knots.front().first == 0.0 && knots.front().second == 0.0 &&
              knots.back().first == 1.0 && knots.back().second == 1.0,
          ErrorKind::parameter, "map must fix 0 and 1");
  for (std::size_t i = 1; i < knots.size(); ++i)
    require(knots[i].first > knots[i - 1].first && knots[i].second > knots[i - 1].second,
            ErrorKind::parameter, "non-monotone map knots");

  auto interp = [](const std::vector<std::pair<double, double>>& k, double x, bool inv) {
    auto key = [inv](const std::pair<double, double>& p) { return inv ? p.second : p.first; };
    auto val = [inv](const std::pair<double, double>& p) { return inv ? p.first : p.second; };
    if (x <= key(k.front())) return val(k.front());
    if (x >= key(k.back())) return val(k.back());
    std::size_t hi = 1;
    while (key(k[hi]) < x) ++hi;
    const auto& a = k[hi - 1];
    const auto& b = k[hi];
    const double w = (x - key(a)) / (key(b) - key(a));
    return val(a) + w * (val(b) - val(a));
  };

  std::vector<double> fixed;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double g0 = knots[i].second - knots[i].first;
    const double g1 = knots[i + 1].second - knots[i + 1].first;
    require(!(g0 == 0.0 && g1 == 0.0), ErrorKind::parameter,
            "map is the identity on a whole segment");
    if (g0 == 0.0) fixed.push_back(knots[i].first);
    if (g0 * g1 < 0.0) {
      const double w = g0 / (g0 - g1);
      fixed.push_back(knots[i].first + w * (knots[i + 1].first - knots[i].first));
    }
  }
  fixed.push_back(1.0);

  MonotoneMap map;
  json jk = json::array();
  for (const auto& [x, y] : knots) jk.push_back({x, y});
  map.descriptor = {{"type", "piecewise_linear"}, {"knots", jk}};
  map.forward = [knots, interp](double x) { return interp(knots, x, false); };
  map.inverse = [knots, interp](double y) { return interp(knots, y, true); };
  map.fixed_points = std::move(fixed);
  return map;
}

FlowPtr build_disk_flow() { return std::make_shared<DiskFlow>(); }
FlowPtr build_north_south_circle() { return std::make_shared<NorthSouthFlow>(); }
FlowPtr build_radial_interval_flow() { return std::make_shared<IntervalFlow>(); }

FlowPtr build_interval_suspension(MonotoneMap map) {
  require(static_cast<bool>(map.forward) && static_cast<bool>(map.inverse),
          ErrorKind::parameter, "map needs forward and inverse");
  double prev = map.forward(0.0);
  for (int i = 1; i <= 2000; ++i) {
    const double v = map.forward(i / 2000.0);
    require(v > prev, ErrorKind::parameter, "non-monotone map");
    prev = v;
  }
  return std::make_shared<IntervalFlow>(std::move(map));
}

FlowPtr build_product_flow(FlowPtr first, FlowPtr second) {
  return std::make_shared<ProductFlow>(std::move(first), std::move(second));
}

FlowPtr build_reversed_flow(FlowPtr inner) {
  return std::make_shared<ReversedFlow>(std::move(inner));
}

std::pair<FlowPtr, FlowPtr> product_factors(const Flow& flow) {
  if (const auto* p = dynamic_cast<const ProductFlow*>(&flow))
    return {p->first_flow(), p->second_flow()};
  return {nullptr, nullptr};
}

FlowPtr flow_from_json(const json& j) {
  require(j.is_object() && j.contains("kind"), ErrorKind::config,
          "flow descriptor needs a 'kind' field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "disk") return build_disk_flow();
  if (kind == "north_south") return build_north_south_circle();
  if (kind == "interval_suspension") {
    const auto& m = j.at("map");
    const auto type = m.at("type").get<std::string>();
    if (type == "remark") return build_radial_interval_flow();
    if (type == "piecewise_linear") {
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : m.at("knots")) knots.emplace_back(k.at(0), k.at(1));
      return build_interval_suspension(piecewise_linear_map(std::move(knots)));
    }
    fail(ErrorKind::config, "unknown interval map type '" + type + "'");
  }
  if (kind == "product")
    return build_product_flow(flow_from_json(j.at("first")),
                              flow_from_json(j.at("second")));
  if (kind == "reversed") return build_reversed_flow(flow_from_json(j.at("inner")));
  fail(ErrorKind::config, "unknown flow kind '" + kind + "'");
}

Point polar_point(double r, double theta) {
  return Point{r * std::cos(theta), r * std::sin(theta)};
}

double radius_of(const Point& p) { return std::hypot(p[0], p[1]); }

SampledOrbit orbit_segment(const Flow& flow, const Point& x, double t0, double t1,
                           double step) {
  require(step > 0, ErrorKind::parameter, "orbit step must be positive");
  require(t0 < t1, ErrorKind::parameter, "orbit segment needs t0 < t1");
  SampledOrbit orbit;
  orbit.start = x;
  for (long k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * step;
    if (t >= t1 - 1e-12 * step) break;
    orbit.times.push_back(t);
  }
  orbit.times.push_back(t1);
  orbit.points.reserve(orbit.times.size());
  for (double t : orbit.times) orbit.points.push_back(flow.evaluate(t, x));
  return orbit;
}

}  // namespace shadowlab
