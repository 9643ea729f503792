#include "shadowlab/singularities.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"

namespace shadowlab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Direction d) {
  return d == Direction::forward ? "forward" : "backward";
}

namespace {

json point_json(const Point& p) {
  return std::vector<double>(p.coords().begin(), p.coords().end());
}

json verdict_json(const DirectionVerdict& v) {
  json pairs = json::array();
  for (const auto& w : v.pairs) pairs.push_back({{"V", w.V}, {"U", w.U}});
  json j = {{"verdict", to_string(v.verdict)}, {"witness_pairs", pairs}};
  if (v.escape_start)
    j["escape"] = {{"start", point_json(*v.escape_start)},
                   {"time", v.escape_time},
                   {"V", v.escape_radius}};
  return j;
}

// Offsets of one factor of dimension k with norm below r (zero included).
std::vector<std::vector<double>> factor_offsets(std::size_t k, double r) {
  static constexpr std::array<double, 6> fractions{0.999, 0.75, 0.5, 0.25, 0.1, 0.01};
  std::vector<std::vector<double>> out{std::vector<double>(k, 0.0)};
  for (double f : fractions) {
    if (k == 1) {
      out.push_back({f * r});
      out.push_back({-f * r});
    } else {
      for (int a = 0; a < 16; ++a) {
        const double th = 2.0 * std::numbers::pi * a / 16.0 + 0.1;
        std::vector<double> v(k, 0.0);
        v[0] = f * r * std::cos(th);
        v[1] = f * r * std::sin(th);
        out.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> ball_offsets(const Flow& flow, double r) {
  std::vector<std::vector<double>> acc{{}};
  for (std::size_t k : flow.factor_dims()) {
    std::vector<std::vector<double>> next;
    for (const auto& head : acc)
      for (const auto& tail : factor_offsets(k, r)) {
        auto v = head;
        v.insert(v.end(), tail.begin(), tail.end());
        next.push_back(std::move(v));
      }
    acc = std::move(next);
  }
  return acc;
}

json StabilityReport::to_json() const {
  return {{"point", point_json(point)},
          {"stable", verdict_json(stable)},
          {"unstable", verdict_json(unstable)},
          {"horizon", horizon}};
}

namespace {

void require_singularity(const Flow& flow, const Point& p) {
  for (const auto& s : flow.singularities())
    if (s.point.dim() == p.dim() && flow.distance(s.point, p) <= 1e-9) return;
  fail(ErrorKind::precondition, "point is not a registered singularity");
}

DirectionVerdict classify_direction(const Flow& flow, const Point& p,
                                    const std::vector<double>& radii, double horizon,
                                    double sign) {
  constexpr double kStep = 0.05;
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / kStep));
  DirectionVerdict out;
  if (radii.empty()) return out;
  bool all_found = true;
  for (double V : radii) {
    require(V > 0, ErrorKind::parameter, "target radii must be positive");
    bool found = false;
    for (int k = 1; k <= 8 && !found; ++k) {
      const double U = V * std::ldexp(1.0, -k);
      const auto offs = ball_offsets(flow, U);
      std::vector<double> escape(offs.size(), -1.0);
      std::vector<Point> starts(offs.size());
      parallel_for(offs.size(), [&](std::size_t i) {
        starts[i] = flow.displace(p, offs[i]);
        if (flow.distance(starts[i], p) >= U) return;
        for (std::size_t s = 1; s <= steps; ++s) {
          const double t = std::min(horizon, static_cast<double>(s) * kStep);
          if (flow.distance(flow.advance(sign * t, starts[i]), p) >= V) {
            escape[i] = t;
            return;
          }
        }
      });
      const auto it = std::find_if(escape.begin(), escape.end(), [](double t) { return t >= 0; });
      if (it == escape.end()) {
        out.pairs.push_back({V, U});
        found = true;
      } else if (k == 8) {
        const auto i = static_cast<std::size_t>(it - escape.begin());
        out.escape_start = starts[i];
        out.escape_time = sign * *it;
        out.escape_radius = V;
      }
    }
    all_found = all_found && found;
  }
  out.verdict = all_found ? Verdict::holds : Verdict::fails;
  return out;
}

}  // namespace

StabilityReport classify_singularity(const Flow& flow, const Point& p,
                                     const std::vector<double>& radii, double horizon) {
  require(horizon > 0, ErrorKind::parameter, "horizon must be positive");
  require_singularity(flow, p);
  StabilityReport r;
  r.point = p;
  r.horizon = horizon;
  r.stable = classify_direction(flow, p, radii, horizon, 1.0);
  r.unstable = classify_direction(flow, p, radii, horizon, -1.0);
  return r;
}

namespace {

using CellKey = std::array<long, Point::kMaxDim>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

class CellGrid {
 public:
  CellGrid(const Flow& flow, double cell) : flow_(flow) {
    const auto periods = flow.periods();
    for (std::size_t i = 0; i < flow.dim(); ++i) {
      if (periods[i] > 0) {
        count_[i] = static_cast<long>(std::ceil(periods[i] / cell));
        pitch_[i] = periods[i] / static_cast<double>(count_[i]);
      } else {
        count_[i] = 0;
        pitch_[i] = cell;
      }
    }
  }

  CellKey key_of(const Point& x) const {
    CellKey k{};
    for (std::size_t i = 0; i < x.dim(); ++i)
      k[i] = static_cast<long>(std::floor(x[i] / pitch_[i]));
    return canonical(k);
  }

  CellKey canonical(CellKey k) const {
    for (std::size_t i = 0; i < flow_.dim(); ++i)
      if (count_[i] > 0) k[i] = ((k[i] % count_[i]) + count_[i]) % count_[i];
    return k;
  }

  // Projected cell center; nullopt when the cell misses the space.
  std::optional<Point> representative(const CellKey& k) const {
    Point c;
    for (std::size_t i = 0; i < flow_.dim(); ++i)
      c.push_back((static_cast<double>(k[i]) + 0.5) * pitch_[i]);
    const Point r = flow_.project(c);
    double gap = 0.0;
    for (std::size_t i = 0; i < c.dim(); ++i) gap = std::max(gap, std::abs(c[i] - r[i]));
    if (gap > 0.5 * max_pitch() + 1e-15) return std::nullopt;
    return r;
  }

  // Canonical keys of all cells whose representative lies within d of y.
  template <class F>
  void for_each_near(const Point& y, double d, F&& f) const {
    const CellKey base = key_of(y);
    const std::size_t dim = flow_.dim();
    std::array<long, Point::kMaxDim> radius{};
    for (std::size_t i = 0; i < dim; ++i)
      radius[i] = static_cast<long>(std::ceil(d / pitch_[i])) + 1;
    CellKey off{};
    for (std::size_t i = 0; i < dim; ++i) off[i] = -radius[i];
    while (true) {
      CellKey k{};
      for (std::size_t i = 0; i < dim; ++i) k[i] = base[i] + off[i];
      k = canonical(k);
      if (auto r = representative(k); r && flow_.distance(*r, y) < d) f(k, *r);
      std::size_t i = 0;
      for (; i < dim; ++i) {
        if (++off[i] <= radius[i]) break;
        off[i] = -radius[i];
      }
      if (i == dim) break;
    }
  }

 private:
  double max_pitch() const {
    return *std::max_element(pitch_.begin(), pitch_.begin() + static_cast<long>(flow_.dim()));
  }

  const Flow& flow_;
  std::array<double, Point::kMaxDim> pitch_{};
  std::array<long, Point::kMaxDim> count_{};
};

}  // namespace

std::vector<Point> ReachableSetEstimate::witness(std::size_t i) const {
  std::vector<Point> chain;
  for (long k = static_cast<long>(i); k >= 0; k = parent[static_cast<std::size_t>(k)])
    chain.push_back(points[static_cast<std::size_t>(k)]);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

json ReachableSetEstimate::to_json() const {
  json pts = json::array();
  for (const auto& p : points) pts.push_back(point_json(p));
  return {{"center", point_json(center)}, {"defect", defect},
          {"direction", to_string(direction)}, {"cell", cell},
          {"diameter", diameter}, {"closed", closed},
          {"expansions", expansions}, {"count", points.size()},
          {"points", pts}};
}

ReachableSetEstimate reachable_set(const Flow& flow, const Point& p, double d,
                                   Direction direction, std::size_t budget, double cell) {
  require(d > 0, ErrorKind::parameter, "defect must be positive");
  require(flow.contains(p), ErrorKind::domain, "center outside the space");
  if (cell <= 0) cell = d / 4.0;
  const double sign = direction == Direction::forward ? 1.0 : -1.0;
  const CellGrid grid(flow, cell);

  ReachableSetEstimate est;
  est.center = p;
  est.defect = d;
  est.direction = direction;
  est.cell = cell;
  std::unordered_map<CellKey, long, CellKeyHash> seen;

  std::vector<long> frontier;
  est.points.push_back(p);
  est.parent.push_back(-1);
  frontier.push_back(0);
  grid.for_each_near(p, d, [&](const CellKey& k, const Point& r) {
    if (seen.emplace(k, static_cast<long>(est.points.size())).second) {
      est.points.push_back(r);
      est.parent.push_back(-1);
      frontier.push_back(static_cast<long>(est.points.size()) - 1);
    }
  });

  while (!frontier.empty()) {
    if (est.points.size() > budget) {
      est.closed = false;
      break;
    }
    std::vector<std::vector<std::pair<CellKey, Point>>> found(frontier.size());
    parallel_for(frontier.size(), [&](std::size_t i) {
      const Point y = flow.advance(sign, est.points[static_cast<std::size_t>(frontier[i])]);
      grid.for_each_near(y, d, [&](const CellKey& k, const Point& r) {
        found[i].emplace_back(k, r);
      });
    });
    est.expansions += frontier.size();
    std::vector<long> next;
    for (std::size_t i = 0; i < frontier.size(); ++i)
      for (const auto& [k, r] : found[i])
        if (seen.emplace(k, static_cast<long>(est.points.size())).second) {
          est.points.push_back(r);
          est.parent.push_back(frontier[i]);
          next.push_back(static_cast<long>(est.points.size()) - 1);
        }
    frontier = std::move(next);
  }

  const std::size_t n = est.points.size();
  std::vector<double> best(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t j = i + 1; j < n; ++j)
      m = std::max(m, flow.distance(est.points[i], est.points[j]));
    best[i] = m;
  });
  est.diameter = *std::max_element(best.begin(), best.end());
  return est;
}

std::vector<SingularityVisit> visited_singularities(const StepPseudotrajectory& xi,
                                                    const std::vector<double>& radii) {
  const auto& sing = xi.flow->singularities();
  require(radii.size() == sing.size(), ErrorKind::parameter,
          "one neighborhood radius per registered singularity is required");
  const double dt = xi.T0 / 8.0;
  const auto nt = static_cast<std::size_t>(std::floor((xi.t_hi() - xi.t_lo()) / dt + 1e-9)) + 1;
  std::vector<Point> samples(nt);
  parallel_for(nt, [&](std::size_t k) {
    samples[k] = xi.at(xi.t_lo() + static_cast<double>(k) * dt);
  });
  std::vector<SingularityVisit> out;
  for (std::size_t i = 0; i < sing.size(); ++i) {
    std::optional<double> first, last;
    for (std::size_t k = 0; k < nt; ++k) {
      if (xi.flow->distance(samples[k], sing[i].point) < radii[i]) {
        const double t = xi.t_lo() + static_cast<double>(k) * dt;
        if (!first) first = t;
        last = t;
      }
    }
    if (first)
      out.push_back({i, sing[i].point, sing[i].stability, radii[i], *first, *last});
  }
  return out;
}

TrapProbe probe_trapping(const FlowPtr& flow, const Point& p, double U, double V,
                         double d, double T0, double horizon, Direction direction,
                         std::uint64_t seed, int random_chains) {
  require(U > 0 && V > 0 && d > 0 && T0 > 0 && horizon > 0, ErrorKind::parameter,
          "trapping probe parameters must be positive");
  const FlowPtr f = direction == Direction::forward ? flow : build_reversed_flow(flow);
  std::vector<Point> starts;
  for (const auto& off : ball_offsets(*f, U)) {
    const Point s = f->displace(p, off);
    if (f->distance(s, p) >= 0.7 * U && f->distance(s, p) < U) starts.push_back(s);
  }
  if (starts.size() > 32) {
    std::vector<Point> thin;
    const std::size_t stride = (starts.size() + 31) / 32;
    for (std::size_t i = 0; i < starts.size(); i += stride) thin.push_back(starts[i]);
    starts = std::move(thin);
  }
  starts.push_back(p);
  const long steps = static_cast<long>(std::ceil(horizon / T0));
  const std::size_t per = static_cast<std::size_t>(random_chains) + 1;
  const std::size_t total = starts.size() * per;
  std::vector<double> excursion(total, 0.0);
  const Flow& fr = *f;
  parallel_for(total, [&](std::size_t c) {
    const Point& x0 = starts[c / per];
    const std::size_t kind = c % per;
    JumpRule rule;
    if (kind == 0) {
      rule = [&fr, &p, d](long, const Point& at, Rng& rng) {
        auto v = fr.chart_delta(p, at);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return uniform_jump(fr, 0.999 * d, rng);
        for (auto& x : v) x *= 0.999 * d / norm;
        return v;
      };
    } else {
      rule = [&fr, d](long, const Point&, Rng& rng) { return uniform_jump(fr, 0.999 * d, rng); };
    }
    const auto chain = build_chain(f, x0, d, T0, 0, steps, rule, rule, seed + c);
    double m = 0.0;
    for (long k = 0; k <= steps * 8; ++k)
      m = std::max(m, fr.distance(chain.at(static_cast<double>(k) * T0 / 8.0), p));
    excursion[c] = m;
  });
  TrapProbe r;
  r.chains = total;
  r.max_excursion = *std::max_element(excursion.begin(), excursion.end());
  r.trapped = r.max_excursion < V;
  return r;
}

}  // namespace shadowlab
