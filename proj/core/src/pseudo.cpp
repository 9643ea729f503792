#include "shadowlab/pseudo.hpp"

#include <algorithm>
#include <cmath>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"

namespace shadowlab {

namespace {
constexpr double kTimeSlack = 1e-12;
}

Point StepPseudotrajectory::at(double t) const {
  if (!(t >= t_lo() - 1e-9 && t <= t_hi() + 1e-9))
    fail(ErrorKind::window, "time " + std::to_string(t) + " outside the window [" +
                                std::to_string(t_lo()) + ", " + std::to_string(t_hi()) + "]");
  long n = static_cast<long>(std::floor((t + kTimeSlack) / T0));
  n = std::clamp(n, n_min, n_max);
  return flow->advance(t - static_cast<double>(n) * T0, anchor(n));
}

double StepPseudotrajectory::anchor_defect() const {
  double m = 0.0;
  for (long n = n_min; n < n_max; ++n)
    m = std::max(m, flow->distance(flow->advance(T0, anchor(n)), anchor(n + 1)));
  return m;
}

json StepPseudotrajectory::to_json() const {
  json a = json::array();
  for (const auto& p : anchors) a.push_back(std::vector<double>(p.coords().begin(), p.coords().end()));
  return {{"T0", T0}, {"n_min", n_min}, {"n_max", n_max}, {"anchors", a},
          {"defect", defect}, {"flow", flow->descriptor()}, {"seed", seed}};
}

StepPseudotrajectory StepPseudotrajectory::from_json(const json& j) {
  StepPseudotrajectory xi;
  xi.flow = flow_from_json(j.at("flow"));
  xi.T0 = j.at("T0");
  xi.n_min = j.at("n_min");
  xi.n_max = j.at("n_max");
  xi.defect = j.at("defect");
  xi.seed = j.value("seed", std::uint64_t{0});
  for (const auto& a : j.at("anchors")) {
    const auto c = a.get<std::vector<double>>();
    Point p(std::span<const double>(c.data(), c.size()));
    require(xi.flow->contains(p), ErrorKind::domain, "anchor outside the flow's space");
    xi.anchors.push_back(p);
  }
  require(static_cast<long>(xi.anchors.size()) == xi.n_max - xi.n_min + 1,
          ErrorKind::window, "anchor count does not match the window");
  return xi;
}

std::vector<double> uniform_jump(const Flow& flow, double radius, Rng& rng) {
  std::vector<double> v;
  for (std::size_t k : flow.factor_dims()) {
    std::vector<double> c(k);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& x : c) {
        x = rng.uniform(-1.0, 1.0);
        n2 += x * x;
      }
    } while (n2 > 1.0);
    for (double x : c) v.push_back(radius * x);
  }
  return v;
}

std::vector<double> directed_jump(const Flow& flow, const Point& from,
                                  const Point& target, double d) {
  auto v = flow.chart_delta(from, target);
  double norm = 0.0;
  std::size_t off = 0;
  for (std::size_t k : flow.factor_dims()) {
    double n2 = 0.0;
    for (std::size_t i = off; i < off + k; ++i) n2 += v[i] * v[i];
    norm = std::max(norm, std::sqrt(n2));
    off += k;
  }
  const double scale = norm > 0.0 ? std::min(0.9 * d, norm) / norm : 0.0;
  for (auto& x : v) x *= scale;
  return v;
}

StepPseudotrajectory build_chain(FlowPtr flow, const Point& x0, double d, double T0,
                                 long n_min, long n_max, const JumpRule& forward,
                                 const JumpRule& backward, std::uint64_t seed) {
  require(d >= 0, ErrorKind::parameter, "defect must be non-negative");
  require(T0 > 0 && T0 < 1, ErrorKind::parameter, "T0 must lie in (0, 1)");
  require(n_min <= 0 && 0 <= n_max && n_min < n_max, ErrorKind::window,
          "window must contain 0 and at least one step");
  require(flow->contains(x0), ErrorKind::domain, "start point outside the space");
  StepPseudotrajectory xi;
  xi.flow = flow;
  xi.T0 = T0;
  xi.n_min = n_min;
  xi.n_max = n_max;
  xi.defect = d;
  xi.seed = seed;
  xi.anchors.resize(static_cast<std::size_t>(n_max - n_min + 1));
  auto slot = [&](long n) -> Point& { return xi.anchors[static_cast<std::size_t>(n - n_min)]; };
  Rng rng(seed);
  slot(0) = flow->project(x0);
  for (long n = 0; n < n_max; ++n) {
    const Point flowed = flow->advance(T0, slot(n));
    slot(n + 1) = flow->displace(flowed, forward(n, flowed, rng));
  }
  for (long n = 0; n > n_min; --n) {
    const Point moved = flow->displace(slot(n), backward(n, slot(n), rng));
    slot(n - 1) = flow->advance(-T0, moved);
  }
  return xi;
}

StepPseudotrajectory generate_pt(FlowPtr flow, const Point& x0, double d, double T0,
                                 long n_min, long n_max, std::uint64_t seed,
                                 const JumpModel& model) {
  require(d > 0, ErrorKind::parameter, "defect must be positive");
  const Flow& f = *flow;
  JumpRule uniform = [&f, d](long, const Point&, Rng& rng) {
    return uniform_jump(f, 0.999 * d, rng);
  };
  JumpRule forward = uniform;
  if (model.kind == JumpModel::Kind::directed) {
    require(f.contains(model.target), ErrorKind::domain, "jump target outside the space");
    forward = [&f, d, target = model.target](long, const Point& from, Rng&) {
      return directed_jump(f, from, target, d);
    };
  }
  return build_chain(std::move(flow), x0, d, T0, n_min, n_max, forward, uniform, seed);
}

double validate_ps(const StepPseudotrajectory& xi) {
  const double dt = xi.T0 / 8.0;
  const auto nt = static_cast<std::size_t>(std::floor((xi.t_hi() - xi.t_lo()) / dt + 1e-9)) + 1;
  std::vector<double> s_grid;
  for (double s = 0.0; s < 1.0 - 1e-12; s += dt) s_grid.push_back(s);
  s_grid.push_back(1.0);
  std::vector<double> worst(nt, 0.0);
  parallel_for(nt, [&](std::size_t i) {
    const double t = xi.t_lo() + static_cast<double>(i) * dt;
    const Point base = xi.at(t);
    double m = 0.0;
    for (double s : s_grid) {
      if (t + s > xi.t_hi() + 1e-12) break;
      m = std::max(m, xi.flow->distance(xi.at(t + s), xi.flow->advance(s, base)));
    }
    worst[i] = m;
  });
  return *std::max_element(worst.begin(), worst.end());
}

double validate_ps(const ContinuousPseudotrajectory& xi) {
  require(xi.times.size() == xi.samples.size() && !xi.times.empty(), ErrorKind::window,
          "sample and time counts differ");
  const std::size_t n = xi.times.size();
  std::vector<double> worst(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t j = i; j < n && xi.times[j] - xi.times[i] <= 1.0 + 1e-12; ++j)
      m = std::max(m, xi.flow->distance(xi.samples[j],
                                        xi.flow->advance(xi.times[j] - xi.times[i], xi.samples[i])));
    worst[i] = m;
  });
  return *std::max_element(worst.begin(), worst.end());
}

ContinuousPseudotrajectory sample_continuous(const StepPseudotrajectory& xi, double dt) {
  require(dt > 0, ErrorKind::parameter, "sampling pitch must be positive");
  ContinuousPseudotrajectory c;
  c.flow = xi.flow;
  c.defect = xi.defect;
  for (long k = 0;; ++k) {
    const double t = xi.t_lo() + static_cast<double>(k) * dt;
    if (t > xi.t_hi() + 1e-12) break;
    c.times.push_back(t);
    c.samples.push_back(xi.at(std::min(t, xi.t_hi())));
  }
  return c;
}

PtConversion ps_to_pt(const ContinuousPseudotrajectory& xi, double T0) {
  require(T0 > 0 && T0 < 1, ErrorKind::parameter, "T0 must lie in (0, 1)");
  require(!xi.times.empty(), ErrorKind::window, "empty pseudotrajectory");
  const long n_min = static_cast<long>(std::ceil(xi.times.front() / T0 - 1e-9));
  const long n_max = static_cast<long>(std::floor(xi.times.back() / T0 + 1e-9));
  require(n_max - n_min >= 2, ErrorKind::window, "window spans fewer than two anchor steps");

  PtConversion out;
  auto& s = out.step;
  s.flow = xi.flow;
  s.T0 = T0;
  s.n_min = n_min;
  s.n_max = n_max;
  for (long n = n_min; n <= n_max; ++n) {
    const double tn = static_cast<double>(n) * T0;
    auto it = std::upper_bound(xi.times.begin(), xi.times.end(), tn + kTimeSlack);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xi.times.begin() - 1, 0));
    s.anchors.push_back(xi.flow->advance(tn - xi.times[k], xi.samples[k]));
  }
  const double step_defect = s.anchor_defect();
  double sup = 0.0;
  for (std::size_t i = 0; i < xi.times.size(); ++i) {
    const double t = xi.times[i];
    if (t < s.t_lo() - 1e-12 || t > s.t_hi() + 1e-12) continue;
    sup = std::max(sup, xi.flow->distance(xi.samples[i], s.at(t)));
  }
  out.sup_distance = sup;
  const double m = std::max(sup, step_defect);
  out.L_estimate = xi.defect > 0 ? m / xi.defect : 0.0;
  s.defect = std::max(step_defect, 1e-300) * (1.0 + 1e-12);
  return out;
}

}  // namespace shadowlab
