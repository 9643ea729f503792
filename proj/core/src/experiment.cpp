#include "shadowlab/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "shadowlab/errors.hpp"
#include "shadowlab/parallel.hpp"

namespace shadowlab {

namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& p, ErrorKind kind) {
  std::ifstream in(p);
  if (!in) fail(kind, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(kind, p.string() + ": " + e.what());
  }
}

template <class T>
void field(const json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("/") + name + ": " + e.what());
  }
}

json resolve_flow(const json& f, const fs::path& base, const char* name) {
  if (f.is_string()) {
    const fs::path p = base / f.get<std::string>();
    if (!fs::exists(p))
      fail(ErrorKind::config, std::string("/") + name + ": file " + p.string() + " not found");
    return read_json_file(p, ErrorKind::config);
  }
  if (!f.is_object()) fail(ErrorKind::config, std::string("/") + name + ": expected object or path");
  return f;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) fail(ErrorKind::config, "/: expected an object");
  static const std::set<std::string> known{
      "version", "pipeline", "flow",  "flow2",     "d_list",  "eps0",        "eps1",
      "eps_rep", "dt",       "ds",    "delta_grid", "slope_cap", "s_window", "dp_eps",
      "T0",      "n_min",    "n_max", "r0",        "r1",      "r2",          "max_retries",
      "cases",   "subcases", "trials", "seed",     "out_csv", "out_json",    "cert_dir"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) fail(ErrorKind::config, "/" + k + ": unknown field");
  ExperimentConfig c;
  if (!j.contains("version")) fail(ErrorKind::config, "/version: missing");
  field(j, "version", c.version);
  if (c.version != kConfigVersion)
    fail(ErrorKind::config, "/version: unsupported version " + std::to_string(c.version));
  field(j, "pipeline", c.pipeline);
  if (c.pipeline != "thm1" && c.pipeline != "thm2" && c.pipeline != "oriented")
    fail(ErrorKind::config, "/pipeline: expected thm1, thm2 or oriented");
  if (!j.contains("flow")) fail(ErrorKind::config, "/flow: missing");
  c.flow = resolve_flow(j.at("flow"), base_dir, "flow");
  if (c.pipeline == "thm2") {
    if (!j.contains("flow2")) fail(ErrorKind::config, "/flow2: missing");
    c.flow2 = resolve_flow(j.at("flow2"), base_dir, "flow2");
  }
  field(j, "d_list", c.d_list);
  field(j, "eps0", c.eps0);
  field(j, "eps1", c.eps1);
  field(j, "eps_rep", c.eps_rep);
  field(j, "dt", c.dt);
  field(j, "ds", c.ds);
  field(j, "delta_grid", c.delta_grid);
  field(j, "slope_cap", c.slope_cap);
  field(j, "s_window", c.s_window);
  field(j, "dp_eps", c.dp_eps);
  field(j, "T0", c.T0);
  field(j, "n_min", c.n_min);
  field(j, "n_max", c.n_max);
  field(j, "r0", c.r0);
  field(j, "r1", c.r1);
  field(j, "r2", c.r2);
  field(j, "max_retries", c.max_retries);
  field(j, "cases", c.cases);
  field(j, "subcases", c.subcases);
  field(j, "trials", c.trials);
  field(j, "seed", c.seed);
  field(j, "out_csv", c.out_csv);
  field(j, "out_json", c.out_json);
  field(j, "cert_dir", c.cert_dir);

  auto positive = [](double v, const char* name) {
    if (!(v > 0)) fail(ErrorKind::config, std::string("/") + name + ": must be positive");
  };
  if (c.d_list.empty()) fail(ErrorKind::config, "/d_list: empty");
  for (std::size_t i = 0; i < c.d_list.size(); ++i)
    if (!(c.d_list[i] > 0))
      fail(ErrorKind::config, "/d_list/" + std::to_string(i) + ": must be positive");
  positive(c.eps0, "eps0");
  positive(c.eps1, "eps1");
  positive(c.eps_rep, "eps_rep");
  positive(c.delta_grid, "delta_grid");
  positive(c.slope_cap, "slope_cap");
  positive(c.T0, "T0");
  positive(c.r0, "r0");
  positive(c.r1, "r1");
  positive(c.r2, "r2");
  if (c.dt < 0) fail(ErrorKind::config, "/dt: must be non-negative");
  if (c.ds < 0) fail(ErrorKind::config, "/ds: must be non-negative");
  if (c.s_window < 0) fail(ErrorKind::config, "/s_window: must be non-negative");
  if (c.dp_eps < 0) fail(ErrorKind::config, "/dp_eps: must be non-negative");
  if (c.trials < 1) fail(ErrorKind::config, "/trials: must be at least 1");
  if (c.max_retries < 0) fail(ErrorKind::config, "/max_retries: must be non-negative");
  if (!(c.n_min <= 0 && 0 < c.n_max)) fail(ErrorKind::config, "/n_min: window must contain 0");
  if (c.pipeline == "thm1" && !(c.eps_rep < c.eps0))
    fail(ErrorKind::config, "/eps_rep: must be below eps0");
  return c;
}

json ExperimentConfig::to_json() const {
  json j = {{"version", version}, {"pipeline", pipeline}, {"flow", flow},
            {"d_list", d_list},   {"eps0", eps0},         {"eps1", eps1},
            {"eps_rep", eps_rep}, {"dt", dt},             {"ds", ds},
            {"delta_grid", delta_grid}, {"slope_cap", slope_cap}, {"s_window", s_window},
            {"dp_eps", dp_eps},   {"T0", T0},             {"n_min", n_min},
            {"n_max", n_max},     {"r0", r0},             {"r1", r1},
            {"r2", r2},           {"max_retries", max_retries}, {"cases", cases},
            {"subcases", subcases}, {"trials", trials},   {"seed", seed},
            {"out_csv", out_csv}, {"out_json", out_json}, {"cert_dir", cert_dir}};
  if (!flow2.is_null()) j["flow2"] = flow2;
  return j;
}

SearchParams ExperimentConfig::search_params() const {
  SearchParams p;
  p.dt = dt;
  p.ds = ds;
  p.slope_cap = slope_cap;
  p.s_window = s_window;
  p.dp_eps = dp_eps;
  return p;
}

ExperimentConfig load_config(const fs::path& path) {
  return ExperimentConfig::from_json(read_json_file(path, ErrorKind::config),
                                     path.parent_path());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

json certificate_file(const StepPseudotrajectory& xi, const ShadowingCertificate& cert) {
  return {{"chain", xi.to_json()}, {"certificate", cert.to_json()}};
}

namespace {

std::string b(bool v) { return v ? "1" : "0"; }

struct TrialRecord {
  std::vector<std::string> row;
  std::optional<json> cert_file;
};

void count_retries(json& hist, int r) {
  const std::string k = std::to_string(r);
  hist[k] = hist.value(k, 0) + 1;
}

ExperimentResult run_thm1(const ExperimentConfig& c, std::vector<TrialRecord>& records) {
  const FlowPtr flow = flow_from_json(c.flow);
  require(flow->space() == SpaceKind::disk, ErrorKind::config,
          "/flow: thm1 scenarios are generated on the disk flow");
  const std::vector<int> cases = c.cases.empty() ? std::vector<int>{1, 2, 4} : c.cases;
  const ScenarioWindow w{c.T0, c.n_min, c.n_max};
  ExperimentResult res;
  res.header = {"seed", "case_id", "d", "oriented_ok", "standard_ok", "sup_error", "retries"};
  json per_d = json::array();
  long counterexamples = 0;
  for (double d : c.d_list) {
    const auto trap = estimate_trap_radius(flow, 0, c.eps0 / 4.0, d, c.T0, c.seed);
    ConstantsOptions opts;
    opts.mesh = c.delta_grid;
    opts.T0 = c.T0;
    opts.T0_margin = 1e-6;
    const auto consts = estimate_constants(*flow, trap.U / 3.0, c.eps_rep, opts);
    Theorem1Params p;
    p.eps0 = c.eps0;
    p.eps1 = c.eps1;
    p.search = c.search_params();
    p.max_retries = c.max_retries;
    std::vector<Theorem1Outcome> out(static_cast<std::size_t>(c.trials));
    std::vector<std::optional<json>> files(out.size());
    parallel_for(out.size(), [&](std::size_t i) {
      const std::uint64_t seed = c.seed + i;
      const int cs = cases[i % cases.size()];
      auto make = [&](double dd) { return disk_scenario(flow, cs, dd, w, seed); };
      out[i] = theorem1_trial(make, d, consts, p, seed);
      const auto& cert = out[i].standard ? out[i].standard : out[i].oriented;
      if (!c.cert_dir.empty() && cert) files[i] = certificate_file(make(out[i].d), *cert);
    });
    json hist = json::object(), by_case = json::object();
    long ori = 0, std_ok = 0, cex = 0;
    double max_sup = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& o = out[i];
      records.push_back({{std::to_string(o.seed), std::to_string(o.case_id), format_double(o.d),
                          b(o.oriented_ok), b(o.standard_ok), format_double(o.sup_error),
                          std::to_string(o.retries)},
                         files[i]});
      ori += o.oriented_ok;
      std_ok += o.standard_ok;
      cex += o.counterexample();
      if (o.standard_ok) max_sup = std::max(max_sup, o.sup_error);
      count_retries(hist, o.retries);
      const std::string k = std::to_string(o.case_id);
      by_case[k] = by_case.value(k, 0) + 1;
    }
    counterexamples += cex;
    per_d.push_back({{"d", d},
                     {"trials", out.size()},
                     {"oriented_ok", ori},
                     {"standard_ok", std_ok},
                     {"counterexamples", cex},
                     {"max_sup_error", max_sup},
                     {"retry_histogram", hist},
                     {"cases", by_case},
                     {"trap_radius", trap.U},
                     {"chain_trapping", trap.chain_trapping},
                     {"constants", consts.to_json()}});
  }
  res.summary = {{"per_d", per_d}, {"counterexamples", counterexamples}};
  res.all_pass = counterexamples == 0;
  return res;
}

ExperimentResult run_thm2(const ExperimentConfig& c, std::vector<TrialRecord>& records) {
  const FlowPtr f1 = flow_from_json(c.flow);
  const FlowPtr f2 = flow_from_json(c.flow2);
  const FlowPtr prod = build_product_flow(f1, f2);
  const std::vector<int> cases = c.cases.empty() ? std::vector<int>{1, 2} : c.cases;
  require(!c.subcases.empty(), ErrorKind::config, "/subcases: empty");
  const ScenarioWindow w{c.T0, c.n_min, c.n_max};
  const auto pc = estimate_product_constants(*f2, c.r1, c.r2, c.eps0, c.eps1);
  ConstantsOptions opts;
  opts.mesh = c.delta_grid;
  opts.T0 = c.T0;
  const auto consts1 = estimate_constants(*f1, c.r0, pc.eps_mid, opts);
  Theorem2Params p;
  p.eps0 = c.eps0;
  p.eps1 = c.eps1;
  p.search = c.search_params();
  p.max_retries = c.max_retries;
  ExperimentResult res;
  res.header = {"seed", "case_id", "subcase", "d", "factor_ok", "oriented_ok", "middle_ok",
                "sup_error", "retries"};
  json per_d = json::array();
  bool all = true;
  for (double d : c.d_list) {
    std::vector<ProductOutcome> out(static_cast<std::size_t>(c.trials));
    std::vector<std::optional<json>> files(out.size());
    parallel_for(out.size(), [&](std::size_t i) {
      const std::uint64_t seed = c.seed + i;
      const int cs = cases[i % cases.size()];
      const int sub = cs == 2 ? c.subcases[(i / cases.size()) % c.subcases.size()] : 0;
      auto make = [&](double dd) { return product_scenario(prod, cs, sub, dd, w, seed); };
      out[i] = theorem2_trial(make, d, consts1, pc, p, seed);
      if (!c.cert_dir.empty() && out[i].certificate)
        files[i] = certificate_file(make(out[i].d), *out[i].certificate);
    });
    json hist = json::object(), by_case = json::object();
    long ok = 0, mid_checked = 0, mid_ok = 0;
    double max_sup = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& o = out[i];
      records.push_back({{std::to_string(o.seed), std::to_string(o.case_id),
                          std::to_string(o.subcase), format_double(o.d), b(o.factor_ok), b(o.ok),
                          b(o.middle_ok), format_double(o.sup_error), std::to_string(o.retries)},
                         files[i]});
      ok += o.ok;
      if (o.case_id == 2 && o.subcase == 2) {
        ++mid_checked;
        mid_ok += o.middle_ok;
      }
      if (o.ok) max_sup = std::max(max_sup, o.sup_error);
      count_retries(hist, o.retries);
      const std::string k = std::to_string(o.case_id) + "." + std::to_string(o.subcase);
      by_case[k] = by_case.value(k, 0) + 1;
      all = all && o.ok;
    }
    per_d.push_back({{"d", d},
                     {"trials", out.size()},
                     {"ok", ok},
                     {"middle_checked", mid_checked},
                     {"middle_ok", mid_ok},
                     {"max_sup_error", max_sup},
                     {"retry_histogram", hist},
                     {"cases", by_case}});
  }
  res.summary = {{"per_d", per_d},
                 {"product_constants", pc.to_json()},
                 {"constants", consts1.to_json()}};
  res.all_pass = all;
  return res;
}

ExperimentResult run_oriented(const ExperimentConfig& c, std::vector<TrialRecord>& records) {
  const FlowPtr flow = flow_from_json(c.flow);
  const ScenarioWindow w{c.T0, c.n_min, c.n_max};
  ExperimentResult res;
  res.header = {"seed", "d", "oriented_ok", "sup_error"};
  json per_d = json::array();
  bool all = true;
  for (double d : c.d_list) {
    std::vector<std::optional<ShadowingCertificate>> out(static_cast<std::size_t>(c.trials));
    std::vector<StepPseudotrajectory> chains(out.size());
    parallel_for(out.size(), [&](std::size_t i) {
      const std::uint64_t seed = c.seed + i;
      if (flow->space() == SpaceKind::circle) {
        chains[i] = circle_scenario(flow, d, w, seed);
      } else if (flow->space() == SpaceKind::disk) {
        chains[i] = disk_scenario(flow, 1, d, w, seed);
      } else {
        Rng rng(seed);
        const auto cover = flow->cover(0.1);
        const Point x0 = cover[static_cast<std::size_t>(rng.uniform() * cover.size()) % cover.size()];
        chains[i] = generate_pt(flow, x0, d, c.T0, c.n_min, c.n_max, seed);
      }
      const auto sp = c.search_params();
      out[i] = search_oriented(chains[i], c.eps1, default_candidates(chains[i], c.eps1, sp), sp);
    });
    long ok = 0;
    double max_sup = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool found = out[i].has_value();
      records.push_back({{std::to_string(c.seed + i), format_double(d), b(found),
                          format_double(found ? out[i]->sup_error : 0.0)},
                         found && !c.cert_dir.empty()
                             ? std::optional<json>(certificate_file(chains[i], *out[i]))
                             : std::nullopt});
      ok += found;
      if (found) max_sup = std::max(max_sup, out[i]->sup_error);
      all = all && found;
    }
    per_d.push_back({{"d", d}, {"trials", out.size()}, {"oriented_ok", ok},
                     {"max_sup_error", max_sup}});
  }
  res.summary = {{"per_d", per_d}};
  res.all_pass = all;
  return res;
}

}  // namespace

ExperimentResult run_trials(const ExperimentConfig& config) {
  std::vector<TrialRecord> records;
  ExperimentResult res = config.pipeline == "thm1"   ? run_thm1(config, records)
                         : config.pipeline == "thm2" ? run_thm2(config, records)
                                                     : run_oriented(config, records);
  for (auto& r : records) res.rows.push_back(std::move(r.row));
  res.summary["pipeline"] = config.pipeline;
  res.summary["config"] = config.to_json();
  res.summary["all_pass"] = res.all_pass;
  res.summary["trials"] = records.size();
  if (!config.cert_dir.empty()) {
    json files = json::array();
    fs::create_directories(config.cert_dir);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].cert_file) continue;
      const fs::path p = fs::path(config.cert_dir) / (config.pipeline + "-" + std::to_string(i) + ".json");
      std::ofstream(p) << records[i].cert_file->dump(1) << '\n';
      files.push_back(p.string());
    }
    res.summary["certificates"] = files;
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult res = run_trials(config);
  auto open = [](const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) fail(ErrorKind::config, "cannot write " + path);
    return out;
  };
  {
    auto out = open(config.out_csv);
    write_csv(out, res.header, res.rows);
  }
  {
    auto out = open(config.out_json);
    out << res.summary.dump(2) << '\n';
  }
  return res;
}

void export_plotdata(const fs::path& report, const std::string& kind, std::ostream& out) {
  if (kind != "free_space" && kind != "reparam" && kind != "orbit")
    fail(ErrorKind::parameter, "unknown export kind '" + kind + "'");
  const json j = read_json_file(report, ErrorKind::parameter);
  const auto cert = ShadowingCertificate::from_json(j.at("certificate"));
  std::vector<std::vector<std::string>> rows;
  if (kind == "reparam") {
    for (const auto& k : cert.h.knots()) rows.push_back({format_double(k.t), format_double(k.v)});
    write_csv(out, {"t", "h"}, rows);
    return;
  }
  const auto xi = StepPseudotrajectory::from_json(j.at("chain"));
  if (kind == "orbit") {
    const auto orbit = orbit_segment(*xi.flow, cert.x, cert.h(cert.t_lo), cert.h(cert.t_hi), 0.05);
    std::vector<std::string> header{"t"};
    for (std::size_t k = 0; k < xi.flow->dim(); ++k) header.push_back("x" + std::to_string(k));
    for (std::size_t i = 0; i < orbit.times.size(); ++i) {
      std::vector<std::string> r{format_double(orbit.times[i])};
      for (double v : orbit.points[i].coords()) r.push_back(format_double(v));
      rows.push_back(std::move(r));
    }
    write_csv(out, header, rows);
    return;
  }
  const double dt = xi.T0 / 2.0, ds = xi.T0 / 8.0;
  const auto grid = build_free_space(xi, cert.x, cert.eps, dt, ds, cert.t_lo, cert.t_hi,
                                     cert.h(cert.t_lo) - 1.0, cert.h(cert.t_hi) + 1.0);
  for (std::size_t i = 0; i < grid.rows(); ++i)
    for (std::size_t k = 0; k < grid.cols(); ++k)
      rows.push_back({std::to_string(i), std::to_string(k), b(grid.free(i, k))});
  write_csv(out, {"i", "j", "free"}, rows);
}

}  // namespace shadowlab
