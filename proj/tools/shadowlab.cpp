// shadowlab command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "shadowlab/errors.hpp"
#include "shadowlab/experiment.hpp"
#include "shadowlab/glue.hpp"
#include "shadowlab/pseudo.hpp"
#include "shadowlab/shadow_search.hpp"
#include "shadowlab/singularities.hpp"
#include "shadowlab/straighten.hpp"

namespace fs = std::filesystem;
using namespace shadowlab;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::io, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out << j.dump(2) << '\n';
}

// A flow argument is a descriptor file or a bare kind name ("disk", "north_south").
json flow_descriptor(const std::string& arg) {
  if (fs::exists(arg)) return read_json(arg);
  return json{{"kind", arg}};
}

Point parse_point(const std::vector<double>& v) { return Point(v); }

StepPseudotrajectory load_chain(const std::string& path, const std::string& flow_arg) {
  json j = read_json(path);
  if (j.contains("chain")) j = j.at("chain");
  if (!flow_arg.empty()) j["flow"] = flow_descriptor(flow_arg);
  return StepPseudotrajectory::from_json(j);
}

// Certificate files carry their chain; a bare certificate needs --input.
std::pair<StepPseudotrajectory, ShadowingCertificate> load_cert(const std::string& path,
                                                                const std::string& chain_path) {
  const json j = read_json(path);
  const json cj = j.contains("certificate") ? j.at("certificate") : j;
  if (j.contains("chain")) return {StepPseudotrajectory::from_json(j.at("chain")),
                                   ShadowingCertificate::from_json(cj)};
  if (chain_path.empty()) fail(ErrorKind::parameter, path + " has no chain; pass --input");
  return {load_chain(chain_path, ""), ShadowingCertificate::from_json(cj)};
}

struct Common {
  std::string flow, flow2, input, out, cert, consts, kind = "reparam", mode = "oriented";
  std::string direction = "forward", config, csv, summary, cert_dir;
  std::vector<double> point, radii{0.5, 0.25, 0.1}, d_list;
  std::vector<int> cases;
  double d = 0.01, eps = 0.04, eps_rep = 0.25, eps0 = 0.3, eps1 = 0.04, T0 = 0.25, r0 = 0.3;
  double consts_T0 = 0.0, mesh = 0.02, margin = 0.01;
  double horizon = 50.0, cell = 0.0, slope_cap = 16.0, s_window = 30.0, dp_eps = 0.0;
  long n_min = -40, n_max = 40;
  std::size_t budget = 2'000'000;
  int trials = 1;
  std::uint64_t seed = 1;
};

int cmd_classify(const Common& o) {
  const FlowPtr flow = flow_from_json(flow_descriptor(o.flow));
  json reports = json::array();
  if (!o.point.empty()) {
    reports.push_back(classify_singularity(*flow, parse_point(o.point), o.radii, o.horizon).to_json());
  } else {
    for (const auto& s : flow->singularities()) {
      json r = classify_singularity(*flow, s.point, o.radii, o.horizon).to_json();
      r["declared"] = to_string(s.stability);
      reports.push_back(std::move(r));
    }
  }
  write_json(o.out, reports);
  return 0;
}

int cmd_reach(const Common& o) {
  const FlowPtr flow = flow_from_json(flow_descriptor(o.flow));
  require(!o.point.empty() || !flow->singularities().empty(), ErrorKind::parameter,
          "pass --point");
  const Point p = o.point.empty() ? flow->singularities().front().point : parse_point(o.point);
  const Direction dir = o.direction == "backward" ? Direction::backward : Direction::forward;
  write_json(o.out, reachable_set(*flow, p, o.d, dir, o.budget, o.cell).to_json());
  return 0;
}

int cmd_pseudo_gen(const Common& o) {
  const FlowPtr flow = flow_from_json(flow_descriptor(o.flow));
  require(!o.point.empty(), ErrorKind::parameter, "pass --x0");
  const auto xi = generate_pt(flow, parse_point(o.point), o.d, o.T0, o.n_min, o.n_max, o.seed);
  write_json(o.out, xi.to_json());
  return 0;
}

int cmd_pseudo_validate(const Common& o) {
  const auto xi = load_chain(o.input, o.flow);
  const double anchor = xi.anchor_defect();
  const double sampled = validate_ps(xi);
  const bool ok = anchor < xi.defect;
  write_json(o.out, {{"declared_defect", xi.defect},
                     {"anchor_defect", anchor},
                     {"unit_time_defect", sampled},
                     {"valid", ok}});
  return ok ? 0 : 1;
}

int cmd_shadow_search(const Common& o) {
  const auto xi = load_chain(o.input, o.flow);
  SearchParams sp;
  sp.slope_cap = o.slope_cap;
  sp.s_window = o.s_window;
  sp.dp_eps = o.dp_eps;
  const auto cands = default_candidates(xi, o.eps, sp);
  const auto cert = o.mode == "standard" ? search_standard(xi, o.eps, o.eps_rep, cands, sp)
                                         : search_oriented(xi, o.eps, cands, sp);
  if (!cert) {
    write_json(o.out, {{"found", false}, {"mode", o.mode}, {"eps", o.eps}});
    return 1;
  }
  write_json(o.out, certificate_file(xi, *cert));
  return 0;
}

int cmd_constants(const Common& o) {
  const FlowPtr flow = flow_from_json(flow_descriptor(o.flow));
  ConstantsOptions opts;
  opts.T0 = o.consts_T0;
  opts.mesh = o.mesh;
  opts.T0_margin = o.margin;
  const auto c = estimate_constants(*flow, o.r0, o.eps, opts);
  json j = c.to_json();
  j["flow"] = flow->descriptor();
  write_json(o.out, j);
  return 0;
}

int cmd_straighten(const Common& o) {
  auto [xi, cert] = load_cert(o.cert, o.input);
  const json cj = read_json(o.consts);
  const auto consts = ConstantsBundle::from_json(*xi.flow, cj);
  const auto s = straighten_absolute(xi, cert.x, cert.h, cert.t_lo, cert.t_hi, o.eps, consts);
  ShadowingCertificate out = cert;
  out.h = s.H;
  out.mode = ShadowMode::standard;
  out.eps = o.eps;
  out.eps_rep = o.eps;
  out.sup_error = sup_distance(xi, cert.x, s.H, cert.t_lo, cert.t_hi, cert.verify_pitch);
  json j = certificate_file(xi, out);
  j["straighten"] = s.detail.to_json();
  write_json(o.out, j);
  return s.detail.p1 && s.detail.p2 && s.detail.p3 ? 0 : 1;
}

int cmd_verify(const Common& o) {
  auto [xi, cert] = load_cert(o.cert, o.input);
  const auto c = verify_certificate(xi, cert);
  write_json(o.out, {{"sup_error", c.sup_error},
                     {"sup_ok", c.sup_ok},
                     {"rep_ok", c.rep_ok},
                     {"matches_stored", c.matches_stored},
                     {"ok", c.ok()}});
  return c.ok() ? 0 : 1;
}

int cmd_export(const Common& o) {
  if (o.out.empty() || o.out == "-") {
    export_plotdata(o.cert, o.kind, std::cout);
    return 0;
  }
  std::ofstream out(o.out);
  if (!out) fail(ErrorKind::io, "cannot write " + o.out);
  export_plotdata(o.cert, o.kind, out);
  return 0;
}

int cmd_experiment(const Common& o, const std::string& pipeline) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else {
    json j{{"version", kConfigVersion}, {"pipeline", pipeline},
           {"eps0", o.eps0}, {"eps1", o.eps1}, {"trials", o.trials}, {"seed", o.seed},
           {"T0", o.T0}, {"n_min", o.n_min}, {"n_max", o.n_max}};
    j["flow"] = flow_descriptor(o.flow.empty() ? (pipeline == "oriented" ? "north_south" : "disk")
                                               : o.flow);
    if (pipeline == "thm2")
      j["flow2"] = flow_descriptor(o.flow2.empty() ? "north_south" : o.flow2);
    j["d_list"] = o.d_list.empty() ? std::vector<double>{o.d} : o.d_list;
    if (!o.cases.empty()) j["cases"] = o.cases;
    if (pipeline == "thm1") j["eps_rep"] = o.eps_rep;
    if (!o.csv.empty()) j["out_csv"] = o.csv;
    j["out_json"] = !o.summary.empty() ? o.summary
                                       : fs::path(j.value("out_csv", std::string("report.csv")))
                                             .replace_extension(".json")
                                             .string();
    if (!o.cert_dir.empty()) j["cert_dir"] = o.cert_dir;
    c = ExperimentConfig::from_json(j);
  }
  const auto res = run_experiment(c);
  std::cout << res.summary.at("trials") << " trials, all_pass=" << res.all_pass << ", report "
            << c.out_csv << '\n';
  return res.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shadowing experiments for flows on compact spaces"};
  app.require_subcommand(1);
  Common o;
  int rc = 0;

  auto* classify = app.add_subcommand("classify", "Lyapunov classification of singularities");
  classify->add_option("--flow", o.flow, "flow descriptor file or kind")->required();
  classify->add_option("--point", o.point, "point to classify (default: all declared)");
  classify->add_option("--radii", o.radii, "target radii V");
  classify->add_option("--horizon", o.horizon);
  classify->add_option("--out", o.out);
  classify->callback([&] { rc = cmd_classify(o); });

  auto* reach = app.add_subcommand("reach", "d-chain reachable set of a point");
  reach->add_option("--flow", o.flow)->required();
  reach->add_option("--point", o.point);
  reach->add_option("--d", o.d);
  reach->add_option("--direction", o.direction)->check(CLI::IsMember({"forward", "backward"}));
  reach->add_option("--cell", o.cell, "grid pitch (default d/4)");
  reach->add_option("--budget", o.budget);
  reach->add_option("--out", o.out);
  reach->callback([&] { rc = cmd_reach(o); });

  auto* gen = app.add_subcommand("pseudo-gen", "generate a step pseudotrajectory");
  gen->add_option("--flow", o.flow)->required();
  gen->add_option("--x0", o.point)->required();
  gen->add_option("--d", o.d);
  gen->add_option("--T0", o.T0);
  gen->add_option("--n-min", o.n_min);
  gen->add_option("--n-max", o.n_max);
  gen->add_option("--seed", o.seed);
  gen->add_option("--out", o.out);
  gen->callback([&] { rc = cmd_pseudo_gen(o); });

  auto* val = app.add_subcommand("pseudo-validate", "check the defect of a chain file");
  val->add_option("--input", o.input)->required();
  val->add_option("--flow", o.flow, "override the chain's flow");
  val->add_option("--out", o.out);
  val->callback([&] { rc = cmd_pseudo_validate(o); });

  auto* search = app.add_subcommand("shadow-search", "search for a shadowing orbit");
  search->add_option("--mode", o.mode)->check(CLI::IsMember({"oriented", "standard"}));
  search->add_option("--eps", o.eps);
  search->add_option("--eps-rep", o.eps_rep);
  search->add_option("--input", o.input)->required();
  search->add_option("--flow", o.flow, "override the chain's flow");
  search->add_option("--slope-cap", o.slope_cap);
  search->add_option("--s-window", o.s_window);
  search->add_option("--dp-eps", o.dp_eps);
  search->add_option("--out", o.out);
  search->callback([&] { rc = cmd_shadow_search(o); });

  auto* consts = app.add_subcommand("constants", "estimate straightening constants");
  consts->add_option("--flow", o.flow)->required();
  consts->add_option("--r0", o.r0);
  consts->add_option("--eps", o.eps)->required();
  consts->add_option("--T0", o.consts_T0, "fixed T0 (default: estimated)");
  consts->add_option("--mesh", o.mesh);
  consts->add_option("--margin", o.margin, "no-return margin for T0");
  consts->add_option("--out", o.out);
  consts->callback([&] { rc = cmd_constants(o); });

  auto* st = app.add_subcommand("straighten", "turn an oriented certificate into a standard one");
  st->add_option("--cert", o.cert)->required();
  st->add_option("--consts", o.consts)->required();
  st->add_option("--input", o.input, "chain file when the certificate has none");
  st->add_option("--eps", o.eps)->required();
  st->add_option("--out", o.out);
  st->callback([&] { rc = cmd_straighten(o); });

  for (const std::string pipeline : {"thm1", "thm2", "oriented"}) {
    auto* ex = app.add_subcommand(pipeline, pipeline == "thm1"   ? "oriented to standard on the disk flow"
                                            : pipeline == "thm2" ? "product flow construction"
                                                                 : "oriented search batch");
    if (pipeline == "thm2") {
      ex->add_option("--flow1", o.flow);
      ex->add_option("--flow2", o.flow2);
    } else {
      ex->add_option("--flow", o.flow);
    }
    ex->add_option("--config", o.config, "experiment config JSON (overrides flags)");
    ex->add_option("--d", o.d_list);
    ex->add_option("--eps0", o.eps0);
    ex->add_option("--eps1", o.eps1);
    ex->add_option("--eps-rep", o.eps_rep);
    ex->add_option("--T0", o.T0);
    ex->add_option("--n-min", o.n_min);
    ex->add_option("--n-max", o.n_max);
    ex->add_option("--cases", o.cases);
    ex->add_option("--trials", o.trials);
    ex->add_option("--seed", o.seed);
    ex->add_option("--out", o.csv, "CSV report");
    ex->add_option("--summary", o.summary, "JSON summary (default: report name with .json)");
    ex->add_option("--cert-dir", o.cert_dir);
    ex->callback([&o, &rc, pipeline] { rc = cmd_experiment(o, pipeline); });
  }

  auto* verify = app.add_subcommand("verify-cert", "recheck a certificate file");
  verify->add_option("--cert", o.cert)->required();
  verify->add_option("--input", o.input);
  verify->add_option("--out", o.out);
  verify->callback([&] { rc = cmd_verify(o); });

  auto* exp = app.add_subcommand("export", "plot data from a certificate file");
  exp->add_option("--report", o.cert)->required();
  exp->add_option("--kind", o.kind)->required();
  exp->add_option("--out", o.out);
  exp->callback([&] { rc = cmd_export(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
