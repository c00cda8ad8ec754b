// Command-line driver: one subcommand per analysis, outputs under --out.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "swimlab/swimlab.hpp"

namespace fs = std::filesystem;
using namespace swimlab;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;
constexpr int kUsage = 64;

struct Options {
  std::string command;
  std::string config;
  std::string out = "out";
  int part = -2;     // -2: take it from the config; 0: centre of mass
  int control = 0;   // 1-based, 0: take it from the config
  int jobs = 1;
  std::vector<double> target;
  std::string argv_echo;
};

// Errors that mean "this input is not acceptable" rather than "the computation failed".
bool is_validation_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
         dynamic_cast<const OverlapViolation*>(&e) || dynamic_cast<const BoundaryViolation*>(&e) ||
         dynamic_cast<const ShapeOutsideDomain*>(&e) || dynamic_cast<const SeparationViolated*>(&e);
}

template <int D>
nlohmann::json meta_base(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  nlohmann::json m;
  m["tool"] = "swimlab";
  m["version"] = library_version;
  m["command"] = o.command;
  m["argv"] = o.argv_echo;
  m["jobs"] = o.jobs;
  m["dimension"] = D;
  m["config_path"] = o.config;
  m["config_text"] = text;
  m["resolved"] = resolved_json<D>(ls.scenario);
  const auto& a = ls.analysis;
  m["resolved"]["analysis"] = {{"part", a.part + 1},
                               {"h", a.h},
                               {"samples", a.samples},
                               {"fd_h", a.fd_h},
                               {"targets", a.targets},
                               {"target_fraction", a.target_fraction},
                               {"h_sweep", a.h_sweep}};
  std::vector<int> c1;
  for (int j : a.controls) c1.push_back(j + 1);
  m["resolved"]["analysis"]["controls"] = c1;
  if (!a.direction.empty()) m["resolved"]["analysis"]["direction"] = a.direction;
  return m;
}

template <int D>
int resolve_part(const Options& o, const LoadedScenario<D>& ls) {
  if (o.part == -2) return ls.analysis.part;
  if (o.part < 0 || o.part > ls.scenario.initial.size()) throw InvalidArgument("--part must be 0 (centre of mass) or 1..n");
  return o.part - 1;
}

template <int D>
std::vector<int> resolve_controls(const Options& o, const LoadedScenario<D>& ls, std::size_t need) {
  std::vector<int> c = ls.analysis.controls;
  if (o.control > 0) {
    if (o.control > ls.scenario.initial.control_count()) throw InvalidArgument("--control out of range");
    c = {o.control - 1};
  }
  if (need > 0 && c.size() != need)
    throw InvalidArgument("analysis.controls must list " + std::to_string(need) + " indices");
  return c;
}

void print_margins(double pair, double wall) {
  std::printf("pair margin %.6g\nwall margin %.6g\n", pair, wall);
}

template <int D>
int cmd_validate(const Options&, const std::string&, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  sc.validate();
  const Grid<D> g = sc.grid();
  validate_configuration<D>(sc.initial, sc.shape, g);
  const auto rep = configuration_margins<D>(sc.initial, sc.shape, g);
  std::printf("valid %d-D scenario, %d parts, %d controls\n", D, sc.initial.size(), sc.initial.control_count());
  print_margins(rep.pair_margin, rep.wall_margin);
  return kOk;
}

template <int D>
int cmd_simulate(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  const Grid<D> g = sc.grid();
  const auto tr = simulate<D>(sc, SimulateOptions{sc.field_every > 0});
  write_trajectory_csv<D>(fs::path(o.out) / "trajectory.csv", tr, sc.record_every);
  {
    const auto masks = part_masks<D>(g, sc.shape, sc.initial);
    const auto c = control_densities<D>(sc.initial, sc.controls.at(0.0), degenerate_length_of(g));
    write_part_forces_csv<D>(fs::path(o.out) / "forces.csv", part_forces<D>(g, masks, c));
  }
  if (sc.field_every > 0) {
    fs::create_directories(fs::path(o.out) / "fields");
    for (std::size_t n = 0; n < tr.fields.size(); n += static_cast<std::size_t>(sc.field_every)) {
      char name[32];
      std::snprintf(name, sizeof name, "u_%06zu.csv", n);
      write_field_csv<D>(fs::path(o.out) / "fields" / name, g, tr.fields[n], tr.t[n]);
    }
  }
  auto m = meta_base<D>(o, text, ls);
  m["steps"] = tr.steps();
  m["final_time"] = tr.final_time();
  m["halted"] = tr.halted;
  m["halt_cause"] = to_string(tr.halt_cause);
  if (tr.halted) {
    m["halt_time"] = tr.halt_time;
    m["halt_detail"] = tr.halt_detail;
  }
  m["max_divergence"] = tr.max_divergence();
  m["min_margin"] = tr.min_margin();
  write_json(fs::path(o.out) / "meta.json", m);
  std::printf("%zu steps to t = %.6g, halt cause %s\n", tr.steps(), tr.final_time(), to_string(tr.halt_cause).c_str());
  return kOk;
}

template <int D>
int cmd_micromotion(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  const auto& a = ls.analysis;
  if (a.direction.empty()) throw InvalidArgument("analysis.direction is required for micromotion");
  const auto rep = micromotion_check<D>(sc, a.direction, a.h);
  CsvWriter w(fs::path(o.out) / "micromotion.csv");
  std::vector<std::string> cols{"t", "part"};
  for (int k = 0; k < D; ++k) cols.push_back(std::string("predicted_") + axis_name(k));
  for (int k = 0; k < D; ++k) cols.push_back(std::string("simulated_") + axis_name(k));
  w.header(cols);
  for (const auto& r : rep.rows) {
    w.cell(r.t).cell(r.part + 1);
    for (int k = 0; k < D; ++k) w.cell(r.predicted[k]);
    for (int k = 0; k < D; ++k) w.cell(r.simulated[k]);
    w.end_row();
  }
  auto m = meta_base<D>(o, text, ls);
  m["slope"] = rep.slope;
  m["angle_deg"] = rep.angle_deg;
  m["magnitude_ratio"] = rep.magnitude_ratio;
  write_json(fs::path(o.out) / "meta.json", m);
  for (std::size_t i = 0; i < rep.slope.size(); ++i)
    std::printf("part %zu: slope %.4f, angle %.3f deg, |sim|/|pred| %.4f\n", i + 1, rep.slope[i], rep.angle_deg[i],
                rep.magnitude_ratio[i]);
  return kOk;
}

template <int D>
int cmd_sensitivity(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  const int part = resolve_part<D>(o, ls);
  const auto controls = resolve_controls<D>(o, ls, 0);
  if (controls.empty()) throw InvalidArgument("no control selected; use --control or analysis.controls");
  const int j = controls.front();
  const auto base = baseline_run<D>(sc);
  if (base.halted) throw InvalidArgument("drift run halts before the horizon: " + base.halt_detail);
  const auto w = linearized_solve<D>(sc, base, j);
  std::vector<Vec<D>> psi;
  std::vector<VolterraKernel<D>> kernels;
  if (part < 0) {
    psi = center_of_mass_sensitivity<D>(sc, base, w);
    for (int i = 0; i < sc.initial.size(); ++i) kernels.push_back(volterra_kernel<D>(sc, base, i));
  } else {
    kernels.push_back(volterra_kernel<D>(sc, base, part));
    psi = volterra_solve<D>(kernels.front(), w);
  }
  {
    CsvWriter c(fs::path(o.out) / "psi.csv");
    std::vector<std::string> cols{"t"};
    for (int k = 0; k < D; ++k) cols.push_back(std::string("psi_") + axis_name(k));
    cols.push_back("w_norm");
    c.header(cols);
    for (std::size_t n = 0; n < w.t.size(); ++n) {
      c.cell(w.t[n]);
      for (int k = 0; k < D; ++k) c.cell(psi[n][k]);
      c.cell(w.norm[n]);
      c.end_row();
    }
  }
  {
    CsvWriter c(fs::path(o.out) / "kernel.csv");
    std::vector<std::string> cols{"t", "part"};
    for (int r = 0; r < D; ++r)
      for (int s = 0; s < D; ++s) cols.push_back("K" + std::to_string(r + 1) + std::to_string(s + 1));
    c.header(cols);
    for (const auto& k : kernels) {
      for (std::size_t n = 0; n < k.t.size(); ++n) {
        c.cell(k.t[n]).cell(k.part + 1);
        for (int r = 0; r < D; ++r)
          for (int s = 0; s < D; ++s) c.cell(k.K[n](r, s));
        c.end_row();
      }
    }
  }
  auto m = meta_base<D>(o, text, ls);
  m["part"] = part + 1;
  m["control"] = j + 1;
  nlohmann::json ks = nlohmann::json::array();
  for (const auto& k : kernels)
    ks.push_back({{"part", k.part + 1}, {"norm_integral", k.norm_integral}, {"smallness_exceeded", k.smallness_exceeded}});
  m["kernels"] = ks;
  m["psi_final"] = to_json<D>(psi.back());
  write_json(fs::path(o.out) / "meta.json", m);
  std::ostringstream s;
  s << psi.back().transpose();
  std::printf("dz/dv%d at T: %s\n", j + 1, s.str().c_str());
  return kOk;
}

template <int D>
void write_atlas_csv(const fs::path& path, const ReachabilityAtlas<D>& at, const std::vector<int>& controls) {
  CsvWriter c(path);
  std::vector<std::string> cols{"sample"};
  for (int j : controls) cols.push_back("v" + std::to_string(j + 1));
  for (int k = 0; k < D; ++k) cols.push_back(std::string("z_") + axis_name(k));
  cols.push_back("halted");
  c.header(cols);
  for (std::size_t s = 0; s < at.endpoints.size(); ++s) {
    c.cell(static_cast<int>(s));
    for (Eigen::Index q = 0; q < at.controls[s].size(); ++q) c.cell(at.controls[s](q));
    for (int k = 0; k < D; ++k) c.cell(at.endpoints[s][k]);
    c.cell(at.halted[s] ? 1 : 0);
    c.end_row();
  }
}

template <int D>
nlohmann::json atlas_json(const ReachabilityAtlas<D>& at) {
  nlohmann::json j;
  j["h"] = at.h;
  j["drift"] = to_json<D>(at.drift);
  j["degenerate"] = at.degenerate;
  j["diameter"] = at.diameter;
  j["inradius"] = at.inradius;
  j["certified"] = at.certified();
  if constexpr (D == 2) {
    j["winding"] = at.winding;
    j["simple"] = at.simple;
  } else {
    j["signed_volume"] = at.signed_volume;
    j["degree"] = at.degree;
    j["covers"] = at.covers;
  }
  return j;
}

template <int D>
int cmd_reach(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  const int part = resolve_part<D>(o, ls);
  const auto controls = resolve_controls<D>(o, ls, D);
  const Grid<D> g = sc.grid();
  const auto ind = independence_check<D>(g, sc.shape, sc.initial, controls, part, sc.tol.sigma_tol);
  if (!ind.independent)
    std::fprintf(stderr, "warning: averaged projected forces are not independent (sigma ratio %.3g)\n", ind.ratio);
  const auto at = reachability_map<D>(sc, part, controls, ls.analysis.h, ls.analysis.samples, o.jobs);
  write_atlas_csv<D>(fs::path(o.out) / "atlas.csv", at, controls);
  auto m = meta_base<D>(o, text, ls);
  m["atlas"] = atlas_json<D>(at);
  m["independence"] = {{"ratio", ind.ratio}, {"gross_scale", ind.gross_scale}, {"independent", ind.independent}};
  nlohmann::json vecs = nlohmann::json::array();
  for (const auto& v : ind.vectors) vecs.push_back(to_json<D>(v));
  m["independence"]["vectors"] = vecs;
  write_json(fs::path(o.out) / "meta.json", m);
  std::printf("atlas: %zu samples, diameter %.4g, inradius %.4g, certified %s\n", at.endpoints.size(), at.diameter,
              at.inradius, at.certified() ? "yes" : "no");
  return kOk;
}

/// Targets on a circle (2-D) or at the icosphere's base vertices (3-D) of radius `radius` around `c`.
template <int D>
std::vector<Vec<D>> ring_targets(const Vec<D>& c, double radius, int count) {
  std::vector<Vec<D>> out;
  if constexpr (D == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * (k + 0.5) / count;
      out.push_back(c + radius * Vec<D>(std::cos(th), std::sin(th)));
    }
  } else {
    const auto mesh = icosphere42();
    for (int k = 0; k < count; ++k) out.push_back(c + radius * mesh.vertices[static_cast<std::size_t>(k) % mesh.vertices.size()]);
  }
  return out;
}

template <int D>
int cmd_steer(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  const auto& sc = ls.scenario;
  const auto& a = ls.analysis;
  const int part = resolve_part<D>(o, ls);
  const auto controls = resolve_controls<D>(o, ls, D);
  const auto at = reachability_map<D>(sc, part, controls, a.h, a.samples, o.jobs);
  if (!at.certified()) throw InvalidArgument("reachability atlas is not certified; steering targets are not bracketed");
  const auto base = baseline_run<D>(sc);
  const auto J0 = jacobian_matrix<D>(sc, base, part, controls);
  const double tol = sc.tol.steer_fraction * at.inradius;

  std::vector<Vec<D>> targets;
  if (!o.target.empty()) {
    if (static_cast<int>(o.target.size()) != D) throw InvalidArgument("--target needs one value per axis");
    Vec<D> t;
    for (int k = 0; k < D; ++k) t[k] = o.target[static_cast<std::size_t>(k)];
    targets.push_back(t);
  } else {
    targets = ring_targets<D>(at.drift, a.target_fraction * at.inradius, a.targets);
  }

  nlohmann::json runs = nlohmann::json::array();
  bool all_ok = true;
  for (const auto& target : targets) {
    nlohmann::json r;
    r["target"] = to_json<D>(target);
    try {
      const auto res = steer<D>(sc, part, controls, target, J0.J, tol, sc.tol.steer_max_iter, at.dt_schedule);
      r["converged"] = true;
      r["controls"] = to_json(res.controls);
      r["achieved"] = to_json<D>(res.achieved);
      r["iterations"] = res.iterations;
      r["residual"] = res.residual;
      r["residuals"] = res.residuals;
      nlohmann::json its = nlohmann::json::array();
      for (const auto& v : res.iterates) its.push_back(to_json(v));
      r["iterates"] = its;
      r["simulations"] = res.simulations;
    } catch (const NoConvergence& e) {
      all_ok = false;
      r["converged"] = false;
      r["error"] = e.what();
      r["residual"] = e.best_residual;
      r["residuals"] = e.residuals;
    }
    runs.push_back(r);
  }
  nlohmann::json s;
  s["tolerance"] = tol;
  s["drift"] = to_json<D>(at.drift);
  s["inradius"] = at.inradius;
  s["jacobian"] = to_json(J0.J);
  s["runs"] = runs;
  write_json(fs::path(o.out) / "steering.json", s);
  auto m = meta_base<D>(o, text, ls);
  m["atlas"] = atlas_json<D>(at);
  m["all_converged"] = all_ok;
  write_json(fs::path(o.out) / "meta.json", m);
  std::printf("steering: %zu targets, tolerance %.3g, %s\n", targets.size(), tol, all_ok ? "all converged" : "some failed");
  return all_ok ? kOk : kRuntime;
}

template <int D>
int cmd_projlab(const Options& o, const std::string& text, const ProjlabSettings& p) {
  const auto ladder = projlab_ladder<D>(p);
  Vec<D> b;
  for (int k = 0; k < D; ++k) b[k] = p.b[static_cast<std::size_t>(k)];
  const auto tab = asymptotic_sweep<D>(ladder, b, p.expected);
  CsvWriter c(fs::path(o.out) / "sweep.csv");
  std::vector<std::string> cols{"cells", "extent", "size"};
  for (int k = 0; k < D; ++k) cols.push_back(std::string("l2_") + axis_name(k));
  for (int k = 0; k < D; ++k) cols.push_back(std::string("l1_") + axis_name(k));
  for (const char* x : {"ratio_l2", "ratio_l1", "fit_limit", "fit_rate", "fit_slope"}) cols.push_back(x);
  c.header(cols);
  for (const auto& row : tab.rows) {
    c.cell(row.rung.domain.cells[0]).cell(row.rung.domain.extent[0]).cell(row.size);
    for (int k = 0; k < D; ++k) c.cell(row.value.l2[k]);
    for (int k = 0; k < D; ++k) c.cell(row.value.l1[k]);
    c.cell(row.ratio_l2).cell(row.ratio_l1).cell(tab.fit.limit).cell(tab.fit.rate).cell(tab.fit.slope);
    c.end_row();
  }
  nlohmann::json m;
  m["tool"] = "swimlab";
  m["version"] = library_version;
  m["command"] = o.command;
  m["argv"] = o.argv_echo;
  m["config_path"] = o.config;
  m["config_text"] = text;
  m["resolved"]["projlab"] = {{"shape", p.shape}, {"b", p.b},           {"cells", p.cells},
                              {"extent", p.extent}, {"params", p.params}, {"expected", p.expected}};
  m["fit"] = {{"limit", tab.fit.limit}, {"rate", tab.fit.rate}, {"slope", tab.fit.slope}};
  write_json(fs::path(o.out) / "meta.json", m);
  for (const auto& row : tab.rows)
    std::printf("cells %d size %.5g: ratio %.5f (L1 %.5f)\n", row.rung.domain.cells[0], row.size, row.ratio_l2, row.ratio_l1);
  std::printf("fit: limit %.5f, rate %.3f, error slope %.3f\n", tab.fit.limit, tab.fit.rate, tab.fit.slope);
  return kOk;
}

template <int D>
int dispatch(const Options& o, const std::string& text, const LoadedScenario<D>& ls) {
  if (o.command == "validate") return cmd_validate<D>(o, text, ls);
  fs::create_directories(o.out);
  if (o.command == "simulate") return cmd_simulate<D>(o, text, ls);
  if (o.command == "micromotion") return cmd_micromotion<D>(o, text, ls);
  if (o.command == "sensitivity") return cmd_sensitivity<D>(o, text, ls);
  if (o.command == "reach") return cmd_reach<D>(o, text, ls);
  if (o.command == "steer") return cmd_steer<D>(o, text, ls);
  throw InvalidArgument("unknown command " + o.command);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  for (int k = 1; k < argc; ++k) o.argv_echo += (k > 1 ? " " : "") + std::string(argv[k]);

  CLI::App app{"swimmer-in-fluid simulation and controllability analysis"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"validate", "check a scenario and print its margins"},
      {"simulate", "run the coupled simulation"},
      {"micromotion", "compare small-control displacements with the predictor"},
      {"sensitivity", "linearized field and Volterra sensitivity for one control"},
      {"reach", "reachability atlas for a control pair (or triple in 3-D)"},
      {"steer", "Newton steering to targets inside the atlas"},
      {"projlab", "averaged projection sweep"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "scenario file")->required();
    if (name != "validate") sub->add_option("--out", o.out, "output directory");
    if (name == "sensitivity" || name == "reach" || name == "steer")
      sub->add_option("--part", o.part, "tracked part, 1-based; 0 = centre of mass");
    if (name == "sensitivity") sub->add_option("--control", o.control, "control index, 1-based");
    if (name == "reach" || name == "steer") sub->add_option("--jobs", o.jobs, "parallel simulations")->check(CLI::PositiveNumber);
    if (name == "steer") sub->add_option("--target", o.target, "single target point")->delimiter(',');
    sub->callback([&o, name = name] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  std::string text;
  try {
    text = read_text_file(o.config);
    if (o.command == "projlab") {
      const ProjlabSettings p = parse_projlab(text);
      fs::create_directories(o.out);
      return p.b.size() == 2 ? cmd_projlab<2>(o, text, p) : cmd_projlab<3>(o, text, p);
    }
    const AnyScenario any = parse_scenario(text);
    return std::visit([&](const auto& ls) { return dispatch(o, text, ls); }, any);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_validation_error(e) ? kInvalid : kRuntime;
  }
}
