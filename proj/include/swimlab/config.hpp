#pragma once

// Scenario files (YAML). Every error names the offending key and its line.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "swimlab/projection_lab.hpp"
#include "swimlab/simulator.hpp"

namespace swimlab {

/// Settings for the analysis subcommands; indices are 0-based here (1-based in files).
struct AnalysisSettings {
  int part = 0;  // -1: centre of mass
  std::vector<int> controls;
  double h = 0.05;
  int samples = 32;
  std::vector<double> direction;  // unit micromotion direction over all controls
  double fd_h = 1e-3;
  int targets = 8;
  double target_fraction = 0.5;
  std::vector<double> h_sweep{1e-1, 1e-2, 1e-3};
};

struct ProjlabSettings {
  std::string shape;  // disc | rectangle | ball | box
  std::vector<double> b;
  std::vector<int> cells;          // ladder of cells per axis
  std::vector<double> extent;      // domain extent per rung (one value per rung, cubic / square domain)
  std::vector<std::vector<double>> params;  // shape parameters per rung
  double expected = 0.5;
};

template <int D>
struct LoadedScenario {
  Scenario<D> scenario;
  AnalysisSettings analysis;
};

using AnyScenario = std::variant<LoadedScenario<2>, LoadedScenario<3>>;

namespace config_detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

inline double parse_double(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(key, line_of(n), "expected a number");
  const std::string s = n.Scalar();
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v))
    throw ConfigError(key, line_of(n), "'" + s + "' is not a finite number");
  return v;
}

inline int parse_int(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(key, line_of(n), "expected an integer");
  const std::string s = n.Scalar();
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key, line_of(n), "'" + s + "' is not an integer");
  return v;
}

inline bool parse_bool(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(key, line_of(n), "expected true or false");
  const std::string s = n.Scalar();
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(key, line_of(n), "'" + s + "' is not true or false");
}

inline std::string parse_string(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(key, line_of(n), "expected a string");
  return n.Scalar();
}

inline std::vector<double> parse_doubles(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError(key, line_of(n), "expected a list of numbers");
  std::vector<double> v;
  for (const auto& x : n) v.push_back(parse_double(x, key));
  return v;
}

inline std::vector<int> parse_ints(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError(key, line_of(n), "expected a list of integers");
  std::vector<int> v;
  for (const auto& x : n) v.push_back(parse_int(x, key));
  return v;
}

inline std::vector<std::vector<double>> parse_rows(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError(key, line_of(n), "expected a list of lists");
  std::vector<std::vector<double>> rows;
  for (const auto& r : n) rows.push_back(parse_doubles(r, key));
  return rows;
}

/// Section accessor that remembers which keys were read.
class Section {
 public:
  Section(YAML::Node node, std::string name) : node_(std::move(node)), name_(std::move(name)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(name_, line_of(node_), "section must be a mapping");
  }
  bool has(const std::string& k) const { return node_ && node_.IsMap() && node_[k]; }
  YAML::Node get(const std::string& k) {
    used_.insert(k);
    if (!has(k)) throw ConfigError(key(k), node_ ? line_of(node_) : 0, "required key is missing");
    return node_[k];
  }
  std::string key(const std::string& k) const { return name_ + "." + k; }
  int line() const { return node_ ? line_of(node_) : 0; }

  double number(const std::string& k) { return parse_double(get(k), key(k)); }
  double number(const std::string& k, double def) { return has(k) ? number(k) : (used_.insert(k), def); }
  int integer(const std::string& k) { return parse_int(get(k), key(k)); }
  int integer(const std::string& k, int def) { return has(k) ? integer(k) : (used_.insert(k), def); }
  bool boolean(const std::string& k, bool def) { return has(k) ? parse_bool(get(k), key(k)) : (used_.insert(k), def); }
  std::string string(const std::string& k) { return parse_string(get(k), key(k)); }
  std::string string(const std::string& k, const std::string& def) {
    return has(k) ? string(k) : (used_.insert(k), def);
  }
  std::vector<double> numbers(const std::string& k) { return parse_doubles(get(k), key(k)); }
  std::vector<int> integers(const std::string& k) { return parse_ints(get(k), key(k)); }
  std::vector<std::vector<double>> rows(const std::string& k) { return parse_rows(get(k), key(k)); }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.Scalar();
      if (!used_.count(k)) throw ConfigError(key(k), line_of(kv.first), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> used_;
};

inline BodyShape make_shape(const std::string& kind, const std::vector<double>& p, const std::string& key, int line) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) throw ConfigError(key, line, kind + " takes " + std::to_string(n) + " parameters");
  };
  try {
    if (kind == "rectangle") return need(2), BodyShape::rectangle(p[0], p[1]);
    if (kind == "disc") return need(1), BodyShape::disc(p[0]);
    if (kind == "box") return need(3), BodyShape::box(p[0], p[1], p[2]);
    if (kind == "ball") return need(1), BodyShape::ball(p[0]);
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, line, e.what());
  }
  throw ConfigError(key, line, "unknown shape '" + kind + "'");
}

template <int D>
LoadedScenario<D> build(YAML::Node root, const std::vector<double>& extent, Section& domain, Section& swimmer) {
  LoadedScenario<D> out;
  Scenario<D>& sc = out.scenario;
  for (int k = 0; k < D; ++k) sc.domain.extent[k] = extent[k];
  const auto cells = domain.integers("cells");
  if (cells.size() != D) throw ConfigError(domain.key("cells"), line_of(root["domain"]["cells"]), "needs one entry per axis");
  for (int k = 0; k < D; ++k) sc.domain.cells[k] = cells[k];
  sc.domain.nu = domain.number("nu");
  try {
    sc.domain.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("domain", domain.line(), e.what());
  }
  domain.reject_unknown();

  const std::string kind = swimmer.string("shape");
  sc.shape = make_shape(kind, swimmer.numbers("params"), swimmer.key("params"), line_of(root["swimmer"]["params"]));
  if (sc.shape.dimension() != D)
    throw ConfigError(swimmer.key("shape"), line_of(root["swimmer"]["shape"]), "shape does not match the domain dimension");
  const auto rows = swimmer.rows("centers");
  const int cline = line_of(root["swimmer"]["centers"]);
  std::vector<Vec<D>> z;
  for (const auto& r : rows) {
    if (r.size() != D) throw ConfigError(swimmer.key("centers"), cline, "each centre needs " + std::to_string(D) + " coordinates");
    Vec<D> p;
    for (int k = 0; k < D; ++k) p[k] = r[k];
    z.push_back(p);
  }
  std::vector<int> orient;
  if (swimmer.has("orientations")) {
    orient = swimmer.integers("orientations");
    for (int o : orient)
      if (o < 0 || o >= sc.shape.orientation_count())
        throw ConfigError(swimmer.key("orientations"), line_of(root["swimmer"]["orientations"]), "orientation out of range");
  }
  try {
    sc.initial = SwimmerState<D>(z, orient);
  } catch (const InvalidArgument& e) {
    throw ConfigError(swimmer.key("centers"), cline, e.what());
  }
  swimmer.reject_unknown();
  const int n = sc.initial.size();
  const int m = 2 * n - 3;

  Section initial(root["initial"], "initial");
  const std::string flow = initial.string("velocity", "zero");
  if (flow == "zero") {
    sc.flow = InitialFlow::Zero;
  } else if (flow == "eddy") {
    sc.flow = InitialFlow::Eddy;
  } else {
    throw ConfigError(initial.key("velocity"), line_of(root["initial"]["velocity"]), "expected zero or eddy");
  }
  sc.flow_amplitude = initial.number("amplitude", 0.0);
  initial.reject_unknown();

  Section controls(root["controls"], "controls");
  if (controls.has("schedule")) {
    const int sline = line_of(root["controls"]["schedule"]);
    sc.controls.times.clear();
    for (const auto& r : controls.rows("schedule")) {
      if (static_cast<int>(r.size()) != m + 1)
        throw ConfigError(controls.key("schedule"), sline, "each row is [t, v1 .. v" + std::to_string(m) + "]");
      sc.controls.times.push_back(r[0]);
      sc.controls.values.emplace_back(std::vector<double>(r.begin() + 1, r.end()));
    }
  } else if (controls.has("values")) {
    const auto v = controls.numbers("values");
    if (static_cast<int>(v.size()) != m)
      throw ConfigError(controls.key("values"), line_of(root["controls"]["values"]), "expected " + std::to_string(m) + " values");
    sc.controls = ControlSchedule::constant(ControlVector(v));
  } else {
    sc.controls = ControlSchedule::constant(ControlVector::zeros(n));
  }
  try {
    sc.controls.validate(m);
  } catch (const InvalidArgument& e) {
    throw ConfigError(controls.key("schedule"), controls.line(), e.what());
  }
  controls.reject_unknown();

  Section time(root["time"], "time");
  sc.T = time.number("T");
  if (!(sc.T > 0)) throw ConfigError(time.key("T"), line_of(root["time"]["T"]), "must be positive");
  sc.dt_max = time.number("dt_max", std::numeric_limits<double>::infinity());
  sc.fixed_dt = time.number("fixed_dt", 0.0);
  const std::string integ = time.string("integrator", "rk2");
  if (integ == "rk2") {
    sc.integrator = BodyIntegrator::RK2;
  } else if (integ == "euler") {
    sc.integrator = BodyIntegrator::Euler;
  } else {
    throw ConfigError(time.key("integrator"), line_of(root["time"]["integrator"]), "expected rk2 or euler");
  }
  sc.advection = time.boolean("advection", true);
  time.reject_unknown();

  Section output(root["output"], "output");
  sc.record_every = output.integer("record_every", 1);
  sc.field_every = output.integer("field_every", 0);
  if (sc.record_every < 1) throw ConfigError(output.key("record_every"), output.line(), "must be at least 1");
  output.reject_unknown();

  Section tol(root["tolerances"], "tolerances");
  sc.tol.div_tol = tol.number("div_tol", sc.tol.div_tol);
  sc.tol.poisson_tol = tol.number("poisson_tol", sc.tol.poisson_tol);
  sc.tol.sigma_tol = tol.number("sigma_tol", sc.tol.sigma_tol);
  sc.tol.steer_fraction = tol.number("steer_fraction", sc.tol.steer_fraction);
  sc.tol.steer_max_iter = tol.integer("steer_max_iter", sc.tol.steer_max_iter);
  tol.reject_unknown();

  Section an(root["analysis"], "analysis");
  AnalysisSettings& a = out.analysis;
  a.part = an.integer("part", 1) - 1;
  if (a.part < -1 || a.part >= n) throw ConfigError(an.key("part"), an.line(), "part must be 0 (centre of mass) or 1.." + std::to_string(n));
  if (an.has("controls")) {
    for (int j : an.integers("controls")) {
      if (j < 1 || j > m) throw ConfigError(an.key("controls"), line_of(root["analysis"]["controls"]), "control index out of range");
      a.controls.push_back(j - 1);
    }
  }
  a.h = an.number("h", a.h);
  a.samples = an.integer("samples", a.samples);
  if (an.has("direction")) {
    a.direction = an.numbers("direction");
    if (static_cast<int>(a.direction.size()) != m)
      throw ConfigError(an.key("direction"), line_of(root["analysis"]["direction"]), "expected " + std::to_string(m) + " entries");
    double s = 0;
    for (double x : a.direction) s += x * x;
    if (s == 0) throw ConfigError(an.key("direction"), line_of(root["analysis"]["direction"]), "direction must be non-zero");
    for (double& x : a.direction) x /= std::sqrt(s);
  }
  a.fd_h = an.number("fd_h", a.fd_h);
  a.targets = an.integer("targets", a.targets);
  a.target_fraction = an.number("target_fraction", a.target_fraction);
  if (an.has("h_sweep")) a.h_sweep = an.numbers("h_sweep");
  an.reject_unknown();

  return out;
}

}  // namespace config_detail

/// Parses scenario text; `origin` is used in messages only.
inline AnyScenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", 1, "scenario must be a mapping of sections");
  static const std::set<std::string> sections{"domain", "swimmer", "initial", "controls", "time",
                                              "output", "tolerances", "analysis"};
  for (const auto& kv : root) {
    const std::string s = kv.first.Scalar();
    if (!sections.count(s)) throw ConfigError(s, config_detail::line_of(kv.first), "unknown section");
  }
  config_detail::Section domain(root["domain"], "domain");
  config_detail::Section swimmer(root["swimmer"], "swimmer");
  const auto extent = domain.numbers("extent");
  if (extent.size() == 2) return config_detail::build<2>(root, extent, domain, swimmer);
  if (extent.size() == 3) return config_detail::build<3>(root, extent, domain, swimmer);
  throw ConfigError("domain.extent", config_detail::line_of(root["domain"]["extent"]), "needs 2 or 3 entries");
}

/// Parses a projection-lab file: a single `projlab` section describing the ladder.
inline ProjlabSettings parse_projlab(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", 1, "file must be a mapping of sections");
  for (const auto& kv : root)
    if (kv.first.Scalar() != "projlab") throw ConfigError(kv.first.Scalar(), config_detail::line_of(kv.first), "unknown section");
  if (!root["projlab"]) throw ConfigError("projlab", 1, "missing section");
  config_detail::Section pl(root["projlab"], "projlab");
  ProjlabSettings p;
  p.shape = pl.string("shape");
  p.b = pl.numbers("b");
  if (p.b.size() != 2 && p.b.size() != 3) throw ConfigError(pl.key("b"), config_detail::line_of(root["projlab"]["b"]), "needs 2 or 3 entries");
  p.cells = pl.integers("cells");
  p.extent = pl.numbers("extent");
  p.params = pl.rows("params");
  p.expected = pl.number("expected", 0.5);
  const int line = config_detail::line_of(root["projlab"]["params"]);
  if (p.extent.size() != p.cells.size() || p.params.size() != p.cells.size())
    throw ConfigError(pl.key("cells"), config_detail::line_of(root["projlab"]["cells"]), "cells, extent and params need one entry per rung");
  for (const auto& r : p.params) {
    const BodyShape s = config_detail::make_shape(p.shape, r, pl.key("params"), line);
    if (s.dimension() != static_cast<int>(p.b.size()))
      throw ConfigError(pl.key("shape"), config_detail::line_of(root["projlab"]["shape"]), "shape does not match the length of b");
  }
  pl.reject_unknown();
  return p;
}

template <int D>
std::vector<SweepRung<D>> projlab_ladder(const ProjlabSettings& p) {
  if (static_cast<int>(p.b.size()) != D) throw InvalidArgument("projlab direction has the wrong dimension");
  std::vector<SweepRung<D>> ladder;
  for (std::size_t r = 0; r < p.cells.size(); ++r) {
    SweepRung<D> rung;
    for (int k = 0; k < D; ++k) {
      rung.domain.extent[k] = p.extent[r];
      rung.domain.cells[k] = p.cells[r];
    }
    rung.domain.nu = 1.0;  // unused by the projection
    rung.shape = config_detail::make_shape(p.shape, p.params[r], "projlab.params", 0);
    ladder.push_back(rung);
  }
  return ladder;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline AnyScenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path)); }

}  // namespace swimlab
