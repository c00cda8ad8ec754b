#pragma once

// CSV and JSON output. Numbers are written with std::to_chars (shortest
// round-trip form) so files do not depend on the locale.

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "swimlab/config.hpp"
#include "swimlab/controllability.hpp"
#include "swimlab/projection_lab.hpp"

namespace swimlab {

inline constexpr const char* library_version = "0.1.0";

inline std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw InvalidArgument("cannot write '" + path.string() + "'");
  }
  void header(const std::vector<std::string>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << cols[k];
    out_ << '\n';
  }
  CsvWriter& cell(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double x) { return cell(fmt(x)); }
  CsvWriter& cell(int x) { return cell(std::to_string(x)); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

inline const char* axis_name(int k) { return k == 0 ? "x" : (k == 1 ? "y" : "z"); }

template <int D>
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory<D>& tr, int record_every) {
  CsvWriter w(path);
  std::vector<std::string> cols{"t"};
  const int n = tr.states.front().size();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < D; ++k) cols.push_back("z" + std::to_string(i + 1) + "_" + axis_name(k));
  for (int j = 0; j < tr.controls.front().size(); ++j) cols.push_back("v" + std::to_string(j + 1));
  for (const char* c : {"energy", "pair_margin", "wall_margin", "divergence"}) cols.push_back(c);
  w.header(cols);
  for (std::size_t m = 0; m < tr.t.size(); ++m) {
    if (m % static_cast<std::size_t>(record_every) != 0 && m + 1 != tr.t.size()) continue;
    w.cell(tr.t[m]);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < D; ++k) w.cell(tr.states[m].z[i][k]);
    for (double v : tr.controls[m].v) w.cell(v);
    w.cell(tr.energy[m]).cell(tr.pair_margin[m]).cell(tr.wall_margin[m]).cell(tr.divergence[m]);
    w.end_row();
  }
}

/// part, fx, fy[, fz] for each part (1-based).
template <int D>
void write_part_forces_csv(const std::filesystem::path& path, const std::vector<Vec<D>>& forces) {
  CsvWriter w(path);
  std::vector<std::string> cols{"part"};
  for (int k = 0; k < D; ++k) cols.push_back(std::string("f") + axis_name(k));
  w.header(cols);
  for (std::size_t i = 0; i < forces.size(); ++i) {
    w.cell(static_cast<int>(i + 1));
    for (int k = 0; k < D; ++k) w.cell(forces[i][k]);
    w.end_row();
  }
}

/// Flat CSV snapshot of a staggered field with a metadata header line.
template <int D>
void write_field_csv(const std::filesystem::path& path, const Grid<D>& g, const FaceField<D>& u, double t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << "# t=" << fmt(t);
  for (int k = 0; k < D; ++k) out << " cells_" << axis_name(k) << "=" << g.cells(k) << " extent_" << axis_name(k) << "=" << fmt(g.extent(k));
  out << " layout=row-major faces, component-major\n";
  out << "component,index,value\n";
  for (int k = 0; k < D; ++k)
    for (std::size_t n = 0; n < u[k].size(); ++n) out << k << ',' << n << ',' << fmt(u[k][n]) << '\n';
}

template <int D>
nlohmann::json to_json(const Vec<D>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < D; ++k) a.push_back(v[k]);
  return a;
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

/// Resolved scenario as JSON (indices 1-based, as in the files).
template <int D>
nlohmann::json resolved_json(const Scenario<D>& sc) {
  nlohmann::json j;
  j["domain"]["extent"] = sc.domain.extent;
  j["domain"]["cells"] = sc.domain.cells;
  j["domain"]["nu"] = sc.domain.nu;
  j["swimmer"]["shape"] = to_string(sc.shape.kind);
  std::vector<double> params(sc.shape.size.begin(), sc.shape.size.begin() + (sc.shape.is_round() ? 1 : D));
  j["swimmer"]["params"] = params;
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& z : sc.initial.z) centers.push_back(to_json<D>(z));
  j["swimmer"]["centers"] = centers;
  j["swimmer"]["orientations"] = sc.initial.orientation;
  j["initial"]["velocity"] = sc.flow == InitialFlow::Zero ? "zero" : "eddy";
  j["initial"]["amplitude"] = sc.flow_amplitude;
  nlohmann::json sched = nlohmann::json::array();
  for (std::size_t k = 0; k < sc.controls.values.size(); ++k) {
    std::vector<double> row{sc.controls.times[k]};
    row.insert(row.end(), sc.controls.values[k].v.begin(), sc.controls.values[k].v.end());
    sched.push_back(row);
  }
  j["controls"]["schedule"] = sched;
  j["time"]["T"] = sc.T;
  if (std::isfinite(sc.dt_max)) j["time"]["dt_max"] = sc.dt_max;
  j["time"]["fixed_dt"] = sc.fixed_dt;
  j["time"]["integrator"] = sc.integrator == BodyIntegrator::RK2 ? "rk2" : "euler";
  j["time"]["advection"] = sc.advection;
  j["output"]["record_every"] = sc.record_every;
  j["output"]["field_every"] = sc.field_every;
  j["tolerances"]["div_tol"] = sc.tol.div_tol;
  j["tolerances"]["poisson_tol"] = sc.tol.poisson_tol;
  j["tolerances"]["sigma_tol"] = sc.tol.sigma_tol;
  j["tolerances"]["steer_fraction"] = sc.tol.steer_fraction;
  j["tolerances"]["steer_max_iter"] = sc.tol.steer_max_iter;
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace swimlab
