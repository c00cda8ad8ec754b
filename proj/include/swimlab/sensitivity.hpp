#pragma once

// Control sensitivities around a drift run: the linearized fluid response
// w_j = du/dv_j, the Volterra equation for dz_i/dv_j and the small-time
// micromotion predictor.

#include <cmath>
#include <vector>

#include "swimlab/simulator.hpp"
#include "swimlab/volterra.hpp"

namespace swimlab {

template <int D>
struct LinearizedField {
  int control = 0;
  std::vector<double> t;
  std::vector<std::vector<Vec<D>>> part_average;  // [n][i]: average of w(t[n]) over S(z*_i(t[n]))
  std::vector<double> norm;                       // grid L2 norm of w(t[n])
  std::vector<double> divergence;
  FaceField<D> final_field;
  std::vector<FaceField<D>> fields;  // optional
};

template <int D>
void require_baseline(const Trajectory<D>& base) {
  if (!base.has_fields()) throw MissingBaselineData("baseline run has no cached fluid snapshots");
  if (base.dt.size() + 1 != base.t.size()) throw MissingBaselineData("baseline step sizes are incomplete");
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("need at least two points for a slope");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw InvalidArgument("log-log fit needs positive data");
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Time-steps the system linearized about the baseline with source f_j(z*(t)); w(0) = 0.
template <int D>
LinearizedField<D> linearized_solve(const Scenario<D>& sc, const Trajectory<D>& base, int j, bool keep_fields = false) {
  require_baseline<D>(base);
  const Grid<D> g = sc.grid();
  FluidSolver<D> solver(g, sc.tol.div_tol, sc.tol.poisson_tol);
  const double deg = degenerate_length_of(g);
  LinearizedField<D> out;
  out.control = j;
  out.t = base.t;
  FaceField<D> w(g);
  auto record = [&](std::size_t n, double div) {
    const auto masks = part_masks<D>(g, sc.shape, base.states[n]);
    std::vector<Vec<D>> avg;
    for (const auto& m : masks) avg.push_back(average_velocity<D>(g, m, w));
    out.part_average.push_back(std::move(avg));
    out.norm.push_back(norm<D>(g, w));
    out.divergence.push_back(div);
    if (keep_fields) out.fields.push_back(w);
  };
  record(0, 0.0);
  for (std::size_t n = 0; n + 1 < base.t.size(); ++n) {
    const auto& z = base.states[n];
    const auto masks = part_masks<D>(g, sc.shape, z);
    const FaceField<D> f = rasterize<D>(g, masks, unit_densities<D>(z, j, deg));
    w = solver.linearized_step(w, base.fields[n], f, base.dt[n], base.advection);
    record(n + 1, solver.last_projection().relative_divergence);
  }
  out.final_field = w;
  return out;
}

/// Nonlinear two-run check of the linearized field: relative grid-L2 distance between
/// (u_h(T) - u*(T)) / h and w_j(T) for each h, with the baseline step sequence replayed.
struct FieldConsistency {
  std::vector<double> h;
  std::vector<double> error;
  double slope = std::nan("");
};

template <int D>
FieldConsistency field_consistency(const Scenario<D>& sc, const Trajectory<D>& base, const LinearizedField<D>& w,
                                   const std::vector<double>& hs) {
  require_baseline<D>(base);
  const Grid<D> g = sc.grid();
  const double wn = norm<D>(g, w.final_field);
  if (!(wn > 0.0)) throw InvalidArgument("linearized field vanishes; nothing to compare");
  FieldConsistency out;
  for (double h : hs) {
    std::vector<double> v(static_cast<std::size_t>(sc.initial.control_count()), 0.0);
    v[static_cast<std::size_t>(w.control)] = h;
    Scenario<D> s = sc.with_controls(ControlVector(v));
    s.dt_schedule = base.dt;
    const auto tr = simulate<D>(s);
    if (tr.halted) throw InvalidArgument("perturbed run halts before the horizon: " + tr.halt_detail);
    FaceField<D> d = tr.final_field - base.final_field;
    d *= 1.0 / h;
    d -= w.final_field;
    out.h.push_back(h);
    out.error.push_back(norm<D>(g, d) / wn);
  }
  if (out.h.size() >= 2) out.slope = loglog_slope(out.h, out.error);
  return out;
}

template <int D>
struct VolterraKernel {
  int part = 0;
  std::vector<double> t;
  std::vector<Mat<D>> K;          // K0(t[n]) = -(body average of grad u*)
  double norm_integral = 0.0;     // int_0^T ||K0||_2
  bool smallness_exceeded = false;  // norm_integral >= 1/4
};

template <int D>
VolterraKernel<D> volterra_kernel(const Scenario<D>& sc, const Trajectory<D>& base, int i) {
  require_baseline<D>(base);
  const Grid<D> g = sc.grid();
  if (i < 0 || i >= sc.initial.size()) throw InvalidArgument("part index out of range");
  VolterraKernel<D> k;
  k.part = i;
  k.t = base.t;
  for (std::size_t n = 0; n < base.t.size(); ++n) {
    const auto J = velocity_gradient<D>(g, base.fields[n]);
    const auto& z = base.states[n];
    k.K.push_back(-average_jacobian<D>(g, sc.shape, z.z[i], z.orientation[i], J));
  }
  k.norm_integral = kernel_norm_integral<D>(k.t, k.K);
  k.smallness_exceeded = k.norm_integral >= 0.25;
  return k;
}

/// psi = dz_i/dv_j on the baseline time grid.
template <int D>
std::vector<Vec<D>> volterra_solve(const VolterraKernel<D>& kernel, const LinearizedField<D>& w) {
  if (kernel.t != w.t) throw GridMismatch("kernel and linearized field use different time grids");
  std::vector<Vec<D>> a;
  for (const auto& row : w.part_average) a.push_back(row[static_cast<std::size_t>(kernel.part)]);
  const auto g = cumulative_trapezoid<D>(w.t, a);
  return volterra_trapezoid<D>(w.t, kernel.K, g);
}

/// dz_c/dv_j for the centre of mass: mean of the per-part sensitivities.
template <int D>
std::vector<Vec<D>> center_of_mass_sensitivity(const Scenario<D>& sc, const Trajectory<D>& base,
                                               const LinearizedField<D>& w) {
  const int n = sc.initial.size();
  std::vector<Vec<D>> acc(base.t.size(), Vec<D>::Zero());
  for (int i = 0; i < n; ++i) {
    const auto psi = volterra_solve<D>(volterra_kernel<D>(sc, base, i), w);
    for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += psi[m] / static_cast<double>(n);
  }
  return acc;
}

/// I[j][i] = integral over S(z_i) of P_H f_j at the given state.
template <int D>
std::vector<std::vector<Vec<D>>> projected_force_integrals(const Grid<D>& g, const BodyShape& shape,
                                                           const SwimmerState<D>& s) {
  validate_configuration<D>(s, shape, g);
  FluidSolver<D> solver(g);
  const auto masks = part_masks<D>(g, shape, s);
  const double deg = degenerate_length_of(g);
  std::vector<std::vector<Vec<D>>> I;
  for (int j = 0; j < s.control_count(); ++j) {
    const FaceField<D> Pf = solver.project(rasterize<D>(g, masks, unit_densities<D>(s, j, deg)));
    std::vector<Vec<D>> row;
    for (const auto& m : masks) row.push_back(integrate_over<D>(g, m, Pf));
    I.push_back(std::move(row));
  }
  return I;
}

/// z_i(0) + h t^2 / (2 meas S(0)) * sum_j a_j * I[j][i]
template <int D>
std::vector<Vec<D>> micromotion_predict(const std::vector<std::vector<Vec<D>>>& I, const SwimmerState<D>& s0,
                                        const BodyShape& shape, const std::vector<double>& a, double h, double t) {
  if (static_cast<int>(a.size()) != s0.control_count()) throw InvalidArgument("direction has the wrong length");
  const double c = h * t * t / (2.0 * shape.measure());
  std::vector<Vec<D>> z = s0.z;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) z[i] += c * a[j] * I[j][i];
  return z;
}

template <int D>
std::vector<Vec<D>> micromotion_predict(const SwimmerState<D>& s0, const BodyShape& shape, const Grid<D>& g,
                                        const std::vector<double>& a, double h, double t) {
  return micromotion_predict<D>(projected_force_integrals<D>(g, shape, s0), s0, shape, a, h, t);
}

template <int D>
struct MicromotionRow {
  double t;
  int part;
  Vec<D> predicted;  // displacement
  Vec<D> simulated;
};

template <int D>
struct MicromotionReport {
  std::vector<MicromotionRow<D>> rows;
  std::vector<double> slope;        // per part, log|dz| vs log t over the whole run
  std::vector<double> angle_deg;    // per part at the final time
  std::vector<double> magnitude_ratio;  // |simulated| / |predicted| at the final time
  std::vector<Vec<D>> predicted_final;
};

/// Runs the scenario with constant controls h*a and compares each part with the predictor.
template <int D>
MicromotionReport<D> micromotion_check(const Scenario<D>& sc, const std::vector<double>& a, double h) {
  double s2 = 0.0;
  for (double x : a) s2 += x * x;
  if (std::abs(s2 - 1.0) > 1e-9) throw InvalidArgument("micromotion direction must have unit norm");
  if (std::abs(h) > 1.0) throw InvalidArgument("|h| must not exceed 1");
  std::vector<double> v(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) v[j] = h * a[j];
  const Grid<D> g = sc.grid();
  const auto tr = simulate<D>(sc.with_controls(ControlVector(v)));
  const auto I = projected_force_integrals<D>(g, sc.shape, sc.initial);
  MicromotionReport<D> rep;
  const int n = sc.initial.size();
  for (std::size_t m = 0; m < tr.t.size(); ++m) {
    const auto pred = micromotion_predict<D>(I, sc.initial, sc.shape, a, h, tr.t[m]);
    for (int i = 0; i < n; ++i)
      rep.rows.push_back({tr.t[m], i, pred[i] - sc.initial.z[i], tr.states[m].z[i] - sc.initial.z[i]});
  }
  const auto predT = micromotion_predict<D>(I, sc.initial, sc.shape, a, h, tr.t.back());
  for (int i = 0; i < n; ++i) {
    std::vector<double> ts, ds;
    for (std::size_t m = 1; m < tr.t.size(); ++m) {
      const double d = (tr.states[m].z[i] - sc.initial.z[i]).norm();
      if (tr.t[m] > 0.0 && d > 0.0) {
        ts.push_back(tr.t[m]);
        ds.push_back(d);
      }
    }
    rep.slope.push_back(ts.size() >= 2 ? loglog_slope(ts, ds) : std::nan(""));
    const Vec<D> p = predT[i] - sc.initial.z[i];
    const Vec<D> q = tr.states.back().z[i] - sc.initial.z[i];
    const double c = p.norm() > 0 && q.norm() > 0 ? std::clamp(p.dot(q) / (p.norm() * q.norm()), -1.0, 1.0) : 1.0;
    rep.angle_deg.push_back(std::acos(c) * 180.0 / std::numbers::pi);
    rep.magnitude_ratio.push_back(p.norm() > 0 ? q.norm() / p.norm() : std::nan(""));
    rep.predicted_final.push_back(p);
  }
  return rep;
}

}  // namespace swimlab
