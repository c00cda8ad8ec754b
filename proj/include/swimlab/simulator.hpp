#pragma once

// Coupled fluid / body integration. Each step assembles the force from the
// state at the beginning of the step, advances the fluid, then moves every part
// with the average fluid velocity inside it.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "swimlab/fluid.hpp"
#include "swimlab/forces.hpp"

namespace swimlab {

enum class BodyIntegrator { Euler, RK2 };

/// Piecewise-constant control schedule: values[k] holds on [times[k], times[k+1]).
struct ControlSchedule {
  std::vector<double> times{0.0};
  std::vector<ControlVector> values;

  static ControlSchedule constant(ControlVector v) {
    ControlSchedule s;
    s.values = {std::move(v)};
    return s;
  }
  const ControlVector& at(double t) const {
    if (values.empty()) throw InvalidArgument("empty control schedule");
    std::size_t k = 0;
    while (k + 1 < times.size() && t >= times[k + 1]) ++k;
    return values[k];
  }
  void validate(int control_count) const {
    if (values.empty() || values.size() != times.size()) throw InvalidArgument("malformed control schedule");
    if (times.front() != 0.0) throw InvalidArgument("control schedule must start at t = 0");
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k].size() != control_count)
        throw InvalidArgument("control schedule entry has " + std::to_string(values[k].size()) + " values, expected " +
                              std::to_string(control_count));
      if (k > 0 && !(times[k] > times[k - 1])) throw InvalidArgument("control schedule times must increase");
    }
  }
};

enum class InitialFlow { Zero, Eddy };

struct Tolerances {
  double div_tol = 1e-10;
  double poisson_tol = 1e-12;
  double sigma_tol = 1e-3;
  double steer_fraction = 0.02;
  int steer_max_iter = 10;
};

/// Everything needed to run one simulation.
template <int D>
struct Scenario {
  DomainSpec<D> domain;
  BodyShape shape;
  SwimmerState<D> initial;
  InitialFlow flow = InitialFlow::Zero;
  double flow_amplitude = 0.0;
  ControlSchedule controls;
  double T = 0.1;
  double dt_max = std::numeric_limits<double>::infinity();
  double fixed_dt = 0.0;  // > 0 overrides the adaptive choice
  BodyIntegrator integrator = BodyIntegrator::RK2;
  bool advection = true;
  int record_every = 1;
  int field_every = 0;
  Tolerances tol;
  std::vector<double> dt_schedule;  // replays a recorded step sequence when non-empty

  Grid<D> grid() const { return Grid<D>(domain); }

  void validate() const {
    domain.validate();
    if (shape.dimension() != D) throw InvalidArgument("shape dimension does not match the domain");
    controls.validate(initial.control_count());
    if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
    if (!(dt_max > 0.0)) throw InvalidArgument("dt_max must be positive");
    if (fixed_dt < 0.0) throw InvalidArgument("fixed_dt must be non-negative");
    if (record_every < 1) throw InvalidArgument("record_every must be at least 1");
    for (const auto& o : initial.orientation)
      if (o < 0 || o >= shape.orientation_count()) throw InvalidArgument("orientation index out of range");
  }

  Scenario with_controls(ControlVector v) const {
    Scenario s = *this;
    s.controls = ControlSchedule::constant(std::move(v));
    return s;
  }
};

/// Initial velocity: zero, or a discretely divergence-free eddy
/// psi = A sin^2(pi x/Lx) sin^2(pi y/Ly) (in 3-D the same eddy in every z-slice).
template <int D>
FaceField<D> initial_velocity(const Scenario<D>& sc, const Grid<D>& g) {
  FaceField<D> u(g);
  if (sc.flow == InitialFlow::Zero || sc.flow_amplitude == 0.0) return u;
  const double Lx = g.extent(0), Ly = g.extent(1), A = sc.flow_amplitude;
  auto psi = [&](double x, double y) {
    const double sx = std::sin(std::numbers::pi * x / Lx), sy = std::sin(std::numbers::pi * y / Ly);
    return A * sx * sx * sy * sy;
  };
  if constexpr (D == 2) {
    return curl_of_stream(g, psi);
  } else {
    const double hx = g.h(0), hy = g.h(1);
    for_each_index<3>(g.face_dims(0), [&](const Index<3>& i, std::size_t lin) {
      const double x = i[0] * hx;
      u[0][lin] = (psi(x, (i[1] + 1) * hy) - psi(x, i[1] * hy)) / hy;
    });
    for_each_index<3>(g.face_dims(1), [&](const Index<3>& i, std::size_t lin) {
      const double y = i[1] * hy;
      u[1][lin] = -(psi((i[0] + 1) * hx, y) - psi(i[0] * hx, y)) / hx;
    });
    zero_normal_boundary<3>(g, u);
    return u;
  }
}

/// (1/meas S(0)) * mask-weighted integral of u over one part.
template <int D>
Vec<D> average_velocity(const Grid<D>& g, const BodyMask<D>& m, const FaceField<D>& u) {
  Vec<D> s = Vec<D>::Zero();
  for (int k = 0; k < D; ++k)
    for (const auto& e : m.faces[k]) s[k] += e.weight * u[k][e.index];
  return s * (g.cell_volume() / m.measure);
}

template <int D>
Vec<D> average_velocity(const FaceField<D>& u, const Vec<D>& center, const BodyShape& shape, const Grid<D>& g,
                        int orientation = 0) {
  return average_velocity<D>(g, body_mask<D>(g, shape, center, orientation), u);
}

/// Mask-weighted body average of a per-cell Jacobian.
template <int D>
Mat<D> average_jacobian(const Grid<D>& g, const BodyShape& shape, const Vec<D>& center, int orientation,
                        const std::vector<Mat<D>>& J) {
  const auto m = body_mask<D>(g, shape, center, orientation, true);
  Mat<D> s = Mat<D>::Zero();
  for (const auto& e : m.cells) s += e.weight * J[e.index];
  return s * (g.cell_volume() / m.measure);
}

enum class HaltCause { None, OverlapViolation, BoundaryViolation };

inline std::string to_string(HaltCause c) {
  switch (c) {
    case HaltCause::None: return "none";
    case HaltCause::OverlapViolation: return "OverlapViolation";
    case HaltCause::BoundaryViolation: return "BoundaryViolation";
  }
  return "?";
}

/// Per-step record of a run. Entry n describes time t[n]; step n goes from t[n] to t[n+1].
template <int D>
struct Trajectory {
  std::vector<double> t;
  std::vector<double> dt;  // dt[n] = size of step n
  std::vector<SwimmerState<D>> states;
  std::vector<ControlVector> controls;  // control applied on [t[n], t[n+1])
  std::vector<double> energy;
  std::vector<double> pair_margin;
  std::vector<double> wall_margin;
  std::vector<std::vector<Vec<D>>> part_velocity;  // average velocity of each part at t[n]
  std::vector<double> divergence;                  // relative divergence after the step ending at t[n]
  std::vector<int> cg_iterations;

  bool halted = false;
  HaltCause halt_cause = HaltCause::None;
  double halt_time = 0.0;
  std::string halt_detail;

  // fluid snapshots u[n] at t[n]; filled when requested (baseline runs)
  std::vector<FaceField<D>> fields;
  FaceField<D> final_field;
  bool advection = true;

  std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
  const SwimmerState<D>& final_state() const { return states.back(); }
  double final_time() const { return t.back(); }
  bool has_fields() const { return !fields.empty() && fields.size() == t.size(); }

  /// min over recorded times of the wall and pair clearances (mu)
  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < t.size(); ++n) m = std::min({m, pair_margin[n], wall_margin[n]});
    return m;
  }
  double max_divergence() const {
    double m = 0.0;
    for (double d : divergence) m = std::max(m, d);
    return m;
  }
  Vec<D> center_of_mass(std::size_t n) const { return states[n].center_of_mass(); }
  const std::vector<double>& step_sizes() const { return dt; }
};

struct SimulateOptions {
  bool keep_fields = false;
};

/// Time step used at the start of a step with velocity u and time t.
template <int D>
double choose_dt(const Scenario<D>& sc, const FluidSolver<D>& solver, const FaceField<D>& u, double t,
                 std::size_t step) {
  if (!sc.dt_schedule.empty()) {
    if (step >= sc.dt_schedule.size()) throw InvalidArgument("recorded step sequence is too short");
    return sc.dt_schedule[step];
  }
  double dt = sc.fixed_dt > 0.0 ? sc.fixed_dt : std::min(solver.stable_dt(u), sc.dt_max);
  const double remaining = sc.T - t;
  // avoid a sliver step at the end
  if (dt >= remaining || remaining - dt < 1e-9 * sc.T) dt = remaining;
  return dt;
}

template <int D>
Trajectory<D> simulate(const Scenario<D>& sc, const SimulateOptions& opt = {}) {
  sc.validate();
  const Grid<D> g = sc.grid();
  validate_configuration<D>(sc.initial, sc.shape, g);
  FluidSolver<D> solver(g, sc.tol.div_tol, sc.tol.poisson_tol);
  const double deg = degenerate_length_of(g);

  Trajectory<D> tr;
  tr.advection = sc.advection;
  SwimmerState<D> z = sc.initial;
  FaceField<D> u = initial_velocity<D>(sc, g);
  auto masks = part_masks<D>(g, sc.shape, z);

  auto record = [&](double t, double div, int cg) {
    const auto rep = configuration_margins<D>(z, sc.shape, g);
    tr.t.push_back(t);
    tr.states.push_back(z);
    tr.energy.push_back(kinetic_energy<D>(g, u));
    tr.pair_margin.push_back(rep.pair_margin);
    tr.wall_margin.push_back(rep.wall_margin);
    std::vector<Vec<D>> vel;
    for (const auto& m : masks) vel.push_back(average_velocity<D>(g, m, u));
    tr.part_velocity.push_back(std::move(vel));
    tr.divergence.push_back(div);
    tr.cg_iterations.push_back(cg);
    if (opt.keep_fields) tr.fields.push_back(u);
  };
  record(0.0, relative_divergence<D>(g, u), 0);

  double t = 0.0;
  while (sc.dt_schedule.empty() ? sc.T - t > 1e-12 * sc.T : tr.steps() < sc.dt_schedule.size()) {
    const double dt = choose_dt<D>(sc, solver, u, t, tr.steps());
    const ControlVector& v = sc.controls.at(t);
    tr.controls.push_back(v);
    const FaceField<D> f = rasterize<D>(g, masks, control_densities<D>(z, v, deg));
    FaceField<D> u1 = solver.step(u, f, dt, sc.advection);

    const std::vector<Vec<D>>& k1 = tr.part_velocity.back();
    SwimmerState<D> z1 = z;
    HaltCause cause = HaltCause::None;
    std::string detail;
    try {
      if (sc.integrator == BodyIntegrator::Euler) {
        for (int i = 0; i < z.size(); ++i) z1.z[i] = z.z[i] + dt * k1[i];
      } else {
        SwimmerState<D> zt = z;
        for (int i = 0; i < z.size(); ++i) zt.z[i] = z.z[i] + dt * k1[i];
        for (int i = 0; i < z.size(); ++i) {
          const auto mt = body_mask<D>(g, sc.shape, zt.z[i], zt.orientation[i]);
          const Vec<D> k2 = average_velocity<D>(g, mt, u1);
          z1.z[i] = z.z[i] + 0.5 * dt * (k1[i] + k2);
        }
      }
      validate_configuration<D>(z1, sc.shape, g);
    } catch (const OverlapViolation& e) {
      cause = HaltCause::OverlapViolation;
      detail = e.what();
    } catch (const BoundaryViolation& e) {
      cause = HaltCause::BoundaryViolation;
      detail = e.what();
    } catch (const ShapeOutsideDomain& e) {
      cause = HaltCause::BoundaryViolation;
      detail = e.what();
    }
    if (cause != HaltCause::None) {
      tr.controls.pop_back();
      tr.halted = true;
      tr.halt_cause = cause;
      tr.halt_time = t + dt;
      tr.halt_detail = detail;
      break;
    }

    t += dt;
    tr.dt.push_back(dt);
    u = std::move(u1);
    z = std::move(z1);
    masks = part_masks<D>(g, sc.shape, z);
    record(t, solver.last_projection().relative_divergence, solver.last_projection().cg_iterations);
  }
  tr.controls.push_back(sc.controls.at(t));
  tr.final_field = std::move(u);
  return tr;
}

/// Drift run under zero controls with every fluid snapshot cached.
template <int D>
Trajectory<D> baseline_run(const Scenario<D>& sc) {
  Scenario<D> zero = sc.with_controls(ControlVector::zeros(sc.initial.size()));
  return simulate<D>(zero, SimulateOptions{true});
}

/// Position of part i (0-based) or, for i < 0, of the centre of mass.
template <int D>
Vec<D> tracked_point(const SwimmerState<D>& s, int i) {
  return i < 0 ? s.center_of_mass() : s.z[static_cast<std::size_t>(i)];
}

}  // namespace swimlab
