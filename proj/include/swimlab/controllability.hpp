#pragma once

// Local controllability experiments with constant controls: independence of
// the averaged projected forces, reachability images of control rings or
// spheres, Jacobians of the endpoint map and Newton steering.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "swimlab/sensitivity.hpp"
#include "swimlab/winding.hpp"

namespace swimlab {

/// Runs fn(k) for k in [0, count) on up to `jobs` threads. Results must be written per index.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = static_cast<std::size_t>(w); k < count; k += static_cast<std::size_t>(jobs)) fn(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <int D>
struct IndependenceReport {
  std::vector<Vec<D>> vectors;  // one per control index
  Eigen::VectorXd singular_values;
  double ratio = 0.0;        // sigma_min / sigma_max (0 when all vectors vanish)
  double gross_scale = 0.0;  // max over controls of sum_i |integral over S(z_i) of P f_k|
  bool independent = false;
};

/// `part` < 0 selects centre-of-mass mode (sums over all parts).
template <int D>
IndependenceReport<D> independence_check(const Grid<D>& g, const BodyShape& shape, const SwimmerState<D>& s,
                                         const std::vector<int>& indices, int part, double sigma_tol = 1e-3) {
  if (indices.empty()) throw InvalidArgument("no control indices given");
  for (int k : indices)
    if (k < 0 || k >= s.control_count()) throw InvalidArgument("control index out of range");
  if (part >= s.size()) throw InvalidArgument("part index out of range");
  const auto I = projected_force_integrals<D>(g, shape, s);
  IndependenceReport<D> rep;
  Eigen::MatrixXd M(D, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto& row = I[static_cast<std::size_t>(indices[c])];
    Vec<D> v = Vec<D>::Zero();
    double gross = 0.0;
    for (int i = 0; i < s.size(); ++i) {
      gross += row[i].norm();
      if (part < 0 || part == i) v += row[i];
    }
    rep.gross_scale = std::max(rep.gross_scale, gross);
    rep.vectors.push_back(v);
    M.col(static_cast<Eigen::Index>(c)) = v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  rep.singular_values = svd.singularValues();
  const double smax = rep.singular_values(0);
  const double smin = rep.singular_values(rep.singular_values.size() - 1);
  rep.ratio = smax > 0.0 ? smin / smax : 0.0;
  rep.independent = smax > 0.0 && static_cast<int>(indices.size()) <= D && rep.ratio > sigma_tol;
  return rep;
}

/// Full control vector with `values` placed at `indices`.
inline ControlVector embed_controls(int parts, const std::vector<int>& indices, const Eigen::VectorXd& values) {
  std::vector<double> v(static_cast<std::size_t>(2 * parts - 3), 0.0);
  for (std::size_t c = 0; c < indices.size(); ++c) v[static_cast<std::size_t>(indices[c])] = values(static_cast<Eigen::Index>(c));
  return ControlVector(v);
}

template <int D>
struct EndpointRun {
  Vec<D> endpoint = Vec<D>::Zero();
  bool halted = false;
  std::string halt_cause;
};

/// Endpoint of the tracked point under constant controls; replays `dt_schedule` when given.
template <int D>
EndpointRun<D> run_endpoint(const Scenario<D>& sc, int part, const std::vector<int>& indices,
                            const Eigen::VectorXd& values, const std::vector<double>& dt_schedule = {}) {
  Scenario<D> s = sc.with_controls(embed_controls(sc.initial.size(), indices, values));
  if (!dt_schedule.empty()) s.dt_schedule = dt_schedule;
  const auto tr = simulate<D>(s);
  EndpointRun<D> r;
  r.endpoint = tracked_point<D>(tr.final_state(), part);
  r.halted = tr.halted;
  r.halt_cause = to_string(tr.halt_cause);
  return r;
}

template <int D>
struct ReachabilityAtlas {
  double h = 0.0;
  std::vector<Eigen::VectorXd> controls;
  std::vector<Vec<D>> endpoints;
  std::vector<bool> halted;
  Vec<D> drift = Vec<D>::Zero();
  std::vector<double> dt_schedule;
  bool degenerate = false;
  // 2-D certificate
  int winding = 0;
  bool simple = false;
  // 3-D certificate
  double signed_volume = 0.0;
  double degree = 0.0;
  bool covers = false;
  double inradius = 0.0;  // distance from the drift endpoint to the image boundary
  double diameter = 0.0;

  bool certified() const {
    if (degenerate) return false;
    for (bool b : halted)
      if (b) return false;
    if constexpr (D == 2) return std::abs(winding) == 1 && simple;
    return covers;
  }
};

/// Image of the control ring (2 indices, 2-D) or the 42-point control sphere
/// (3 indices, 3-D) of radius h under the endpoint map at the scenario's final time.
template <int D>
ReachabilityAtlas<D> reachability_map(const Scenario<D>& sc, int part, const std::vector<int>& indices, double h,
                                      int samples, int jobs = 1) {
  if (static_cast<int>(indices.size()) != D)
    throw InvalidArgument("reachability needs " + std::to_string(D) + " control indices");
  if (std::abs(h) > 1.0) throw InvalidArgument("|h| must not exceed 1");
  ReachabilityAtlas<D> at;
  at.h = h;
  const auto base = simulate<D>(sc.with_controls(ControlVector::zeros(sc.initial.size())));
  at.drift = tracked_point<D>(base.final_state(), part);
  at.dt_schedule = base.dt;

  std::vector<Vec<D>> dirs;
  TriMesh mesh;
  if constexpr (D == 2) {
    if (samples < 3) throw InvalidArgument("a control ring needs at least 3 samples");
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * std::numbers::pi * k / samples;
      dirs.push_back(Vec<D>(std::cos(th), std::sin(th)));
    }
  } else {
    mesh = icosphere42();
    for (const auto& p : mesh.vertices) dirs.push_back(p);
  }
  at.controls.resize(dirs.size());
  at.endpoints.resize(dirs.size());
  at.halted.assign(dirs.size(), false);
  std::vector<char> halted(dirs.size(), 0);
  parallel_for(dirs.size(), jobs, [&](std::size_t k) {
    const Eigen::VectorXd v = h * Eigen::VectorXd(dirs[k]);
    at.controls[k] = v;
    const auto r = run_endpoint<D>(sc, part, indices, v, at.dt_schedule);
    at.endpoints[k] = r.endpoint;
    halted[k] = r.halted ? 1 : 0;
  });
  for (std::size_t k = 0; k < dirs.size(); ++k) at.halted[k] = halted[k] != 0;

  if constexpr (D == 2) {
    std::vector<P2> poly(at.endpoints.begin(), at.endpoints.end());
    at.diameter = diameter(poly);
    at.degenerate = h == 0.0 || at.diameter == 0.0;
    if (!at.degenerate) {
      at.winding = winding_number(poly, at.drift);
      at.simple = is_simple_polygon(poly);
      at.inradius = at.winding != 0 ? boundary_distance(poly, at.drift) : 0.0;
    }
  } else {
    std::vector<P3> pts(at.endpoints.begin(), at.endpoints.end());
    at.diameter = diameter(pts);
    at.degenerate = h == 0.0 || at.diameter == 0.0;
    if (!at.degenerate) {
      at.signed_volume = signed_volume(mesh, pts, at.drift);
      at.degree = surface_degree(mesh, pts, at.drift);
      at.covers = std::abs(std::round(at.degree)) == 1.0 && std::abs(at.degree - std::round(at.degree)) < 1e-6;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& f : mesh.faces) {
        // distance from the drift point to each triangle's plane bounds the inradius from above;
        // the minimum over triangles is used as the measured inradius
        const P3 a = pts[f[0]], b = pts[f[1]], c = pts[f[2]];
        const P3 nrm = (b - a).cross(c - a);
        if (nrm.norm() > 0) d = std::min(d, std::abs((at.drift - a).dot(nrm.normalized())));
      }
      at.inradius = at.covers ? d : 0.0;
    }
  }
  return at;
}

template <int D>
struct JacobianReport {
  Eigen::MatrixXd J;
  double determinant = 0.0;
  double condition = 0.0;
  bool singular = false;
};

template <int D>
JacobianReport<D> summarize_jacobian(Eigen::MatrixXd J, double sigma_tol) {
  JacobianReport<D> r;
  r.J = std::move(J);
  if (r.J.rows() == r.J.cols()) r.determinant = r.J.determinant();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.J);
  const auto s = svd.singularValues();
  const double smax = s(0), smin = s(s.size() - 1);
  r.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  r.singular = !(smax > 0) || smin / smax <= sigma_tol;
  return r;
}

/// Columns dz_i(T)/dv_k from the linearized solve and the Volterra equation.
template <int D>
JacobianReport<D> jacobian_matrix(const Scenario<D>& sc, const Trajectory<D>& base, int part,
                                  const std::vector<int>& indices) {
  if (!base.has_fields()) throw MissingSensitivity("baseline snapshots are required for the Volterra Jacobian");
  Eigen::MatrixXd J(D, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto w = linearized_solve<D>(sc, base, indices[c]);
    const auto psi = part < 0 ? center_of_mass_sensitivity<D>(sc, base, w)
                              : volterra_solve<D>(volterra_kernel<D>(sc, base, part), w);
    J.col(static_cast<Eigen::Index>(c)) = psi.back();
  }
  return summarize_jacobian<D>(std::move(J), sc.tol.sigma_tol);
}

/// Central finite-difference Jacobian with the baseline step sequence.
template <int D>
JacobianReport<D> fd_jacobian(const Scenario<D>& sc, const std::vector<double>& dt_schedule, int part,
                              const std::vector<int>& indices, double h) {
  Eigen::MatrixXd J(D, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(indices.size()));
    e(static_cast<Eigen::Index>(c)) = h;
    const auto p = run_endpoint<D>(sc, part, indices, e, dt_schedule);
    const auto m = run_endpoint<D>(sc, part, indices, -e, dt_schedule);
    J.col(static_cast<Eigen::Index>(c)) = (p.endpoint - m.endpoint) / (2.0 * h);
  }
  return summarize_jacobian<D>(std::move(J), sc.tol.sigma_tol);
}

template <int D>
struct SteeringResult {
  Vec<D> target = Vec<D>::Zero();
  Eigen::VectorXd controls;
  Vec<D> achieved = Vec<D>::Zero();
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;  // accepted iterates, non-increasing
  std::vector<Eigen::VectorXd> iterates;
  int simulations = 0;
};

/// Damped Newton on constant controls with Broyden updates of J0.
/// Throws NoConvergence (with the residual record) or SingularJacobian.
template <int D>
SteeringResult<D> steer(const Scenario<D>& sc, int part, const std::vector<int>& indices, const Vec<D>& target,
                        const Eigen::MatrixXd& J0, double tol, int max_iter = 10,
                        const std::vector<double>& dt_schedule = {}) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  if (J0.rows() != D || J0.cols() != m) throw InvalidArgument("initial Jacobian has the wrong shape");
  SteeringResult<D> res;
  res.target = target;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  auto eval = [&](const Eigen::VectorXd& c) {
    ++res.simulations;
    const auto r = run_endpoint<D>(sc, part, indices, c, dt_schedule);
    if (r.halted) return std::optional<Vec<D>>{};
    return std::optional<Vec<D>>{r.endpoint};
  };
  auto first = eval(v);
  if (!first) throw NoConvergence("drift run halts before the horizon", std::numeric_limits<double>::infinity());
  Vec<D> z = *first;
  Vec<D> r = z - target;
  res.residuals.push_back(r.norm());
  res.iterates.push_back(v);

  Eigen::MatrixXd J = J0;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto s = svd.singularValues();
    if (!(s(0) > 0) || s(s.size() - 1) / s(0) <= sc.tol.sigma_tol) throw SingularJacobian("steering Jacobian is singular");
  }
  int it = 0;
  while (r.norm() > tol && it < max_iter) {
    ++it;
    const Eigen::VectorXd dv = -J.completeOrthogonalDecomposition().solve(Eigen::VectorXd(r));
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 6; ++ls, lambda *= 0.5) {
      const Eigen::VectorXd trial = v + lambda * dv;
      if (trial.norm() > 1.0) continue;  // controls stay in the |v| <= 1 regime
      const auto zt = eval(trial);
      if (!zt) continue;
      const Vec<D> rt = *zt - target;
      // Broyden update with every evaluated secant
      const Eigen::VectorXd s = trial - v;
      const Eigen::VectorXd y = rt - r;
      J += ((y - J * s) * s.transpose()) / s.squaredNorm();
      if (rt.norm() < r.norm()) {
        v = trial;
        z = *zt;
        r = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    res.residuals.push_back(r.norm());
    res.iterates.push_back(v);
  }
  res.controls = v;
  res.achieved = z;
  res.iterations = it;
  res.residual = r.norm();
  if (res.residual > tol)
    throw NoConvergence("steering stopped at residual " + std::to_string(res.residual), res.residual, res.residuals);
  return res;
}

}  // namespace swimlab
