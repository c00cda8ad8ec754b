#pragma once

// Incompressible Navier-Stokes on the MAC grid: discrete Leray projection,
// explicit projection-method steps and the cell-centred velocity Jacobian.

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "swimlab/errors.hpp"
#include "swimlab/grid.hpp"
#include "swimlab/poisson.hpp"

namespace swimlab {

struct ProjectionResult {
  double relative_divergence = 0.0;
  int cg_iterations = 0;
};

namespace detail {

/// Calls fn(i, lin) for every face of component k that is not on a wall.
template <int D, class Fn>
void for_each_interior_face(const Grid<D>& g, int k, Fn&& fn) {
  const auto& dims = g.face_dims(k);
  for_each_index<D>(dims, [&](const Index<D>& i, std::size_t lin) {
    if (i[k] == 0 || i[k] == dims[k] - 1) return;
    fn(i, lin);
  });
}

}  // namespace detail

/// No-slip vector Laplacian. Tangential walls use ghost values -u (wall halfway
/// between the face centre and its ghost).
template <int D>
FaceField<D> vector_laplacian(const Grid<D>& g, const FaceField<D>& u) {
  FaceField<D> out(g);
  for (int k = 0; k < D; ++k) {
    const auto& fs = g.face_strides(k);
    const auto& dims = g.face_dims(k);
    detail::for_each_interior_face<D>(g, k, [&](const Index<D>& i, std::size_t f) {
      const double c = u[k][f];
      double acc = 0.0;
      for (int a = 0; a < D; ++a) {
        const double lo = i[a] > 0 ? u[k][f - fs[a]] : -c;
        const double hi = i[a] < dims[a] - 1 ? u[k][f + fs[a]] : -c;
        acc += (hi - 2.0 * c + lo) / (g.h(a) * g.h(a));
      }
      out[k][f] = acc;
    });
  }
  return out;
}

/// Central-difference advection (a . grad) b on the interior faces. Bilinear in (a, b).
template <int D>
FaceField<D> advection(const Grid<D>& g, const FaceField<D>& a, const FaceField<D>& b) {
  FaceField<D> out(g);
  for (int k = 0; k < D; ++k) {
    const auto& fs = g.face_strides(k);
    const auto& dims = g.face_dims(k);
    detail::for_each_interior_face<D>(g, k, [&](const Index<D>& i, std::size_t f) {
      double acc = a[k][f] * (b[k][f + fs[k]] - b[k][f - fs[k]]) / (2.0 * g.h(k));
      for (int m = 0; m < D; ++m) {
        if (m == k) continue;
        // a_m at this k-face: mean of the four surrounding m-faces
        const auto& ms = g.face_strides(m);
        Index<D> j = i;
        j[k] = i[k] - 1;
        const std::size_t base = g.face_index(m, j);
        const double am = 0.25 * (a[m][base] + a[m][base + ms[m]] + a[m][base + ms[k]] + a[m][base + ms[k] + ms[m]]);
        if (am == 0.0) continue;
        const double c = b[k][f];
        const double lo = i[m] > 0 ? b[k][f - fs[m]] : -c;
        const double hi = i[m] < dims[m] - 1 ? b[k][f + fs[m]] : -c;
        acc += am * (hi - lo) / (2.0 * g.h(m));
      }
      out[k][f] = acc;
    });
  }
  return out;
}

/// Per-cell Jacobian J(k, a) = d u_k / d x_a. Own-axis derivatives are exact
/// face differences; cross derivatives are centred on cell averages, one-sided at walls.
template <int D>
std::vector<Mat<D>> velocity_gradient(const Grid<D>& g, const FaceField<D>& u) {
  std::vector<Mat<D>> J(g.cell_count(), Mat<D>::Zero());
  const auto uc = cell_velocity<D>(g, u);
  const auto& cs = g.cell_strides();
  for (int k = 0; k < D; ++k) {
    const std::size_t s = g.face_strides(k)[k];
    for_each_index<D>(g.cell_dims(), [&](const Index<D>& i, std::size_t lin) {
      const std::size_t f = g.face_index(k, i);
      J[lin](k, k) = (u[k][f + s] - u[k][f]) / g.h(k);
      for (int a = 0; a < D; ++a) {
        if (a == k) continue;
        const int n = g.cells(a);
        double d;
        if (i[a] == 0)
          d = (uc[k][lin + cs[a]] - uc[k][lin]) / g.h(a);
        else if (i[a] == n - 1)
          d = (uc[k][lin] - uc[k][lin - cs[a]]) / g.h(a);
        else
          d = (uc[k][lin + cs[a]] - uc[k][lin - cs[a]]) / (2.0 * g.h(a));
        J[lin](k, a) = d;
      }
    });
  }
  return J;
}

/// Owns the Poisson solver for one grid; not shareable between threads.
template <int D>
class FluidSolver {
 public:
  explicit FluidSolver(const Grid<D>& g, double div_tol = 1e-10, double poisson_tol = 1e-12)
      : grid_(g), poisson_(std::make_unique<PoissonSolver<D>>(g, poisson_tol)), div_tol_(div_tol) {}

  const Grid<D>& grid() const { return grid_; }
  double div_tol() const { return div_tol_; }
  const ProjectionResult& last_projection() const { return last_; }
  const CellField& last_potential() const { return phi_; }

  /// P(F) = F0 - G phi, F0 = F with wall-normal faces zeroed, D G phi = D F0.
  FaceField<D> project(FaceField<D> F) {
    if (!F.all_finite()) throw NanDetected("non-finite input to the projection");
    zero_normal_boundary<D>(grid_, F);
    const double in_max = F.max_abs();
    phi_ = poisson_->solve(divergence<D>(grid_, F));
    F -= gradient<D>(grid_, phi_);
    last_.cg_iterations = poisson_->last_cg_iterations();
    // measured against the larger of input and output: a projected gradient is pure round-off
    const double out_max = F.max_abs();
    last_.relative_divergence =
        out_max >= in_max ? relative_divergence<D>(grid_, F) : relative_divergence<D>(grid_, F) * out_max / in_max;
    if (last_.relative_divergence > div_tol_)
      throw PoissonDivergence("projected field keeps relative divergence " + std::to_string(last_.relative_divergence));
    return F;
  }

  /// Largest stable step for the current velocity: 0.5 * min(h/|u|, diffusion limit, 2 nu/|u|^2).
  double stable_dt(const FaceField<D>& u) const {
    const double umax = u.max_abs();
    double lim = grid_.diffusion_dt_limit();
    if (umax > 0.0) {
      lim = std::min(lim, grid_.h_min() / umax);
      lim = std::min(lim, 2.0 * grid_.nu() / (umax * umax));
    }
    return 0.5 * lim;
  }

  /// One projection step; `advect` = false gives the unsteady Stokes step.
  FaceField<D> step(const FaceField<D>& u, const FaceField<D>& f, double dt, bool advect = true) {
    check_dt(u, dt);
    FaceField<D> rhs = vector_laplacian<D>(grid_, u);
    rhs *= grid_.nu();
    if (advect) rhs -= advection<D>(grid_, u, u);
    rhs += f;
    FaceField<D> next = u;
    next.axpy(dt, rhs);
    next = project(std::move(next));
    if (!next.all_finite()) throw NanDetected("velocity became non-finite");
    return next;
  }

  /// Step of the system linearized about `base`: w_t = nu L w - (base.grad) w - (w.grad) base + f.
  FaceField<D> linearized_step(const FaceField<D>& w, const FaceField<D>& base, const FaceField<D>& f, double dt,
                               bool advect = true) {
    check_dt(base, dt);
    FaceField<D> rhs = vector_laplacian<D>(grid_, w);
    rhs *= grid_.nu();
    if (advect) {
      rhs -= advection<D>(grid_, base, w);
      rhs -= advection<D>(grid_, w, base);
    }
    rhs += f;
    FaceField<D> next = w;
    next.axpy(dt, rhs);
    next = project(std::move(next));
    if (!next.all_finite()) throw NanDetected("linearized velocity became non-finite");
    return next;
  }

 private:
  void check_dt(const FaceField<D>& u, double dt) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    const double umax = u.max_abs();
    if (!std::isfinite(umax)) throw NanDetected("velocity is not finite");
    // small slack so the value returned by stable_dt is always accepted
    const double slack = 1.0 + 1e-12;
    if (dt * umax > grid_.h_min() * slack)
      throw CflViolation("advective CFL number " + std::to_string(dt * umax / grid_.h_min()) + " exceeds 1");
    if (dt > grid_.diffusion_dt_limit() * slack)
      throw CflViolation("time step exceeds the explicit diffusion limit");
  }

  Grid<D> grid_;
  std::unique_ptr<PoissonSolver<D>> poisson_;
  double div_tol_;
  CellField phi_;
  ProjectionResult last_;
};

/// One-off projection with a temporary solver.
template <int D>
FaceField<D> leray_project(const Grid<D>& g, const FaceField<D>& F) {
  FluidSolver<D> s(g);
  return s.project(F);
}

template <int D>
FaceField<D> nse_step(const Grid<D>& g, const FaceField<D>& u, const FaceField<D>& f, double dt) {
  FluidSolver<D> s(g);
  return s.step(u, f, dt, true);
}

template <int D>
FaceField<D> stokes_step(const Grid<D>& g, const FaceField<D>& u, const FaceField<D>& f, double dt) {
  FluidSolver<D> s(g);
  return s.step(u, f, dt, false);
}

/// Discrete stream-function field: u = curl psi with psi sampled at cell corners
/// (2-D only). Exactly divergence free; zero normal flow when psi vanishes on the walls.
template <class Fn>
FaceField<2> curl_of_stream(const Grid<2>& g, Fn&& psi) {
  FaceField<2> u(g);
  const double hx = g.h(0), hy = g.h(1);
  // u_x at x-face (i, j): (psi(i, j+1) - psi(i, j)) / hy, corners at (i h, j h)
  for_each_index<2>(g.face_dims(0), [&](const Index<2>& i, std::size_t lin) {
    const double x = i[0] * hx;
    u[0][lin] = (psi(x, (i[1] + 1) * hy) - psi(x, i[1] * hy)) / hy;
  });
  for_each_index<2>(g.face_dims(1), [&](const Index<2>& i, std::size_t lin) {
    const double y = i[1] * hy;
    u[1][lin] = -(psi((i[0] + 1) * hx, y) - psi(i[0] * hx, y)) / hx;
  });
  zero_normal_boundary<2>(g, u);
  return u;
}

}  // namespace swimlab
