#pragma once

// Neumann Poisson problem for the cell-centred 2d+1 point Laplacian (the
// product of the MAC divergence and gradient). Solved directly with a cosine
// transform; a matrix-free conjugate gradient polishes the result if needed
// and doubles as an independent solver in tests.

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "swimlab/errors.hpp"
#include "swimlab/grid.hpp"

namespace swimlab {

/// Gradient of a cell field on the interior faces; wall-normal faces stay 0.
template <int D>
FaceField<D> gradient(const Grid<D>& g, const CellField& phi) {
  FaceField<D> G(g);
  for (int k = 0; k < D; ++k) {
    const double inv_h = 1.0 / g.h(k);
    const auto& dims = g.face_dims(k);
    const std::size_t cs = g.cell_strides()[k];
    for_each_index<D>(dims, [&](const Index<D>& i, std::size_t lin) {
      if (i[k] == 0 || i[k] == dims[k] - 1) return;
      const std::size_t c = g.cell_index(i);  // cell on the upper side of the face
      G[k][lin] = (phi[c] - phi[c - cs]) * inv_h;
    });
  }
  return G;
}

/// Neumann Laplacian = divergence(gradient(phi)).
template <int D>
CellField neumann_laplacian(const Grid<D>& g, const CellField& phi) {
  CellField out(g.cell_count(), 0.0);
  for (int k = 0; k < D; ++k) {
    const double inv_h2 = 1.0 / (g.h(k) * g.h(k));
    const std::size_t cs = g.cell_strides()[k];
    const int n = g.cells(k);
    for_each_index<D>(g.cell_dims(), [&](const Index<D>& i, std::size_t lin) {
      double acc = 0.0;
      if (i[k] > 0) acc += phi[lin - cs] - phi[lin];
      if (i[k] < n - 1) acc += phi[lin + cs] - phi[lin];
      out[lin] += acc * inv_h2;
    });
  }
  return out;
}

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

inline void remove_mean(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// fftw's planner is not re-entrant
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradient on -L phi = -rhs with the mean removed; phi is used as the
/// initial guess. Throws PoissonDivergence if the relative residual stays above tol.
template <int D>
CgResult poisson_cg(const Grid<D>& g, CellField rhs, CellField& phi, double tol = 1e-12, int max_iter = 0) {
  detail::remove_mean(rhs);
  if (phi.size() != rhs.size()) phi.assign(rhs.size(), 0.0);
  if (max_iter <= 0) max_iter = 20 * static_cast<int>(std::sqrt(static_cast<double>(rhs.size()))) + 200;
  const double bnorm = std::sqrt(detail::dot(rhs, rhs));
  CgResult res;
  if (bnorm == 0.0) {
    std::fill(phi.begin(), phi.end(), 0.0);
    return res;
  }
  // work with A = -L (symmetric positive semidefinite)
  CellField r = neumann_laplacian<D>(g, phi);
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = -rhs[n] + r[n];  // r = b - A phi with b = -rhs
  detail::remove_mean(r);
  CellField p = r;
  double rr = detail::dot(r, r);
  while (res.iterations < max_iter && std::sqrt(rr) > tol * bnorm) {
    CellField Ap = neumann_laplacian<D>(g, p);
    for (double& x : Ap) x = -x;
    const double alpha = rr / detail::dot(p, Ap);
    for (std::size_t n = 0; n < r.size(); ++n) {
      phi[n] += alpha * p[n];
      r[n] -= alpha * Ap[n];
    }
    detail::remove_mean(r);
    const double rr_new = detail::dot(r, r);
    const double beta = rr_new / rr;
    for (std::size_t n = 0; n < r.size(); ++n) p[n] = r[n] + beta * p[n];
    rr = rr_new;
    ++res.iterations;
  }
  detail::remove_mean(phi);
  res.relative_residual = std::sqrt(rr) / bnorm;
  if (res.relative_residual > tol)
    throw PoissonDivergence("conjugate gradient stalled at relative residual " + std::to_string(res.relative_residual));
  return res;
}

/// Direct Neumann solver: DCT-II diagonalizes the cell Laplacian.
template <int D>
class PoissonSolver {
 public:
  explicit PoissonSolver(const Grid<D>& g, double tol = 1e-12) : grid_(g), tol_(tol) {
    const std::size_t n = g.cell_count();
    std::vector<double> buf(n, 0.0), out(n, 0.0);
    std::array<int, D> dims{};
    std::array<fftw_r2r_kind, D> fwd{}, bwd{};
    for (int k = 0; k < D; ++k) {
      dims[k] = g.cells(k);
      fwd[k] = FFTW_REDFT10;
      bwd[k] = FFTW_REDFT01;
    }
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      forward_ = fftw_plan_r2r(D, dims.data(), buf.data(), out.data(), fwd.data(), flags);
      backward_ = fftw_plan_r2r(D, dims.data(), buf.data(), out.data(), bwd.data(), flags);
    }
    if (!forward_ || !backward_) throw PoissonDivergence("could not create cosine transform plans");

    eig_.assign(n, 0.0);
    double norm = 1.0;
    for (int k = 0; k < D; ++k) norm *= 2.0 * g.cells(k);
    for_each_index<D>(g.cell_dims(), [&](const Index<D>& m, std::size_t lin) {
      double lam = 0.0;
      for (int k = 0; k < D; ++k) {
        const double h = g.h(k);
        lam += (2.0 * std::cos(std::numbers::pi * m[k] / g.cells(k)) - 2.0) / (h * h);
      }
      eig_[lin] = lam == 0.0 ? 0.0 : 1.0 / (lam * norm);
    });
    eig_[0] = 0.0;
  }

  ~PoissonSolver() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }
  PoissonSolver(const PoissonSolver&) = delete;
  PoissonSolver& operator=(const PoissonSolver&) = delete;

  const Grid<D>& grid() const { return grid_; }
  int last_cg_iterations() const { return cg_iterations_; }

  /// Mean-zero phi with L phi = rhs - mean(rhs).
  CellField solve(CellField rhs) {
    detail::remove_mean(rhs);
    CellField hat(rhs.size()), phi(rhs.size());
    fftw_execute_r2r(forward_, rhs.data(), hat.data());
    for (std::size_t n = 0; n < hat.size(); ++n) hat[n] *= eig_[n];
    fftw_execute_r2r(backward_, hat.data(), phi.data());
    detail::remove_mean(phi);

    cg_iterations_ = 0;
    const double bmax = detail::max_abs(rhs);
    if (bmax == 0.0) return phi;
    CellField r = neumann_laplacian<D>(grid_, phi);
    for (std::size_t n = 0; n < r.size(); ++n) r[n] -= rhs[n];
    const double rel = std::sqrt(detail::dot(r, r) / detail::dot(rhs, rhs));
    if (!std::isfinite(rel)) throw PoissonDivergence("non-finite Poisson residual");
    if (rel > tol_) cg_iterations_ = poisson_cg<D>(grid_, rhs, phi, tol_).iterations;
    return phi;
  }

 private:
  Grid<D> grid_;
  double tol_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<double> eig_;
  int cg_iterations_ = 0;
};

}  // namespace swimlab
