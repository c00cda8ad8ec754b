#pragma once

// Second-kind Volterra equation psi(t) + int_0^t K(tau) psi(tau) dtau = g(t)
// with a kernel that depends on tau only, solved by the trapezoidal rule on a
// (possibly non-uniform) time grid.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "swimlab/errors.hpp"

namespace swimlab {

template <int D>
std::vector<Eigen::Matrix<double, D, 1>> volterra_trapezoid(const std::vector<double>& t,
                                                             const std::vector<Eigen::Matrix<double, D, D>>& K,
                                                             const std::vector<Eigen::Matrix<double, D, 1>>& g) {
  using V = Eigen::Matrix<double, D, 1>;
  using M = Eigen::Matrix<double, D, D>;
  if (t.size() != K.size() || t.size() != g.size())
    throw GridMismatch("kernel, forcing and time grid have different lengths");
  std::vector<V> psi(t.size(), V::Zero());
  if (t.empty()) return psi;
  psi[0] = g[0];
  V integral = V::Zero();  // int_0^{t[n-1]} K psi
  for (std::size_t n = 1; n < t.size(); ++n) {
    const double dt = t[n] - t[n - 1];
    if (!(dt > 0.0)) throw GridMismatch("time grid must be strictly increasing");
    const V known = integral + 0.5 * dt * (K[n - 1] * psi[n - 1]);
    const M lhs = M::Identity() + 0.5 * dt * K[n];
    psi[n] = lhs.partialPivLu().solve(g[n] - known);
    integral = known + 0.5 * dt * (K[n] * psi[n]);
  }
  return psi;
}

/// Cumulative trapezoid integral of a vector series.
template <int D>
std::vector<Eigen::Matrix<double, D, 1>> cumulative_trapezoid(const std::vector<double>& t,
                                                               const std::vector<Eigen::Matrix<double, D, 1>>& f) {
  using V = Eigen::Matrix<double, D, 1>;
  if (t.size() != f.size()) throw GridMismatch("series and time grid have different lengths");
  std::vector<V> out(t.size(), V::Zero());
  for (std::size_t n = 1; n < t.size(); ++n) out[n] = out[n - 1] + 0.5 * (t[n] - t[n - 1]) * (f[n - 1] + f[n]);
  return out;
}

/// Trapezoid estimate of int_0^T ||K(tau)||_2 dtau.
template <int D>
double kernel_norm_integral(const std::vector<double>& t, const std::vector<Eigen::Matrix<double, D, D>>& K) {
  if (t.size() != K.size()) throw GridMismatch("kernel and time grid have different lengths");
  auto nrm = [](const Eigen::Matrix<double, D, D>& m) {
    Eigen::JacobiSVD<Eigen::Matrix<double, D, D>> svd(m);
    return svd.singularValues()(0);
  };
  double s = 0.0;
  for (std::size_t n = 1; n < t.size(); ++n) s += 0.5 * (t[n] - t[n - 1]) * (nrm(K[n - 1]) + nrm(K[n]));
  return s;
}

}  // namespace swimlab
