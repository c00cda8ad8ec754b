#pragma once

#include <random>

#include "swimlab/swimlab.hpp"

namespace swimlab::testing {

template <int D>
Grid<D> unit_grid(int cells, double nu = 1e-2, double extent = 1.0) {
  DomainSpec<D> d;
  d.extent.fill(extent);
  d.cells.fill(cells);
  d.nu = nu;
  return Grid<D>(d);
}

template <int D>
FaceField<D> random_field(const Grid<D>& g, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  FaceField<D> f(g);
  for (int k = 0; k < D; ++k)
    for (auto& x : f[k]) x = nd(rng);
  return f;
}

// Random valid configuration of n parts: rejection sampling inside the box.
template <int D>
SwimmerState<D> random_state(const Grid<D>& g, const BodyShape& shape, int n, std::mt19937& rng) {
  const double r = shape.circumscribed_radius();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<Vec<D>> z;
    for (int i = 0; i < n; ++i) {
      Vec<D> p;
      for (int k = 0; k < D; ++k) p[k] = 1.5 * r + u(rng) * (g.extent(k) - 3.0 * r);
      z.push_back(p);
    }
    SwimmerState<D> s(z);
    if (configuration_margins<D>(s, shape, g).valid()) return s;
  }
  throw InvalidArgument("could not sample a valid configuration");
}

// Independent oracle: area of the disc inside a rectangle by midpoint sampling.
inline double sampled_disc_area(double r, double x0, double x1, double y0, double y1, int m) {
  double s = 0.0;
  const double hx = (x1 - x0) / m, hy = (y1 - y0) / m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double x = x0 + (i + 0.5) * hx, y = y0 + (j + 0.5) * hy;
      if (x * x + y * y < r * r) s += hx * hy;
    }
  return s;
}

}  // namespace swimlab::testing
