#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"

using namespace swimlab;
using swimlab::testing::unit_grid;

TEST(Grid, RejectsCoarseOrInvalidDomains) {
  DomainSpec<2> d;
  d.extent = {1.0, 1.0};
  d.cells = {7, 16};
  EXPECT_THROW(Grid<2>{d}, InvalidArgument);
  d.cells = {8, 8};
  d.nu = 0.0;
  EXPECT_THROW(Grid<2>{d}, InvalidArgument);
  d.nu = 1.0;
  d.extent = {1.0, -1.0};
  EXPECT_THROW(Grid<2>{d}, InvalidArgument);
}

TEST(Grid, FaceAndCellLayout) {
  DomainSpec<3> d;
  d.extent = {1.0, 2.0, 3.0};
  d.cells = {8, 10, 12};
  const Grid<3> g(d);
  EXPECT_EQ(g.cell_count(), 8u * 10u * 12u);
  EXPECT_EQ(g.face_count(0), 9u * 10u * 12u);
  EXPECT_EQ(g.face_count(2), 8u * 10u * 13u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.125 * 0.2 * 0.25);
  const auto c = g.cell_center({1, 2, 3});
  EXPECT_DOUBLE_EQ(c[0], 1.5 * 0.125);
  EXPECT_DOUBLE_EQ(c[2], 3.5 * 0.25);
}

TEST(Grid, DivergenceOfSampledLinearField) {
  // u = (x, -2y): discrete divergence is exactly -1 in every cell.
  const auto g = unit_grid<2>(16);
  const auto u = sample_faces<2>(g, [](const Vec<2>& x) { return Vec<2>(x[0], -2.0 * x[1]); });
  for (double v : divergence<2>(g, u)) EXPECT_NEAR(v, -1.0, 1e-12);
}

TEST(Poisson, SolvesManufacturedNeumannProblem) {
  // phi = cos(pi x) cos(2 pi y) satisfies the Neumann condition; check the discrete
  // operator is inverted to the solver tolerance.
  for (int n : {16, 32}) {
    const auto g = unit_grid<2>(n);
    CellField phi(g.cell_count());
    for_each_index<2>(g.cell_dims(), [&](const Index<2>& i, std::size_t lin) {
      const auto x = g.cell_center(i);
      phi[lin] = std::cos(std::numbers::pi * x[0]) * std::cos(2 * std::numbers::pi * x[1]);
    });
    const CellField rhs = neumann_laplacian<2>(g, phi);
    PoissonSolver<2> solver(g);
    CellField sol = solver.solve(rhs);
    double mean = 0.0;
    for (double v : phi) mean += v;
    mean /= phi.size();
    double err = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) err = std::max(err, std::abs(sol[k] - (phi[k] - mean)));
    EXPECT_LT(err, 1e-10) << n;
  }
}

TEST(Poisson, SolutionHasZeroMean) {
  const auto g = unit_grid<3>(8);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  CellField rhs(g.cell_count());
  for (auto& v : rhs) v = nd(rng);
  PoissonSolver<3> solver(g);
  const auto phi = solver.solve(rhs);
  double mean = 0.0;
  for (double v : phi) mean += v;
  EXPECT_NEAR(mean / phi.size(), 0.0, 1e-13);
  // residual against the mean-free right-hand side
  const auto L = neumann_laplacian<3>(g, phi);
  double rm = 0.0;
  for (double v : rhs) rm += v;
  rm /= rhs.size();
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    num += (L[k] - (rhs[k] - rm)) * (L[k] - (rhs[k] - rm));
    den += (rhs[k] - rm) * (rhs[k] - rm);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-11);
}

TEST(Poisson, CgAgreesWithTransformSolver) {
  const auto g = unit_grid<2>(16);
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  CellField rhs(g.cell_count());
  for (auto& v : rhs) v = nd(rng);
  PoissonSolver<2> solver(g);
  const auto direct = solver.solve(rhs);
  CellField phi(g.cell_count(), 0.0);
  poisson_cg<2>(g, rhs, phi, 1e-13);
  double err = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    err = std::max(err, std::abs(phi[k] - direct[k]));
    scale = std::max(scale, std::abs(direct[k]));
  }
  EXPECT_LT(err, 1e-9 * scale);
}
