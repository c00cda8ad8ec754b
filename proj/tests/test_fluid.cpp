#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"

using namespace swimlab;
using swimlab::testing::random_field;
using swimlab::testing::unit_grid;

namespace {

double bump(double x, double y) {
  const double sx = std::sin(std::numbers::pi * x), sy = std::sin(std::numbers::pi * y);
  return sx * sx * sy * sy;
}

}  // namespace

TEST(Projection, AnnihilatesGradients) {
  for (int n : {16, 48}) {
    const auto g = unit_grid<2>(n);
    CellField phi(g.cell_count());
    for_each_index<2>(g.cell_dims(), [&](const Index<2>& i, std::size_t lin) {
      const auto x = g.cell_center(i);
      phi[lin] = x[0] * x[0] + x[1] * x[1];
    });
    const auto G = gradient<2>(g, phi);
    EXPECT_LE(norm<2>(g, leray_project<2>(g, G)), 1e-9 * norm<2>(g, G));
  }
  const auto g3 = unit_grid<3>(12);
  CellField phi(g3.cell_count());
  for_each_index<3>(g3.cell_dims(), [&](const Index<3>& i, std::size_t lin) {
    const auto x = g3.cell_center(i);
    phi[lin] = std::sin(3 * x[0]) * x[1] + x[2] * x[2];
  });
  const auto G = gradient<3>(g3, phi);
  EXPECT_LE(norm<3>(g3, leray_project<3>(g3, G)), 1e-9 * norm<3>(g3, G));
}

TEST(Projection, IdentityOnDivergenceFreeFields) {
  const auto g = unit_grid<2>(32);
  const auto u = curl_of_stream(g, bump);
  EXPECT_LE(relative_divergence<2>(g, u), 1e-14);
  const auto Pu = leray_project<2>(g, u);
  EXPECT_LE(norm<2>(g, Pu - u), 1e-9 * norm<2>(g, u));
}

TEST(Projection, OutputIsDivergenceFreeWithZeroNormalFlow) {
  const auto g = unit_grid<3>(10);
  std::mt19937 rng(4);
  const auto P = leray_project<3>(g, random_field<3>(g, rng));
  EXPECT_LE(relative_divergence<3>(g, P), 1e-10);
  for (int k = 0; k < 3; ++k) {
    for_each_index<3>(g.face_dims(k), [&](const Index<3>& i, std::size_t lin) {
      if (i[k] == 0 || i[k] == g.cells(k)) EXPECT_EQ(P[k][lin], 0.0);
    });
  }
}

TEST(Projection, ContractionIdempotenceOrthogonality) {
  const auto g = unit_grid<2>(12);
  FluidSolver<2> solver(g);
  std::mt19937 rng(21);
  for (int s = 0; s < 1000; ++s) {
    const auto f = random_field<2>(g, rng);
    const auto Pf = solver.project(f);
    const double nf = norm<2>(g, f);
    EXPECT_LE(norm<2>(g, Pf), nf * (1.0 + 1e-14));
    EXPECT_LE(norm<2>(g, solver.project(Pf) - Pf), 1e-10 * nf);
    EXPECT_LE(std::abs(inner<2>(g, Pf, f - Pf)), 1e-9 * nf * nf);
  }
}

TEST(Projection, RejectsNonFiniteInput) {
  const auto g = unit_grid<2>(8);
  FaceField<2> f(g);
  f[0][5] = std::nan("");
  EXPECT_THROW(leray_project<2>(g, f), NanDetected);
}

TEST(Stepping, RestStaysAtRest) {
  const auto g = unit_grid<2>(16);
  FaceField<2> u(g), f(g);
  EXPECT_EQ(nse_step<2>(g, u, f, 1e-3).max_abs(), 0.0);
  EXPECT_EQ(stokes_step<2>(g, u, f, 1e-3).max_abs(), 0.0);
}

TEST(Stepping, EnergyNonIncreasingWithoutForcing) {
  const auto g = unit_grid<2>(32, 1e-3);
  FluidSolver<2> solver(g);
  auto u = curl_of_stream(g, [](double x, double y) { return 0.05 * bump(x, y) * std::cos(3 * x); });
  const FaceField<2> f(g);
  double E = kinetic_energy<2>(g, u);
  for (int s = 0; s < 200; ++s) {
    u = solver.step(u, f, solver.stable_dt(u));
    const double E1 = kinetic_energy<2>(g, u);
    EXPECT_LE(E1, E * (1.0 + 1e-14)) << "step " << s;
    EXPECT_LE(solver.last_projection().relative_divergence, 1e-10);
    E = E1;
  }
}

TEST(Stepping, StokesResponseIsLinearInForce) {
  const auto g = unit_grid<2>(24, 1e-2);
  FluidSolver<2> solver(g);
  const FaceField<2> f = curl_of_stream(g, bump);
  FaceField<2> f2 = f;
  f2 *= 2.0;
  FaceField<2> u1(g), u2(g);
  for (int s = 0; s < 20; ++s) {
    u1 = solver.step(u1, f, 1e-3, false);
    u2 = solver.step(u2, f2, 1e-3, false);
    EXPECT_LE(norm<2>(g, u2 - 2.0 * u1), 1e-12 * norm<2>(g, u2));
  }
}

TEST(Stepping, GradientForcingLeavesFluidAtRest) {
  const auto g = unit_grid<2>(16);
  CellField phi(g.cell_count());
  for_each_index<2>(g.cell_dims(), [&](const Index<2>& i, std::size_t lin) {
    const auto x = g.cell_center(i);
    phi[lin] = std::exp(x[0]) * x[1];
  });
  const auto G = gradient<2>(g, phi);
  FaceField<2> u(g);
  u = stokes_step<2>(g, u, G, 1e-3);
  EXPECT_LE(u.max_abs(), 1e-10 * G.max_abs());
}

TEST(Stepping, StokesAndNavierStokesAgreeForSmallData) {
  const auto g = unit_grid<2>(24, 1e-2);
  const FaceField<2> f(g);
  for (double a : {1e-2, 1e-3}) {
    auto u = curl_of_stream(g, [a](double x, double y) { return a * bump(x, y) * std::sin(2 * y); });
    const double dt = 1e-3;
    const auto un = nse_step<2>(g, u, f, dt);
    const auto us = stokes_step<2>(g, u, f, dt);
    const double nu = norm<2>(g, u);
    // difference is the advection term: O(|u|^2 dt)
    EXPECT_LE(norm<2>(g, un - us), 50.0 * nu * nu * dt);
  }
}

TEST(Stepping, ViolatingCflIsRejected) {
  const auto g = unit_grid<2>(16, 1e-3);
  FaceField<2> u(g);
  u.fill(0.0);
  u[0][g.face_index(0, {8, 8})] = 10.0;
  const FaceField<2> f(g);
  EXPECT_THROW(nse_step<2>(g, u, f, 0.01), CflViolation);
  EXPECT_THROW(nse_step<2>(g, FaceField<2>(g), f, 1.0), CflViolation);  // diffusion limit
  EXPECT_THROW(nse_step<2>(g, FaceField<2>(g), f, -1.0), InvalidArgument);
}

TEST(Stepping, ObservedOrderUnderRefinement) {
  // fixed smooth divergence-free forcing, Stokes response at T; Richardson with three grids
  std::vector<Vec<2>> probe;
  for (int n : {32, 64, 128}) {
    const auto g = unit_grid<2>(n, 1e-2);
    FluidSolver<2> solver(g);
    const auto f = sample_faces<2>(g, [](const Vec<2>& x) { return Vec<2>(std::sin(std::numbers::pi * x[1]), 0.0); });
    FaceField<2> u(g);
    const double T = 0.05;
    const int steps = static_cast<int>(std::ceil(T / (0.5 * g.diffusion_dt_limit())));
    for (int s = 0; s < steps; ++s) u = solver.step(u, f, T / steps);
    // body average over a fixed square
    const auto m = body_mask<2>(g, BodyShape::rectangle(0.1, 0.1), Vec<2>(0.3, 0.6));
    probe.push_back(average_velocity<2>(g, m, u));
  }
  const double e1 = (probe[0] - probe[1]).norm(), e2 = (probe[1] - probe[2]).norm();
  ASSERT_GT(e2, 0.0);
  EXPECT_GE(std::log2(e1 / e2), 1.0);
}

TEST(VelocityGradient, LinearShearIsExactInTheInterior) {
  const auto g = unit_grid<2>(16);
  FaceField<2> u = sample_faces<2>(g, [](const Vec<2>& x) { return Vec<2>(x[1], 0.0); });
  const auto J = velocity_gradient<2>(g, u);
  Mat<2> expect;
  expect << 0, 1, 0, 0;
  for_each_index<2>(g.cell_dims(), [&](const Index<2>& i, std::size_t lin) {
    EXPECT_LE((J[lin] - expect).norm(), 1e-10);
  });
}

TEST(VelocityGradient, RigidRotationIsAntisymmetric) {
  const auto g = unit_grid<3>(10);
  const auto u = sample_faces<3>(g, [](const Vec<3>& x) { return Vec<3>(-x[1], x[0], 0.0); });
  const auto J = velocity_gradient<3>(g, u);
  for (const auto& m : J) EXPECT_LE((m + m.transpose()).norm(), 1e-10);
  const auto Z = velocity_gradient<3>(g, FaceField<3>(g));
  for (const auto& m : Z) EXPECT_EQ(m.norm(), 0.0);
}
