#include <gtest/gtest.h>

#include <atomic>

#include "helpers.hpp"

using namespace swimlab;
using swimlab::testing::unit_grid;

namespace {

Scenario<2> rect_swimmer(int cells, double nu, double T) {
  Scenario<2> sc;
  sc.domain.extent = {1.0, 1.0};
  sc.domain.cells = {cells, cells};
  sc.domain.nu = nu;
  sc.shape = BodyShape::rectangle(0.04, 0.01);
  sc.initial = SwimmerState<2>({Vec<2>(0.35, 0.45), Vec<2>(0.45, 0.47), Vec<2>(0.53, 0.53), Vec<2>(0.63, 0.55)},
                               {0, 1, 0, 1});
  sc.controls = ControlSchedule::constant(ControlVector::zeros(4));
  sc.T = T;
  return sc;
}

}  // namespace

TEST(Independence, RectangleCentreOfMassDirectionsAreIndependent) {
  const auto sc = rect_swimmer(64, 1e-4, 0.05);
  const auto rep = independence_check<2>(sc.grid(), sc.shape, sc.initial, {2, 4}, -1, sc.tol.sigma_tol);
  EXPECT_TRUE(rep.independent);
  EXPECT_GT(rep.ratio, 1e-2);
  EXPECT_EQ(rep.vectors.size(), 2u);
}

TEST(Independence, RepeatedIndexOrTooManyIndicesAreDependent) {
  const auto sc = rect_swimmer(32, 1e-4, 0.05);
  const auto g = sc.grid();
  const auto dup = independence_check<2>(g, sc.shape, sc.initial, {2, 2}, 1, sc.tol.sigma_tol);
  EXPECT_FALSE(dup.independent);
  EXPECT_LE(dup.ratio, 1e-12);
  EXPECT_FALSE(independence_check<2>(g, sc.shape, sc.initial, {0, 2, 4}, 1, sc.tol.sigma_tol).independent);
  EXPECT_THROW(independence_check<2>(g, sc.shape, sc.initial, {}, 1, sc.tol.sigma_tol), InvalidArgument);
  EXPECT_THROW(independence_check<2>(g, sc.shape, sc.initial, {2}, 7, sc.tol.sigma_tol), InvalidArgument);
}

TEST(Independence, DiscCentreOfMassIsWeakerThanRectangle) {
  auto sc = rect_swimmer(64, 1e-4, 0.05);
  const auto rect = independence_check<2>(sc.grid(), sc.shape, sc.initial, {2, 4}, -1, sc.tol.sigma_tol);
  sc.shape = BodyShape::disc(0.0225676);
  sc.initial.orientation = {0, 0, 0, 0};
  const auto disc = independence_check<2>(sc.grid(), sc.shape, sc.initial, {2, 4}, -1, sc.tol.sigma_tol);
  // net centre-of-mass response relative to the gross per-part response
  double disc_max = 0.0, rect_max = 0.0;
  for (const auto& v : disc.vectors) disc_max = std::max(disc_max, v.norm());
  for (const auto& v : rect.vectors) rect_max = std::max(rect_max, v.norm());
  EXPECT_LT(disc_max / disc.gross_scale, 0.2 * rect_max / rect.gross_scale);
}

TEST(Reachability, ZeroRadiusIsDegenerate) {
  const auto sc = rect_swimmer(32, 1e-3, 0.02);
  const auto at = reachability_map<2>(sc, -1, {2, 4}, 0.0, 8);
  EXPECT_TRUE(at.degenerate);
  EXPECT_FALSE(at.certified());
  EXPECT_THROW(reachability_map<2>(sc, -1, {2, 4}, 1.5, 8), InvalidArgument);
  EXPECT_THROW(reachability_map<2>(sc, -1, {2}, 0.1, 8), InvalidArgument);
}

TEST(Reachability, SmallAtlasIsCertified) {
  const auto sc = rect_swimmer(64, 1e-4, 0.05);
  const auto at = reachability_map<2>(sc, -1, {2, 4}, 0.05, 16, 2);
  ASSERT_EQ(at.endpoints.size(), 16u);
  EXPECT_EQ(std::abs(at.winding), 1);
  EXPECT_TRUE(at.simple);
  EXPECT_TRUE(at.certified());
  EXPECT_GT(at.inradius, 0.0);
  EXPECT_GE(at.diameter, 2.0 * at.inradius);
  // the drift run starts from rest at equilibrium, so the drift point is the initial centre of mass
  EXPECT_LE((at.drift - tracked_point<2>(sc.initial, -1)).norm(), 1e-15);
}

TEST(Jacobian, VolterraAndFiniteDifferencesAgree) {
  const auto sc = rect_swimmer(48, 1e-4, 0.05);
  const auto base = baseline_run<2>(sc);
  const auto J = jacobian_matrix<2>(sc, base, -1, {2, 4});
  const auto F = fd_jacobian<2>(sc, base.dt, -1, {2, 4}, 1e-3);
  EXPECT_FALSE(J.singular);
  EXPECT_LE((J.J - F.J).norm(), 0.05 * F.J.norm());
  EXPECT_NEAR(J.determinant, F.J.determinant(), 0.1 * std::abs(F.J.determinant()));
  EXPECT_THROW(jacobian_matrix<2>(sc, simulate<2>(sc), -1, {2, 4}), MissingSensitivity);
}

TEST(Steering, DriftTargetNeedsNoIterations) {
  const auto sc = rect_swimmer(32, 1e-4, 0.02);
  const auto base = baseline_run<2>(sc);
  const auto J = jacobian_matrix<2>(sc, base, -1, {2, 4});
  const Vec<2> drift = tracked_point<2>(base.final_state(), -1);
  const auto res = steer<2>(sc, -1, {2, 4}, drift, J.J, 1e-12, 10, base.dt);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.simulations, 1);
  EXPECT_EQ(res.controls.norm(), 0.0);
}

TEST(Steering, ReachesInteriorTarget) {
  const auto sc = rect_swimmer(48, 1e-4, 0.05);
  const auto base = baseline_run<2>(sc);
  const auto J = jacobian_matrix<2>(sc, base, -1, {2, 4});
  const Vec<2> drift = tracked_point<2>(base.final_state(), -1);
  Eigen::Vector2d v(0.02, -0.015);
  const Vec<2> target = drift + J.J * v;
  const double tol = 0.02 * (J.J * v).norm();
  const auto res = steer<2>(sc, -1, {2, 4}, target, J.J, tol, 10, base.dt);
  EXPECT_LE(res.residual, tol);
  EXPECT_LE(res.iterations, 10);
  for (std::size_t k = 1; k < res.residuals.size(); ++k) EXPECT_LE(res.residuals[k], res.residuals[k - 1]);
}

TEST(Steering, UnreachableTargetReportsResidualRecord) {
  const auto sc = rect_swimmer(32, 1e-4, 0.02);
  const auto base = baseline_run<2>(sc);
  const auto J = jacobian_matrix<2>(sc, base, -1, {2, 4});
  const Vec<2> target = tracked_point<2>(base.final_state(), -1) + Vec<2>(0.2, 0.2);
  try {
    steer<2>(sc, -1, {2, 4}, target, J.J, 1e-9, 5, base.dt);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    ASSERT_FALSE(e.residuals.empty());
    for (std::size_t k = 1; k < e.residuals.size(); ++k) EXPECT_LE(e.residuals[k], e.residuals[k - 1]);
    EXPECT_EQ(e.best_residual, e.residuals.back());
  }
}

TEST(Steering, SingularJacobianIsRejected) {
  const auto sc = rect_swimmer(32, 1e-4, 0.02);
  Eigen::MatrixXd J(2, 2);
  J << 1.0, 2.0, 2.0, 4.0;
  EXPECT_THROW(steer<2>(sc, -1, {2, 4}, Vec<2>(0.5, 0.5), J, 1e-9), SingularJacobian);
  EXPECT_THROW(steer<2>(sc, -1, {2, 4}, Vec<2>(0.5, 0.5), Eigen::MatrixXd::Identity(2, 3), 1e-9), InvalidArgument);
}

TEST(Parallel, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 3, [&](std::size_t k) { ++hits[k]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t k) {
                 if (k == 7) throw InvalidArgument("boom");
               }),
               InvalidArgument);
}

TEST(Controls, EmbeddingFillsSelectedSlots) {
  Eigen::VectorXd v(2);
  v << 0.3, -0.4;
  const auto c = embed_controls(4, {2, 4}, v);
  ASSERT_EQ(c.size(), 5);
  EXPECT_EQ(c.v[0], 0.0);
  EXPECT_EQ(c.v[2], 0.3);
  EXPECT_EQ(c.v[4], -0.4);
}
