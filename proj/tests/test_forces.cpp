#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace swimlab;
using swimlab::testing::random_field;
using swimlab::testing::random_state;
using swimlab::testing::unit_grid;

namespace {

template <int D>
double max_density(const PartDensities<D>& c) {
  double m = 0.0;
  for (const auto& v : c) m = std::max(m, v.norm());
  return m;
}

template <int D>
double l1_norm(const Grid<D>& g, const FaceField<D>& f) {
  double s = 0.0;
  for (int k = 0; k < D; ++k)
    for (double x : f[k]) s += std::abs(x);
  return s * g.cell_volume();
}

}  // namespace

TEST(Forces, PlanarRotationMatrix) {
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 100; ++s) {
    const Vec<2> x(nd(rng), nd(rng)), y(nd(rng), nd(rng));
    const Vec<2> zero = Vec<2>::Zero();
    // antisymmetric: <Ax, y> = -<x, Ay>
    EXPECT_NEAR(rot_P<2>(zero, x).dot(y), -x.dot(rot_P<2>(zero, y)), 1e-14);
    // A^2 = -I
    EXPECT_NEAR((rot_P<2>(zero, rot_P<2>(zero, x)) + x).norm(), 0.0, 1e-15);
  }
}

TEST(Forces, SpatialOperatorsAreOpposite) {
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 10000; ++s) {
    const Vec<3> a(nd(rng), nd(rng), nd(rng)), b(nd(rng), nd(rng), nd(rng)), x(nd(rng), nd(rng), nd(rng));
    const Vec<3> nrm = a.cross(b);
    EXPECT_EQ((rot_P<3>(nrm, x) + rot_Q<3>(nrm, x)).norm(), 0.0);
  }
}

TEST(Forces, PlanarRotationalExample) {
  SwimmerState<2> s({Vec<2>(1.0, 0.0), Vec<2>(0.0, 0.0), Vec<2>(0.0, 1.0)});
  const auto c = rotational_densities<2>(s, 1, 1e-8);
  EXPECT_EQ(c[0], Vec<2>(0.0, -1.0));
  EXPECT_EQ(c[2], Vec<2>(-1.0, 0.0));
  EXPECT_EQ(c[1], Vec<2>(1.0, 1.0));
  EXPECT_EQ(c[0] + c[1] + c[2], Vec<2>::Zero());
}

TEST(Forces, SpatialRotationalExamples) {
  SwimmerState<3> collinear({Vec<3>(1, 0, 0), Vec<3>(0, 0, 0), Vec<3>(-2, 0, 0)});
  for (const auto& v : rotational_densities<3>(collinear, 1, 1e-8)) EXPECT_EQ(v, Vec<3>::Zero());
  SwimmerState<3> bent({Vec<3>(1, 0, 0), Vec<3>(0, 0, 0), Vec<3>(0, 1, 0)});
  const auto c = rotational_densities<3>(bent, 1, 1e-8);
  EXPECT_EQ(c[0], Vec<3>(0, 1, 0));
  EXPECT_EQ(c[0] + c[1] + c[2], Vec<3>::Zero());
}

TEST(Forces, SpatialOperatorVanishesNearAlignment) {
  double prev = std::numeric_limits<double>::infinity();
  for (double e : {1e-1, 1e-2, 1e-3, 1e-4}) {
    SwimmerState<3> s({Vec<3>(1, 0, 0), Vec<3>(0, 0, 0), Vec<3>(-2, e, 0)});
    const double m = max_density<3>(rotational_densities<3>(s, 1, 1e-8));
    EXPECT_LT(m, prev);
    prev = m;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Forces, PlanarDegenerateRatio) {
  SwimmerState<2> s({Vec<2>(1.0, 0.0), Vec<2>(0.0, 0.0), Vec<2>(0.0, 0.0)});
  EXPECT_THROW(rotational_densities<2>(s, 1, 1e-8), DegenerateGeometry);
}

TEST(Forces, ElasticExamples) {
  SwimmerState<2> s({Vec<2>(0.0, 0.0), Vec<2>(2.0, 0.0), Vec<2>(2.0, 3.0)});
  const auto c = elastic_densities<2>(s, 0);
  EXPECT_EQ(c[0], Vec<2>(2.0, 0.0));
  EXPECT_EQ(c[1], Vec<2>(-2.0, 0.0));
  EXPECT_EQ(c[2], Vec<2>::Zero());
  SwimmerState<3> s3({Vec<3>(0, 0, 0), Vec<3>(0, 0, 5), Vec<3>(1, 0, 5)});
  const auto c3 = elastic_densities<3>(s3, 0);
  EXPECT_EQ(c3[0], Vec<3>(0, 0, 5));
  EXPECT_EQ(c3[1], Vec<3>(0, 0, -5));
  // coincident limit
  for (double e : {1e-2, 1e-5, 1e-9}) {
    SwimmerState<2> near({Vec<2>(0.0, 0.0), Vec<2>(e, 0.0), Vec<2>(1.0, 1.0)});
    EXPECT_NEAR(elastic_densities<2>(near, 0)[0].norm(), e, 1e-20);
  }
}

TEST(Forces, ZeroControlsGiveZeroField) {
  const auto g = unit_grid<2>(32);
  const auto shape = BodyShape::rectangle(0.04, 0.01);
  SwimmerState<2> s({Vec<2>(0.3, 0.5), Vec<2>(0.45, 0.5), Vec<2>(0.6, 0.55), Vec<2>(0.72, 0.5)});
  const auto f = assemble_force<2>(s, ControlVector::zeros(4), g, shape);
  EXPECT_EQ(f.max_abs(), 0.0);
}

TEST(Forces, SingleElasticControlEqualsElasticForce) {
  const auto g = unit_grid<2>(32);
  const auto shape = BodyShape::rectangle(0.04, 0.01);
  SwimmerState<2> s({Vec<2>(0.3, 0.5), Vec<2>(0.45, 0.5), Vec<2>(0.6, 0.55), Vec<2>(0.72, 0.5)});
  std::vector<double> v(5, 0.0);
  v[2] = 1.0;  // first elastic control (n - 1 in 1-based numbering)
  const auto a = assemble_force<2>(s, ControlVector(v), g, shape);
  const auto b = elastic_force<2>(s, 0, g, shape);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(a[k], b[k]);
}

TEST(Forces, SupportedOnBodyMasks) {
  const auto g = unit_grid<2>(32);
  const auto shape = BodyShape::disc(0.04);
  SwimmerState<2> s({Vec<2>(0.3, 0.5), Vec<2>(0.45, 0.5), Vec<2>(0.6, 0.55)});
  const auto f = assemble_force<2>(s, ControlVector({1.0, -0.5, 0.25}), g, shape);
  FaceField<2> support(g);
  for (const auto& m : part_masks<2>(g, shape, s))
    for (int k = 0; k < 2; ++k)
      for (const auto& e : m.faces[k]) support[k][e.index] = 1.0;
  for (int k = 0; k < 2; ++k)
    for (std::size_t n = 0; n < f[k].size(); ++n)
      if (support[k][n] == 0.0) EXPECT_EQ(f[k][n], 0.0);
}

template <int D>
void check_third_law(const BodyShape& shape, int cells, unsigned seed) {
  const auto g = unit_grid<D>(cells);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  for (int sample = 0; sample < 100; ++sample) {
    const int n = 3 + sample % 3;
    const auto s = random_state<D>(g, shape, n, rng);
    const auto masks = part_masks<D>(g, shape, s);
    double max_link = 0.0;
    for (int i = 0; i + 1 < n; ++i) max_link = std::max(max_link, (s.z[i + 1] - s.z[i]).norm());
    for (int j = 0; j < s.control_count(); ++j) {
      const auto c = unit_densities<D>(s, j, degenerate_length_of(g));
      const auto f = rasterize<D>(g, masks, c);
      // summation oracle over every face of the grid
      const double scale = std::max(max_density<D>(c), max_link) * shape.measure();
      EXPECT_LE(integrate_faces<D>(g, f).norm(), 1e-12 * scale) << "sample " << sample << " control " << j;
    }
    std::vector<double> v(static_cast<std::size_t>(s.control_count()));
    double l1 = 0.0;
    for (auto& x : v) {
      x = nd(rng);
      l1 += std::abs(x);
    }
    const auto f = assemble_force<D>(s, ControlVector(v), g, shape);
    EXPECT_LE(integrate_faces<D>(g, f).norm(), 1e-12 * l1 * shape.measure() * std::max(1.0, max_link * max_link));
  }
}

TEST(Forces, ThirdLawPlanar) {
  check_third_law<2>(BodyShape::rectangle(0.04, 0.015), 48, 7);
  check_third_law<2>(BodyShape::disc(0.03), 48, 8);
}

TEST(Forces, ThirdLawSpatial) {
  check_third_law<3>(BodyShape::box(0.06, 0.04, 0.03), 16, 9);
  check_third_law<3>(BodyShape::ball(0.05), 16, 10);
}

TEST(Forces, PartForcesBalance) {
  const auto g = unit_grid<2>(40);
  const auto shape = BodyShape::disc(0.035);
  SwimmerState<2> s({Vec<2>(0.31, 0.52), Vec<2>(0.43, 0.47), Vec<2>(0.55, 0.55), Vec<2>(0.68, 0.5)});
  const auto masks = part_masks<2>(g, shape, s);
  const auto c = control_densities<2>(s, ControlVector({0.3, -0.7, 1.0, 0.2, -0.4}), 1e-8);
  const auto F = part_forces<2>(g, masks, c);
  Vec<2> total = Vec<2>::Zero();
  double scale = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    total += F[i];
    scale = std::max(scale, c[i].norm() * shape.measure());
  }
  // disc cut-cell areas come from quadrature, good to about 1e-11 relative
  EXPECT_LE(total.norm(), 1e-10 * scale);
  for (std::size_t i = 0; i < F.size(); ++i) EXPECT_LE((F[i] - c[i] * shape.measure()).norm(), 1e-10 * scale);
}

TEST(Forces, ScalingInControls) {
  const auto g = unit_grid<2>(32);
  const auto shape = BodyShape::rectangle(0.04, 0.01);
  SwimmerState<2> s({Vec<2>(0.3, 0.5), Vec<2>(0.45, 0.5), Vec<2>(0.6, 0.55), Vec<2>(0.72, 0.5)}, {0, 1, 0, 1});
  const std::vector<double> v{0.3, -0.2, 0.7, 0.1, -0.5};
  const auto f = assemble_force<2>(s, ControlVector(v), g, shape);
  for (double c : {2.0, -0.5, 8.0}) {
    std::vector<double> w(v);
    for (auto& x : w) x *= c;
    const auto fc = assemble_force<2>(s, ControlVector(w), g, shape);
    for (int k = 0; k < 2; ++k)
      for (std::size_t n = 0; n < f[k].size(); ++n) EXPECT_EQ(fc[k][n], c * f[k][n]);
  }
  std::vector<double> w(v);
  for (auto& x : w) x *= 3.0;
  const auto f3 = assemble_force<2>(s, ControlVector(w), g, shape);
  for (int k = 0; k < 2; ++k)
    for (std::size_t n = 0; n < f[k].size(); ++n) EXPECT_NEAR(f3[k][n], 3.0 * f[k][n], 4 * std::numeric_limits<double>::epsilon() * std::abs(f3[k][n]));
}

TEST(Forces, LipschitzInState) {
  const auto g = unit_grid<2>(48);
  const auto shape = BodyShape::rectangle(0.05, 0.02);
  std::mt19937 rng(12);
  std::normal_distribution<double> nd;
  const ControlVector v({0.4, -0.3, 0.8, 0.1, 0.2});
  for (int sample = 0; sample < 20; ++sample) {
    const auto s = random_state<2>(g, shape, 4, rng);
    Vec<2> dir(nd(rng), nd(rng));
    dir.normalize();
    std::vector<double> slopes;
    for (double d : {1e-3, 1e-4, 1e-5}) {
      SwimmerState<2> t = s;
      t.z[1] += d * dir;
      if (!configuration_margins<2>(t, shape, g).valid()) break;
      slopes.push_back(l1_norm<2>(g, assemble_force<2>(t, v, g, shape) - assemble_force<2>(s, v, g, shape)) / d);
    }
    // a non-Lipschitz map would show slopes growing like d^(-1/2)
    ASSERT_FALSE(slopes.empty());
    for (double sl : slopes) {
      EXPECT_TRUE(std::isfinite(sl));
      EXPECT_LT(sl, 5.0 * slopes.front() + 1e-9);
    }
  }
}

TEST(Forces, NetTorqueIsReported) {
  SwimmerState<2> s({Vec<2>(1.0, 0.0), Vec<2>(0.0, 0.0), Vec<2>(0.0, 1.0)});
  const auto t = net_torque<2>(s, rotational_densities<2>(s, 1, 1e-8), 1.0);
  ASSERT_EQ(t.size(), 1);
  EXPECT_TRUE(std::isfinite(t(0)));
}
