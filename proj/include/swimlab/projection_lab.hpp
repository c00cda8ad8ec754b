#pragma once

// Averaged projections of a constant force spread over one small body:
// the disc / ball / narrow-rectangle asymptotics and the remote influence on
// a separated probe set.

#include <cmath>
#include <string>
#include <vector>

#include "swimlab/fluid.hpp"
#include "swimlab/forces.hpp"
#include "swimlab/sensitivity.hpp"

namespace swimlab {

template <int D>
struct AveragedProjection {
  Vec<D> l2 = Vec<D>::Zero();  // component-wise <xi, P(b xi)> / <xi, xi>
  Vec<D> l1 = Vec<D>::Zero();  // (1/meas S) * integral of xi P(b xi)
};

/// Averaged projection of b * chi_S, S = shape centred at `center`.
template <int D>
AveragedProjection<D> averaged_projection(const Grid<D>& g, const BodyShape& shape, const Vec<D>& b,
                                          const Vec<D>& center, int orientation = 0) {
  const auto m = body_mask<D>(g, shape, center, orientation);
  const std::vector<BodyMask<D>> masks{m};
  const FaceField<D> Pf = leray_project<D>(g, rasterize<D>(g, masks, PartDensities<D>{b}));
  AveragedProjection<D> out;
  for (int k = 0; k < D; ++k) {
    double num = 0.0, den = 0.0;
    for (const auto& e : m.faces[k]) {
      num += e.weight * Pf[k][e.index];
      den += e.weight * e.weight;
    }
    out.l2[k] = den > 0 ? num / den : 0.0;
    out.l1[k] = num * g.cell_volume() / m.measure;
  }
  return out;
}

/// One rung of a sweep: a grid and a shape placed at the domain centre.
template <int D>
struct SweepRung {
  DomainSpec<D> domain;
  BodyShape shape;
  int orientation = 0;
};

template <int D>
struct SweepRow {
  SweepRung<D> rung;
  double size = 0.0;  // characteristic size: radius, or q for rectangles / boxes
  AveragedProjection<D> value;
  double ratio_l2 = 0.0;  // component along b / |b|
  double ratio_l1 = 0.0;
};

struct SweepFit {
  double limit = std::nan("");  // three-point geometric extrapolation of the L2 ratio
  double rate = std::nan("");   // exponent of the same extrapolation
  double slope = std::nan("");  // log-log slope of |ratio - expected| against size over the last three rungs
};

template <int D>
struct SweepTable {
  std::vector<SweepRow<D>> rows;
  SweepFit fit;
};

inline double characteristic_size(const BodyShape& s) {
  switch (s.kind) {
    case ShapeKind::Disc:
    case ShapeKind::Ball: return s.size[0];
    default: return std::min({s.size[0], s.size[1], s.dimension() == 3 ? s.size[2] : s.size[1]});
  }
}

/// Evaluates each rung; `expected` is the limit the slope is measured against.
template <int D>
SweepTable<D> asymptotic_sweep(const std::vector<SweepRung<D>>& ladder, const Vec<D>& b, double expected) {
  if (b.norm() == 0.0) throw InvalidArgument("sweep direction must be non-zero");
  SweepTable<D> tab;
  const Vec<D> e = b.normalized();
  for (const auto& r : ladder) {
    const Grid<D> g(r.domain);
    Vec<D> c;
    for (int k = 0; k < D; ++k) c[k] = 0.5 * g.extent(k);
    SweepRow<D> row;
    row.rung = r;
    row.size = characteristic_size(r.shape);
    row.value = averaged_projection<D>(g, r.shape, b, c, r.orientation);
    row.ratio_l2 = row.value.l2.dot(e) / b.norm();
    row.ratio_l1 = row.value.l1.dot(e) / b.norm();
    tab.rows.push_back(row);
  }
  const std::size_t n = tab.rows.size();
  if (n >= 3) {
    const auto& a = tab.rows[n - 3];
    const auto& bb = tab.rows[n - 2];
    const auto& c = tab.rows[n - 1];
    const double d1 = a.ratio_l2 - bb.ratio_l2, d2 = bb.ratio_l2 - c.ratio_l2;
    const double q = a.size / bb.size;
    if (d1 != 0.0 && d2 != 0.0 && d1 / d2 > 0.0 && q > 1.0) {
      tab.fit.rate = std::log(d1 / d2) / std::log(q);
      tab.fit.limit = c.ratio_l2 - d2 / (std::pow(q, tab.fit.rate) - 1.0);
    }
    std::vector<double> xs, ys;
    for (std::size_t k = n - 3; k < n; ++k) {
      const double err = std::abs(tab.rows[k].ratio_l2 - expected);
      if (err > 0.0) {
        xs.push_back(tab.rows[k].size);
        ys.push_back(err);
      }
    }
    if (xs.size() >= 2) tab.fit.slope = loglog_slope(xs, ys);
  }
  return tab;
}

/// (1/meas Q) * integral over Q of P(b chi_S); Q is the same shape centred at `probe`.
/// Throws SeparationViolated if the gap between the two circumscribed balls is below d.
template <int D>
Vec<D> remote_influence(const Grid<D>& g, const BodyShape& shape, const Vec<D>& b, const Vec<D>& source,
                        const Vec<D>& probe, double d) {
  const double r = shape.circumscribed_radius();
  const double gap = (probe - source).norm() - 2.0 * r;
  if (!(d > 0.0) || gap < d)
    throw SeparationViolated("probe is " + std::to_string(gap) + " from the source, need at least " + std::to_string(d));
  const auto ms = body_mask<D>(g, shape, source);
  const auto mq = body_mask<D>(g, shape, probe);
  const std::vector<BodyMask<D>> masks{ms};
  const FaceField<D> Pf = leray_project<D>(g, rasterize<D>(g, masks, PartDensities<D>{b}));
  return integrate_over<D>(g, mq, Pf) / mq.measure;
}

}  // namespace swimlab
