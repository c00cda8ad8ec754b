#pragma once

// Internal swimmer forces. A unit force is stored as one density vector per
// body part and rasterized as sum_i c_i * xi_i on the velocity faces, so the
// net force cancels exactly whenever the c_i do.

#include <cmath>
#include <vector>

#include "swimlab/geometry.hpp"

namespace swimlab {

template <int D>
using PartDensities = std::vector<Vec<D>>;

/// Masks of all parts at the given state.
template <int D>
std::vector<BodyMask<D>> part_masks(const Grid<D>& g, const BodyShape& shape, const SwimmerState<D>& s) {
  std::vector<BodyMask<D>> out;
  out.reserve(s.z.size());
  for (int i = 0; i < s.size(); ++i) out.push_back(body_mask<D>(g, shape, s.z[i], s.orientation[i]));
  return out;
}

/// 2-D: A x with A = [[0,1],[-1,0]]. 3-D: P x = nrm x x.
template <int D>
Vec<D> rot_P(const Vec<D>& nrm3, const Vec<D>& x) {
  if constexpr (D == 2) {
    return Vec<D>(x[1], -x[0]);
  } else {
    return nrm3.cross(x);
  }
}

/// 2-D: A x. 3-D: Q x = x x nrm.
template <int D>
Vec<D> rot_Q(const Vec<D>& nrm3, const Vec<D>& x) {
  if constexpr (D == 2) {
    return Vec<D>(x[1], -x[0]);
  } else {
    return x.cross(nrm3);
  }
}

/// Per-part densities of the rotational unit force about part `center`
/// (0-based, 1..n-2). `degenerate_length` guards the 2-D ratio denominator.
template <int D>
PartDensities<D> rotational_densities(const SwimmerState<D>& s, int center, double degenerate_length) {
  const int n = s.size();
  if (center < 1 || center > n - 2) throw InvalidArgument("rotational centre must be an interior part");
  const Vec<D> d1 = s.z[center - 1] - s.z[center];
  const Vec<D> d2 = s.z[center + 1] - s.z[center];
  Vec<D> nrm = Vec<D>::Zero();
  if constexpr (D == 3) nrm = d1.cross(d2);
  const double l2 = d2.squaredNorm();
  if (l2 == 0.0 || (D == 2 && std::sqrt(l2) < degenerate_length)) {
    if constexpr (D == 2) throw DegenerateGeometry("rotational ratio undefined: parts coincide");
    // 3-D: the operators vanish with the cross product; the ratio is irrelevant.
    return PartDensities<D>(static_cast<std::size_t>(n), Vec<D>::Zero());
  }
  const double ratio = d1.squaredNorm() / l2;
  PartDensities<D> c(static_cast<std::size_t>(n), Vec<D>::Zero());
  c[center - 1] = rot_P<D>(nrm, d1);
  c[center + 1] = -ratio * rot_Q<D>(nrm, d2);
  c[center] = rot_P<D>(nrm, Vec<D>(-d1)) - ratio * rot_Q<D>(nrm, Vec<D>(-d2));
  return c;
}

/// Per-part densities of the elastic unit force on the link (link, link+1), 0-based.
template <int D>
PartDensities<D> elastic_densities(const SwimmerState<D>& s, int link) {
  const int n = s.size();
  if (link < 0 || link > n - 2) throw InvalidArgument("elastic link index out of range");
  PartDensities<D> c(static_cast<std::size_t>(n), Vec<D>::Zero());
  c[link] = s.z[link + 1] - s.z[link];
  c[link + 1] = s.z[link] - s.z[link + 1];
  return c;
}

/// Densities of the unit force attached to control j (0-based, 0..2n-4).
template <int D>
PartDensities<D> unit_densities(const SwimmerState<D>& s, int j, double degenerate_length) {
  const int n = s.size();
  if (j < 0 || j >= 2 * n - 3) throw InvalidArgument("control index out of range");
  if (j < n - 2) return rotational_densities<D>(s, j + 1, degenerate_length);
  return elastic_densities<D>(s, j - (n - 2));
}

/// sum_j v_j * (densities of control j)
template <int D>
PartDensities<D> control_densities(const SwimmerState<D>& s, const ControlVector& v, double degenerate_length) {
  if (v.size() != s.control_count()) throw InvalidArgument("control vector has the wrong length");
  PartDensities<D> c(s.z.size(), Vec<D>::Zero());
  for (int j = 0; j < v.size(); ++j) {
    if (v[j] == 0.0) continue;
    const auto cj = unit_densities<D>(s, j, degenerate_length);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[j] * cj[i];
  }
  return c;
}

/// Face field sum_i c_i xi_i.
template <int D>
FaceField<D> rasterize(const Grid<D>& g, const std::vector<BodyMask<D>>& masks, const PartDensities<D>& c) {
  FaceField<D> f(g);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (int k = 0; k < D; ++k) {
      const double ck = c[i][k];
      if (ck == 0.0) continue;
      for (const auto& e : masks[i].faces[k]) f[k][e.index] += ck * e.weight;
    }
  }
  return f;
}

/// Threshold below which a 2-D rotational ratio is considered degenerate.
template <int D>
double degenerate_length_of(const Grid<D>& g) {
  double L = 0.0;
  for (int k = 0; k < D; ++k) L = std::max(L, g.extent(k));
  return 1e-8 * L;
}

template <int D>
FaceField<D> rotational_force(const SwimmerState<D>& s, int center, const Grid<D>& g, const BodyShape& shape) {
  validate_configuration<D>(s, shape, g);
  return rasterize<D>(g, part_masks<D>(g, shape, s), rotational_densities<D>(s, center, degenerate_length_of(g)));
}

template <int D>
FaceField<D> elastic_force(const SwimmerState<D>& s, int link, const Grid<D>& g, const BodyShape& shape) {
  validate_configuration<D>(s, shape, g);
  return rasterize<D>(g, part_masks<D>(g, shape, s), elastic_densities<D>(s, link));
}

template <int D>
FaceField<D> assemble_force(const SwimmerState<D>& s, const ControlVector& v, const Grid<D>& g,
                            const BodyShape& shape) {
  validate_configuration<D>(s, shape, g);
  return rasterize<D>(g, part_masks<D>(g, shape, s), control_densities<D>(s, v, degenerate_length_of(g)));
}

/// Integral of a staggered field over the domain, per component.
template <int D>
Vec<D> integrate_faces(const Grid<D>& g, const FaceField<D>& f) {
  Vec<D> s = Vec<D>::Zero();
  for (int k = 0; k < D; ++k)
    for (double x : f[k]) s[k] += x;
  return s * g.cell_volume();
}

/// Integral of a field over one part (mask weighted).
template <int D>
Vec<D> integrate_over(const Grid<D>& g, const BodyMask<D>& m, const FaceField<D>& f) {
  Vec<D> s = Vec<D>::Zero();
  for (int k = 0; k < D; ++k)
    for (const auto& e : m.faces[k]) s[k] += e.weight * f[k][e.index];
  return s * g.cell_volume();
}

/// Force carried by each part: its density times its rasterized measure, per component.
template <int D>
std::vector<Vec<D>> part_forces(const Grid<D>& g, const std::vector<BodyMask<D>>& masks, const PartDensities<D>& c) {
  std::vector<Vec<D>> out;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    Vec<D> F;
    for (int k = 0; k < D; ++k) {
      double w = 0.0;
      for (const auto& e : masks[i].faces[k]) w += e.weight;
      F[k] = c[i][k] * w * g.cell_volume();
    }
    out.push_back(F);
  }
  return out;
}

/// Net torque of the per-part forces about the origin (scalar in 2-D, vector in 3-D);
/// diagnostic only.
template <int D>
Eigen::VectorXd net_torque(const SwimmerState<D>& s, const PartDensities<D>& c, double measure) {
  if constexpr (D == 2) {
    double t = 0.0;
    for (int i = 0; i < s.size(); ++i) t += s.z[i][0] * c[i][1] - s.z[i][1] * c[i][0];
    return Eigen::VectorXd::Constant(1, t * measure);
  } else {
    Vec<3> t = Vec<3>::Zero();
    for (int i = 0; i < s.size(); ++i) t += s.z[i].cross(c[i]);
    return Eigen::VectorXd(t * measure);
  }
}

}  // namespace swimlab
