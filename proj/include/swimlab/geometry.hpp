#pragma once

// Swimmer geometry: reference body shapes, exact cell/face coverage masks and
// the validity checks on swimmer configurations.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "swimlab/errors.hpp"
#include "swimlab/grid.hpp"

namespace swimlab {

enum class ShapeKind { Rectangle, Disc, Box, Ball };

inline std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Box: return "box";
    case ShapeKind::Ball: return "ball";
  }
  return "?";
}

/// Reference set S(0), centred at the origin. Sizes are half-extents (p, q[, s])
/// for rectangles and boxes, the radius for discs and balls.
struct BodyShape {
  ShapeKind kind = ShapeKind::Disc;
  std::array<double, 3> size{};

  static BodyShape rectangle(double p, double q) { return checked({ShapeKind::Rectangle, {p, q, 0.0}}); }
  static BodyShape disc(double r) { return checked({ShapeKind::Disc, {r, r, r}}); }
  static BodyShape box(double p, double q, double s) { return checked({ShapeKind::Box, {p, q, s}}); }
  static BodyShape ball(double r) { return checked({ShapeKind::Ball, {r, r, r}}); }

  int dimension() const { return (kind == ShapeKind::Rectangle || kind == ShapeKind::Disc) ? 2 : 3; }
  bool is_round() const { return kind == ShapeKind::Disc || kind == ShapeKind::Ball; }

  /// Radius r of the smallest origin-centred ball containing the shape.
  double circumscribed_radius() const {
    switch (kind) {
      case ShapeKind::Rectangle: return std::hypot(size[0], size[1]);
      case ShapeKind::Box: return std::sqrt(size[0] * size[0] + size[1] * size[1] + size[2] * size[2]);
      default: return size[0];
    }
  }

  double measure() const {
    switch (kind) {
      case ShapeKind::Rectangle: return 4.0 * size[0] * size[1];
      case ShapeKind::Disc: return std::numbers::pi * size[0] * size[0];
      case ShapeKind::Box: return 8.0 * size[0] * size[1] * size[2];
      case ShapeKind::Ball: return 4.0 / 3.0 * std::numbers::pi * size[0] * size[0] * size[0];
    }
    return 0.0;
  }

  /// Number of distinct axis permutations a part may use.
  int orientation_count() const {
    if (is_round()) return 1;
    return dimension() == 2 ? 2 : 6;
  }

  /// Half-extents along each axis after applying the axis permutation `orientation`.
  std::array<double, 3> half_extents(int orientation) const {
    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}}};
    if (is_round()) return size;
    if (orientation < 0 || orientation >= orientation_count())
      throw InvalidArgument("orientation index out of range for " + to_string(kind));
    const auto& p = perms[static_cast<std::size_t>(orientation)];
    return {size[p[0]], size[p[1]], size[p[2]]};
  }

 private:
  static BodyShape checked(BodyShape s) {
    const int n = s.dimension();
    for (int k = 0; k < n; ++k)
      if (!(s.size[k] > 0.0) || !std::isfinite(s.size[k]))
        throw InvalidArgument(to_string(s.kind) + " size parameters must be positive");
    return s;
  }
};

/// Body-part centres z_1..z_n with an optional per-part axis permutation.
template <int D>
struct SwimmerState {
  std::vector<Vec<D>> z;
  std::vector<int> orientation;

  SwimmerState() = default;
  explicit SwimmerState(std::vector<Vec<D>> centers, std::vector<int> orient = {})
      : z(std::move(centers)), orientation(std::move(orient)) {
    if (orientation.empty()) orientation.assign(z.size(), 0);
    if (z.size() < 3) throw InvalidArgument("a swimmer needs at least 3 parts");
    if (orientation.size() != z.size()) throw InvalidArgument("one orientation per part is required");
  }

  int size() const { return static_cast<int>(z.size()); }
  int control_count() const { return 2 * size() - 3; }

  Vec<D> center_of_mass() const {
    Vec<D> c = Vec<D>::Zero();
    for (const auto& p : z) c += p;
    return c / static_cast<double>(z.size());
  }
};

/// v in R^{2n-3}: entries [0, n-2) weight the rotational pairs about parts
/// 2..n-1, entries [n-2, 2n-3) weight the elastic links (z_k, z_{k+1}).
struct ControlVector {
  std::vector<double> v;

  ControlVector() = default;
  explicit ControlVector(std::vector<double> values) : v(std::move(values)) {
    for (double x : v)
      if (!std::isfinite(x)) throw InvalidArgument("control entries must be finite");
  }
  static ControlVector zeros(int parts) { return ControlVector(std::vector<double>(2 * parts - 3, 0.0)); }

  int size() const { return static_cast<int>(v.size()); }
  double norm() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  bool is_rotational(int j, int parts) const { return j < parts - 2; }
  double operator[](int j) const { return v[static_cast<std::size_t>(j)]; }
};

// ---------------------------------------------------------------------------
// Exact coverage of axis-aligned control volumes.

namespace detail {

inline double overlap_1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

/// Antiderivative of sqrt(r^2 - x^2).
inline double half_chord_integral(double r, double x) {
  const double t = std::clamp(x / r, -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, r * r - x * x));
  return 0.5 * (x * s + r * r * std::asin(t));
}

}  // namespace detail

/// Area of the origin-centred disc of radius r intersected with [x0,x1]x[y0,y1].
inline double disc_rect_area(double r, double x0, double x1, double y0, double y1) {
  if (r <= 0.0) return 0.0;
  x0 = std::max(x0, -r);
  x1 = std::min(x1, r);
  if (x1 <= x0 || y1 <= y0 || y1 <= -r || y0 >= r) return 0.0;

  std::array<double, 6> br{};
  int nb = 0;
  br[nb++] = x0;
  br[nb++] = x1;
  for (double yb : {y0, y1}) {
    if (std::abs(yb) < r) {
      const double xb = std::sqrt(r * r - yb * yb);
      if (xb > x0 && xb < x1) br[nb++] = xb;
      if (-xb > x0 && -xb < x1) br[nb++] = -xb;
    }
  }
  std::sort(br.begin(), br.begin() + nb);

  double area = 0.0;
  for (int p = 0; p + 1 < nb; ++p) {
    const double a = br[p], b = br[p + 1];
    if (b <= a) continue;
    const double m = 0.5 * (a + b);
    const double s = std::sqrt(std::max(0.0, r * r - m * m));
    if (std::min(y1, s) <= std::max(y0, -s)) continue;
    const double arc = detail::half_chord_integral(r, b) - detail::half_chord_integral(r, a);
    const double upper = (y1 < s) ? y1 * (b - a) : arc;
    const double lower = (y0 > -s) ? y0 * (b - a) : -arc;
    area += upper - lower;
  }
  return area;
}

/// Volume of the origin-centred ball of radius r intersected with an axis-aligned box.
inline double ball_box_volume(double r, const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  // fully outside
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double c = std::clamp(0.0, lo[k], hi[k]);
    d2 += c * c;
  }
  if (d2 >= r * r) return 0.0;
  // fully inside
  double far2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double f = std::max(std::abs(lo[k]), std::abs(hi[k]));
    far2 += f * f;
  }
  if (far2 <= r * r) return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);

  const double x0 = std::max(lo[0], -r), x1 = std::min(hi[0], r);
  if (x1 <= x0) return 0.0;
  std::vector<double> br{x0, x1};
  auto add = [&](double rho) {
    if (rho < r) {
      const double xb = std::sqrt(r * r - rho * rho);
      for (double x : {xb, -xb})
        if (x > x0 && x < x1) br.push_back(x);
    }
  };
  for (double y : {lo[1], hi[1]}) add(std::abs(y));
  for (double z : {lo[2], hi[2]}) add(std::abs(z));
  for (double y : {lo[1], hi[1]})
    for (double z : {lo[2], hi[2]}) add(std::hypot(y, z));
  std::sort(br.begin(), br.end());

  auto slice = [&](double x) {
    const double s = std::sqrt(std::max(0.0, r * r - x * x));
    return disc_rect_area(s, lo[1], hi[1], lo[2], hi[2]);
  };
  // slice areas have (x - x_b)^(3/2) behaviour at the breakpoints, which tanh-sinh absorbs
  thread_local boost::math::quadrature::tanh_sinh<double> quad(10);
  double vol = 0.0;
  for (std::size_t p = 0; p + 1 < br.size(); ++p) {
    if (br[p + 1] <= br[p]) continue;
    vol += quad.integrate(slice, br[p], br[p + 1], 1e-13);
  }
  return vol;
}

/// Measure of (shape centred at c) intersected with the box [lo, hi].
template <int D>
double shape_box_intersection(const BodyShape& shape, int orientation, const Vec<D>& c,
                              const std::array<double, D>& lo, const std::array<double, D>& hi) {
  switch (shape.kind) {
    case ShapeKind::Rectangle:
    case ShapeKind::Box: {
      const auto e = shape.half_extents(orientation);
      double m = 1.0;
      for (int k = 0; k < D; ++k) m *= detail::overlap_1d(lo[k], hi[k], c[k] - e[k], c[k] + e[k]);
      return m;
    }
    case ShapeKind::Disc:
      if constexpr (D == 2) {
        return disc_rect_area(shape.size[0], lo[0] - c[0], hi[0] - c[0], lo[1] - c[1], hi[1] - c[1]);
      }
      break;
    case ShapeKind::Ball:
      if constexpr (D == 3) {
        return ball_box_volume(shape.size[0], {lo[0] - c[0], lo[1] - c[1], lo[2] - c[2]},
                               {hi[0] - c[0], hi[1] - c[1], hi[2] - c[2]});
      }
      break;
  }
  throw InvalidArgument(to_string(shape.kind) + " is not a " + std::to_string(D) + "-D shape");
}

/// Throws ShapeOutsideDomain unless the closed shifted body lies strictly inside the box.
template <int D>
void require_inside(const Grid<D>& g, const BodyShape& shape, int orientation, const Vec<D>& c) {
  const auto e = shape.half_extents(orientation);
  for (int k = 0; k < D; ++k) {
    if (!(c[k] - e[k] > 0.0) || !(c[k] + e[k] < g.extent(k)))
      throw ShapeOutsideDomain("body centred at axis-" + std::to_string(k) + " coordinate " +
                               std::to_string(c[k]) + " touches or crosses the wall");
  }
}

struct MaskEntry {
  std::size_t index;
  double weight;
};

/// Sparse coverage of one shifted body: weights in [0,1] on the cell control
/// volumes and on the face control volumes of each velocity component.
template <int D>
struct BodyMask {
  std::array<std::vector<MaskEntry>, D> faces;
  std::vector<MaskEntry> cells;
  double measure = 0.0;  // exact meas(S(0))
};

namespace detail {

/// Coverage weights of the control volumes [ (i + off) h, (i + off + 1) h ] for
/// i in a box of dims `dims`; returns only non-zero weights.
template <int D>
std::vector<MaskEntry> coverage_entries(const Grid<D>& g, const BodyShape& shape, int orientation,
                                        const Vec<D>& c, const Index<D>& dims,
                                        const std::array<std::size_t, D>& strides,
                                        const std::array<double, D>& offset) {
  const auto e = shape.half_extents(orientation);
  Index<D> lo{}, hi{};
  for (int k = 0; k < D; ++k) {
    lo[k] = std::max(0, static_cast<int>(std::floor((c[k] - e[k]) / g.h(k) - offset[k])) - 1);
    hi[k] = std::min(dims[k] - 1, static_cast<int>(std::floor((c[k] + e[k]) / g.h(k) - offset[k])) + 1);
  }
  Index<D> sub{};
  for (int k = 0; k < D; ++k) sub[k] = std::max(0, hi[k] - lo[k] + 1);

  const double cv = g.cell_volume();
  std::vector<MaskEntry> out;
  for_each_index<D>(sub, [&](const Index<D>& s, std::size_t) {
    std::array<double, D> a{}, b{};
    std::size_t lin = 0;
    for (int k = 0; k < D; ++k) {
      const int i = lo[k] + s[k];
      a[k] = (i + offset[k]) * g.h(k);
      b[k] = a[k] + g.h(k);
      lin += static_cast<std::size_t>(i) * strides[k];
    }
    const double w = shape_box_intersection<D>(shape, orientation, c, a, b) / cv;
    if (w > 0.0) out.push_back({lin, std::min(w, 1.0)});
  });

  // Balls are integrated numerically; rescale the partial weights so the total is exact.
  if (shape.kind == ShapeKind::Ball) {
    double full = 0.0, partial = 0.0;
    for (const auto& m : out) (m.weight >= 1.0 ? full : partial) += m.weight * cv;
    if (partial > 0.0) {
      const double scale = (shape.measure() - full) / partial;
      for (auto& m : out)
        if (m.weight < 1.0) m.weight *= scale;
    }
  }
  return out;
}

}  // namespace detail

template <int D>
BodyMask<D> body_mask(const Grid<D>& g, const BodyShape& shape, const Vec<D>& center, int orientation = 0,
                      bool with_cells = false) {
  require_inside<D>(g, shape, orientation, center);
  BodyMask<D> m;
  m.measure = shape.measure();
  for (int k = 0; k < D; ++k) {
    std::array<double, D> off{};
    for (int a = 0; a < D; ++a) off[a] = (a == k) ? -0.5 : 0.0;
    m.faces[k] = detail::coverage_entries<D>(g, shape, orientation, center, g.face_dims(k), g.face_strides(k), off);
  }
  if (with_cells) {
    m.cells = detail::coverage_entries<D>(g, shape, orientation, center, g.cell_dims(), g.cell_strides(),
                                          std::array<double, D>{});
  }
  return m;
}

/// Dense cell-centred indicator of the shifted body: cell value = covered fraction.
template <int D>
CellField characteristic_mask(const BodyShape& shape, const Vec<D>& center, const Grid<D>& g, int orientation = 0) {
  const auto m = body_mask<D>(g, shape, center, orientation, true);
  CellField out(g.cell_count(), 0.0);
  for (const auto& e : m.cells) out[e.index] = e.weight;
  return out;
}

/// Integral of a cell field over the domain.
template <int D>
double integrate(const Grid<D>& g, const CellField& f) {
  double s = 0.0;
  for (double x : f) s += x;
  return s * g.cell_volume();
}

// ---------------------------------------------------------------------------
// Configuration validity.

/// Smallest pair separation margin |z_i - z_j| - 2r and smallest wall clearance.
struct MarginReport {
  double pair_margin = std::numeric_limits<double>::infinity();
  int pair_first = -1;
  int pair_second = -1;
  double wall_margin = std::numeric_limits<double>::infinity();
  int wall_part = -1;
  int wall_axis = -1;
  bool wall_upper = false;

  bool valid() const { return pair_margin > 0.0 && wall_margin > 0.0; }
  double min_margin() const { return std::min(pair_margin, wall_margin); }
};

template <int D>
MarginReport configuration_margins(const SwimmerState<D>& state, const BodyShape& shape, const Grid<D>& g) {
  MarginReport rep;
  const double r = shape.circumscribed_radius();
  const int n = state.size();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double m = (state.z[a] - state.z[b]).norm() - 2.0 * r;
      if (m < rep.pair_margin) {
        rep.pair_margin = m;
        rep.pair_first = a;
        rep.pair_second = b;
      }
    }
    const auto e = shape.half_extents(state.orientation[a]);
    for (int k = 0; k < D; ++k) {
      const double lo = state.z[a][k] - e[k];
      const double hi = g.extent(k) - (state.z[a][k] + e[k]);
      if (lo < rep.wall_margin) {
        rep.wall_margin = lo;
        rep.wall_part = a;
        rep.wall_axis = k;
        rep.wall_upper = false;
      }
      if (hi < rep.wall_margin) {
        rep.wall_margin = hi;
        rep.wall_part = a;
        rep.wall_axis = k;
        rep.wall_upper = true;
      }
    }
  }
  return rep;
}

/// Returns the margins; throws OverlapViolation / BoundaryViolation when either is not positive.
template <int D>
MarginReport validate_configuration(const SwimmerState<D>& state, const BodyShape& shape, const Grid<D>& g) {
  if (shape.dimension() != D) throw InvalidArgument("shape dimension does not match the domain");
  const auto rep = configuration_margins<D>(state, shape, g);
  if (!(rep.pair_margin > 0.0)) throw OverlapViolation(rep.pair_first, rep.pair_second, rep.pair_margin);
  if (!(rep.wall_margin > 0.0)) throw BoundaryViolation(rep.wall_part, rep.wall_axis, rep.wall_upper, rep.wall_margin);
  return rep;
}

// ---------------------------------------------------------------------------
// Thickness constant of the symmetric difference S(0) vs S(0) + h.

namespace detail {

/// Parameter interval {t : y + t*eta in S(0)} for a convex origin-centred shape.
template <int D>
bool line_interval(const BodyShape& shape, const Vec<D>& y, const Vec<D>& eta, double& t0, double& t1) {
  if (shape.is_round()) {
    const double r = shape.size[0];
    const double b = y.dot(eta);
    const double c = y.squaredNorm() - r * r;
    const double disc = b * b - c;
    if (disc <= 0.0) return false;
    const double s = std::sqrt(disc);
    t0 = -b - s;
    t1 = -b + s;
    return true;
  }
  const auto e = shape.half_extents(0);
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < D; ++k) {
    if (std::abs(eta[k]) < 1e-300) {
      if (std::abs(y[k]) >= e[k]) return false;
      continue;
    }
    double a = (-e[k] - y[k]) / eta[k];
    double b = (e[k] - y[k]) / eta[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t1 > t0;
}

}  // namespace detail

struct ThicknessReport {
  std::vector<double> per_shift;  // max over sampled lines of |L cap S_delta| / |h|
  double estimate = 0.0;          // max over shifts
};

/// Estimates the thickness constant K_S with eta parallel to each shift h. For every shift,
/// `lines_per_shift` lines per transverse axis are sampled across the shape.
template <int D>
ThicknessReport h2_thickness_constant(const BodyShape& shape, const std::vector<Vec<D>>& shifts, int lines_per_shift) {
  if (shape.dimension() != D) throw InvalidArgument("shape dimension does not match");
  if (lines_per_shift < 1) throw InvalidArgument("need at least one line per shift");
  const double h0 = shape.circumscribed_radius();
  ThicknessReport rep;
  for (const auto& h : shifts) {
    const double len = h.norm();
    if (len < 1e-12 * h0) throw DegenerateShift("shift length below the degeneracy threshold");
    if (len > h0 * (1.0 + 1e-12)) throw InvalidArgument("shift exceeds h_0 (the circumscribed radius)");
    const Vec<D> eta = h / len;
    // orthonormal basis of the hyperplane orthogonal to eta
    std::vector<Vec<D>> basis;
    for (int k = 0; k < D && static_cast<int>(basis.size()) < D - 1; ++k) {
      Vec<D> e = Vec<D>::Unit(k);
      e -= e.dot(eta) * eta;
      for (const auto& b : basis) e -= e.dot(b) * b;
      if (e.norm() > 1e-6) basis.push_back(e.normalized());
    }
    double worst = 0.0;
    const int m = lines_per_shift;
    Index<D - 1> dims;
    dims.fill(m);
    for_each_index<D - 1>(dims, [&](const Index<D - 1>& s, std::size_t) {
      Vec<D> y = Vec<D>::Zero();
      for (int a = 0; a < D - 1; ++a) y += (-h0 + (2.0 * s[a] + 1.0) * h0 / m) * basis[a];
      double t0, t1;
      if (!detail::line_interval<D>(shape, y, eta, t0, t1)) return;
      // S(0) and h + S(0) meet the line in [t0,t1] and [t0+len, t1+len]
      const double overlap = detail::overlap_1d(t0, t1, t0 + len, t1 + len);
      const double sym = 2.0 * (t1 - t0) - 2.0 * overlap;
      worst = std::max(worst, sym / len);
    });
    rep.per_shift.push_back(worst);
    rep.estimate = std::max(rep.estimate, worst);
  }
  return rep;
}

}  // namespace swimlab
