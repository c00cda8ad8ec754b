#pragma once

// Closed-curve certificates: winding number of a polygon around a point
// (2-D) and the degree of a triangulated closed surface around a point (3-D).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace swimlab {

using P2 = Eigen::Vector2d;
using P3 = Eigen::Vector3d;

namespace detail {

inline double orient(const P2& a, const P2& b, const P2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
}

}  // namespace detail

/// Winding number of the closed polygon around p (crossing rule, counter-clockwise positive).
/// Points on the boundary count as outside.
inline int winding_number(const std::vector<P2>& poly, const P2& p) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const P2& a = poly[k];
    const P2& b = poly[(k + 1) % n];
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && detail::orient(a, b, p) > 0) ++wn;
    } else {
      if (b.y() <= p.y() && detail::orient(a, b, p) < 0) --wn;
    }
  }
  return wn;
}

inline double point_segment_distance(const P2& p, const P2& a, const P2& b) {
  const P2 ab = b - a;
  const double l2 = ab.squaredNorm();
  const double t = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

/// Distance from p to the polygon's boundary.
inline double boundary_distance(const std::vector<P2>& poly, const P2& p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) d = std::min(d, point_segment_distance(p, poly[k], poly[(k + 1) % poly.size()]));
  return d;
}

inline double diameter(const std::vector<P2>& pts) {
  double d = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, (pts[a] - pts[b]).norm());
  return d;
}

inline double diameter(const std::vector<P3>& pts) {
  double d = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, (pts[a] - pts[b]).norm());
  return d;
}

/// True when no two non-adjacent edges intersect.
inline bool is_simple_polygon(const std::vector<P2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  auto within = [](const P2& a, const P2& b, const P2& c) {  // c on segment ab, given collinear
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= c.y() &&
           c.y() <= std::max(a.y(), b.y());
  };
  auto intersect = [&](const P2& a, const P2& b, const P2& c, const P2& d) {
    const double o1 = detail::orient(a, b, c), o2 = detail::orient(a, b, d);
    const double o3 = detail::orient(c, d, a), o4 = detail::orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
    return (o1 == 0 && within(a, b, c)) || (o2 == 0 && within(a, b, d)) || (o3 == 0 && within(c, d, a)) ||
           (o4 == 0 && within(c, d, b));
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Signed area (positive for counter-clockwise).
inline double signed_area(const std::vector<P2>& poly) {
  double s = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P2& a = poly[k];
    const P2& b = poly[(k + 1) % poly.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

struct TriMesh {
  std::vector<P3> vertices;
  std::vector<std::array<int, 3>> faces;  // outward orientation for the reference sphere
};

/// Icosahedron subdivided once and pushed to the unit sphere: 42 vertices, 80 faces.
inline TriMesh icosphere42() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  const std::vector<std::array<int, 3>> base = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  std::vector<std::array<int, 3>> faces;
  std::vector<std::pair<std::pair<int, int>, int>> cache;
  auto midpoint = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    for (const auto& [k, v] : cache)
      if (k == key) return v;
    m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
    const int id = static_cast<int>(m.vertices.size()) - 1;
    cache.push_back({key, id});
    return id;
  };
  for (const auto& f : base) {
    const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
    faces.push_back({f[0], a, c});
    faces.push_back({f[1], b, a});
    faces.push_back({f[2], c, b});
    faces.push_back({a, b, c});
  }
  m.faces = std::move(faces);
  return m;
}

/// Signed volume enclosed by the mesh with its vertices replaced by `pts`, measured from p.
inline double signed_volume(const TriMesh& m, const std::vector<P3>& pts, const P3& p) {
  double v = 0.0;
  for (const auto& f : m.faces) v += (pts[f[0]] - p).dot((pts[f[1]] - p).cross(pts[f[2]] - p)) / 6.0;
  return v;
}

/// Degree of the closed surface around p: total solid angle / 4 pi (Van Oosterom-Strackee).
inline double surface_degree(const TriMesh& m, const std::vector<P3>& pts, const P3& p) {
  double omega = 0.0;
  for (const auto& f : m.faces) {
    const P3 a = pts[f[0]] - p, b = pts[f[1]] - p, c = pts[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    omega += 2.0 * std::atan2(num, den);
  }
  return omega / (4.0 * std::numbers::pi);
}

}  // namespace swimlab
