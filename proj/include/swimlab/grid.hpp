#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "swimlab/errors.hpp"

namespace swimlab {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

template <int D>
using Index = std::array<int, D>;

/// Axis-aligned box [0, extent_0] x ... with a uniform Cartesian grid and the
/// fluid viscosity.
template <int D>
struct DomainSpec {
  static_assert(D == 2 || D == 3, "only 2-D and 3-D domains are supported");

  std::array<double, D> extent{};
  std::array<int, D> cells{};
  double nu = 1.0;

  void validate() const {
    for (int k = 0; k < D; ++k) {
      if (!(extent[k] > 0.0)) throw InvalidArgument("domain extent must be positive");
      if (cells[k] < 8) throw InvalidArgument("at least 8 cells per axis are required");
    }
    if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
  }
};

/// Row-major strides for a box of the given dimensions (last axis fastest).
template <int D>
constexpr std::array<std::size_t, D> strides_of(const Index<D>& dims) {
  std::array<std::size_t, D> s{};
  s[D - 1] = 1;
  for (int k = D - 2; k >= 0; --k) s[k] = s[k + 1] * static_cast<std::size_t>(dims[k + 1]);
  return s;
}

template <int D>
constexpr std::size_t volume_of(const Index<D>& dims) {
  std::size_t n = 1;
  for (int k = 0; k < D; ++k) n *= static_cast<std::size_t>(dims[k]);
  return n;
}

/// Calls fn(multi_index, linear_index) for every point of a row-major box.
template <int D, class Fn>
void for_each_index(const Index<D>& dims, Fn&& fn) {
  Index<D> idx{};
  const std::size_t n = volume_of<D>(dims);
  for (std::size_t lin = 0; lin < n; ++lin) {
    fn(static_cast<const Index<D>&>(idx), lin);
    for (int k = D - 1; k >= 0; --k) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
}

/// Geometry of the MAC grid. Scalars live at cell centres; velocity component k
/// lives on the faces normal to axis k (cells[k] + 1 faces along that axis).
template <int D>
class Grid {
 public:
  Grid() = default;
  explicit Grid(const DomainSpec<D>& spec) : spec_(spec) {
    spec_.validate();
    for (int k = 0; k < D; ++k) h_[k] = spec_.extent[k] / spec_.cells[k];
    cell_dims_ = spec_.cells;
    cell_strides_ = strides_of<D>(cell_dims_);
    for (int k = 0; k < D; ++k) {
      face_dims_[k] = spec_.cells;
      face_dims_[k][k] += 1;
      face_strides_[k] = strides_of<D>(face_dims_[k]);
    }
    cell_volume_ = 1.0;
    for (int k = 0; k < D; ++k) cell_volume_ *= h_[k];
  }

  const DomainSpec<D>& spec() const { return spec_; }
  double nu() const { return spec_.nu; }
  double h(int k) const { return h_[k]; }
  double h_min() const { return *std::min_element(h_.begin(), h_.end()); }
  double extent(int k) const { return spec_.extent[k]; }
  int cells(int k) const { return spec_.cells[k]; }
  double cell_volume() const { return cell_volume_; }
  double domain_measure() const { return cell_volume_ * static_cast<double>(cell_count()); }

  const Index<D>& cell_dims() const { return cell_dims_; }
  const std::array<std::size_t, D>& cell_strides() const { return cell_strides_; }
  std::size_t cell_count() const { return volume_of<D>(cell_dims_); }

  const Index<D>& face_dims(int k) const { return face_dims_[k]; }
  const std::array<std::size_t, D>& face_strides(int k) const { return face_strides_[k]; }
  std::size_t face_count(int k) const { return volume_of<D>(face_dims_[k]); }

  std::size_t cell_index(const Index<D>& i) const {
    std::size_t lin = 0;
    for (int k = 0; k < D; ++k) lin += static_cast<std::size_t>(i[k]) * cell_strides_[k];
    return lin;
  }
  std::size_t face_index(int comp, const Index<D>& i) const {
    std::size_t lin = 0;
    for (int k = 0; k < D; ++k) lin += static_cast<std::size_t>(i[k]) * face_strides_[comp][k];
    return lin;
  }

  Vec<D> cell_center(const Index<D>& i) const {
    Vec<D> x;
    for (int k = 0; k < D; ++k) x[k] = (i[k] + 0.5) * h_[k];
    return x;
  }
  Vec<D> face_center(int comp, const Index<D>& i) const {
    Vec<D> x;
    for (int k = 0; k < D; ++k) x[k] = (k == comp ? i[k] : i[k] + 0.5) * h_[k];
    return x;
  }

  /// Diffusion limit of explicit Euler: dt * nu * sum_k 4/h_k^2 <= 2.
  double diffusion_dt_limit() const {
    double s = 0.0;
    for (int k = 0; k < D; ++k) s += 1.0 / (h_[k] * h_[k]);
    return 1.0 / (2.0 * spec_.nu * s);
  }

  bool operator==(const Grid& o) const {
    return spec_.extent == o.spec_.extent && spec_.cells == o.spec_.cells && spec_.nu == o.spec_.nu;
  }

 private:
  DomainSpec<D> spec_{};
  std::array<double, D> h_{};
  Index<D> cell_dims_{};
  std::array<std::size_t, D> cell_strides_{};
  std::array<Index<D>, D> face_dims_{};
  std::array<std::array<std::size_t, D>, D> face_strides_{};
  double cell_volume_ = 0.0;
};

using CellField = std::vector<double>;

/// Staggered vector field: component k sampled on the k-normal faces.
template <int D>
struct FaceField {
  std::array<std::vector<double>, D> comp;

  FaceField() = default;
  explicit FaceField(const Grid<D>& g) {
    for (int k = 0; k < D; ++k) comp[k].assign(g.face_count(k), 0.0);
  }

  std::vector<double>& operator[](int k) { return comp[k]; }
  const std::vector<double>& operator[](int k) const { return comp[k]; }

  void fill(double v) {
    for (auto& c : comp) std::fill(c.begin(), c.end(), v);
  }
  FaceField& operator+=(const FaceField& o) {
    for (int k = 0; k < D; ++k)
      for (std::size_t n = 0; n < comp[k].size(); ++n) comp[k][n] += o.comp[k][n];
    return *this;
  }
  FaceField& operator-=(const FaceField& o) {
    for (int k = 0; k < D; ++k)
      for (std::size_t n = 0; n < comp[k].size(); ++n) comp[k][n] -= o.comp[k][n];
    return *this;
  }
  FaceField& operator*=(double s) {
    for (auto& c : comp)
      for (auto& x : c) x *= s;
    return *this;
  }
  /// this += s * o
  void axpy(double s, const FaceField& o) {
    for (int k = 0; k < D; ++k)
      for (std::size_t n = 0; n < comp[k].size(); ++n) comp[k][n] += s * o.comp[k][n];
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& c : comp)
      for (double x : c) m = std::max(m, std::abs(x));
    return m;
  }
  bool all_finite() const {
    for (const auto& c : comp)
      for (double x : c)
        if (!std::isfinite(x)) return false;
    return true;
  }
};

/// Grid L2 inner product of two staggered fields (face control volumes equal the cell volume).
template <int D>
double inner(const Grid<D>& g, const FaceField<D>& a, const FaceField<D>& b) {
  double s = 0.0;
  for (int k = 0; k < D; ++k)
    for (std::size_t n = 0; n < a[k].size(); ++n) s += a[k][n] * b[k][n];
  return s * g.cell_volume();
}

template <int D>
double norm(const Grid<D>& g, const FaceField<D>& a) {
  return std::sqrt(inner(g, a, a));
}

template <int D>
FaceField<D> operator-(FaceField<D> a, const FaceField<D>& b) {
  a -= b;
  return a;
}

template <int D>
FaceField<D> operator+(FaceField<D> a, const FaceField<D>& b) {
  a += b;
  return a;
}

template <int D>
FaceField<D> operator*(double s, FaceField<D> a) {
  a *= s;
  return a;
}

/// Zeroes the wall-normal faces (the two boundary layers of each component).
template <int D>
void zero_normal_boundary(const Grid<D>& g, FaceField<D>& f) {
  for (int k = 0; k < D; ++k) {
    const auto& dims = g.face_dims(k);
    for_each_index<D>(dims, [&](const Index<D>& i, std::size_t lin) {
      if (i[k] == 0 || i[k] == dims[k] - 1) f[k][lin] = 0.0;
    });
  }
}

/// Discrete divergence at cell centres.
template <int D>
CellField divergence(const Grid<D>& g, const FaceField<D>& u) {
  CellField div(g.cell_count(), 0.0);
  for (int k = 0; k < D; ++k) {
    const double inv_h = 1.0 / g.h(k);
    const std::size_t fs = g.face_strides(k)[k];
    for_each_index<D>(g.cell_dims(), [&](const Index<D>& i, std::size_t lin) {
      const std::size_t f = g.face_index(k, i);
      div[lin] += (u[k][f + fs] - u[k][f]) * inv_h;
    });
  }
  return div;
}

/// Scale-free divergence: max|div u| * h_min / max|u| (0 for a zero field).
template <int D>
double relative_divergence(const Grid<D>& g, const FaceField<D>& u) {
  const double umax = u.max_abs();
  if (umax == 0.0) return 0.0;
  double dmax = 0.0;
  for (double d : divergence(g, u)) dmax = std::max(dmax, std::abs(d));
  return dmax * g.h_min() / umax;
}

/// Face-to-cell averaged velocity, one CellField per component.
template <int D>
std::array<CellField, D> cell_velocity(const Grid<D>& g, const FaceField<D>& u) {
  std::array<CellField, D> out;
  for (int k = 0; k < D; ++k) {
    out[k].assign(g.cell_count(), 0.0);
    const std::size_t fs = g.face_strides(k)[k];
    for_each_index<D>(g.cell_dims(), [&](const Index<D>& i, std::size_t lin) {
      const std::size_t f = g.face_index(k, i);
      out[k][lin] = 0.5 * (u[k][f] + u[k][f + fs]);
    });
  }
  return out;
}

/// Samples an analytic vector function at the face centres.
template <int D, class Fn>
FaceField<D> sample_faces(const Grid<D>& g, Fn&& fn) {
  FaceField<D> f(g);
  for (int k = 0; k < D; ++k) {
    for_each_index<D>(g.face_dims(k), [&](const Index<D>& i, std::size_t lin) {
      const Vec<D> v = fn(g.face_center(k, i));
      f[k][lin] = v[k];
    });
  }
  return f;
}

/// Kinetic energy 0.5 * ||u||^2 in the grid norm.
template <int D>
double kinetic_energy(const Grid<D>& g, const FaceField<D>& u) {
  return 0.5 * inner(g, u, u);
}

}  // namespace swimlab
