#pragma once

// Complex fields on uniform rectangular grids and the finite-difference
// operators used to read angular momentum, moments and phase winding off them.

#include <algorithm>
#include <array>
#include <concepts>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/fft.hpp"
#include "vortex/types.hpp"

namespace vortex {

/// Uniform grid over 1 to 3 of the Cartesian axes.
///
/// Axis k spans [lo[k], hi[k]) with n[k] points x_j = lo + j h, h = (hi - lo) / n,
/// i.e. the periodic layout expected by the spectral solver. Coordinates of
/// axes not on the grid are taken from `fixed`.
struct GridSpec {
  int rank = 3;
  std::array<int, 3> axes{0, 1, 2};  // Cartesian index of each grid axis (0 = x)
  std::array<double, 3> lo{-1, -1, -1};
  std::array<double, 3> hi{1, 1, 1};
  std::array<int, 3> n{8, 8, 8};
  Vec3 fixed{0.0, 0.0, 0.0};

  static GridSpec cube(double half_width, int points) {
    return {3, {0, 1, 2}, {-half_width, -half_width, -half_width}, {half_width, half_width, half_width},
            {points, points, points}, {}};
  }

  static GridSpec box3(const std::array<double, 3>& half, const std::array<int, 3>& pts) {
    return {3, {0, 1, 2}, {-half[0], -half[1], -half[2]}, {half[0], half[1], half[2]}, pts, {}};
  }

  /// Two-dimensional grid over Cartesian axes a and b, symmetric about 0.
  static GridSpec plane(int a, int b, double half_a, double half_b, int na, int nb, Vec3 fixed = {}) {
    return {2, {a, b, 0}, {-half_a, -half_b, 0}, {half_a, half_b, 0}, {na, nb, 1}, fixed};
  }

  static GridSpec line(int a, double half, int points, Vec3 fixed = {}) {
    return {1, {a, 0, 0}, {-half, 0, 0}, {half, 0, 0}, {points, 1, 1}, fixed};
  }

  void validate() const {
    if (rank < 1 || rank > 3) throw Error(ErrorCode::InvalidArgument, "grid rank must be 1..3");
    for (int k = 0; k < rank; ++k) {
      if (n[k] < 8 || n[k] % 2 != 0) throw Error(ErrorCode::InvalidArgument, "grid point counts must be even and >= 8");
      if (!(hi[k] > lo[k])) throw Error(ErrorCode::InvalidArgument, "grid extent must be positive");
      if (axes[k] < 0 || axes[k] > 2) throw Error(ErrorCode::InvalidArgument, "bad axis index");
    }
  }

  double spacing(int k) const { return (hi[k] - lo[k]) / n[k]; }
  double coord(int k, int j) const { return lo[k] + j * spacing(k); }

  std::size_t size() const {
    std::size_t s = 1;
    for (int k = 0; k < rank; ++k) s *= static_cast<std::size_t>(n[k]);
    return s;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < rank; ++k) v *= spacing(k);
    return v;
  }

  std::size_t stride(int k) const {
    std::size_t s = 1;
    for (int q = rank - 1; q > k; --q) s *= static_cast<std::size_t>(n[q]);
    return s;
  }

  /// Grid axis holding Cartesian axis `cart`, or -1.
  int find_axis(int cart) const {
    for (int k = 0; k < rank; ++k)
      if (axes[k] == cart) return k;
    return -1;
  }

  std::array<int, 3> unravel(std::size_t idx) const {
    std::array<int, 3> j{0, 0, 0};
    for (int k = rank - 1; k >= 0; --k) {
      j[k] = static_cast<int>(idx % n[k]);
      idx /= n[k];
    }
    return j;
  }

  Vec3 position(std::size_t idx) const {
    Vec3 r = fixed;
    const auto j = unravel(idx);
    for (int k = 0; k < rank; ++k) r[axes[k]] = coord(k, j[k]);
    return r;
  }

  bool same_layout(const GridSpec& o) const {
    if (rank != o.rank) return false;
    for (int k = 0; k < rank; ++k)
      if (axes[k] != o.axes[k] || n[k] != o.n[k] || lo[k] != o.lo[k] || hi[k] != o.hi[k]) return false;
    return true;
  }
};

/// Complex amplitudes on a grid, row-major with the last grid axis fastest.
struct ComplexField {
  GridSpec grid;
  std::vector<Complex> data;
  double time = 0.0;
  std::string scenario;
  bool normalized = false;

  ComplexField() = default;
  explicit ComplexField(const GridSpec& g) : grid(g), data(g.size()) {}

  Complex& operator[](std::size_t i) { return data[i]; }
  const Complex& operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }

  ComplexField with_data(std::vector<Complex> d) const {
    ComplexField f = *this;
    f.data = std::move(d);
    f.normalized = false;
    return f;
  }

  ComplexField& operator*=(Complex s) {
    for (auto& v : data) v *= s;
    normalized = false;
    return *this;
  }

  ComplexField conj() const {
    ComplexField f = *this;
    for (auto& v : f.data) v = std::conj(v);
    return f;
  }
};

inline void require_finite(const ComplexField& f) {
  for (const auto& v : f.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error(ErrorCode::NonFinite, "field has NaN/Inf");
}

/// Evaluate `fn` at every grid point.
template <class Fn>
ComplexField sample(Fn&& fn, const GridSpec& grid, double time = 0.0, std::string scenario = {}) {
  grid.validate();
  ComplexField f(grid);
  f.time = time;
  f.scenario = std::move(scenario);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(grid.position(i));
  require_finite(f);
  return f;
}

/// <a|b> by the rectangle rule (spectrally accurate for fields that vanish at the box edge).
inline Complex inner(const ComplexField& a, const ComplexField& b) {
  if (!a.grid.same_layout(b.grid)) throw Error(ErrorCode::InvalidArgument, "inner product of mismatched grids");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * a.grid.cell_volume();
}

inline double norm(const ComplexField& f) {
  require_finite(f);
  double s = 0.0;
  for (const auto& v : f.data) s += std::norm(v);
  return s * f.grid.cell_volume();
}

inline ComplexField normalize(const ComplexField& f) {
  const double nrm = norm(f);
  if (!(nrm > 0.0) || nrm < 1e-300) throw Error(ErrorCode::ZeroNorm, "cannot normalize a vanishing field");
  ComplexField g = f;
  g *= 1.0 / std::sqrt(nrm);
  g.normalized = true;
  return g;
}

/// Relative L2 distance ||a - b|| / ||b||.
inline double relative_l2(const ComplexField& a, const ComplexField& b) {
  if (!a.grid.same_layout(b.grid)) throw Error(ErrorCode::InvalidArgument, "mismatched grids");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

// -- finite differences -------------------------------------------------------

struct DifferenceOptions {
  /// Largest accepted ||D4 f - D6 f|| / ||D6 f||; <= 0 disables the check.
  double tolerance = 1e-3;
  /// Differentiate with the DFT instead (periodic box, field vanishing at the
  /// edge). Needed once k h approaches 1, where no stencil is adequate.
  bool spectral = false;
};

namespace detail {

// First derivative along grid axis k. order 4 (default) or 6 in the interior;
// the outermost rows use one-sided 4th-order closures.
inline std::vector<Complex> difference(const ComplexField& f, int k, int order) {
  const auto& g = f.grid;
  const int n = g.n[k];
  const std::size_t st = g.stride(k);
  const double h = g.spacing(k);
  std::vector<Complex> out(f.size());
  const std::size_t outer = f.size() / (st * n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < st; ++in) {
      const std::size_t base = o * st * n + in;
      auto at = [&](int j) { return f.data[base + j * st]; };
      for (int j = 0; j < n; ++j) {
        Complex d;
        if (order == 6 && j >= 3 && j < n - 3) {
          d = (at(j + 3) - 9.0 * at(j + 2) + 45.0 * at(j + 1) - 45.0 * at(j - 1) + 9.0 * at(j - 2) - at(j - 3)) / (60.0 * h);
        } else if (j >= 2 && j < n - 2) {
          d = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h);
        } else if (j == 0) {
          d = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
        } else if (j == 1) {
          d = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
        } else if (j == n - 1) {
          d = (25.0 * at(n - 1) - 48.0 * at(n - 2) + 36.0 * at(n - 3) - 16.0 * at(n - 4) + 3.0 * at(n - 5)) / (12.0 * h);
        } else {
          d = (3.0 * at(n - 1) + 10.0 * at(n - 2) - 18.0 * at(n - 3) + 6.0 * at(n - 4) - at(n - 5)) / (12.0 * h);
        }
        out[base + j * st] = d;
      }
    }
  }
  return out;
}

inline std::vector<Complex> spectral_difference(const ComplexField& f, int k) {
  const auto& g = f.grid;
  const int n = g.n[k];
  const std::size_t st = g.stride(k);
  const auto kk = wavenumbers(n, g.spacing(k));
  const FftPlan plan({n});
  std::vector<Complex> out(f.size()), line(n);
  const std::size_t outer = f.size() / (st * n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < st; ++in) {
      const std::size_t base = o * st * n + in;
      for (int j = 0; j < n; ++j) line[j] = f.data[base + j * st];
      plan.forward(line);
      for (int j = 0; j < n; ++j) line[j] *= 2 * j == n ? Complex{0.0} : Complex{0.0, kk[j]};
      plan.backward(line);
      for (int j = 0; j < n; ++j) out[base + j * st] = line[j];
    }
  }
  return out;
}

inline int require_axis(const GridSpec& g, int cart) {
  const int k = g.find_axis(cart);
  if (k < 0) throw Error(ErrorCode::InvalidArgument, std::string("field lacks the ") + "xyz"[cart] + " axis");
  return k;
}

}  // namespace detail

/// d/d(cartesian axis) with 4th-order centered differences (or spectrally).
inline ComplexField derivative(const ComplexField& f, int cart, const DifferenceOptions& opt = {}) {
  const int k = detail::require_axis(f.grid, cart);
  if (opt.spectral) return f.with_data(detail::spectral_difference(f, k));
  auto d4 = detail::difference(f, k, 4);
  if (opt.tolerance > 0.0) {
    const auto d6 = detail::difference(f, k, 6);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d4.size(); ++i) {
      num += std::norm(d4[i] - d6[i]);
      den += std::norm(d6[i]);
    }
    if (den > 0.0 && std::sqrt(num / den) > opt.tolerance)
      throw Error(ErrorCode::ResolutionTooCoarse, "finite-difference truncation error above tolerance on axis " +
                                                      std::string(1, "xyz"[cart]));
  }
  return f.with_data(std::move(d4));
}

/// Multiply by a Cartesian coordinate.
inline ComplexField multiply_coordinate(const ComplexField& f, int cart) {
  ComplexField g = f;
  g.normalized = false;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= f.grid.position(i)[cart];
  return g;
}

/// L_y psi = i hbar (x d/dz - z d/dx) psi.
inline ComplexField apply_Ly(const ComplexField& f, double hbar = 1.0, const DifferenceOptions& opt = {}) {
  const auto dz = derivative(f, 2, opt);
  const auto dx = derivative(f, 0, opt);
  ComplexField out = f.with_data(std::vector<Complex>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 r = f.grid.position(i);
    out[i] = I * hbar * (r[0] * dz[i] - r[2] * dx[i]);
  }
  return out;
}

/// L_z psi = -i hbar (x d/dy - y d/dx) psi.
inline ComplexField apply_Lz(const ComplexField& f, double hbar = 1.0, const DifferenceOptions& opt = {}) {
  const auto dy = derivative(f, 1, opt);
  const auto dx = derivative(f, 0, opt);
  ComplexField out = f.with_data(std::vector<Complex>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 r = f.grid.position(i);
    out[i] = -I * hbar * (r[0] * dy[i] - r[1] * dx[i]);
  }
  return out;
}

/// Raising operator (d/dx - i d/dz) for L_y.
inline ComplexField apply_ladder(const ComplexField& f, const DifferenceOptions& opt = {}) {
  const auto dx = derivative(f, 0, opt);
  const auto dz = derivative(f, 2, opt);
  ComplexField out = f.with_data(std::vector<Complex>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = dx[i] - I * dz[i];
  return out;
}

enum class Observable { Ly, Lz, X, Y, Z, Px, Py, Pz };

struct Expectation {
  double value = 0.0;
  /// |Im <psi|A psi>| / |<psi|A psi>|: zero for an exactly Hermitian discretization.
  double hermiticity_defect = 0.0;
};

inline ComplexField apply(const ComplexField& f, Observable op, double hbar = 1.0, const DifferenceOptions& opt = {}) {
  switch (op) {
    case Observable::Ly: return apply_Ly(f, hbar, opt);
    case Observable::Lz: return apply_Lz(f, hbar, opt);
    case Observable::X: return multiply_coordinate(f, 0);
    case Observable::Y: return multiply_coordinate(f, 1);
    case Observable::Z: return multiply_coordinate(f, 2);
    case Observable::Px:
    case Observable::Py:
    case Observable::Pz: {
      const int cart = static_cast<int>(op) - static_cast<int>(Observable::Px);
      auto d = derivative(f, cart, opt);
      d *= -I * hbar;
      return d;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown observable");
}

inline Expectation expectation(const ComplexField& f, Observable op, double hbar = 1.0, const DifferenceOptions& opt = {}) {
  const double nrm = norm(f);
  if (!(nrm > 1e-300)) throw Error(ErrorCode::ZeroNorm, "expectation of a vanishing field");
  const Complex s = inner(f, apply(f, op, hbar, opt)) / nrm;
  const double mag = std::abs(s);
  return {s.real(), mag > 0.0 ? std::abs(s.imag()) / mag : 0.0};
}

struct Moments {
  Vec3 centroid{};
  Vec3 widths{};  // root central second moments; zero for axes off the grid
};

inline Moments moments(const ComplexField& f) {
  double total = 0.0;
  Vec3 m1{}, m2{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    const Vec3 r = f.grid.position(i);
    total += w;
    for (int c = 0; c < 3; ++c) {
      m1[c] += w * r[c];
      m2[c] += w * r[c] * r[c];
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroNorm, "moments of a vanishing field");
  Moments m;
  for (int c = 0; c < 3; ++c) {
    m.centroid[c] = m1[c] / total;
    if (f.grid.find_axis(c) >= 0) m.widths[c] = std::sqrt(std::max(0.0, m2[c] / total - m.centroid[c] * m.centroid[c]));
    else m.centroid[c] = f.grid.fixed[c];
  }
  return m;
}

// -- interpolation ------------------------------------------------------------

/// Four-point Lagrange interpolation in every grid axis; zero outside the box.
inline Complex interpolate(const ComplexField& f, const Vec3& r) {
  const auto& g = f.grid;
  std::array<int, 3> j0{0, 0, 0};
  std::array<std::array<double, 4>, 3> w{};
  for (int k = 0; k < g.rank; ++k) {
    const double h = g.spacing(k);
    const double s = (r[g.axes[k]] - g.lo[k]) / h;
    const int j = static_cast<int>(std::floor(s));
    if (j < 1 || j > g.n[k] - 3) return 0.0;
    const double u = s - j;
    j0[k] = j - 1;
    w[k] = {-u * (u - 1) * (u - 2) / 6.0, (u + 1) * (u - 1) * (u - 2) / 2.0, -(u + 1) * u * (u - 2) / 2.0,
            (u + 1) * u * (u - 1) / 6.0};
  }
  Complex acc = 0.0;
  const int c1 = g.rank > 1 ? 4 : 1;
  const int c2 = g.rank > 2 ? 4 : 1;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < c1; ++b)
      for (int c = 0; c < c2; ++c) {
        std::size_t idx = (j0[0] + a) * g.stride(0);
        double wt = w[0][a];
        if (g.rank > 1) {
          idx += (j0[1] + b) * g.stride(1);
          wt *= w[1][b];
        }
        if (g.rank > 2) {
          idx += (j0[2] + c) * g.stride(2);
          wt *= w[2][c];
        }
        acc += wt * f.data[idx];
      }
  return acc;
}

// -- phase winding --------------------------------------------------------------

enum class WindingPlane { XZ, XY };

struct Winding {
  int value = 0;
  /// pi minus the largest phase step between adjacent circle samples.
  double margin = 0.0;
  double min_amplitude = 0.0;
};

/// Winding of arg(psi) around a circle of `radius` about `center` in the plane
/// spanned by unit vectors e1, e2; positive means counterclockwise about e1 x e2.
template <class Sampler>
  requires std::invocable<Sampler&, const Vec3&>
Winding phase_winding(Sampler&& psi, const Vec3& center, const Vec3& e1, const Vec3& e2, double radius,
                      double amplitude_floor = 1e-12, int points = 256) {
  std::vector<Complex> v(points);
  double amin = std::numeric_limits<double>::infinity();
  double amax = 0.0;
  for (int k = 0; k < points; ++k) {
    const double a = 2.0 * std::numbers::pi * k / points;
    const Vec3 r = center + (radius * std::cos(a)) * e1 + (radius * std::sin(a)) * e2;
    v[k] = psi(r);
    amin = std::min(amin, std::abs(v[k]));
    amax = std::max(amax, std::abs(v[k]));
  }
  if (!(amin > amplitude_floor * std::max(amax, 1e-300)) || amax == 0.0)
    throw Error(ErrorCode::AmplitudeTooSmall, "field vanishes on the winding circle");
  double total = 0.0;
  double biggest = 0.0;
  for (int k = 0; k < points; ++k) {
    const double step = std::arg(v[(k + 1) % points] / v[k]);
    biggest = std::max(biggest, std::abs(step));
    total += step;
  }
  return {static_cast<int>(std::lround(total / (2.0 * std::numbers::pi))), std::numbers::pi - biggest, amin};
}

/// Axis-aligned planes: XZ circles about +y (angle from -x toward +z), XY about +z.
template <class Sampler>
  requires std::invocable<Sampler&, const Vec3&>
Winding phase_winding(Sampler&& psi, WindingPlane plane, const Vec3& center, double radius,
                      double amplitude_floor = 1e-12) {
  if (plane == WindingPlane::XZ) return phase_winding(psi, center, Vec3{-1, 0, 0}, Vec3{0, 0, 1}, radius, amplitude_floor);
  return phase_winding(psi, center, Vec3{1, 0, 0}, Vec3{0, 1, 0}, radius, amplitude_floor);
}

inline Winding phase_winding(const ComplexField& f, WindingPlane plane, const Vec3& center, double radius,
                             double amplitude_floor = 1e-12) {
  return phase_winding([&](const Vec3& r) { return interpolate(f, r); }, plane, center, radius, amplitude_floor);
}

}  // namespace vortex
