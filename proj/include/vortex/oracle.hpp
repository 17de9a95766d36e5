#pragma once

// Numerical propagators used to cross-check the closed forms.
//
// Quadrature applies the exact kernel to a sampled field. The split-step
// solver integrates the Schrodinger equation in the frame rotating at half the
// cyclotron frequency, where the transverse motion is an isotropic oscillator,
// and rotates back to the lab frame once at the end.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "vortex/fft.hpp"
#include "vortex/grid.hpp"
#include "vortex/kernel.hpp"
#include "vortex/separable.hpp"

namespace vortex {

enum class Method { Quadrature, SplitStep };

struct SolverConfig {
  int steps = 512;
  Method method = Method::SplitStep;
  double accuracy = 1e-3;   // relative L2 budget for the whole run
  double margin = 0.25;     // outer fraction of each axis' Nyquist band that must stay empty
  bool check_steps = true;  // step-doubling error estimate before the run
  double cost_budget = 5e10;  // quadrature multiply-adds

  void validate() const {
    if (steps < 2) throw Error(ErrorCode::InvalidArgument, "step count must be at least 2");
    if (!(margin > 0.0 && margin <= 0.5)) throw Error(ErrorCode::InvalidArgument, "margin must lie in (0, 0.5]");
    if (!(accuracy > 0.0)) throw Error(ErrorCode::InvalidArgument, "accuracy target must be positive");
  }
};

namespace detail {

inline std::vector<int> dims_of(const GridSpec& g) { return std::vector<int>(g.n.begin(), g.n.begin() + g.rank); }

inline ComplexField evolved_like(const ComplexField& f, std::vector<Complex> data, double t) {
  ComplexField g = f.with_data(std::move(data));
  g.time = f.time + t;
  return g;
}

// Swap the two axes of an (n0 x n1) row-major block.
inline std::vector<Complex> transpose(const std::vector<Complex>& d, int n0, int n1) {
  std::vector<Complex> out(d.size());
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) out[static_cast<std::size_t>(j) * n0 + i] = d[static_cast<std::size_t>(i) * n1 + j];
  return out;
}

// Shift each row i of an (rows x n) block along its own axis by shift[i].
inline void shift_rows(std::vector<Complex>& d, int rows, int n, double h, const std::vector<double>& shift) {
  const FftPlan plan({n}, rows);
  const auto k = wavenumbers(n, h);
  plan.forward(d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i) * n + j] *= std::polar(1.0, -k[j] * shift[i]);
  plan.backward(d);
}

}  // namespace detail

/// Fraction of spectral power in the outer `margin` of any axis' Nyquist band.
inline double spectral_tail(const ComplexField& f, double margin) {
  const auto& g = f.grid;
  std::vector<Complex> d = f.data;
  const FftPlan plan(detail::dims_of(g));
  plan.forward(d);
  std::vector<std::vector<double>> k;
  for (int a = 0; a < g.rank; ++a) k.push_back(wavenumbers(g.n[a], g.spacing(a)));
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto idx = g.unravel(i);
    bool outer = false;
    for (int a = 0; a < g.rank; ++a)
      outer = outer || std::abs(k[a][idx[a]]) > (1.0 - margin) * std::numbers::pi / g.spacing(a);
    const double p = std::norm(d[i]);
    total += p;
    if (outer) tail += p;
  }
  return total > 0.0 ? tail / total : 0.0;
}

inline void check_aliasing(const ComplexField& f, const SolverConfig& cfg) {
  const double tail = spectral_tail(f, cfg.margin);
  if (tail > cfg.accuracy * cfg.accuracy)
    throw Error(ErrorCode::AliasingDetected,
                "spectral tail " + std::to_string(std::sqrt(tail)) + " exceeds accuracy budget; refine the grid");
}

/// Rotate a transverse (rank-2, xy) field counterclockwise by `angle` about the
/// origin: out(r) = in(R(-angle) r). Built from FFT shears, each piece at most
/// pi/4, so the map is spectrally exact for band-limited fields that stay
/// inside the box.
inline ComplexField rotate_transverse(const ComplexField& f, double angle) {
  const auto& g = f.grid;
  if (g.rank != 2 || g.axes[0] != 0 || g.axes[1] != 1)
    throw Error(ErrorCode::InvalidArgument, "rotation needs an (x, y) plane");
  const int nx = g.n[0], ny = g.n[1];
  const double hx = g.spacing(0), hy = g.spacing(1);
  std::vector<double> xs(nx), ys(ny);
  for (int i = 0; i < nx; ++i) xs[i] = g.coord(0, i);
  for (int j = 0; j < ny; ++j) ys[j] = g.coord(1, j);
  std::vector<Complex> d = f.data;
  const int pieces = static_cast<int>(std::ceil(std::abs(angle) / (std::numbers::pi / 4.0) - 1e-12));
  for (int p = 0; p < pieces; ++p) {
    const double a = angle / pieces;
    // R(a) = Sy(tan(a/2)) Sx(-sin a) Sy(tan(a/2)); a shear S maps g(r) = f(S^-1 r).
    const double t = std::tan(0.5 * a), s = std::sin(a);
    std::vector<double> sy(nx), sx(ny);
    for (int i = 0; i < nx; ++i) sy[i] = t * xs[i];
    for (int j = 0; j < ny; ++j) sx[j] = -s * ys[j];
    detail::shift_rows(d, nx, ny, hy, sy);
    d = detail::transpose(d, nx, ny);
    detail::shift_rows(d, ny, nx, hx, sx);
    d = detail::transpose(d, ny, nx);
    detail::shift_rows(d, nx, ny, hy, sy);
  }
  return f.with_data(std::move(d));
}

/// Strang stepper for the rotating-frame transverse Hamiltonian
/// P^2/2m + (m omega^2 / 8)(x^2 + y^2) on an (x, y) grid.
class TransverseStepper {
 public:
  TransverseStepper(const GridSpec& g, const PhysicalParams& p, double dt) : g_(g), plan_({g.n[0], g.n[1]}) {
    const double w = cyclotron_frequency(p);
    const auto kx = wavenumbers(g.n[0], g.spacing(0));
    const auto ky = wavenumbers(g.n[1], g.spacing(1));
    const std::size_t n = g.size();
    kinetic_.resize(n);
    half_.resize(n);
    full_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = g.unravel(i);
      const double k2 = kx[idx[0]] * kx[idx[0]] + ky[idx[1]] * ky[idx[1]];
      kinetic_[i] = std::polar(1.0, -p.hbar * k2 * dt / (2.0 * p.mass));
      const double x = g.coord(0, idx[0]), y = g.coord(1, idx[1]);
      const double v = p.mass * w * w * (x * x + y * y) / 8.0;
      half_[i] = std::polar(1.0, -v * dt / (2.0 * p.hbar));
      full_[i] = half_[i] * half_[i];
    }
  }

  void run(std::vector<Complex>& d, int steps) const {
    mul(d, half_);
    for (int s = 0; s < steps; ++s) {
      plan_.forward(d);
      mul(d, kinetic_);
      plan_.backward(d);
      mul(d, s + 1 < steps ? full_ : half_);
    }
  }

 private:
  static void mul(std::vector<Complex>& d, const std::vector<Complex>& f) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= f[i];
  }

  GridSpec g_;
  FftPlan plan_;
  std::vector<Complex> kinetic_, half_, full_;
};

namespace detail {

inline void require_transverse(const GridSpec& g) {
  if (g.rank != 2 || g.axes[0] != 0 || g.axes[1] != 1)
    throw Error(ErrorCode::InvalidArgument, "expected an (x, y) plane");
}

inline void require_axial(const GridSpec& g) {
  if (g.rank != 1 || g.axes[0] != 2) throw Error(ErrorCode::InvalidArgument, "expected a z line");
}

// Exact free evolution along contiguous rows of length n.
inline void free_rows(std::vector<Complex>& d, int rows, int n, double h, double t, const PhysicalParams& p) {
  const FftPlan plan({n}, rows);
  const auto k = wavenumbers(n, h);
  std::vector<Complex> ph(n);
  for (int j = 0; j < n; ++j) ph[j] = std::polar(1.0, -p.hbar * k[j] * k[j] * t / (2.0 * p.mass));
  plan.forward(d);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= ph[i % n];
  plan.backward(d);
}

inline void transverse_splitstep(std::vector<Complex>& d, const GridSpec& g, double t, const PhysicalParams& p,
                                 const SolverConfig& cfg) {
  const double w = cyclotron_frequency(p);
  if (w == 0.0) {
    // No oscillator: the free flow is exact in one step.
    const FftPlan plan({g.n[0], g.n[1]});
    const auto kx = wavenumbers(g.n[0], g.spacing(0));
    const auto ky = wavenumbers(g.n[1], g.spacing(1));
    plan.forward(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto idx = g.unravel(i);
      const double k2 = kx[idx[0]] * kx[idx[0]] + ky[idx[1]] * ky[idx[1]];
      d[i] *= std::polar(1.0, -p.hbar * k2 * t / (2.0 * p.mass));
    }
    plan.backward(d);
    return;
  }
  const double dt = t / cfg.steps;
  if (cfg.check_steps) {
    // Step doubling on the initial data: one step against two half steps.
    std::vector<Complex> a = d, b = d;
    TransverseStepper(g, p, dt).run(a, 1);
    TransverseStepper(g, p, 0.5 * dt).run(b, 2);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      num += std::norm(a[i] - b[i]);
      den += std::norm(b[i]);
    }
    const double per_step = std::sqrt(num / den) * 4.0 / 3.0;
    if (per_step * cfg.steps > cfg.accuracy)
      throw Error(ErrorCode::StepTooLarge, "estimated splitting error " + std::to_string(per_step * cfg.steps) +
                                               " exceeds the accuracy budget; use more steps");
  }
  TransverseStepper(g, p, dt).run(d, cfg.steps);
  // Back to the lab frame: the state rotates by omega t / 2 about +z.
  ComplexField tmp(g);
  tmp.data = std::move(d);
  d = rotate_transverse(tmp, 0.5 * w * t).data;
}

}  // namespace detail

/// Split-step propagation over an interval t. Accepts an (x, y) plane, a z
/// line (free motion), or a full 3D box up to 128^3.
inline ComplexField propagate_splitstep(const ComplexField& f0, double t, const PhysicalParams& p,
                                        const SolverConfig& cfg = {}) {
  cfg.validate();
  p.validate();
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveInterval, "propagation interval must be positive");
  require_finite(f0);
  check_aliasing(f0, cfg);
  const auto& g = f0.grid;
  std::vector<Complex> d = f0.data;
  if (g.rank == 1) {
    detail::require_axial(g);
    detail::free_rows(d, 1, g.n[0], g.spacing(0), t, p);
  } else if (g.rank == 2) {
    detail::require_transverse(g);
    detail::transverse_splitstep(d, g, t, p, cfg);
  } else {
    if (g.axes != std::array<int, 3>{0, 1, 2}) throw Error(ErrorCode::InvalidArgument, "expected an (x, y, z) box");
    if (g.size() > 128u * 128u * 128u)
      throw Error(ErrorCode::CostExceeded, "direct 3D split-step is limited to 128^3; use separable fields");
    const int nxy = g.n[0] * g.n[1], nz = g.n[2];
    detail::free_rows(d, nxy, nz, g.spacing(2), t, p);
    d = detail::transpose(d, nxy, nz);
    GridSpec plane = GridSpec::plane(0, 1, 1, 1, g.n[0], g.n[1]);
    plane.lo = g.lo;
    plane.hi = g.hi;
    std::vector<Complex> slice(nxy);
    for (int k = 0; k < nz; ++k) {
      std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(k) * nxy, nxy, slice.begin());
      detail::transverse_splitstep(slice, plane, t, p, cfg);
      std::copy(slice.begin(), slice.end(), d.begin() + static_cast<std::ptrdiff_t>(k) * nxy);
    }
    d = detail::transpose(d, nz, nxy);
  }
  auto out = detail::evolved_like(f0, std::move(d), t);
  require_finite(out);
  check_aliasing(out, cfg);
  return out;
}

inline SeparableField propagate_splitstep(const SeparableField& f0, double t, const PhysicalParams& p,
                                          const SolverConfig& cfg = {}) {
  SeparableField out;
  out.scenario = f0.scenario;
  out.time = f0.time + t;
  for (const auto& term : f0.terms)
    out.terms.push_back({propagate_splitstep(term.transverse, t, p, cfg), propagate_splitstep(term.axial, t, p, cfg)});
  return out;
}

// -- quadrature ---------------------------------------------------------------

/// The transverse kernel written as A exp(i c (|r - r'|^2) + i b (x y' - y x')).
struct TransverseKernelFactors {
  Complex amplitude;
  double quadratic;
  double cross;

  Complex operator()(double x, double y, double xs, double ys) const {
    const double dx = x - xs, dy = y - ys;
    return amplitude * std::polar(1.0, quadratic * (dx * dx + dy * dy) + cross * (x * ys - y * xs));
  }
};

inline TransverseKernelFactors transverse_kernel_factors(double T, const PhysicalParams& p) {
  detail::check_interval(T);
  const double w = cyclotron_frequency(p);
  const double th = 0.5 * w * T;
  detail::check_caustic(th);
  const double a = p.mass / (2.0 * std::numbers::pi * p.hbar * T);
  return {a * detail::theta_over_sin(th) * Complex{0.0, -1.0}, p.mass * detail::theta_cot(th) / (2.0 * p.hbar * T),
          p.mass * w / (2.0 * p.hbar)};
}

namespace detail {

inline std::vector<Complex> transverse_quadrature(const ComplexField& f0, const GridSpec& tg, double T,
                                                  const PhysicalParams& p) {
  const auto& sg = f0.grid;
  const auto kf = transverse_kernel_factors(T, p);
  const int sx = sg.n[0], sy = sg.n[1], tx = tg.n[0], ty = tg.n[1];
  std::vector<double> xs(sx), ys(sy), xt(tx), yt(ty);
  for (int i = 0; i < sx; ++i) xs[i] = sg.coord(0, i);
  for (int j = 0; j < sy; ++j) ys[j] = sg.coord(1, j);
  for (int i = 0; i < tx; ++i) xt[i] = tg.coord(0, i);
  for (int j = 0; j < ty; ++j) yt[j] = tg.coord(1, j);
  auto table = [](const std::vector<double>& a, const std::vector<double>& b, auto&& phase) {
    std::vector<Complex> m(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) m[i * b.size() + j] = std::polar(1.0, phase(a[i], b[j]));
    return m;
  };
  const double c = kf.quadratic, b = kf.cross;
  const auto ex = table(xt, xs, [c](double u, double v) { return c * (u - v) * (u - v); });
  const auto ey = table(yt, ys, [c](double u, double v) { return c * (u - v) * (u - v); });
  const auto fy = table(yt, xs, [b](double y, double x) { return -b * y * x; });
  const Complex scale = kf.amplitude * sg.cell_volume();
  std::vector<Complex> out(static_cast<std::size_t>(tx) * ty);
  std::vector<Complex> w(static_cast<std::size_t>(sx) * sy), tmp(static_cast<std::size_t>(ty) * sx);
  std::vector<Complex> dy(sy);
  for (int i = 0; i < tx; ++i) {
    for (int j = 0; j < sy; ++j) dy[j] = std::polar(1.0, b * xt[i] * ys[j]);
    for (int a = 0; a < sx; ++a)
      for (int j = 0; j < sy; ++j) w[static_cast<std::size_t>(a) * sy + j] = dy[j] * f0[static_cast<std::size_t>(a) * sy + j];
    // tmp[j][a] = sum_j' ey[j][j'] w[a][j']
    for (int j = 0; j < ty; ++j) {
      const Complex* er = &ey[static_cast<std::size_t>(j) * sy];
      for (int a = 0; a < sx; ++a) {
        const Complex* wr = &w[static_cast<std::size_t>(a) * sy];
        Complex s = 0.0;
        for (int q = 0; q < sy; ++q) s += er[q] * wr[q];
        tmp[static_cast<std::size_t>(j) * sx + a] = s;
      }
    }
    const Complex* exr = &ex[static_cast<std::size_t>(i) * sx];
    for (int j = 0; j < ty; ++j) {
      const Complex* fr = &fy[static_cast<std::size_t>(j) * sx];
      const Complex* tr = &tmp[static_cast<std::size_t>(j) * sx];
      Complex s = 0.0;
      for (int a = 0; a < sx; ++a) s += exr[a] * fr[a] * tr[a];
      out[static_cast<std::size_t>(i) * ty + j] = scale * s;
    }
  }
  return out;
}

// Free 1D kernel applied along contiguous rows.
inline std::vector<Complex> axial_quadrature(const std::vector<Complex>& d, int rows, const GridSpec& sg,
                                             const GridSpec& tg, double T, const PhysicalParams& p) {
  const int ns = sg.n[0], nt = tg.n[0];
  std::vector<Complex> k(static_cast<std::size_t>(nt) * ns);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < ns; ++j)
      k[static_cast<std::size_t>(i) * ns + j] = free_kernel_1d(tg.coord(0, i) - sg.coord(0, j), T, p) * sg.spacing(0);
  std::vector<Complex> out(static_cast<std::size_t>(rows) * nt);
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < nt; ++i) {
      Complex s = 0.0;
      for (int j = 0; j < ns; ++j) s += k[static_cast<std::size_t>(i) * ns + j] * d[static_cast<std::size_t>(r) * ns + j];
      out[static_cast<std::size_t>(r) * nt + i] = s;
    }
  return out;
}

inline GridSpec sub_grid(const GridSpec& g, int first, int count) {
  GridSpec s = g;
  s.rank = count;
  for (int a = 0; a < count; ++a) {
    s.axes[a] = g.axes[first + a];
    s.lo[a] = g.lo[first + a];
    s.hi[a] = g.hi[first + a];
    s.n[a] = g.n[first + a];
  }
  for (int a = count; a < 3; ++a) {
    s.axes[a] = 0;
    s.n[a] = 1;
  }
  return s;
}

}  // namespace detail

namespace detail {

// On a lattice of spacing h the rectangle rule also propagates copies of the
// source boosted by 2 pi hbar / h. They travel a chord of the boosted orbit; the
// result is clean only if every copy has left the target box.
inline void check_quadrature_aliasing(const ComplexField& f0, const GridSpec& tg, double T, const PhysicalParams& p) {
  const auto& sg = f0.grid;
  double amax = 0.0;
  for (const auto& v : f0.data) amax = std::max(amax, std::abs(v));
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (std::abs(f0[i]) < 1e-10 * amax) continue;
    const Vec3 r = sg.position(i);
    for (int c = 0; c < 3; ++c) lo[c] = std::min(lo[c], r[c]), hi[c] = std::max(hi[c], r[c]);
  }
  if (amax == 0.0) return;
  double reach2 = 0.0;
  for (int a = 0; a < tg.rank; ++a) {
    const int c = tg.axes[a];
    const double d = std::max(tg.hi[a] - lo[c], hi[c] - tg.lo[a]);
    reach2 += d * d;
  }
  const double w = std::abs(cyclotron_frequency(p));
  for (int a = 0; a < sg.rank; ++a) {
    const double v = 2.0 * std::numbers::pi * p.hbar / (p.mass * sg.spacing(a));
    const double travel = sg.axes[a] == 2 || w == 0.0 ? v * T : 2.0 * v / w * std::abs(std::sin(0.5 * w * T));
    if (travel * travel <= reach2)
      throw Error(ErrorCode::AliasingDetected,
                  "quadrature aliases: lattice images travel " + std::to_string(travel) +
                      " but the target reaches " + std::to_string(std::sqrt(reach2)) + "; refine the source grid");
  }
}

}  // namespace detail

/// Direct quadrature of the propagator integral from f0 onto `target` (default:
/// f0's own grid) after an interval t. The 3D kernel is the product of its
/// transverse and axial parts and is always applied that way.
inline ComplexField propagate_quadrature(const ComplexField& f0, double t, const PhysicalParams& p,
                                         std::optional<GridSpec> target = std::nullopt, const SolverConfig& cfg = {}) {
  p.validate();
  require_finite(f0);
  const auto& sg = f0.grid;
  const GridSpec tg = target.value_or(sg);
  tg.validate();
  if (tg.rank != sg.rank || tg.axes != sg.axes) throw Error(ErrorCode::InvalidArgument, "target grid must match source axes");
  if (sg.rank > 1) transverse_kernel_factors(t, p);  // caustic check
  {
    double cost = 1.0;
    for (int a = 0; a < sg.rank; ++a) cost *= 1.0 * sg.n[a] * tg.n[a];
    if (sg.rank == 3) cost = 1.0 * tg.n[0] * tg.n[1] * sg.n[0] * sg.n[1] * sg.n[2] + 1.0 * tg.n[0] * tg.n[1] * tg.n[2] * sg.n[2];
    if (cost > cfg.cost_budget)
      throw Error(ErrorCode::CostExceeded, sg.rank == 3 ? "non-separable 3D quadrature over budget; use separable fields"
                                                        : "quadrature cost over budget");
  }
  detail::check_quadrature_aliasing(f0, tg, t, p);
  ComplexField out(tg);
  out.time = f0.time + t;
  out.scenario = f0.scenario;
  if (sg.rank == 1) {
    detail::require_axial(sg);
    out.data = detail::axial_quadrature(f0.data, 1, sg, tg, t, p);
  } else if (sg.rank == 2) {
    detail::require_transverse(sg);
    out.data = detail::transverse_quadrature(f0, tg, t, p);
  } else {
    if (sg.axes != std::array<int, 3>{0, 1, 2}) throw Error(ErrorCode::InvalidArgument, "expected an (x, y, z) box");
    const int sxy = sg.n[0] * sg.n[1], txy = tg.n[0] * tg.n[1], nz = sg.n[2];
    const GridSpec splane = detail::sub_grid(sg, 0, 2), tplane = detail::sub_grid(tg, 0, 2);
    auto zmajor = detail::transpose(f0.data, sxy, nz);
    std::vector<Complex> moved(static_cast<std::size_t>(nz) * txy);
    ComplexField slice(splane);
    for (int k = 0; k < nz; ++k) {
      std::copy_n(zmajor.begin() + static_cast<std::ptrdiff_t>(k) * sxy, sxy, slice.data.begin());
      auto r = detail::transverse_quadrature(slice, tplane, t, p);
      std::copy(r.begin(), r.end(), moved.begin() + static_cast<std::ptrdiff_t>(k) * txy);
    }
    auto xy_major = detail::transpose(moved, nz, txy);
    GridSpec sz = GridSpec::line(2, 1, 8), tz = GridSpec::line(2, 1, 8);
    sz.lo[0] = sg.lo[2], sz.hi[0] = sg.hi[2], sz.n[0] = sg.n[2];
    tz.lo[0] = tg.lo[2], tz.hi[0] = tg.hi[2], tz.n[0] = tg.n[2];
    out.data = detail::axial_quadrature(xy_major, txy, sz, tz, t, p);
  }
  require_finite(out);
  return out;
}

inline SeparableField propagate_quadrature(const SeparableField& f0, double t, const PhysicalParams& p,
                                           std::optional<GridSpec> transverse_target = std::nullopt,
                                           std::optional<GridSpec> axial_target = std::nullopt,
                                           const SolverConfig& cfg = {}) {
  SeparableField out;
  out.scenario = f0.scenario;
  out.time = f0.time + t;
  for (const auto& term : f0.terms)
    out.terms.push_back({propagate_quadrature(term.transverse, t, p, transverse_target, cfg),
                         propagate_quadrature(term.axial, t, p, axial_target, cfg)});
  return out;
}

// -- convergence ----------------------------------------------------------------

struct ConvergenceRow {
  int steps = 0;
  double error = 0.0;  // relative L2 against the extrapolated reference
  double ratio = 0.0;  // error(previous) / error(this); 0 for the first row
  double order = 0.0;  // observed order from the previous row
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool monotone = true;
};

/// Split-step errors for each step count against a Richardson extrapolation
/// of the two finest runs (second-order splitting assumed).
inline ConvergenceTable convergence_study(const ComplexField& f0, double t, const PhysicalParams& p,
                                          const std::vector<int>& steps, SolverConfig cfg = {}) {
  if (steps.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two step counts");
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (steps[i] <= steps[i - 1]) throw Error(ErrorCode::InvalidArgument, "step counts must increase strictly");
  cfg.check_steps = false;
  cfg.accuracy = 1.0;
  std::vector<ComplexField> runs;
  for (int n : steps) {
    cfg.steps = n;
    runs.push_back(propagate_splitstep(f0, t, p, cfg));
  }
  const auto& fine = runs.back();
  const auto& coarse = runs[runs.size() - 2];
  const double r = static_cast<double>(steps.back()) / steps[steps.size() - 2];
  ComplexField ref = fine;
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = fine[i] + (fine[i] - coarse[i]) / (r * r - 1.0);
  ConvergenceTable table;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ConvergenceRow row{steps[i], relative_l2(runs[i], ref), 0.0, 0.0};
    if (i > 0) {
      const auto& prev = table.rows.back();
      row.ratio = prev.error / row.error;
      row.order = std::log(row.ratio) / std::log(static_cast<double>(steps[i]) / steps[i - 1]);
      if (row.error >= prev.error) table.monotone = false;
    }
    table.rows.push_back(row);
  }
  return table;
}

// -- Hamiltonian forms ------------------------------------------------------------

namespace detail {

inline ComplexField spectral_derivative(const ComplexField& f, int cart) {
  return derivative(f, cart, DifferenceOptions{0.0, true});
}

}  // namespace detail

/// (P + eA)^2 / 2m in the symmetric gauge, applied with spectral derivatives to
/// an (x, y) field.
inline ComplexField apply_minimal_coupling(const ComplexField& f, const PhysicalParams& p) {
  detail::require_transverse(f.grid);
  const double eb2 = p.charge * p.field / 2.0;  // e A = eb2 (-y, x)
  auto pi_x = [&](const ComplexField& g) {
    auto d = detail::spectral_derivative(g, 0);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = -I * p.hbar * d[i] - eb2 * g.grid.position(i)[1] * g[i];
    return d;
  };
  auto pi_y = [&](const ComplexField& g) {
    auto d = detail::spectral_derivative(g, 1);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = -I * p.hbar * d[i] + eb2 * g.grid.position(i)[0] * g[i];
    return d;
  };
  auto xx = pi_x(pi_x(f));
  auto yy = pi_y(pi_y(f));
  for (std::size_t i = 0; i < f.size(); ++i) xx[i] = (xx[i] + yy[i]) / (2.0 * p.mass);
  return xx;
}

/// P^2/2m + (omega/2) L_z + c m omega^2 (x^2 + y^2), with the confinement
/// coefficient `c` left open (expansion of the minimal coupling gives 1/8).
inline ComplexField apply_expanded_hamiltonian(const ComplexField& f, const PhysicalParams& p, double c) {
  detail::require_transverse(f.grid);
  const double w = cyclotron_frequency(p);
  const auto dx = detail::spectral_derivative(f, 0);
  const auto dy = detail::spectral_derivative(f, 1);
  const auto dxx = detail::spectral_derivative(dx, 0);
  const auto dyy = detail::spectral_derivative(dy, 1);
  ComplexField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 r = f.grid.position(i);
    const Complex lz = -I * p.hbar * (r[0] * dy[i] - r[1] * dx[i]);
    out[i] = -p.hbar * p.hbar / (2.0 * p.mass) * (dxx[i] + dyy[i]) + 0.5 * w * lz +
             c * p.mass * w * w * (r[0] * r[0] + r[1] * r[1]) * f[i];
  }
  return out;
}

struct HamiltonianAdjudication {
  double expansion_residual = 0.0;  // coefficient 1/8
  double printed_residual = 0.0;    // coefficient 1/2
};

inline HamiltonianAdjudication adjudicate_hamiltonian(const ComplexField& f, const PhysicalParams& p) {
  const auto ref = apply_minimal_coupling(f, p);
  return {relative_l2(apply_expanded_hamiltonian(f, p, 0.125), ref),
          relative_l2(apply_expanded_hamiltonian(f, p, 0.5), ref)};
}

// -- classical orbit ----------------------------------------------------------------

/// RK4 solution of m r'' = -e r' x B (the particle carries charge -e) sampled
/// at the requested times, which must be non-decreasing from zero.
inline std::vector<Vec3> classical_orbit(const PhysicalParams& p, Vec3 r0, Vec3 v0, const std::vector<double>& times,
                                         int substeps = 2000) {
  const double w = cyclotron_frequency(p);
  auto accel = [w](const Vec3& v) { return Vec3{-w * v[1], w * v[0], 0.0}; };
  std::vector<Vec3> out;
  double now = 0.0;
  Vec3 r = r0, v = v0;
  for (double target : times) {
    if (target < now) throw Error(ErrorCode::InvalidArgument, "orbit times must be non-decreasing");
    const double dt = (target - now) / substeps;
    for (int s = 0; s < substeps && dt > 0.0; ++s) {
      const Vec3 k1v = accel(v), k1r = v;
      const Vec3 v2 = v + (0.5 * dt) * k1v;
      const Vec3 k2v = accel(v2), k2r = v2;
      const Vec3 v3 = v + (0.5 * dt) * k2v;
      const Vec3 k3v = accel(v3), k3r = v3;
      const Vec3 v4 = v + dt * k3v;
      const Vec3 k4v = accel(v4), k4r = v4;
      r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
      v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    now = target;
    out.push_back(r);
  }
  return out;
}

}  // namespace vortex
