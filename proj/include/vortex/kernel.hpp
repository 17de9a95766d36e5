#pragma once

// Exact propagators for a uniform magnetic field along +z and for free motion.
//
// Phase convention for (m / 2 pi i hbar T)^{3/2}: (1/i)^{3/2} = exp(-3 i pi / 4),
// the branch continuous with the free kernel as T -> 0+. Each factor below
// carries its share: exp(-i pi/4) per free dimension.

#include <cmath>
#include <numbers>

#include "vortex/error.hpp"
#include "vortex/params.hpp"
#include "vortex/types.hpp"

namespace vortex {

struct KernelPoint {
  Vec3 r{};
  double t = 0.0;
  Vec3 r_src{};
  double t_src = 0.0;

  double interval() const { return t - t_src; }
};

inline constexpr double kCausticFloor = 1e-9;

namespace detail {

// theta * cot(theta) and theta / sin(theta), both -> 1 as theta -> 0.
inline double theta_cot(double th) { return std::abs(th) < 1e-8 ? 1.0 - th * th / 3.0 : th / std::tan(th); }
inline double theta_over_sin(double th) { return std::abs(th) < 1e-8 ? 1.0 + th * th / 6.0 : th / std::sin(th); }

inline void check_interval(double T) {
  if (!(T > 0.0)) throw Error(ErrorCode::NonPositiveInterval, "kernel needs t - t' > 0");
}

inline void check_caustic(double half_angle) {
  if (std::abs(half_angle) > 1.0 && std::abs(std::sin(half_angle)) < kCausticFloor)
    throw Error(ErrorCode::CausticSingular, "interval sits on a caustic (sin(omega T / 2) ~ 0)");
}

}  // namespace detail

/// One-dimensional free kernel in the coordinate difference `dx`.
inline Complex free_kernel_1d(double dx, double T, const PhysicalParams& p) {
  detail::check_interval(T);
  const double a = p.mass / (2.0 * std::numbers::pi * p.hbar * T);
  return std::sqrt(a) * std::polar(1.0, -std::numbers::pi / 4.0 + p.mass * dx * dx / (2.0 * p.hbar * T));
}

/// Transverse (xy) part of the magnetic kernel, from (xs, ys) to (x, y).
inline Complex magnetic_kernel_2d(double x, double y, double xs, double ys, double T,
                                  const PhysicalParams& p) {
  detail::check_interval(T);
  const double w = cyclotron_frequency(p);
  const double th = 0.5 * w * T;
  detail::check_caustic(th);
  const double a = p.mass / (2.0 * std::numbers::pi * p.hbar * T);
  const double dx = x - xs;
  const double dy = y - ys;
  // (m omega / 2) cot(theta) = (m / T) theta cot(theta)
  const double quad = (p.mass / T) * detail::theta_cot(th) * (dx * dx + dy * dy);
  const double cross = p.mass * w * (x * ys - y * xs);
  return a * detail::theta_over_sin(th) * std::polar(1.0, -std::numbers::pi / 2.0 + (quad + cross) / (2.0 * p.hbar));
}

/// Full three-dimensional propagator K(r, t; r', t').
inline Complex magnetic_kernel(const KernelPoint& kp, const PhysicalParams& p) {
  const double T = kp.interval();
  return magnetic_kernel_2d(kp.r[0], kp.r[1], kp.r_src[0], kp.r_src[1], T, p) *
         free_kernel_1d(kp.r[2] - kp.r_src[2], T, p);
}

/// Free-particle propagator in three dimensions.
inline Complex free_kernel(const KernelPoint& kp, const PhysicalParams& p) {
  const double T = kp.interval();
  detail::check_interval(T);
  const Vec3 d = kp.r - kp.r_src;
  const double a = p.mass / (2.0 * std::numbers::pi * p.hbar * T);
  return std::pow(a, 1.5) * std::polar(1.0, -0.75 * std::numbers::pi + p.mass * dot(d, d) / (2.0 * p.hbar * T));
}

}  // namespace vortex
