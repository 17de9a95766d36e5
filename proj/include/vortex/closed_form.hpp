#pragma once

// Closed-form evolution of Gaussian packets with zero and one unit of axial
// orbital angular momentum in a uniform magnetic field.
//
// Every quantity is assembled from half-angle sines and cosines, so values
// stay finite at the focusing times t = n tau where cot(omega t / 2) blows up.
// With theta = omega t / 2, kappa = m omega / 2 hbar and lambda = sin(theta) / kappa
// (-> hbar t / m for omega -> 0), the transverse widths enter through
//   B(w) = lambda / w^2 - i cos(theta),
// which traces an ellipse around the origin once per period. Its square root is
// continued along that ellipse, which fixes the Maslov phase at each caustic.

#include <cmath>
#include <numbers>

#include "vortex/error.hpp"
#include "vortex/params.hpp"
#include "vortex/types.hpp"

namespace vortex {

/// Coefficients of the Gaussian integral for the perpendicular packet.
///
/// `n`, `alpha_*` and `beta_*` are the raw textbook quantities; they diverge at
/// t = n tau. The remaining members are the finite combinations actually used.
struct EvolutionCoefficients {
  Complex n;
  Complex alpha_x, alpha_y, alpha_z;
  Complex beta_x, beta_y, beta_z;
  double sin_half = 0.0;
  double cos_half = 1.0;

  /// N sqrt((2 pi)^3 beta_x beta_y beta_z), phase-continued in t.
  Complex prefactor;
  /// 1/2 beta_i alpha_i^2 plus the matching share of the cot and z^2 phases.
  Complex exponent_x, exponent_y, exponent_z;
  Complex beta_alpha_x;
  Complex beta_alpha_z;
};

struct NodalLine {
  /// Continuous angle of the line in the xy plane, measured from +x.
  double angle = -std::numbers::pi / 2.0;

  Vec3 direction() const { return {std::cos(angle), std::sin(angle), 0.0}; }
};

/// Cylindrical coordinates about the +y propagation axis. theta is measured
/// from -x and increases counterclockwise looking along -y.
struct WaveParamsSnapshot {
  double rho = 0.0;
  double theta = 0.0;

  static WaveParamsSnapshot at(const Vec3& r) {
    return {std::hypot(r[0], r[2]), std::atan2(r[2], -r[0])};
  }
};

namespace detail {

// Phase of B = lambda/w^2 - i cos(theta) continued from -pi/2 at theta = 0.
inline double continued_arg(double lambda_over_w2, double theta) {
  const double turns = std::floor(std::abs(theta) / (2.0 * std::numbers::pi));
  double a = std::atan2(-std::cos(theta), lambda_over_w2);
  if (a < -std::numbers::pi / 2.0) a += 2.0 * std::numbers::pi;
  return a + 2.0 * std::numbers::pi * turns;
}

// sqrt(B) on the continued branch.
inline Complex continued_sqrt(double lambda, double width, double theta) {
  const double re = lambda / (width * width);
  const Complex b{re, -std::cos(theta)};
  return std::polar(std::sqrt(std::abs(b)), 0.5 * continued_arg(re, theta));
}

}  // namespace detail

/// Free spreading of exp(-z^2 / 2 w^2 + i k z), unnormalized.
inline Complex free_gaussian_1d(double z, double t, double width, double wavenumber,
                                const PhysicalParams& p) {
  const double eps = p.hbar * t / (p.mass * width * width);
  const Complex d{1.0, eps};
  const Complex ex = (-z * z / (2.0 * width * width) + I * (wavenumber * z) -
                      I * (wavenumber * wavenumber * p.hbar * t / (2.0 * p.mass))) / d;
  return std::exp(ex) / std::sqrt(d);
}

/// Closed-form solutions for one packet configuration.
class ClosedForm {
 public:
  ClosedForm(const PhysicalParams& params, const BeamParams& beam, double guard)
      : params_(params), beam_(beam), guard_(guard) {
    params_.validate();
    beam_.validate();
    if (!(guard_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "time guard must be positive");
    omega_ = cyclotron_frequency(params_);
    kappa_ = params_.mass * omega_ / (2.0 * params_.hbar);
    wavenumber_ = beam_.momentum / params_.hbar;
  }

  const PhysicalParams& params() const { return params_; }
  const BeamParams& beam() const { return beam_; }
  double guard() const { return guard_; }
  double omega() const { return omega_; }

  // -- initial conditions ---------------------------------------------------

  Complex initial_psi0(const Vec3& r) const {
    return initial_transverse(r[0], r[1]) * initial_axial(r[2]);
  }

  /// (d/dx - i d/dz) applied to the perpendicular packet.
  Complex initial_psi1(const Vec3& r) const {
    require_perpendicular();
    const double s2 = beam_.sigma * beam_.sigma;
    return Complex{-r[0], r[2]} / s2 * initial_psi0(r);
  }

  /// Transverse factor at t = 0 (xy dependence, normalized in the plane).
  Complex initial_transverse(double x, double y) const {
    const double s = beam_.sigma;
    if (beam_.axis == Axis::Perpendicular) {
      const double l = beam_.length;
      return std::exp(Complex{-x * x / (2 * s * s) - y * y / (2 * l * l), wavenumber_ * y}) /
             std::sqrt(std::numbers::pi * s * l);
    }
    return std::exp(-(x * x + y * y) / (2 * s * s)) / (std::sqrt(std::numbers::pi) * s);
  }

  /// Axial factor at t = 0 (z dependence, normalized on the line).
  Complex initial_axial(double z) const {
    const double w = axial_width();
    const double k = beam_.axis == Axis::Parallel ? wavenumber_ : 0.0;
    return std::exp(Complex{-z * z / (2 * w * w), k * z}) / std::sqrt(std::sqrt(std::numbers::pi) * w);
  }

  // -- evolved factors --------------------------------------------------------

  /// Transverse factor of psi0 at time t.
  Complex transverse(double x, double y, double t) const {
    if (t < guard_) {
      check_time(t);
      return initial_transverse(x, y);
    }
    const Half h = half(t);
    const double wx = beam_.sigma;
    const double wy = beam_.axis == Axis::Perpendicular ? beam_.length : beam_.sigma;
    const double k = beam_.axis == Axis::Perpendicular ? wavenumber_ : 0.0;
    const double u = h.c * x + h.s * y;
    const double v = h.c * y - h.s * x;
    const Complex bx{h.lambda / (wx * wx), -h.c};
    const Complex by{h.lambda / (wy * wy), -h.c};
    const double ks = kappa_ * h.s;
    const Complex ex = u * u * Complex{-ks, h.c / (wx * wx)} / (2.0 * bx);
    const Complex ey = (v * v * Complex{-ks, h.c / (wy * wy)} + 2.0 * k * v - h.lambda * k * k) / (2.0 * by);
    const Complex root = detail::continued_sqrt(h.lambda, wx, h.theta) * detail::continued_sqrt(h.lambda, wy, h.theta);
    return -I / root * std::exp(ex + ey) / std::sqrt(std::numbers::pi * wx * wy);
  }

  /// Axial (z) factor of psi0 at time t; free spreading.
  Complex axial(double z, double t) const {
    if (t < guard_) {
      check_time(t);
      return initial_axial(z);
    }
    const double w = axial_width();
    const double k = beam_.axis == Axis::Parallel ? wavenumber_ : 0.0;
    return free_gaussian_1d(z, t, w, k, params_) / std::sqrt(std::sqrt(std::numbers::pi) * w);
  }

  /// xy part of the prefactor f, i beta_x alpha_x with the sign of f.
  Complex f_transverse(double x, double y, double t) const {
    if (t < guard_) {
      check_time(t);
      return -x;
    }
    const Half h = half(t);
    const double wx = beam_.sigma;
    const Complex bx{h.lambda / (wx * wx), -h.c};
    return I * (h.c * x + h.s * y) / bx;
  }

  /// z part of the prefactor f.
  Complex f_axial(double z, double t) const {
    if (t < guard_) {
      check_time(t);
      return I * z;
    }
    const double eps = params_.hbar * t / (params_.mass * beam_.sigma * beam_.sigma);
    return I * z / Complex{1.0, eps};
  }

  // -- full wave functions ----------------------------------------------------

  Complex psi0(const Vec3& r, double t) const { return transverse(r[0], r[1], t) * axial(r[2], t); }

  /// f(r, t) = -beta_x alpha_x + i beta_z alpha_z.
  Complex prefactor_f(const Vec3& r, double t) const {
    require_perpendicular();
    return f_transverse(r[0], r[1], t) + f_axial(r[2], t);
  }

  /// Propagated (d/dx - i d/dz) psi0 = f psi0 / sigma^2, unnormalized as in the ladder construction.
  Complex psi1(const Vec3& r, double t) const {
    require_perpendicular();
    return prefactor_f(r, t) / (beam_.sigma * beam_.sigma) * psi0(r, t);
  }

  /// Dispatch on the beam's OAM order.
  Complex psi(const Vec3& r, double t) const { return beam_.oam == 1 ? psi1(r, t) : psi0(r, t); }

  /// Raw and stabilized coefficients of the perpendicular Gaussian integral.
  EvolutionCoefficients coeffs(const Vec3& r, double t) const {
    require_perpendicular();
    if (t < guard_) throw Error(ErrorCode::TimeTooSmall, "coefficients need t >= guard");
    const Half h = half(t);
    const double x = r[0], y = r[1], z = r[2];
    const double s2 = beam_.sigma * beam_.sigma;
    const double l2 = beam_.length * beam_.length;
    const double mu = params_.mass / (params_.hbar * t);
    const double cot = h.c / h.s;

    EvolutionCoefficients c;
    c.sin_half = h.s;
    c.cos_half = h.c;
    const double norm0 = 1.0 / std::sqrt(std::numbers::pi * s2 * std::sqrt(std::numbers::pi * l2));
    c.n = std::pow(mu / (2.0 * std::numbers::pi), 1.5) * std::polar(1.0, -0.75 * std::numbers::pi) *
          (h.theta / h.s) * norm0;
    c.alpha_x = -I * kappa_ * (cot * x + y);
    c.alpha_y = -I * kappa_ * cot * y + I * kappa_ * x + I * wavenumber_;
    c.alpha_z = -I * mu * z;
    c.beta_x = 1.0 / (1.0 / s2 - I * kappa_ * cot);
    c.beta_y = 1.0 / (1.0 / l2 - I * kappa_ * cot);
    c.beta_z = 1.0 / (1.0 / s2 - I * mu);

    const Complex bx{h.lambda / s2, -h.c};
    const Complex by{h.lambda / l2, -h.c};
    const double u = h.c * x + h.s * y;
    const double v = h.c * y - h.s * x;
    const double ks = kappa_ * h.s;
    const double k = wavenumber_;
    c.exponent_x = u * u * Complex{-ks, h.c / s2} / (2.0 * bx);
    c.exponent_y = (v * v * Complex{-ks, h.c / l2} + 2.0 * k * v - h.lambda * k * k) / (2.0 * by);
    const double eps = params_.hbar * t / (params_.mass * s2);
    c.exponent_z = -z * z / (2.0 * s2 * Complex{1.0, eps});
    const Complex root_xy = detail::continued_sqrt(h.lambda, beam_.sigma, h.theta) *
                            detail::continued_sqrt(h.lambda, beam_.length, h.theta);
    c.prefactor = norm0 * (-I / root_xy) / std::sqrt(Complex{1.0, eps});
    c.beta_alpha_x = -I * (h.c * x + h.s * y) / bx;
    c.beta_alpha_z = -I * z / Complex{eps, -1.0};
    return c;
  }

 private:
  struct Half {
    double theta, s, c, lambda;
  };

  Half half(double t) const {
    const double th = 0.5 * omega_ * t;
    const double s = std::sin(th);
    const double lambda = omega_ == 0.0 ? params_.hbar * t / params_.mass : s / kappa_;
    return {th, s, std::cos(th), lambda};
  }

  double axial_width() const { return beam_.axis == Axis::Perpendicular ? beam_.sigma : beam_.length; }

  void require_perpendicular() const {
    if (beam_.axis != Axis::Perpendicular)
      throw Error(ErrorCode::InvalidArgument, "OAM closed forms are defined for perpendicular propagation");
  }

  static void check_time(double t) {
    if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "negative time");
  }

  PhysicalParams params_;
  BeamParams beam_;
  double guard_;
  double omega_ = 0.0;
  double kappa_ = 0.0;
  double wavenumber_ = 0.0;
};

/// Line y = -cot(omega t / 2) x in the plane z = 0, angle kept continuous.
inline NodalLine nodal_line(double t, const PhysicalParams& p) {
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "negative time");
  return {0.5 * cyclotron_frequency(p) * t - std::numbers::pi / 2.0};
}

// Free-function spellings of the packet operations.

inline Complex initial_psi0_perp(const Vec3& r, const BeamParams& b, const PhysicalParams& p) {
  return ClosedForm(p, b, 1e-300).initial_psi0(r);
}
inline Complex initial_psi1(const Vec3& r, const BeamParams& b, const PhysicalParams& p) {
  return ClosedForm(p, b, 1e-300).initial_psi1(r);
}
inline Complex initial_psi0_parallel(const Vec3& r, const BeamParams& b, const PhysicalParams& p) {
  return ClosedForm(p, b, 1e-300).initial_psi0(r);
}

}  // namespace vortex
