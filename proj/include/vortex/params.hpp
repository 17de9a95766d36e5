#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "vortex/error.hpp"

namespace vortex {

/// Particle and field constants.
///
/// `charge` is the magnitude e of the electron charge; the particle carries
/// charge -e. The field points along +z with signed strength `field`. With
/// these conventions the Hamiltonian is (P + eA)^2 / 2m in the symmetric gauge
/// A = (B/2)(-y, x, 0), the classical orbit is counterclockwise for B > 0, and
/// the propagator is the closed form implemented in kernel.hpp.
struct PhysicalParams {
  double mass = 1.0;
  double charge = 1.0;
  double hbar = 1.0;
  double field = 1.0;

  static PhysicalParams natural(double field = 1.0) { return {1.0, 1.0, 1.0, field}; }

  void validate() const {
    if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "mass must be positive");
    if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
    if (!std::isfinite(charge) || !std::isfinite(field))
      throw Error(ErrorCode::InvalidArgument, "charge and field must be finite");
  }
};

/// Signed cyclotron frequency eB/m.
inline double cyclotron_frequency(const PhysicalParams& p) { return p.charge * p.field / p.mass; }

/// Momentum of the classical circular orbit of radius `radius`.
inline double orbit_momentum(const PhysicalParams& p, double radius) {
  if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "orbit radius must be non-negative");
  return p.mass * cyclotron_frequency(p) * radius;
}

/// Cyclotron period 2 pi / |omega|.
inline double period(const PhysicalParams& p) {
  const double w = cyclotron_frequency(p);
  if (w == 0.0) throw Error(ErrorCode::ZeroFrequency, "period undefined for zero field");
  return 2.0 * std::numbers::pi / std::abs(w);
}

enum class Axis { Perpendicular, Parallel };

/// Gaussian packet geometry. Perpendicular packets travel along +y,
/// parallel packets along +z (the field direction).
struct BeamParams {
  double sigma = 1.0;
  double length = 2.0;
  double radius = 8.0;
  double momentum = 8.0;
  Axis axis = Axis::Perpendicular;
  int oam = 0;

  /// Perpendicular packet whose momentum matches the orbit radius.
  static BeamParams perpendicular(const PhysicalParams& p, double sigma, double length,
                                  double radius, int oam = 0) {
    BeamParams b{sigma, length, radius, orbit_momentum(p, radius), Axis::Perpendicular, oam};
    b.validate();
    return b;
  }

  static BeamParams parallel(double sigma, double length, double momentum) {
    BeamParams b{sigma, length, 0.0, momentum, Axis::Parallel, 0};
    b.validate();
    return b;
  }

  void validate() const {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    if (!(length > 0.0)) throw Error(ErrorCode::InvalidArgument, "length must be positive");
    if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "radius must be non-negative");
    if (oam != 0 && oam != 1) throw Error(ErrorCode::InvalidArgument, "oam must be 0 or 1");
    if (!std::isfinite(momentum)) throw Error(ErrorCode::InvalidArgument, "momentum not finite");
  }
};

/// Frame schedule. `guard` is the smallest time at which closed forms are
/// evaluated; requests below it return the initial condition.
struct TimeSpec {
  double t_max = 2.0 * std::numbers::pi;
  int frame_count = 16;
  double guard = 1e-6 * 2.0 * std::numbers::pi;

  /// One period split into `frames` frames, guard at 1e-6 tau.
  static TimeSpec one_period(const PhysicalParams& p, int frames = 16) {
    const double tau = period(p);
    return {tau, frames, 1e-6 * tau};
  }

  void validate() const {
    if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
    if (frame_count < 1) throw Error(ErrorCode::InvalidArgument, "frame_count must be >= 1");
    if (!(guard > 0.0)) throw Error(ErrorCode::InvalidArgument, "time guard must be positive");
  }

  /// Frame k sits at k * t_max / frame_count, so the last frame stops short of t_max.
  double frame_time(int k) const { return t_max * k / frame_count; }
};

/// Scales of a unit system in SI. Time and field scales follow from these.
struct UnitScale {
  double mass = 1.0;
  double charge = 1.0;
  double action = 1.0;
  double length = 1.0;

  double time() const { return mass * length * length / action; }
  double field() const { return action / (charge * length * length); }
  double momentum() const { return action / length; }
};

/// Scale that maps `si` onto m = e = hbar = 1. The length unit defaults to
/// the magnetic length sqrt(hbar / eB), which also makes B = 1.
inline UnitScale natural_scale(const PhysicalParams& si, std::optional<double> length = {}) {
  si.validate();
  double len = 1.0;
  if (length) {
    len = *length;
  } else if (si.field != 0.0 && si.charge != 0.0) {
    len = std::sqrt(si.hbar / std::abs(si.charge * si.field));
  }
  return {si.mass, si.charge, si.hbar, len};
}

inline PhysicalParams to_natural(const PhysicalParams& si, const UnitScale& s) {
  return {si.mass / s.mass, si.charge / s.charge, si.hbar / s.action, si.field / s.field()};
}

inline PhysicalParams to_si(const PhysicalParams& nat, const UnitScale& s) {
  return {nat.mass * s.mass, nat.charge * s.charge, nat.hbar * s.action, nat.field * s.field()};
}

namespace codata {
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double hbar = 1.054571817e-34;               // J s
}  // namespace codata

}  // namespace vortex
