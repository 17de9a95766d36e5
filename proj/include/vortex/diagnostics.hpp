#pragma once

// Physical read-outs from a time series of fields: the nodal line of the
// vortex, its precession rate, width breathing, centroid orbit and
// conservation checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "vortex/oracle.hpp"
#include "vortex/separable.hpp"

namespace vortex {

// -- nodal line ------------------------------------------------------------------

struct NodalFit {
  double angle = 0.0;  // line direction in [-pi/2, pi/2), from +x
  Vec3 point{};        // point on the line nearest the slice centroid
  double depth = 0.0;  // |psi|^2 at the discrete minimum over the slice peak
  int samples = 0;     // zero crossings used in the line fit
  double residual = 0.0;  // rms distance of the crossings from the fitted line
};

/// Wrap a line angle into [-pi/2, pi/2).
inline double wrap_line_angle(double a) {
  const double pi = std::numbers::pi;
  a = std::fmod(a + 0.5 * pi, pi);
  if (a < 0.0) a += pi;
  return a - 0.5 * pi;
}

/// Representative of `a` (mod pi) closest to `reference`.
inline double unwrap_line_angle(double reference, double a) {
  const double pi = std::numbers::pi;
  return a + pi * std::round((reference - a) / pi);
}

namespace detail {

// Sub-cell zero of |p|^2 for the cubic through four samples at s = -1, 0, 1, 2
// (units of h), starting from s0.
inline double refine_zero(const std::array<Complex, 4>& v, double s0) {
  auto eval = [&](double s, Complex& d1, Complex& d2) {
    const double xs[4] = {-1, 0, 1, 2};
    Complex p = 0.0;
    d1 = 0.0;
    d2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      // Lagrange basis and its first two derivatives.
      double l = 1.0, dl = 0.0, ddl = 0.0;
      for (int b = 0; b < 4; ++b) {
        if (b == a) continue;
        const double den = xs[a] - xs[b];
        const double q = (s - xs[b]) / den, dq = 1.0 / den;
        ddl = ddl * q + 2.0 * dl * dq;
        dl = dl * q + l * dq;
        l *= q;
      }
      p += l * v[a];
      d1 += dl * v[a];
      d2 += ddl * v[a];
    }
    return p;
  };
  double s = s0;
  for (int it = 0; it < 30; ++it) {
    Complex d1, d2;
    const Complex p = eval(s, d1, d2);
    // g = d|p|^2/ds / 2, g' = its derivative.
    const double g = (std::conj(p) * d1).real();
    const double gp = std::norm(d1) + (std::conj(p) * d2).real();
    if (gp <= 0.0) break;
    const double step = g / gp;
    s -= step;
    if (std::abs(step) < 1e-13) break;
  }
  return s;
}

}  // namespace detail

/// Nodal line of an l = 1 packet in an (x, y) slice.
///
/// The discrete |psi|^2 minimum near the centroid seeds a coarse direction
/// from the local Hessian. Each grid line crossing the node is then searched
/// for its zero with a cubic fit, and a line is fitted through the zeros.
inline NodalFit fit_nodal_angle(const ComplexField& f, double min_depth = 0.05) {
  const auto& g = f.grid;
  if (g.rank != 2 || g.axes[0] != 0 || g.axes[1] != 1)
    throw Error(ErrorCode::InvalidArgument, "nodal fit needs an (x, y) slice");
  const int nx = g.n[0], ny = g.n[1];
  const double hx = g.spacing(0), hy = g.spacing(1);
  auto at = [&](int i, int j) { return f[static_cast<std::size_t>(i) * ny + j]; };
  const auto mom = moments(f);
  double peak = 0.0;
  for (const auto& v : f.data) peak = std::max(peak, std::norm(v));
  if (peak == 0.0) throw Error(ErrorCode::NoNodeFound, "empty slice");
  const double wmin = std::max(std::min(mom.widths[0], mom.widths[1]), 2.0 * std::max(hx, hy));
  const double wmax = std::max(mom.widths[0], mom.widths[1]);

  // Discrete minimum inside one width of the centroid, away from the rim.
  int bi = -1, bj = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 2; i < nx - 2; ++i)
    for (int j = 2; j < ny - 2; ++j) {
      const double dx = g.coord(0, i) - mom.centroid[0], dy = g.coord(1, j) - mom.centroid[1];
      if (dx * dx + dy * dy > wmin * wmin) continue;
      const double v = std::norm(at(i, j));
      if (v < best) best = v, bi = i, bj = j;
    }
  if (bi < 0 || best > min_depth * peak) throw Error(ErrorCode::NoNodeFound, "no interior minimum deep enough");

  // Coarse normal from the Hessian of |psi|^2.
  auto a2 = [&](int i, int j) { return std::norm(at(i, j)); };
  const double hxx = (a2(bi + 1, bj) - 2 * a2(bi, bj) + a2(bi - 1, bj)) / (hx * hx);
  const double hyy = (a2(bi, bj + 1) - 2 * a2(bi, bj) + a2(bi, bj - 1)) / (hy * hy);
  const double hxy = (a2(bi + 1, bj + 1) - a2(bi + 1, bj - 1) - a2(bi - 1, bj + 1) + a2(bi - 1, bj - 1)) / (4 * hx * hy);
  const double normal_angle = 0.5 * std::atan2(2 * hxy, hxx - hyy);
  const double dir0 = normal_angle + 0.5 * std::numbers::pi;
  const double cx = std::cos(dir0), cy = std::sin(dir0);
  const double x0 = g.coord(0, bi), y0 = g.coord(1, bj);

  // Zeros along grid lines cutting the coarse line most steeply.
  const bool cut_along_x = std::abs(cy) >= std::abs(cx);
  const double reach = 2.0 * wmax;
  std::vector<std::array<double, 2>> pts;
  const int lines = cut_along_x ? ny : nx;
  for (int m = 0; m < lines; ++m) {
    const double fixed = cut_along_x ? g.coord(1, m) : g.coord(0, m);
    // Coarse crossing of this grid line.
    const double s = cut_along_x ? (fixed - y0) / cy : (fixed - x0) / cx;
    if (std::abs(s) > reach) continue;
    const double guess = cut_along_x ? x0 + s * cx : y0 + s * cy;
    const int k = cut_along_x ? 0 : 1;
    const int n = cut_along_x ? nx : ny;
    const double h = cut_along_x ? hx : hy;
    auto val = [&](int q) { return cut_along_x ? at(q, m) : at(m, q); };
    int q0 = static_cast<int>(std::lround((guess - g.lo[k]) / h));
    int qbest = -1;
    double vbest = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (int q = q0 - 3; q <= q0 + 3; ++q) {
      if (q < 1 || q >= n - 2) continue;
      const double v = std::norm(val(q));
      vmax = std::max(vmax, v);
      if (v < vbest) vbest = v, qbest = q;
    }
    if (qbest < 0 || vmax < 1e-8 * peak || vbest > 0.25 * vmax) continue;
    // Cubic on q-1..q+2 or q-2..q+1, whichever centres the minimum.
    const int side = std::norm(val(qbest + 1)) < std::norm(val(qbest - 1)) ? 0 : 1;
    const int first = qbest - 1 - side;
    if (first < 0 || first + 3 >= n) continue;
    const std::array<Complex, 4> v4{val(first), val(first + 1), val(first + 2), val(first + 3)};
    const double sz = detail::refine_zero(v4, side);
    if (!(sz > -0.5 && sz < 2.5)) continue;
    const double coord = g.lo[k] + (first + 1 + sz) * h;
    pts.push_back(cut_along_x ? std::array<double, 2>{coord, fixed} : std::array<double, 2>{fixed, coord});
  }
  if (pts.size() < 3) throw Error(ErrorCode::NoNodeFound, "too few zero crossings along the node");

  // Total least squares line.
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) mx += p[0], my += p[1];
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p[0] - mx) * (p[0] - mx);
    syy += (p[1] - my) * (p[1] - my);
    sxy += (p[0] - mx) * (p[1] - my);
  }
  const double dir = 0.5 * std::atan2(2 * sxy, sxx - syy);
  const double ux = std::cos(dir), uy = std::sin(dir);
  double r2 = 0.0;
  for (const auto& p : pts) {
    const double d = -(p[0] - mx) * uy + (p[1] - my) * ux;
    r2 += d * d;
  }
  NodalFit fit;
  fit.angle = wrap_line_angle(dir);
  const double along = (mom.centroid[0] - mx) * ux + (mom.centroid[1] - my) * uy;
  fit.point = {mx + along * ux, my + along * uy, g.fixed[2]};
  fit.depth = best / peak;
  fit.samples = static_cast<int>(pts.size());
  fit.residual = std::sqrt(r2 / pts.size());
  return fit;
}

// -- series -----------------------------------------------------------------------

struct FrameRecord {
  double time = 0.0;
  double norm = 0.0;
  Vec3 centroid{};
  Vec3 widths{};
  double ly = 0.0;
  double lz = 0.0;
  std::optional<double> nodal_angle;  // unwrapped; also the OAM axis angle in the xy plane
  int winding = 0;
  double winding_margin = 0.0;
};

struct DiagnosticSeries {
  std::vector<FrameRecord> frames;

  void validate() const {
    for (std::size_t i = 1; i < frames.size(); ++i)
      if (!(frames[i].time > frames[i - 1].time))
        throw Error(ErrorCode::InvalidArgument, "series times must increase strictly");
  }

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& f : frames) t.push_back(f.time);
    return t;
  }
};

/// Unit vector of a line angle in the xy plane.
inline Vec3 planar_direction(double angle) { return {std::cos(angle), std::sin(angle), 0.0}; }

namespace detail {

// Multiplies by exp(-i k.r). The winding around a closed loop does not change,
// but the interpolation between nodes no longer has to follow a fast carrier.
inline SeparableField demodulate(const SeparableField& f, const Vec3& k) {
  SeparableField g = f;
  for (auto& t : g.terms) {
    for (std::size_t i = 0; i < t.transverse.size(); ++i) {
      const Vec3 r = t.transverse.grid.position(i);
      t.transverse[i] *= std::polar(1.0, -(k[0] * r[0] + k[1] * r[1]));
    }
    for (std::size_t i = 0; i < t.axial.size(); ++i) t.axial[i] *= std::polar(1.0, -k[2] * t.axial.grid.position(i)[2]);
  }
  return g;
}

inline Winding winding_about(const SeparableField& f, const Vec3& center, const Vec3& axis, double radius) {
  const Vec3 e2{0.0, 0.0, 1.0};
  const Vec3 e1 = cross(e2, axis);
  return phase_winding([&](const Vec3& r) { return f.value(r); }, center, e1, e2, radius);
}

}  // namespace detail

/// Diagnostics of one frame. `previous_angle` fixes the branch of the nodal
/// angle; with none, the branch is chosen so that the phase winds +1 about
/// the axis (the axis then points along the packet's OAM).
inline FrameRecord measure_frame(const SeparableField& f, int oam, const PhysicalParams& p,
                                 std::optional<double> previous_angle = std::nullopt) {
  const DifferenceOptions spectral{0.0, true};
  FrameRecord rec;
  rec.time = f.time;
  rec.norm = norm(f);
  const auto m = moments(f);
  rec.centroid = m.centroid;
  rec.widths = m.widths;
  rec.ly = expectation(f, Observable::Ly, p.hbar, spectral).value;
  rec.lz = expectation(f, Observable::Lz, p.hbar, spectral).value;
  const double radius = 0.5 * std::min({m.widths[0], m.widths[1], m.widths[2]});
  const Vec3 carrier{expectation(f, Observable::Px, p.hbar, spectral).value / p.hbar,
                     expectation(f, Observable::Py, p.hbar, spectral).value / p.hbar,
                     expectation(f, Observable::Pz, p.hbar, spectral).value / p.hbar};
  const auto smooth = detail::demodulate(f, carrier);
  if (oam == 0) {
    const auto w = detail::winding_about(smooth, m.centroid, {0.0, 1.0, 0.0}, radius);
    rec.winding = w.value;
    rec.winding_margin = w.margin;
    return rec;
  }
  const auto fit = fit_nodal_angle(f.slice_xy(0.0));
  double angle = previous_angle ? unwrap_line_angle(*previous_angle, fit.angle) : fit.angle;
  auto w = detail::winding_about(smooth, fit.point, planar_direction(angle), radius);
  if (!previous_angle && w.value < 0) {
    angle += std::numbers::pi;
    w = detail::winding_about(smooth, fit.point, planar_direction(angle), radius);
  }
  rec.nodal_angle = angle;
  rec.winding = w.value;
  rec.winding_margin = w.margin;
  return rec;
}

/// Least-squares rate of the unwrapped nodal angle.
struct PrecessionFit {
  double rate = 0.0;
  double rate_error = 0.0;  // standard error of the slope
  double g_factor = std::numeric_limits<double>::quiet_NaN();  // 2 m rate / (e B); NaN without field
  int samples = 0;
};

inline PrecessionFit precession_rate(const DiagnosticSeries& s, const PhysicalParams& p,
                                     double t_lo = -std::numeric_limits<double>::infinity(),
                                     double t_hi = std::numeric_limits<double>::infinity()) {
  std::vector<double> t, a;
  for (const auto& f : s.frames)
    if (f.nodal_angle && f.time >= t_lo && f.time <= t_hi) t.push_back(f.time), a.push_back(*f.nodal_angle);
  const double w = cyclotron_frequency(p);
  const double span_needed = w != 0.0 ? 0.2 * period(p) : 0.0;
  if (t.size() < 8 || t.back() - t.front() < span_needed)
    throw Error(ErrorCode::InsufficientSamples, "precession fit needs 8 samples over 0.2 periods");
  const double n = static_cast<double>(t.size());
  double mt = 0.0, ma = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) mt += t[i], ma += a[i];
  mt /= n;
  ma /= n;
  double stt = 0.0, sta = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) stt += (t[i] - mt) * (t[i] - mt), sta += (t[i] - mt) * (a[i] - ma);
  PrecessionFit fit;
  fit.samples = static_cast<int>(t.size());
  fit.rate = sta / stt;
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = a[i] - ma - fit.rate * (t[i] - mt);
    rss += r * r;
  }
  fit.rate_error = n > 2 ? std::sqrt(rss / (n - 2) / stt) : 0.0;
  if (w != 0.0) fit.g_factor = 2.0 * fit.rate / w;
  return fit;
}

// -- breathing ----------------------------------------------------------------------

struct BreathingEstimate {
  double period = std::numeric_limits<double>::quiet_NaN();
  double relative_swing = 0.0;  // (max - min) / mean of the width
  bool flat = false;            // no measurable oscillation
  bool periodic = false;        // an autocorrelation peak was found
};

/// Dominant period of the x width from the autocorrelation of uniformly
/// sampled widths.
inline BreathingEstimate breathing_period(const DiagnosticSeries& s, const PhysicalParams& p,
                                          double flat_tolerance = 1e-6) {
  s.validate();
  const std::size_t n = s.frames.size();
  if (n < 8) throw Error(ErrorCode::InsufficientSamples, "breathing needs at least 8 frames");
  const double dt = s.frames[1].time - s.frames[0].time;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(s.frames[i].time - s.frames[i - 1].time - dt) > 1e-9 * std::abs(dt) + 1e-12)
      throw Error(ErrorCode::InvalidArgument, "breathing needs uniformly spaced frames");
  const double w = cyclotron_frequency(p);
  if (w != 0.0 && s.frames.back().time - s.frames.front().time < 2.0 * period(p) - 1.5 * dt)
    throw Error(ErrorCode::InsufficientSamples, "breathing needs widths over two periods");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = s.frames[i].widths[0];
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  BreathingEstimate est;
  est.relative_swing = (*hi - *lo) / mean;
  if (est.relative_swing < flat_tolerance) {
    est.flat = true;
    return est;
  }
  for (auto& v : x) v -= mean;
  // Unbiased autocorrelation; the first interior maximum after the first dip.
  const std::size_t maxlag = n - n / 4;
  std::vector<double> r(maxlag);
  for (std::size_t k = 0; k < maxlag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += x[i] * x[i + k];
    r[k] = acc / static_cast<double>(n - k);
  }
  std::size_t k = 1;
  while (k + 1 < maxlag && r[k] >= r[k + 1]) ++k;  // descend to the first dip
  std::vector<std::size_t> peaks;
  double top = 0.0;
  for (; k + 1 < maxlag; ++k)
    if (r[k] >= r[k - 1] && r[k] > r[k + 1] && r[k] > 0.5 * r[0]) {
      peaks.push_back(k);
      top = std::max(top, r[k]);
    }
  // The shortest lag that repeats as well as the best one; harmonics give
  // weaker peaks at fractional lags.
  for (std::size_t q : peaks) {
    if (r[q] < 0.9 * top) continue;
    const double den = r[q - 1] - 2.0 * r[q] + r[q + 1];
    const double off = den != 0.0 ? 0.5 * (r[q - 1] - r[q + 1]) / den : 0.0;
    est.period = (static_cast<double>(q) + off) * dt;
    est.periodic = true;
    break;
  }
  return est;
}

// -- conservation and orbit ----------------------------------------------------------------

struct ConservationReport {
  double max_norm_error = 0.0;
  double max_lz_drift = 0.0;
  std::optional<double> orbit_residual;  // max centroid distance from the classical orbit over R
};

inline ConservationReport conservation_report(const DiagnosticSeries& s, const BeamParams& beam, const PhysicalParams& p) {
  s.validate();
  ConservationReport r;
  if (s.frames.empty()) return r;
  const double lz0 = s.frames.front().lz;
  for (const auto& f : s.frames) {
    r.max_norm_error = std::max(r.max_norm_error, std::abs(f.norm - 1.0));
    if (beam.axis == Axis::Parallel) r.max_lz_drift = std::max(r.max_lz_drift, std::abs(f.lz - lz0));
  }
  if (beam.axis == Axis::Perpendicular && beam.radius > 0.0) {
    const auto ts = s.times();
    const auto orbit = classical_orbit(p, {0, 0, 0}, {0, beam.momentum / p.mass, 0}, ts);
    double worst = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) worst = std::max(worst, norm(s.frames[i].centroid - orbit[i]));
    r.orbit_residual = worst / beam.radius;
  }
  return r;
}

/// Cosine between the OAM axis and the classical velocity at each frame with
/// a nodal angle: +1 when the OAM points along the motion, -1 against it.
/// The axis is the tracked nodal line, flipped where the phase winds
/// negatively about it.
inline std::vector<double> oam_alignment(const DiagnosticSeries& s, const PhysicalParams& p) {
  const double w = cyclotron_frequency(p);
  std::vector<double> out;
  for (const auto& f : s.frames) {
    if (!f.nodal_angle) continue;
    const Vec3 v{-std::sin(w * f.time), std::cos(w * f.time), 0.0};
    out.push_back((f.winding < 0 ? -1.0 : 1.0) * dot(planar_direction(*f.nodal_angle), v));
  }
  return out;
}

}  // namespace vortex
