#pragma once

// Fields of the form sum_i a_i(x, y) b_i(z).
//
// Every packet in this library factorizes this way: the magnetic dynamics act
// on the xy factor and the z factor moves freely. Keeping the factors apart
// makes 256^2 x 256 comparisons cost two small grids instead of one large one.

#include <cmath>
#include <vector>

#include "vortex/closed_form.hpp"
#include "vortex/grid.hpp"

namespace vortex {

struct SeparableTerm {
  ComplexField transverse;  // rank 2 over (x, y)
  ComplexField axial;       // rank 1 over z
};

struct SeparableField {
  std::vector<SeparableTerm> terms;
  double time = 0.0;
  std::string scenario;

  const GridSpec& transverse_grid() const { return terms.front().transverse.grid; }
  const GridSpec& axial_grid() const { return terms.front().axial.grid; }

  Complex value(const Vec3& r) const {
    Complex s = 0.0;
    for (const auto& t : terms) s += interpolate(t.transverse, r) * interpolate(t.axial, r);
    return s;
  }

  /// xy slice at height z. Exact when z is a grid node.
  ComplexField slice_xy(double z) const {
    ComplexField out(transverse_grid());
    out.grid.fixed[2] = z;
    out.time = time;
    out.scenario = scenario;
    for (const auto& t : terms) {
      const Complex bz = axial_at(t.axial, z);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.transverse[i] * bz;
    }
    return out;
  }

  /// Slice in the plane spanned by z and one transverse axis (`cart` = 0 or 1),
  /// at the given offset along the other transverse axis.
  ComplexField slice_vertical(int cart, double offset) const {
    const auto& tg = transverse_grid();
    const auto& zg = axial_grid();
    const int k = tg.find_axis(cart);
    GridSpec g{2, {cart, 2, 0}, {tg.lo[k], zg.lo[0], 0}, {tg.hi[k], zg.hi[0], 0}, {tg.n[k], zg.n[0], 1}, {}};
    g.fixed[1 - cart] = offset;
    ComplexField out(g);
    out.time = time;
    out.scenario = scenario;
    for (const auto& t : terms) {
      for (int i = 0; i < g.n[0]; ++i) {
        Vec3 r{};
        r[cart] = g.coord(0, i);
        r[1 - cart] = offset;
        const Complex a = interpolate(t.transverse, r);
        for (int j = 0; j < g.n[1]; ++j) out[i * g.n[1] + j] += a * t.axial[j];
      }
    }
    return out;
  }

  /// Dense 3D grid; only for small grids.
  ComplexField to_grid() const {
    const auto& tg = transverse_grid();
    const auto& zg = axial_grid();
    GridSpec g{3, {0, 1, 2}, {tg.lo[0], tg.lo[1], zg.lo[0]}, {tg.hi[0], tg.hi[1], zg.hi[0]}, {tg.n[0], tg.n[1], zg.n[0]}, {}};
    ComplexField out(g);
    out.time = time;
    out.scenario = scenario;
    const std::size_t nz = zg.n[0];
    for (const auto& t : terms)
      for (std::size_t i = 0; i < t.transverse.size(); ++i)
        for (std::size_t j = 0; j < nz; ++j) out[i * nz + j] += t.transverse[i] * t.axial[j];
    return out;
  }

  SeparableField conj() const {
    SeparableField s = *this;
    for (auto& t : s.terms) {
      t.transverse = t.transverse.conj();
      t.axial = t.axial.conj();
    }
    return s;
  }

  SeparableField& operator*=(Complex c) {
    for (auto& t : terms) t.transverse *= c;
    return *this;
  }

 private:
  static Complex axial_at(const ComplexField& b, double z) {
    const auto& g = b.grid;
    const double s = (z - g.lo[0]) / g.spacing(0);
    const long j = std::lround(s);
    if (std::abs(s - j) < 1e-9 && j >= 0 && j < g.n[0]) return b[j];
    return interpolate(b, Vec3{0.0, 0.0, z});
  }
};

inline Complex inner(const SeparableField& a, const SeparableField& b) {
  Complex s = 0.0;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) s += inner(ta.transverse, tb.transverse) * inner(ta.axial, tb.axial);
  return s;
}

inline double norm(const SeparableField& f) { return inner(f, f).real(); }

inline SeparableField normalize(const SeparableField& f) {
  const double n = norm(f);
  if (!(n > 1e-300)) throw Error(ErrorCode::ZeroNorm, "cannot normalize a vanishing field");
  SeparableField g = f;
  g *= 1.0 / std::sqrt(n);
  return g;
}

/// ||a - b|| / ||b|| from the Gram entries.
inline double relative_l2(const SeparableField& a, const SeparableField& b) {
  const double aa = norm(a), bb = norm(b);
  const double ab = inner(a, b).real();
  return std::sqrt(std::max(0.0, aa + bb - 2.0 * ab) / bb);
}

namespace detail {

// Sum_ij <a_i | Ta a_j> <b_i | Tb b_j>.
template <class OpA, class OpB>
Complex sandwich(const SeparableField& f, OpA&& op_a, OpB&& op_b) {
  Complex s = 0.0;
  for (const auto& tj : f.terms) {
    const ComplexField aj = op_a(tj.transverse);
    const ComplexField bj = op_b(tj.axial);
    for (const auto& ti : f.terms) s += inner(ti.transverse, aj) * inner(ti.axial, bj);
  }
  return s;
}

}  // namespace detail

inline Expectation expectation(const SeparableField& f, Observable op, double hbar = 1.0,
                               const DifferenceOptions& opt = {}) {
  const double nrm = norm(f);
  if (!(nrm > 1e-300)) throw Error(ErrorCode::ZeroNorm, "expectation of a vanishing field");
  auto id = [](const ComplexField& g) { return g; };
  Complex s;
  switch (op) {
    case Observable::Ly: {
      // i hbar (x d/dz - z d/dx)
      const Complex xdz = detail::sandwich(f, [](const ComplexField& g) { return multiply_coordinate(g, 0); },
                                           [&](const ComplexField& g) { return derivative(g, 2, opt); });
      const Complex zdx = detail::sandwich(f, [&](const ComplexField& g) { return derivative(g, 0, opt); },
                                           [](const ComplexField& g) { return multiply_coordinate(g, 2); });
      s = I * hbar * (xdz - zdx);
      break;
    }
    case Observable::Z:
    case Observable::Pz:
      s = detail::sandwich(f, id, [&](const ComplexField& g) { return apply(g, op, hbar, opt); });
      break;
    default:
      s = detail::sandwich(f, [&](const ComplexField& g) { return apply(g, op, hbar, opt); }, id);
  }
  s /= nrm;
  const double mag = std::abs(s);
  return {s.real(), mag > 0.0 ? std::abs(s.imag()) / mag : 0.0};
}

inline Moments moments(const SeparableField& f) {
  const double nrm = norm(f);
  if (!(nrm > 1e-300)) throw Error(ErrorCode::ZeroNorm, "moments of a vanishing field");
  auto id = [](const ComplexField& g) { return g; };
  Moments m;
  for (int c = 0; c < 3; ++c) {
    auto x1 = [c](const ComplexField& g) { return multiply_coordinate(g, c); };
    auto x2 = [c](const ComplexField& g) { return multiply_coordinate(multiply_coordinate(g, c), c); };
    Complex first, second;
    if (c == 2) {
      first = detail::sandwich(f, id, x1);
      second = detail::sandwich(f, id, x2);
    } else {
      first = detail::sandwich(f, x1, id);
      second = detail::sandwich(f, x2, id);
    }
    m.centroid[c] = first.real() / nrm;
    m.widths[c] = std::sqrt(std::max(0.0, second.real() / nrm - m.centroid[c] * m.centroid[c]));
  }
  return m;
}

/// Closed-form state sampled as separable factors: one term for psi0, two for psi1.
inline SeparableField sample_separable(const ClosedForm& cf, double t, const GridSpec& transverse,
                                       const GridSpec& axial, int oam, std::string scenario = {}) {
  transverse.validate();
  axial.validate();
  SeparableField out;
  out.time = t;
  out.scenario = std::move(scenario);
  auto xy = sample([&](const Vec3& r) { return cf.transverse(r[0], r[1], t); }, transverse, t);
  auto z = sample([&](const Vec3& r) { return cf.axial(r[2], t); }, axial, t);
  if (oam == 0) {
    out.terms.push_back({std::move(xy), std::move(z)});
    return out;
  }
  const double s2 = cf.beam().sigma * cf.beam().sigma;
  auto fxy = sample([&](const Vec3& r) { return cf.f_transverse(r[0], r[1], t) / s2 * cf.transverse(r[0], r[1], t); },
                    transverse, t);
  auto fz = sample([&](const Vec3& r) { return cf.f_axial(r[2], t) / s2 * cf.axial(r[2], t); }, axial, t);
  out.terms.push_back({std::move(fxy), std::move(z)});
  out.terms.push_back({std::move(xy), std::move(fz)});
  return out;
}

}  // namespace vortex
