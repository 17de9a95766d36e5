#pragma once

// Self-checks run by `vortexsim verify`. Each check compares a computed value
// with a limit and records the margin; failures are report entries, not
// exceptions. Checks that need a field are skipped (with a record) when the
// configured cyclotron frequency is zero.

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

#include "vortex/config.hpp"
#include "vortex/diagnostics.hpp"
#include "vortex/kernel.hpp"
#include "vortex/oracle.hpp"
#include "vortex/separable.hpp"

namespace vortex {

enum class CheckStatus { Pass, Fail, Skip };

inline const char* to_string(CheckStatus s) {
  return s == CheckStatus::Pass ? "pass" : s == CheckStatus::Fail ? "fail" : "skip";
}

struct CheckRecord {
  std::string suite;
  std::string name;
  CheckStatus status = CheckStatus::Skip;
  double value = 0.0;
  double limit = 0.0;
  bool at_most = true;  // value <= limit passes; otherwise value >= limit
  double margin = 0.0;  // positive when passing
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckRecord> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::Fail) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["passed"] = passed();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json e{{"suite", c.suite}, {"name", c.name}, {"status", to_string(c.status)}};
      if (c.status != CheckStatus::Skip) {
        e["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
        e["limit"] = c.limit;
        e["relation"] = c.at_most ? "<=" : ">=";
        e["margin"] = std::isfinite(c.margin) ? nlohmann::json(c.margin) : nlohmann::json(nullptr);
      }
      if (!c.detail.empty()) e["detail"] = c.detail;
      arr.push_back(e);
    }
    j["checks"] = arr;
    return j;
  }
};

/// Deliberate defects, used to show that the checks can fail.
enum class Mutation { None, BetaZ };

inline Mutation parse_mutation(std::string_view s) {
  if (s.empty() || s == "none") return Mutation::None;
  if (s == "beta_z") return Mutation::BetaZ;
  throw Error(ErrorCode::InvalidArgument, "unknown mutation '" + std::string(s) + "'");
}

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s{"kernel", "closedform", "oracle", "diagnostics"};
  return s;
}

namespace detail {

class Checker {
 public:
  Checker(VerifyReport& r, std::string suite, bool magnetic) : r_(r), suite_(std::move(suite)), magnetic_(magnetic) {}

  /// Runs `fn` (returning the value) and records value <= limit (or >=).
  template <class Fn>
  void check(const std::string& name, double limit, bool at_most, bool needs_field, Fn&& fn) {
    CheckRecord c{suite_, name, CheckStatus::Skip, 0.0, limit, at_most, 0.0, {}};
    if (needs_field && !magnetic_) {
      c.detail = "needs a nonzero field";
      r_.checks.push_back(c);
      return;
    }
    try {
      c.value = fn();
      c.margin = at_most ? limit - c.value : c.value - limit;
      c.status = std::isfinite(c.value) && c.margin >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail;
    } catch (const std::exception& e) {
      c.status = CheckStatus::Fail;
      c.value = std::numeric_limits<double>::quiet_NaN();
      c.margin = std::numeric_limits<double>::quiet_NaN();
      c.detail = e.what();
    }
    r_.checks.push_back(c);
  }

 private:
  VerifyReport& r_;
  std::string suite_;
  bool magnetic_;
};

/// Free spreading of exp(-z^2 / 2 s^2) written out from the Gaussian integral
/// sqrt(mu / 2 pi i) e^{i mu z^2 / 2} sqrt(2 pi beta) e^{beta alpha^2 / 2},
/// alpha = -i mu z. The correct beta is the inverse 1 / (1/s^2 - i mu); the
/// mutant uses 1/s^2 - i mu itself.
inline Complex axial_gaussian_integral(double z, double t, double s, const PhysicalParams& p, bool inverse) {
  const double mu = p.mass / (p.hbar * t);
  const Complex b = Complex{1.0 / (s * s), -mu};
  const Complex beta = inverse ? 1.0 / b : b;
  const Complex alpha{0.0, -mu * z};
  const double norm0 = 1.0 / std::sqrt(std::sqrt(std::numbers::pi) * s);
  return norm0 * std::sqrt(mu / (2.0 * std::numbers::pi)) * std::polar(1.0, -std::numbers::pi / 4.0 + 0.5 * mu * z * z) *
         std::sqrt(2.0 * std::numbers::pi * beta) * std::exp(0.5 * beta * alpha * alpha);
}

inline double max_free_deviation(double omega_t) {
  const PhysicalParams p{1.0, 1.0, 1.0, omega_t};
  const Vec3 src{0.3, -0.2, 0.1};
  const double v[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double worst = 0.0;
  for (double x : v)
    for (double y : v)
      for (double z : v) {
        const KernelPoint kp{{x, y, z}, 1.0, src, 0.0};
        const Complex kf = free_kernel(kp, p);
        worst = std::max(worst, std::abs(magnetic_kernel(kp, p) - kf) / std::abs(kf));
      }
  return worst;
}

inline GridSpec source_plane(const BeamParams& b) {
  return GridSpec::plane(0, 1, 9.0 * b.sigma, 7.5 * b.length, 96, 160);
}

}  // namespace detail

inline void verify_kernel(VerifyReport& r, const ScenarioConfig& c) {
  const bool magnetic = cyclotron_frequency(c.params) != 0.0;
  detail::Checker ck(r, "kernel", magnetic);
  ck.check("free_limit_deviation", 5e-3, true, true, [] { return detail::max_free_deviation(1e-3); });
  ck.check("free_limit_linear_decay", 0.2, true, true, [] {
    const double d2 = detail::max_free_deviation(1e-2), d3 = detail::max_free_deviation(1e-3),
                 d4 = detail::max_free_deviation(1e-4);
    return std::max(std::abs(d2 / d3 / 10.0 - 1.0), std::abs(d3 / d4 / 10.0 - 1.0));
  });
  ck.check("free_kernel_reference", 1e-14, true, false, [] {
    const Complex k = free_kernel({{1.0, 0.0, 0.0}, 1.0, {0.0, 0.0, 0.0}, 0.0}, PhysicalParams::natural());
    const Complex ref = std::pow(2.0 * std::numbers::pi, -1.5) * std::polar(1.0, -0.75 * std::numbers::pi + 0.5);
    return std::abs(k - ref) / std::abs(ref);
  });
  ck.check("caustic_rejected", 1.0, false, true, [&] {
    try {
      magnetic_kernel({{0.1, 0.2, 0.0}, period(c.params), {0.0, 0.0, 0.0}, 0.0}, c.params);
    } catch (const Error& e) {
      return e.code() == ErrorCode::CausticSingular ? 1.0 : 0.0;
    }
    return 0.0;
  });
}

inline void verify_closed_form(VerifyReport& r, const ScenarioConfig& c, Mutation mutation) {
  const bool magnetic = cyclotron_frequency(c.params) != 0.0;
  detail::Checker ck(r, "closedform", magnetic);
  const double t_ref = magnetic ? period(c.params) : c.time.t_max;
  const double t = 0.3 * t_ref;
  const double s = c.beam.sigma;
  const auto line = GridSpec::line(2, 16.0 * s, 512);
  auto quadrature_axial = [&] {
    const auto f0 = sample([&](const Vec3& r) { return std::exp(-r[2] * r[2] / (2 * s * s)) / std::sqrt(std::sqrt(std::numbers::pi) * s); },
                           GridSpec::line(2, 8.0 * s, 1280));
    return propagate_quadrature(f0, t, c.params, line);
  };
  auto formula = [&](bool inverse) {
    return sample([&](const Vec3& r) { return detail::axial_gaussian_integral(r[2], t, s, c.params, inverse); }, line);
  };
  const bool inverse = mutation != Mutation::BetaZ;
  ck.check("axial_factor_vs_quadrature", 1e-6, true, false, [&] { return relative_l2(formula(inverse), quadrature_axial()); });
  ck.check("beta_z_mutant_rejected", 1e-2, false, false, [&] { return relative_l2(formula(false), quadrature_axial()); });
  ck.check("library_axial_matches_integral", 1e-12, true, false, [&] {
    BeamParams b = c.beam;
    b.axis = Axis::Perpendicular;
    const ClosedForm cf(c.params, b, c.time.guard);
    const auto lib = sample([&](const Vec3& r) { return cf.axial(r[2], t); }, line);
    return relative_l2(lib, formula(inverse));
  });
  if (c.beam.axis == Axis::Perpendicular) {
    ck.check("norm_preserved", 1e-8, true, false, [&] {
      const auto cf = c.closed_form();
      const auto f0 = sample_separable(cf, 0.0, c.transverse_grid(), c.axial_grid(), c.beam.oam);
      const auto f1 = sample_separable(cf, t, c.transverse_grid(), c.axial_grid(), c.beam.oam);
      return std::abs(norm(f1) / norm(f0) - 1.0);
    });
  }
  // Just above the guard the closed form leaves the initial state linearly in t.
  ck.check("initial_limit_linear", 0.05, true, false, [&] {
    const auto cf = c.closed_form();
    auto deviation = [&](double tt) {
      double worst = 0.0;
      for (double y : {-1.0, 0.0, 0.7})
        for (double x : {-0.8, 0.0, 1.1}) {
          const Complex b = cf.initial_transverse(x, y);
          worst = std::max(worst, std::abs(cf.transverse(x, y, tt) - b) / std::abs(b));
        }
      return worst;
    };
    return std::abs(deviation(20.0 * c.time.guard) / deviation(2.0 * c.time.guard) / 10.0 - 1.0);
  });
}

inline void verify_oracle(VerifyReport& r, const ScenarioConfig& c) {
  const bool magnetic = cyclotron_frequency(c.params) != 0.0;
  detail::Checker ck(r, "oracle", magnetic);
  const auto& p = c.params;
  BeamParams b0 = c.beam;
  b0.axis = Axis::Perpendicular;
  b0.oam = 0;
  if (magnetic) b0.momentum = orbit_momentum(p, b0.radius);
  const double t = magnetic ? 0.3 * period(p) : 0.3 * c.time.t_max;
  const auto plane = c.transverse_grid();
  const ClosedForm cf0(p, b0, c.time.guard);
  auto closed_xy = [&](const ClosedForm& cf) {
    return sample([&](const Vec3& r) { return cf.transverse(r[0], r[1], t); }, plane, t);
  };
  ck.check("quadrature_vs_closed_form", 1e-6, true, true, [&] {
    const auto src = sample([&](const Vec3& r) { return cf0.initial_transverse(r[0], r[1]); }, detail::source_plane(b0));
    return relative_l2(propagate_quadrature(src, t, p, plane), closed_xy(cf0));
  });
  ck.check("splitstep_vs_closed_form_psi1", 1e-3, true, true, [&] {
    BeamParams b1 = b0;
    b1.oam = 1;
    const ClosedForm cf1(p, b1, c.time.guard);
    const auto f0 = sample_separable(cf1, 0.0, plane, c.axial_grid(), 1);
    return relative_l2(propagate_splitstep(f0, t, p, c.solver), sample_separable(cf1, t, plane, c.axial_grid(), 1));
  });
  ck.check("splitstep_order", 0.5, true, true, [&] {
    const auto f0 = sample([&](const Vec3& r) { return cf0.initial_transverse(r[0], r[1]); }, plane);
    const auto table = convergence_study(f0, t, p, {16, 32, 64, 128});
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < table.rows.size(); ++i) worst = std::max(worst, std::abs(table.rows[i].ratio - 4.0));
    return table.monotone ? worst : std::numeric_limits<double>::infinity();
  });
  ck.check("free_control", 1e-8, true, false, [&] {
    const auto p0 = PhysicalParams{p.mass, p.charge, p.hbar, 0.0};
    const double tf = 2.0 * p.mass / p.hbar;
    const auto g = GridSpec::plane(0, 1, 24, 24, 256, 256);
    auto at = [&](double tt) {
      return sample([&](const Vec3& r) { return free_gaussian_1d(r[0], tt, 1.0, 0.0, p0) * free_gaussian_1d(r[1], tt, 2.0, 3.0, p0); }, g);
    };
    SolverConfig cfg;
    cfg.steps = 256;
    return relative_l2(propagate_splitstep(at(0.0), tf, p0, cfg), at(tf));
  });
  const auto test_field = sample(
      [](const Vec3& r) { return std::exp(Complex{-(r[0] * r[0] + r[1] * r[1]) / 3.0, 0.7 * r[0] - 0.2 * r[1]}); },
      GridSpec::plane(0, 1, 12, 12, 128, 128));
  ck.check("hamiltonian_expansion", 1e-8, true, true, [&] { return adjudicate_hamiltonian(test_field, p).expansion_residual; });
  ck.check("hamiltonian_printed_rejected", 1e-2, false, true,
           [&] { return adjudicate_hamiltonian(test_field, p).printed_residual; });
  ck.check("classical_orbit_circle", 1e-9, true, true, [&] {
    const double w = cyclotron_frequency(p), R = std::max(b0.radius, 1.0);
    std::vector<double> ts;
    for (int k = 1; k <= 16; ++k) ts.push_back(k * period(p) / 16);
    const auto orbit = classical_orbit(p, {0, 0, 0}, {0, R * w, 0}, ts);
    double worst = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k)
      worst = std::max(worst, norm(orbit[k] - Vec3{-R + R * std::cos(w * ts[k]), R * std::sin(w * ts[k]), 0.0}) / R);
    return worst;
  });
}

inline void verify_diagnostics(VerifyReport& r, const ScenarioConfig& c) {
  const bool magnetic = cyclotron_frequency(c.params) != 0.0;
  detail::Checker ck(r, "diagnostics", magnetic);
  const auto& p = c.params;
  BeamParams b1 = c.beam;
  b1.axis = Axis::Perpendicular;
  b1.oam = 1;
  if (magnetic) b1.momentum = orbit_momentum(p, b1.radius);
  const ClosedForm cf1(p, b1, c.time.guard);
  BeamParams b0 = b1;
  b0.oam = 0;
  const ClosedForm cf0(p, b0, c.time.guard);
  const auto plane = c.transverse_grid();
  const auto line = c.axial_grid();

  DiagnosticSeries s1;
  if (magnetic) {
    const double tau = period(p);
    std::optional<double> prev;
    for (int k = 0; k < 16; ++k) {
      const double t = tau * (0.05 + 0.4 * k / 15.0);
      auto rec = measure_frame(sample_separable(cf1, t, plane, line, 1), 1, p, prev);
      prev = rec.nodal_angle;
      s1.frames.push_back(rec);
    }
  }
  ck.check("g_factor", 0.01, true, true, [&] { return std::abs(precession_rate(s1, p).g_factor - 1.0); });
  ck.check("winding_psi1", 0.0, true, true, [&] {
    double bad = 0;
    for (const auto& f : s1.frames) bad += f.winding != 1;
    return bad;
  });
  ck.check("norm_psi1", 1e-8, true, true, [&] {
    double worst = 0.0;
    for (const auto& f : s1.frames) worst = std::max(worst, std::abs(f.norm / s1.frames.front().norm - 1.0));
    return worst;
  });
  ck.check("winding_psi0", 0.0, true, false, [&] {
    const double t_ref = magnetic ? period(p) : c.time.t_max;
    double bad = 0;
    for (double frac : {0.1, 0.3, 0.45})
      bad += measure_frame(sample_separable(cf0, frac * t_ref, plane, line, 0), 0, p).winding != 0;
    return bad;
  });
  ck.check("nodal_half_turn", 0.03, true, true, [&] {
    const double tau = period(p);
    double angle = fit_nodal_angle(sample_separable(cf1, 0.0, plane, line, 1).slice_xy(0.0)).angle;
    const double start = angle;
    for (int k = 1; k <= 16; ++k)
      angle = unwrap_line_angle(angle, fit_nodal_angle(sample_separable(cf1, k * tau / 16, plane, line, 1).slice_xy(0.0)).angle);
    return std::abs(angle - start - std::numbers::pi);
  });
}

/// Runs the named suites (all when empty) with the physical constants and
/// packet geometry of `c`.
inline VerifyReport run_verify(const ScenarioConfig& c, const std::vector<std::string>& suites = {},
                               Mutation mutation = Mutation::None) {
  std::set<std::string> want(suites.begin(), suites.end());
  for (const auto& s : want)
    if (std::find(verify_suites().begin(), verify_suites().end(), s) == verify_suites().end())
      throw Error(ErrorCode::InvalidArgument, "unknown suite '" + s + "'");
  auto on = [&](const char* s) { return want.empty() || want.count(s); };
  VerifyReport r;
  if (on("kernel")) verify_kernel(r, c);
  if (on("closedform")) verify_closed_form(r, c, mutation);
  if (on("oracle")) verify_oracle(r, c);
  if (on("diagnostics")) verify_diagnostics(r, c);
  return r;
}

}  // namespace vortex
