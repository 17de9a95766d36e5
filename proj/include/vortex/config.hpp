#pragma once

// Scenario configuration: what to simulate, on which grids, with which method,
// and which artifacts to write. Read from and written to the key = value format
// in io.hpp; the written form is canonical (resolved values, sorted keys).

#include <cmath>
#include <optional>
#include <set>
#include <string>

#include "vortex/closed_form.hpp"
#include "vortex/io.hpp"
#include "vortex/oracle.hpp"
#include "vortex/params.hpp"
#include "vortex/separable.hpp"

namespace vortex {

enum class RunMethod { Analytic, Quadrature, SplitStep };

inline const char* to_string(RunMethod m) {
  switch (m) {
    case RunMethod::Analytic: return "analytic";
    case RunMethod::Quadrature: return "quadrature";
    case RunMethod::SplitStep: return "splitstep";
  }
  return "analytic";
}

inline RunMethod parse_method(std::string_view s) {
  if (s == "analytic") return RunMethod::Analytic;
  if (s == "quadrature") return RunMethod::Quadrature;
  if (s == "splitstep" || s == "split-step") return RunMethod::SplitStep;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(s) + "' (analytic, quadrature, splitstep)");
}

inline Axis parse_scenario(std::string_view s) {
  if (s == "perp") return Axis::Perpendicular;
  if (s == "parallel") return Axis::Parallel;
  throw Error(ErrorCode::InvalidConfig, "unknown scenario '" + std::string(s) + "' (perp, parallel)");
}

/// Output grids: an xy plane for the transverse factors and a z line for the
/// axial ones, both centred on the origin.
struct GridConfig {
  double transverse_half = 24.0;
  int transverse_points = 256;
  double axial_half = 32.0;
  int axial_points = 256;

  GridSpec transverse() const {
    return GridSpec::plane(0, 1, transverse_half, transverse_half, transverse_points, transverse_points);
  }
  GridSpec axial() const { return GridSpec::line(2, axial_half, axial_points); }
};

struct OutputFlags {
  bool slices = true;
  bool heatmaps = true;
  bool series = false;  // run the diagnostics after simulating
  bool report = false;
};

struct ScenarioConfig {
  PhysicalParams params = PhysicalParams::natural();
  BeamParams beam = BeamParams::perpendicular(PhysicalParams::natural(), 1.0, 2.0, 8.0, 1);
  TimeSpec time = TimeSpec::one_period(PhysicalParams::natural(), 16);
  GridConfig grid;
  RunMethod method = RunMethod::Analytic;
  SolverConfig solver;
  OutputFlags outputs;

  /// Desk-scale defaults: R = 8, L = 2, sigma = 1 in natural units, one period
  /// in 16 frames. Parallel packets move at momentum 2 along the field.
  static ScenarioConfig defaults(Axis axis = Axis::Perpendicular, int oam = 1) {
    ScenarioConfig c;
    c.beam = axis == Axis::Perpendicular ? BeamParams::perpendicular(c.params, 1.0, 2.0, 8.0, oam)
                                         : BeamParams::parallel(1.0, 2.0, 2.0);
    c.beam.oam = oam;
    return c;
  }

  std::string scenario_id() const {
    return std::string(beam.axis == Axis::Perpendicular ? "perp" : "parallel") + "-l" + std::to_string(beam.oam);
  }

  ClosedForm closed_form() const { return ClosedForm(params, beam, time.guard); }

  void validate() const {
    params.validate();
    beam.validate();
    time.validate();
    solver.validate();
    transverse_grid().validate();
    axial_grid().validate();
    if (beam.axis == Axis::Parallel && beam.oam != 0)
      throw Error(ErrorCode::InvalidConfig, "OAM packets are defined for perpendicular propagation only");
    if (method == RunMethod::Analytic) return;
    // Carrier must sit well inside the band the grid resolves.
    const double k = std::abs(beam.momentum) / params.hbar;
    const double h = beam.axis == Axis::Perpendicular ? transverse_grid().spacing(0) : axial_grid().spacing(0);
    if (k * h > (1.0 - solver.margin) * std::numbers::pi)
      throw Error(ErrorCode::ResolutionTooCoarse, "grid spacing " + format_double(h) + " cannot carry momentum " +
                                                      format_double(beam.momentum));
    if (method == RunMethod::SplitStep) {
      // The initial factors must already sit inside the grid's band.
      const auto f0 = sample_separable(closed_form(), 0.0, transverse_grid(), axial_grid(), beam.oam);
      for (const auto& t : f0.terms) {
        check_aliasing(t.transverse, solver);
        check_aliasing(t.axial, solver);
      }
    }
    if (method == RunMethod::Quadrature) {
      const double w = cyclotron_frequency(params);
      for (int k2 = 1; k2 < time.frame_count; ++k2) {
        const double t = time.frame_time(k2);
        if (w != 0.0 && std::abs(std::sin(0.5 * w * t)) < kCausticFloor)
          throw Error(ErrorCode::CausticSingular, "frame " + std::to_string(k2) + " sits on a caustic");
      }
    }
  }

  GridSpec transverse_grid() const { return grid.transverse(); }
  GridSpec axial_grid() const { return grid.axial(); }

  /// Canonical key = value form.
  KeyValues to_key_values() const {
    KeyValues kv;
    kv["units"] = "natural";
    kv["params.mass"] = format_double(params.mass);
    kv["params.charge"] = format_double(params.charge);
    kv["params.hbar"] = format_double(params.hbar);
    kv["params.field"] = format_double(params.field);
    kv["scenario"] = beam.axis == Axis::Perpendicular ? "perp" : "parallel";
    kv["beam.sigma"] = format_double(beam.sigma);
    kv["beam.length"] = format_double(beam.length);
    kv["beam.radius"] = format_double(beam.radius);
    kv["beam.momentum"] = format_double(beam.momentum);
    kv["beam.oam"] = std::to_string(beam.oam);
    kv["time.t_max"] = format_double(time.t_max);
    kv["time.frames"] = std::to_string(time.frame_count);
    kv["time.guard"] = format_double(time.guard);
    kv["grid.transverse_half"] = format_double(grid.transverse_half);
    kv["grid.transverse_points"] = std::to_string(grid.transverse_points);
    kv["grid.axial_half"] = format_double(grid.axial_half);
    kv["grid.axial_points"] = std::to_string(grid.axial_points);
    kv["method"] = to_string(method);
    kv["solver.steps"] = std::to_string(solver.steps);
    kv["solver.accuracy"] = format_double(solver.accuracy);
    kv["solver.margin"] = format_double(solver.margin);
    kv["outputs.slices"] = outputs.slices ? "true" : "false";
    kv["outputs.heatmaps"] = outputs.heatmaps ? "true" : "false";
    kv["outputs.series"] = outputs.series ? "true" : "false";
    kv["outputs.report"] = outputs.report ? "true" : "false";
    return kv;
  }

  std::string canonical_text() const { return serialize_key_values(to_key_values()); }

  /// Missing keys take the defaults. With `units = si` the physical constants,
  /// lengths, momentum and times are SI values and get converted to natural
  /// units (magnetic length, m = e = hbar = 1).
  static ScenarioConfig from_key_values(const KeyValues& kv) {
    static const std::set<std::string> known{
        "units",          "params.mass",     "params.charge",        "params.hbar",           "params.field",
        "scenario",       "beam.sigma",      "beam.length",          "beam.radius",           "beam.momentum",
        "beam.oam",       "time.t_max",      "time.periods",         "time.frames",           "time.guard",
        "grid.transverse_half", "grid.transverse_points", "grid.axial_half", "grid.axial_points", "method",
        "solver.steps",   "solver.accuracy", "solver.margin",        "outputs.slices",        "outputs.heatmaps",
        "outputs.series", "outputs.report"};
    for (const auto& [k, v] : kv)
      if (!known.count(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "'");
    auto get = [&](const std::string& k) -> std::optional<std::string> {
      auto it = kv.find(k);
      if (it == kv.end()) return std::nullopt;
      return it->second;
    };
    auto num = [&](const std::string& k, double fallback) {
      auto v = get(k);
      return v ? parse_double(*v, k) : fallback;
    };
    auto integer = [&](const std::string& k, int fallback) {
      auto v = get(k);
      return v ? parse_int(*v, k) : fallback;
    };
    auto flag = [&](const std::string& k, bool fallback) {
      auto v = get(k);
      return v ? parse_bool(*v, k) : fallback;
    };

    const std::string units = get("units").value_or("natural");
    if (units != "natural" && units != "si") throw Error(ErrorCode::InvalidConfig, "units must be natural or si");
    const bool si = units == "si";

    PhysicalParams p = si ? PhysicalParams{codata::electron_mass, codata::elementary_charge, codata::hbar, 1.0}
                          : PhysicalParams::natural();
    p.mass = num("params.mass", p.mass);
    p.charge = num("params.charge", p.charge);
    p.hbar = num("params.hbar", p.hbar);
    p.field = num("params.field", p.field);
    p.validate();
    UnitScale scale;
    if (si) {
      scale = natural_scale(p);
      p = to_natural(p, scale);
    }
    const double len = scale.length;

    const Axis axis = parse_scenario(get("scenario").value_or("perp"));
    const int oam = integer("beam.oam", axis == Axis::Perpendicular ? 1 : 0);
    ScenarioConfig c = defaults(axis, axis == Axis::Perpendicular ? oam : 0);
    c.params = p;
    c.beam.oam = oam;
    c.beam.sigma = num("beam.sigma", c.beam.sigma * len) / len;
    c.beam.length = num("beam.length", c.beam.length * len) / len;
    if (axis == Axis::Perpendicular) {
      c.beam.radius = num("beam.radius", c.beam.radius * len) / len;
      c.beam.momentum = orbit_momentum(p, c.beam.radius);
    } else {
      c.beam.radius = 0.0;
    }
    if (auto m = get("beam.momentum")) c.beam.momentum = parse_double(*m, "beam.momentum") / scale.momentum();

    const double w = cyclotron_frequency(p);
    const double tau = w != 0.0 ? period(p) : 0.0;
    c.time.frame_count = integer("time.frames", 16);
    if (auto t = get("time.t_max")) {
      c.time.t_max = parse_double(*t, "time.t_max") / scale.time();
    } else {
      if (w == 0.0) throw Error(ErrorCode::InvalidConfig, "without a field, time.t_max must be given");
      c.time.t_max = num("time.periods", 1.0) * tau;
    }
    c.time.guard = get("time.guard") ? num("time.guard", 0.0) / scale.time() : 1e-6 * (w != 0.0 ? tau : c.time.t_max);

    c.grid.transverse_half = num("grid.transverse_half", c.grid.transverse_half * len) / len;
    c.grid.transverse_points = integer("grid.transverse_points", c.grid.transverse_points);
    c.grid.axial_half = num("grid.axial_half", c.grid.axial_half * len) / len;
    c.grid.axial_points = integer("grid.axial_points", c.grid.axial_points);

    c.method = parse_method(get("method").value_or("analytic"));
    c.solver.steps = integer("solver.steps", c.solver.steps);
    c.solver.accuracy = num("solver.accuracy", c.solver.accuracy);
    c.solver.margin = num("solver.margin", c.solver.margin);

    c.outputs.slices = flag("outputs.slices", c.outputs.slices);
    c.outputs.heatmaps = flag("outputs.heatmaps", c.outputs.heatmaps);
    c.outputs.series = flag("outputs.series", c.outputs.series);
    c.outputs.report = flag("outputs.report", c.outputs.report);
    c.validate();
    return c;
  }

  static ScenarioConfig parse(std::string_view text) { return from_key_values(parse_key_values(text)); }
};

}  // namespace vortex
