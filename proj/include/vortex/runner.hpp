#pragma once

// Scenario runs: simulate writes frames and a manifest into a run directory,
// diagnose rebuilds the frames from it and writes the series and report.

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vortex/config.hpp"
#include "vortex/diagnostics.hpp"
#include "vortex/io.hpp"
#include "vortex/oracle.hpp"
#include "vortex/separable.hpp"

#ifndef VORTEX_VERSION
#define VORTEX_VERSION "unknown"
#endif

namespace vortex {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr const char* kManifestName = "manifest.json";

/// Progress callback: frame index and total.
using Progress = std::function<void(int, int)>;

namespace detail {

inline std::string frame_stem(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d", k);
  return buf;
}

/// Attach the frame index to solver errors.
template <class Fn>
auto at_frame(int k, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "frame " + std::to_string(k) + ": " + std::string(e.what()));
  }
}

inline int even_at_least(double v) {
  int n = static_cast<int>(std::ceil(v));
  if (n % 2) ++n;
  return std::max(n, 8);
}

// Amplitude below 1e-10 of the peak: exp(-x^2 / 2 w^2) < 1e-10.
inline constexpr double kSupportWidths = 7.0;

/// Source grid for a quadrature run: the packet's support box on a lattice fine
/// enough that the lattice images of the rectangle rule leave the target box
/// after the interval t (see check_quadrature_aliasing).
inline GridSpec quadrature_source(const GridSpec& target, const Vec3& support, double t, const PhysicalParams& p) {
  GridSpec g = target;
  double reach2 = 0.0;
  for (int a = 0; a < g.rank; ++a) {
    const double d = target.hi[a] + support[g.axes[a]];
    reach2 += d * d;
  }
  const double w = std::abs(cyclotron_frequency(p));
  for (int a = 0; a < g.rank; ++a) {
    const double chord = g.axes[a] == 2 || w == 0.0 ? t : 2.0 / w * std::abs(std::sin(0.5 * w * t));
    // images travel v * chord with v = 2 pi hbar / (m h); keep 10% headroom
    const double h_alias = 2.0 * std::numbers::pi * p.hbar * chord / (p.mass * 1.1 * std::sqrt(reach2));
    const double h = std::min(target.spacing(a), h_alias);
    const double half = support[g.axes[a]];
    g.n[a] = even_at_least(2.0 * half / h);
    g.lo[a] = -half;
    g.hi[a] = half;
  }
  return g;
}

inline Vec3 support_box(const BeamParams& b) {
  const double s = kSupportWidths;
  if (b.axis == Axis::Perpendicular) return {s * b.sigma, s * b.length, s * b.sigma};
  return {s * b.sigma, s * b.sigma, s * b.length};
}

inline SeparableField initial_field(const ScenarioConfig& c, const GridSpec& transverse, const GridSpec& axial) {
  return sample_separable(c.closed_form(), 0.0, transverse, axial, c.beam.oam, c.scenario_id());
}

}  // namespace detail

/// Frames of a run in memory, computed with the configured method.
inline std::vector<SeparableField> compute_frames(const ScenarioConfig& c, const Progress& progress = {}) {
  c.validate();
  const auto tg = c.transverse_grid();
  const auto ag = c.axial_grid();
  const int n = c.time.frame_count;
  std::vector<SeparableField> frames;
  frames.reserve(n);
  const auto cf = c.closed_form();
  for (int k = 0; k < n; ++k) {
    const double t = c.time.frame_time(k);
    frames.push_back(detail::at_frame(k, [&] {
      if (k == 0) return detail::initial_field(c, tg, ag);
      switch (c.method) {
        case RunMethod::Analytic:
          return sample_separable(cf, t, tg, ag, c.beam.oam, c.scenario_id());
        case RunMethod::SplitStep: {
          // Frame to frame; the frame-time rotation composes exactly.
          auto f = propagate_splitstep(frames.back(), t - frames.back().time, c.params, c.solver);
          f.time = t;
          return f;
        }
        case RunMethod::Quadrature: {
          const Vec3 support = detail::support_box(c.beam);
          const auto src = detail::initial_field(c, detail::quadrature_source(tg, support, t, c.params),
                                                 detail::quadrature_source(ag, support, t, c.params));
          auto f = propagate_quadrature(src, t, c.params, tg, ag, c.solver);
          f.time = t;
          return f;
        }
      }
      throw Error(ErrorCode::InvalidConfig, "unknown method");
    }));
    if (progress) progress(k, n);
  }
  return frames;
}

// -- simulate --------------------------------------------------------------------

struct RunResult {
  fs::path directory;
  std::vector<std::string> files;  // relative paths, sorted
};

namespace detail {

class RunWriter {
 public:
  explicit RunWriter(fs::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& rel, std::string_view bytes) {
    write_bytes(dir_ / rel, bytes);
    files_[rel] = {sha256_hex(bytes), bytes.size()};
  }

  Json listing() const {
    Json a = Json::array();
    for (const auto& [path, info] : files_) a.push_back({{"path", path}, {"sha256", info.first}, {"bytes", info.second}});
    return a;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (const auto& [path, info] : files_) v.push_back(path);
    return v;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

inline Json derived_values(const ScenarioConfig& c) {
  const double w = cyclotron_frequency(c.params);
  Json d;
  d["omega"] = w;
  d["tau"] = w != 0.0 ? Json(period(c.params)) : Json(nullptr);
  d["momentum"] = c.beam.momentum;
  d["orbit_radius"] = c.beam.radius;
  return d;
}

}  // namespace detail

/// Writes config.txt, per-frame slices (CSV), heatmaps (PPM), the separable
/// state factors and manifest.json into `out`.
inline RunResult run_simulate(const ScenarioConfig& c, const fs::path& out, const Progress& progress = {}) {
  c.validate();
  const auto frames = compute_frames(c, progress);
  fs::create_directories(out);
  detail::RunWriter w(out);
  w.put("config.txt", c.canonical_text());

  Json frame_list = Json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    const std::string stem = detail::frame_stem(static_cast<int>(k));
    Json entry;
    entry["index"] = k;
    entry["time"] = f.time;
    Json states = Json::array();
    for (std::size_t i = 0; i < f.terms.size(); ++i) {
      const std::string base = "state/" + stem + "_term" + std::to_string(i);
      w.put(base + "_xy.bin", state_bytes(f.terms[i].transverse));
      w.put(base + "_z.bin", state_bytes(f.terms[i].axial));
      states.push_back({{"transverse", base + "_xy.bin"}, {"axial", base + "_z.bin"}});
    }
    entry["terms"] = states;
    std::vector<std::pair<std::string, ComplexField>> slices;
    slices.emplace_back("xy", f.slice_xy(0.0));
    if (c.beam.axis == Axis::Parallel) slices.emplace_back("xz", f.slice_vertical(0, 0.0));
    Json slice_files = Json::array();
    for (const auto& [plane, s] : slices) {
      if (c.outputs.slices) {
        const std::string name = "frames/" + stem + "_" + plane + ".csv";
        w.put(name, slice_csv(s, 0.0));
        slice_files.push_back(name);
      }
      if (c.outputs.heatmaps) {
        const std::string base = "frames/" + stem + "_" + plane;
        w.put(base + "_abs2.ppm", heatmap_ppm(s, Heatmap::Intensity));
        w.put(base + "_re.ppm", heatmap_ppm(s, Heatmap::RealPart));
        slice_files.push_back(base + "_abs2.ppm");
        slice_files.push_back(base + "_re.ppm");
      }
    }
    entry["outputs"] = slice_files;
    frame_list.push_back(entry);
  }

  Json m;
  m["format_version"] = kFormatVersion;
  m["version"] = VORTEX_VERSION;
  m["scenario"] = c.scenario_id();
  m["config"] = Json(c.to_key_values());
  m["derived"] = detail::derived_values(c);
  m["frames"] = frame_list;
  m["files"] = w.listing();
  write_bytes(out / kManifestName, m.dump(2) + "\n");
  return {out, w.names()};
}

// -- diagnose ----------------------------------------------------------------------

struct RunDirectory {
  ScenarioConfig config;
  std::vector<SeparableField> frames;
  std::string manifest_sha256;
};

/// Reads a run directory, checking every listed file against its hash.
inline RunDirectory load_run(const fs::path& dir) {
  const fs::path mpath = dir / kManifestName;
  if (!fs::exists(mpath)) throw Error(ErrorCode::MissingFrames, "no manifest in " + dir.string());
  const std::string mtext = read_text(mpath);
  Json m;
  try {
    m = Json::parse(mtext);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (m.value("format_version", -1) != kFormatVersion)
    throw Error(ErrorCode::ManifestMismatch, "unsupported manifest format_version");

  std::map<std::string, std::string> hashes;
  for (const auto& f : m.at("files")) hashes[f.at("path").get<std::string>()] = f.at("sha256").get<std::string>();
  std::map<std::string, std::string> contents;
  for (const auto& [path, hash] : hashes) {
    if (path.find("..") != std::string::npos) throw Error(ErrorCode::ManifestMismatch, "bad path " + path);
    if (!fs::exists(dir / path)) throw Error(ErrorCode::MissingFrames, "missing " + path);
    std::string bytes = read_text(dir / path);
    if (sha256_hex(bytes) != hash) throw Error(ErrorCode::ManifestMismatch, "hash mismatch for " + path);
    contents[path] = std::move(bytes);
  }

  RunDirectory run;
  run.manifest_sha256 = sha256_hex(mtext);
  if (!contents.count("config.txt")) throw Error(ErrorCode::MissingFrames, "manifest lacks config.txt");
  run.config = ScenarioConfig::parse(contents["config.txt"]);
  const auto& frames = m.at("frames");
  if (static_cast<int>(frames.size()) != run.config.time.frame_count)
    throw Error(ErrorCode::MissingFrames, "manifest lists " + std::to_string(frames.size()) + " of " +
                                              std::to_string(run.config.time.frame_count) + " frames");
  auto field = [&](const std::string& path) {
    auto it = contents.find(path);
    if (it == contents.end()) throw Error(ErrorCode::MissingFrames, "frame file not in manifest: " + path);
    return parse_state(it->second);
  };
  for (const auto& fr : frames) {
    SeparableField f;
    f.time = fr.at("time").get<double>();
    f.scenario = run.config.scenario_id();
    for (const auto& term : fr.at("terms"))
      f.terms.push_back({field(term.at("transverse").get<std::string>()), field(term.at("axial").get<std::string>())});
    if (f.terms.empty()) throw Error(ErrorCode::MissingFrames, "frame without state");
    run.frames.push_back(std::move(f));
  }
  return run;
}

inline DiagnosticSeries measure_series(const std::vector<SeparableField>& frames, int oam, const PhysicalParams& p,
                                       const Progress& progress = {}) {
  DiagnosticSeries s;
  std::optional<double> prev;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    auto rec = detail::at_frame(static_cast<int>(k), [&] { return measure_frame(frames[k], oam, p, prev); });
    prev = rec.nodal_angle;
    s.frames.push_back(rec);
    if (progress) progress(static_cast<int>(k), static_cast<int>(frames.size()));
  }
  return s;
}

inline std::string series_csv(const DiagnosticSeries& s) {
  std::string out = "# format_version=" + std::to_string(kFormatVersion) + "\n";
  out += "t,norm,cx,cy,cz,wx,wy,wz,ly,lz,nodal_angle,winding,winding_margin\n";
  for (const auto& f : s.frames) {
    out += format_double(f.time) + "," + format_double(f.norm);
    for (double v : f.centroid) out += "," + format_double(v);
    for (double v : f.widths) out += "," + format_double(v);
    out += "," + format_double(f.ly) + "," + format_double(f.lz) + ",";
    if (f.nodal_angle) out += format_double(*f.nodal_angle);
    out += "," + std::to_string(f.winding) + "," + format_double(f.winding_margin) + "\n";
  }
  return out;
}

namespace detail {

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class Fn>
Json guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return Json{{"error", std::string(to_string(e.code()))}, {"detail", e.what()}};
  }
}

}  // namespace detail

inline Json diagnostics_report(const DiagnosticSeries& s, const ScenarioConfig& c) {
  const auto& p = c.params;
  Json r;
  r["format_version"] = kFormatVersion;
  r["scenario"] = c.scenario_id();
  r["method"] = to_string(c.method);
  r["frames"] = s.frames.size();
  if (c.beam.oam == 1) {
    r["precession"] = detail::guarded([&] {
      const auto fit = precession_rate(s, p);
      return Json{{"rate", fit.rate},
                  {"rate_error", fit.rate_error},
                  {"g_factor", detail::finite_or_null(fit.g_factor)},
                  {"samples", fit.samples}};
    });
    r["alignment"] = detail::guarded([&] { return Json(oam_alignment(s, p)); });
    if (!s.frames.empty() && s.frames.front().nodal_angle && s.frames.back().nodal_angle)
      r["nodal_advance"] = *s.frames.back().nodal_angle - *s.frames.front().nodal_angle;
  }
  r["breathing"] = detail::guarded([&] {
    const auto b = breathing_period(s, p);
    const double w = cyclotron_frequency(p);
    return Json{{"period", detail::finite_or_null(b.period)},
                {"period_over_tau", w != 0.0 ? detail::finite_or_null(b.period / period(p)) : Json(nullptr)},
                {"relative_swing", b.relative_swing},
                {"flat", b.flat},
                {"periodic", b.periodic}};
  });
  r["conservation"] = detail::guarded([&] {
    const auto cr = conservation_report(s, c.beam, p);
    Json j{{"max_norm_error", cr.max_norm_error}};
    if (c.beam.axis == Axis::Parallel) j["max_lz_drift"] = cr.max_lz_drift;
    j["orbit_residual"] = cr.orbit_residual ? Json(*cr.orbit_residual) : Json(nullptr);
    return j;
  });
  std::vector<int> windings;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& f : s.frames) windings.push_back(f.winding), margin = std::min(margin, f.winding_margin);
  const bool constant = std::adjacent_find(windings.begin(), windings.end(), std::not_equal_to<>()) == windings.end();
  r["winding"] = {{"values", windings},
                  {"constant", constant},
                  {"value", constant && !windings.empty() ? Json(windings.front()) : Json(nullptr)},
                  {"min_margin", detail::finite_or_null(margin)}};
  return r;
}

/// Recomputes the diagnostics of a run directory: writes series.csv and
/// report.json next to the manifest. Same inputs give the same bytes.
inline Json run_diagnose(const fs::path& dir, const Progress& progress = {}) {
  const auto run = load_run(dir);
  const auto series = measure_series(run.frames, run.config.beam.oam, run.config.params, progress);
  const std::string csv = series_csv(series);
  write_bytes(dir / "series.csv", csv);
  Json r = diagnostics_report(series, run.config);
  r["manifest_sha256"] = run.manifest_sha256;
  r["files"] = Json::array({{{"path", "series.csv"}, {"sha256", sha256_hex(csv)}, {"bytes", csv.size()}}});
  write_bytes(dir / "report.json", r.dump(2) + "\n");
  return r;
}

/// Simulate, then diagnose when the config asks for the series or report.
inline RunResult run_scenario(const ScenarioConfig& c, const fs::path& out, const Progress& progress = {}) {
  auto r = run_simulate(c, out, progress);
  if (c.outputs.series || c.outputs.report) run_diagnose(out);
  return r;
}

}  // namespace vortex
