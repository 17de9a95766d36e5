// vortexsim: simulate, verify and diagnose electron vortex packets in a
// uniform magnetic field.
//
// Exit status: 0 success, 1 verification failures, 2 bad arguments or config,
// 3 runtime errors.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vortex/runner.hpp"
#include "vortex/verify.hpp"

using namespace vortex;

namespace {

struct Overrides {
  std::string config;
  std::string method;
  std::optional<int> frames;
  std::string grid;
  std::string scenario;
  std::optional<int> oam;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value scenario file");
  cmd->add_option("--method", o.method, "analytic | quadrature | splitstep");
  cmd->add_option("--frames", o.frames, "number of frames");
  cmd->add_option("--grid", o.grid, "points per axis: N, or NxM for transverse x axial");
  cmd->add_option("--scenario", o.scenario, "perp | parallel");
  cmd->add_option("--oam", o.oam, "0 | 1");
}

// Command-line flags override the file; everything is re-validated afterwards.
ScenarioConfig load_config(const Overrides& o) {
  KeyValues kv;
  if (!o.config.empty()) kv = parse_key_values(read_text(o.config));
  if (!o.scenario.empty()) {
    parse_scenario(o.scenario);
    kv["scenario"] = o.scenario;
  }
  if (o.oam) kv["beam.oam"] = std::to_string(*o.oam);
  else if (!o.scenario.empty() && !kv.count("beam.oam")) kv["beam.oam"] = o.scenario == "parallel" ? "0" : "1";
  if (!o.method.empty()) kv["method"] = o.method;
  if (o.frames) kv["time.frames"] = std::to_string(*o.frames);
  if (!o.grid.empty()) {
    const auto x = o.grid.find('x');
    const std::string a = o.grid.substr(0, x), b = x == std::string::npos ? a : o.grid.substr(x + 1);
    parse_int(a, "--grid");
    parse_int(b, "--grid");
    kv["grid.transverse_points"] = a;
    kv["grid.axial_points"] = b;
  }
  return ScenarioConfig::from_key_values(kv);
}

Progress stderr_progress(const char* what, bool quiet) {
  if (quiet) return {};
  return [what](int k, int n) { std::cerr << what << " frame " << k + 1 << "/" << n << "\r" << (k + 1 == n ? "\n" : "") << std::flush; };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electron vortex packets in a uniform magnetic field"};
  app.set_version_flag("--version", VORTEX_VERSION);
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no progress output");

  Overrides sim;
  std::string sim_out = "run";
  auto* simulate = app.add_subcommand("simulate", "propagate a packet and write frames and a manifest");
  add_config_flags(simulate, sim);
  simulate->add_option("--out", sim_out, "run directory");

  Overrides ver;
  std::vector<std::string> suites;
  std::string mutate, ver_out;
  auto* verify = app.add_subcommand("verify", "run the self-check suites");
  add_config_flags(verify, ver);
  verify->add_option("--suite", suites, "kernel | closedform | oracle | diagnostics (repeatable; default all)");
  verify->add_option("--mutate", mutate, "inject a known defect: beta_z");
  verify->add_option("--out", ver_out, "directory for verify.json (default: print to stdout)");

  std::string diag_dir;
  auto* diagnose = app.add_subcommand("diagnose", "recompute diagnostics of a run directory");
  diagnose->add_option("--out,dir", diag_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const auto c = load_config(sim);
      const auto r = run_scenario(c, sim_out, stderr_progress("simulate", quiet));
      std::cout << "wrote " << r.files.size() << " files and " << kManifestName << " to " << r.directory.string()
                << "\n";
      return 0;
    }
    if (*verify) {
      const auto c = load_config(ver);
      const auto report = run_verify(c, suites, parse_mutation(mutate));
      for (const auto& ck : report.checks)
        std::cerr << to_string(ck.status) << "  " << ck.suite << "." << ck.name
                  << (ck.detail.empty() ? "" : "  (" + ck.detail + ")") << "\n";
      const std::string text = report.to_json().dump(2) + "\n";
      if (ver_out.empty()) std::cout << text;
      else write_bytes(fs::path(ver_out) / "verify.json", text);
      return report.passed() ? 0 : 1;
    }
    if (*diagnose) {
      const auto r = run_diagnose(diag_dir, stderr_progress("diagnose", quiet));
      std::cout << r.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "vortexsim: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::InvalidConfig:
      case ErrorCode::InvalidArgument: return 2;
      default: return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "vortexsim: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
