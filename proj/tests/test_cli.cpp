#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "vortex/runner.hpp"
#include "vortex/verify.hpp"

using namespace vortex;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vortexsim_test_" + name);
  fs::remove_all(p);
  return p;
}

ScenarioConfig small(int oam, Axis axis = Axis::Perpendicular) {
  auto c = ScenarioConfig::defaults(axis, oam);
  c.grid.transverse_points = 192;  // spacing 0.25 carries momentum 8
  c.grid.axial_points = 128;
  c.outputs.heatmaps = false;
  return c;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(VORTEXSIM_PATH) + " -q " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Runner, DefaultRunWritesSixteenSlicesAndManifest) {
  const auto dir = scratch("default");
  const auto c = ScenarioConfig::defaults();
  EXPECT_EQ(c.time.frame_count, 16);
  EXPECT_EQ(c.beam.oam, 1);
  const auto r = run_simulate(c, dir);
  int csv = 0;
  for (const auto& f : r.files) csv += f.ends_with(".csv");
  EXPECT_EQ(csv, 16);
  const auto m = Json::parse(read_text(dir / kManifestName));
  EXPECT_EQ(m["format_version"], kFormatVersion);
  EXPECT_EQ(m["version"], VORTEX_VERSION);
  EXPECT_EQ(m["frames"].size(), 16u);
  EXPECT_DOUBLE_EQ(m["derived"]["tau"].get<double>(), 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(m["derived"]["momentum"].get<double>(), 8.0);
  EXPECT_EQ(m["config"]["method"], "analytic");
  // every file on disk except the manifest itself is listed with its hash
  const auto files = tree(dir);
  EXPECT_EQ(m["files"].size() + 1, files.size());
  for (const auto& f : m["files"]) EXPECT_EQ(sha256_hex(files.at(f["path"])), f["sha256"]);
  fs::remove_all(dir);
}

TEST(Runner, IdenticalConfigsGiveIdenticalBytes) {
  auto c = small(1);
  c.outputs.heatmaps = true;
  c.time.frame_count = 4;
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_simulate(c, a);
  run_simulate(c, b);
  EXPECT_EQ(tree(a), tree(b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Runner, DiagnoseIsIdempotentAndFindsUnitGFactor) {
  const auto dir = scratch("psi1");
  run_simulate(small(1), dir);
  const auto r1 = run_diagnose(dir);
  const auto series1 = read_text(dir / "series.csv"), report1 = read_text(dir / "report.json");
  const auto r2 = run_diagnose(dir);
  EXPECT_EQ(read_text(dir / "series.csv"), series1);
  EXPECT_EQ(read_text(dir / "report.json"), report1);
  const double g = r1["precession"]["g_factor"].get<double>();
  EXPECT_GE(g, 0.99);
  EXPECT_LE(g, 1.01);
  EXPECT_EQ(r1["winding"]["value"], 1);
  EXPECT_LE(r1["conservation"]["max_norm_error"].get<double>(), 1e-8);
  EXPECT_EQ(r1["format_version"], kFormatVersion);
  fs::remove_all(dir);
}

TEST(Runner, PlainPacketWindingColumnIsZero) {
  const auto dir = scratch("psi0");
  run_simulate(small(0), dir);
  run_diagnose(dir);
  std::istringstream in(read_text(dir / "series.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  ASSERT_EQ(line, "t,norm,cx,cy,cz,wx,wy,wz,ly,lz,nodal_angle,winding,winding_margin");
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    ASSERT_EQ(cols.size(), 13u) << line;
    EXPECT_EQ(cols[11], "0");
    EXPECT_EQ(cols[10], "");  // no nodal line
    ++rows;
  }
  EXPECT_EQ(rows, 16);
  fs::remove_all(dir);
}

TEST(Runner, DiagnoseRefusesTamperedOrMissingFiles) {
  auto c = small(0);
  c.time.frame_count = 8;
  const auto dir = scratch("tamper");
  run_simulate(c, dir);
  const auto victim = dir / "state" / "frame_0003_term0_xy.bin";
  std::string bytes = read_text(victim);
  bytes.back() ^= 1;
  write_bytes(victim, bytes);
  EXPECT_EQ(code_of([&] { run_diagnose(dir); }), ErrorCode::ManifestMismatch);
  fs::remove(victim);
  EXPECT_EQ(code_of([&] { run_diagnose(dir); }), ErrorCode::MissingFrames);
  fs::remove(dir / kManifestName);
  EXPECT_EQ(code_of([&] { run_diagnose(dir); }), ErrorCode::MissingFrames);
  fs::remove_all(dir);
}

TEST(Runner, SplitStepRunAgreesWithAnalyticRun) {
  auto c = small(1);
  c.grid.transverse_points = 256;  // the carrier's band needs the finer spacing
  c.solver.steps = 128;
  const auto analytic = compute_frames(c);
  c.method = RunMethod::SplitStep;
  const auto split = compute_frames(c);
  ASSERT_EQ(split.size(), analytic.size());
  for (std::size_t k = 0; k < split.size(); ++k) EXPECT_LT(relative_l2(split[k], analytic[k]), 1e-3) << k;
  const auto sa = measure_series(analytic, 1, c.params), ss = measure_series(split, 1, c.params);
  EXPECT_NEAR(precession_rate(ss, c.params).g_factor, precession_rate(sa, c.params).g_factor, 0.02);
  for (const auto& f : ss.frames) {
    EXPECT_EQ(f.winding, 1);
    EXPECT_NEAR(f.norm, 1.0 * ss.frames.front().norm, 1e-6);
  }
}

TEST(Runner, SolverErrorsCarryTheFrameIndex) {
  auto c = small(0);
  c.grid.transverse_points = 256;
  c.method = RunMethod::SplitStep;
  c.solver.steps = 2;
  try {
    compute_frames(c);
    FAIL() << "expected a step-size error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepTooLarge);
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
  }
}

TEST(Runner, ParallelRunWritesVerticalSlices) {
  auto c = small(0, Axis::Parallel);
  c.time.frame_count = 4;
  const auto dir = scratch("parallel");
  const auto r = run_simulate(c, dir);
  EXPECT_TRUE(fs::exists(dir / "frames" / "frame_0002_xz.csv"));
  std::ifstream in(dir / "frames" / "frame_0002_xz.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("# scenario=parallel-l0 t=", 0), 0u);
  EXPECT_NE(header.find("plane=xz offset=0"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Verify, MutatedBetaZFailsTheFactorCheck) {
  const auto c = ScenarioConfig::defaults();
  const auto good = run_verify(c, {"closedform"});
  EXPECT_TRUE(good.passed());
  const auto bad = run_verify(c, {"closedform"}, Mutation::BetaZ);
  EXPECT_FALSE(bad.passed());
  for (const auto& ck : bad.checks)
    if (ck.name == "axial_factor_vs_quadrature") EXPECT_EQ(ck.status, CheckStatus::Fail);
  EXPECT_THROW(run_verify(c, {"nonsense"}), Error);
}

TEST(Verify, ZeroFieldSkipsMagneticChecks) {
  const auto c = ScenarioConfig::parse("params.field = 0\nbeam.radius = 0\ntime.t_max = 6\n");
  const auto r = run_verify(c, {"kernel", "oracle"});
  EXPECT_TRUE(r.passed());
  int skipped = 0, passed = 0;
  for (const auto& ck : r.checks) {
    skipped += ck.status == CheckStatus::Skip;
    passed += ck.status == CheckStatus::Pass;
    if (ck.status == CheckStatus::Skip) EXPECT_FALSE(ck.detail.empty());
  }
  EXPECT_GT(skipped, 0);
  EXPECT_GT(passed, 0);
  const auto j = r.to_json();
  EXPECT_EQ(j["format_version"], kFormatVersion);
}

TEST(Cli, ExitStatuses) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("verify --suite kernel"), 0);
  EXPECT_EQ(run_cli("verify --suite closedform --mutate beta_z"), 1);
  EXPECT_EQ(run_cli("simulate --scenario sideways --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("simulate --method splitstep --grid 64 --out " + dir.string()), 3);
  EXPECT_EQ(run_cli("simulate --oam 0 --frames 8 --grid 128x64 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / kManifestName));
  const auto cfg = ScenarioConfig::parse(read_text(dir / "config.txt"));
  EXPECT_EQ(cfg.beam.oam, 0);
  EXPECT_EQ(cfg.time.frame_count, 8);
  EXPECT_EQ(cfg.grid.transverse_points, 128);
  EXPECT_EQ(cfg.grid.axial_points, 64);
  EXPECT_EQ(run_cli("diagnose --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(run_cli("diagnose --out " + (dir / "nowhere").string()), 3);
  fs::remove_all(dir);
}
