#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "vortex/kernel.hpp"

using namespace vortex;

namespace {

std::vector<Vec3> probe_set() {
  std::vector<Vec3> pts;
  const double v[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (double x : v)
    for (double y : v)
      for (double z : v) pts.push_back({x, y, z});
  return pts;
}

double max_free_deviation(double omega_t) {
  // T = 1 fixed, omega varied.
  const PhysicalParams p{1.0, 1.0, 1.0, omega_t};
  const Vec3 src{0.3, -0.2, 0.1};
  double worst = 0.0;
  for (const auto& r : probe_set()) {
    const KernelPoint kp{r, 1.0, src, 0.0};
    const Complex kb = magnetic_kernel(kp, p);
    const Complex kf = free_kernel(kp, p);
    worst = std::max(worst, std::abs(kb - kf) / std::abs(kf));
  }
  return worst;
}

}  // namespace

TEST(Kernel, CoincidentEndpoints) {
  const PhysicalParams p = PhysicalParams::natural();
  const double T = 0.37 * 2.0 * std::numbers::pi;
  const Vec3 r{0.4, -1.3, 0.8};
  const Complex k = magnetic_kernel({r, T, r, 0.0}, p);
  const double th = 0.5 * T;
  const Complex expected = std::pow(1.0 / (2.0 * std::numbers::pi * T), 1.5) *
                           std::polar(1.0, -0.75 * std::numbers::pi) * (th / std::sin(th));
  EXPECT_NEAR(std::abs(k - expected) / std::abs(expected), 0.0, 1e-13);
}

TEST(Kernel, FreeKernelReferenceValue) {
  // (1 / 2 pi i)^{3/2} e^{i/2}, evaluated in extended precision.
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double mag = std::pow(1.0L / (2.0L * pi), 1.5L);
  const long double ph = -0.75L * pi + 0.5L;
  const Complex expected{static_cast<double>(mag * std::cos(ph)), static_cast<double>(mag * std::sin(ph))};
  const Complex k = free_kernel({{1.0, 0.0, 0.0}, 1.0, {0.0, 0.0, 0.0}, 0.0}, PhysicalParams::natural());
  EXPECT_NEAR(k.real(), expected.real(), 1e-15);
  EXPECT_NEAR(k.imag(), expected.imag(), 1e-15);
}

TEST(Kernel, FreeKernelTranslationInvariant) {
  const PhysicalParams p = PhysicalParams::natural();
  const KernelPoint a{{0.5, 1.0, -0.2}, 2.0, {0.1, -0.3, 0.4}, 0.5};
  const Vec3 shift{3.0, -7.0, 11.0};
  const KernelPoint b{a.r + shift, a.t + 4.0, a.r_src + shift, a.t_src + 4.0};
  EXPECT_NEAR(std::abs(free_kernel(a, p) - free_kernel(b, p)), 0.0, 1e-14);
}

TEST(Kernel, FreeLimitIsFirstOrder) {
  const double d2 = max_free_deviation(1e-2);
  const double d3 = max_free_deviation(1e-3);
  const double d4 = max_free_deviation(1e-4);
  EXPECT_LE(d3, 5e-3);
  EXPECT_NEAR(d2 / d3, 10.0, 1.0);
  EXPECT_NEAR(d3 / d4, 10.0, 1.0);
}

TEST(Kernel, ZeroFieldEqualsFree) {
  const PhysicalParams p{1.0, 1.0, 1.0, 0.0};
  const KernelPoint kp{{0.5, 1.0, -0.2}, 1.3, {0.1, -0.3, 0.4}, 0.0};
  EXPECT_NEAR(std::abs(magnetic_kernel(kp, p) - free_kernel(kp, p)), 0.0, 1e-15);
}

TEST(Kernel, EndpointExchangeReversesField) {
  const PhysicalParams p{1.0, 1.0, 1.0, 0.8};
  const PhysicalParams q{1.0, 1.0, 1.0, -0.8};
  const Vec3 r{0.7, -0.4, 0.2};
  const Vec3 s{-0.3, 0.9, -0.5};
  const double T = 1.7;
  const Complex forward = magnetic_kernel({r, T, s, 0.0}, p);
  const Complex swapped = magnetic_kernel({s, T, r, 0.0}, p);
  EXPECT_NEAR(std::abs(swapped - magnetic_kernel({r, T, s, 0.0}, q)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(forward), std::abs(swapped), 1e-14);
  // Only the antisymmetric term distinguishes the two orderings.
  const double cross = 0.8 * (r[0] * s[1] - r[1] * s[0]);
  EXPECT_NEAR(std::arg(forward / swapped), cross, 1e-12);
}

TEST(Kernel, ErrorContracts) {
  const PhysicalParams p = PhysicalParams::natural();
  try {
    magnetic_kernel({{0, 0, 0}, 2.0 * std::numbers::pi, {0, 0, 0}, 0.0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CausticSingular);
  }
  try {
    magnetic_kernel({{0, 0, 0}, 0.0, {0, 0, 0}, 0.0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveInterval);
  }
  EXPECT_THROW(free_kernel({{0, 0, 0}, -1.0, {0, 0, 0}, 0.0}, p), Error);
}
