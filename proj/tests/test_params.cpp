#include <gtest/gtest.h>

#include <numbers>

#include "vortex/params.hpp"

using namespace vortex;

TEST(Params, CyclotronFrequencyNatural) {
  EXPECT_DOUBLE_EQ(cyclotron_frequency({1, 1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(cyclotron_frequency({1, 1, 1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(cyclotron_frequency({1, 1, 1, -2}), -2.0);
}

TEST(Params, CyclotronFrequencySI) {
  // CODATA 2018 electron charge-to-mass ratio, 1.758 820 010 76e11 C/kg.
  const PhysicalParams si{codata::electron_mass, codata::elementary_charge, codata::hbar, 1.0};
  EXPECT_NEAR(cyclotron_frequency(si) / 1.75882001076e11, 1.0, 1e-10);
}

TEST(Params, FrequencyScaling) {
  const PhysicalParams p{2.0, 1.5, 1.0, 0.7};
  const double w = cyclotron_frequency(p);
  EXPECT_NEAR(cyclotron_frequency({2.0, 1.5, 1.0, 0.7 * 3.0}), 3.0 * w, 1e-15);
  EXPECT_NEAR(cyclotron_frequency({2.0 * 4.0, 1.5, 1.0, 0.7}), w / 4.0, 1e-15);
}

TEST(Params, OrbitMomentum) {
  EXPECT_DOUBLE_EQ(orbit_momentum({1, 1, 1, 1}, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(orbit_momentum({1, 1, 1, 1}, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(orbit_momentum({1, 1, 1, 0.5}, 4.0), 2.0);
  EXPECT_THROW(orbit_momentum({1, 1, 1, 1}, -1.0), Error);
}

TEST(Params, Period) {
  EXPECT_DOUBLE_EQ(period({1, 1, 1, 1}), 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(period({1, 1, 1, 2.0 * std::numbers::pi}), 1.0);
  EXPECT_DOUBLE_EQ(period({1, 1, 1, -1}), 2.0 * std::numbers::pi);
  try {
    period({1, 1, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroFrequency);
  }
}

TEST(Params, NaturalRoundTrip) {
  const PhysicalParams si{codata::electron_mass, codata::elementary_charge, codata::hbar, 0.37};
  const UnitScale scale = natural_scale(si);
  const PhysicalParams nat = to_natural(si, scale);
  EXPECT_NEAR(nat.mass, 1.0, 1e-15);
  EXPECT_NEAR(nat.charge, 1.0, 1e-15);
  EXPECT_NEAR(nat.hbar, 1.0, 1e-15);
  EXPECT_NEAR(nat.field, 1.0, 1e-12);
  const PhysicalParams back = to_si(nat, scale);
  EXPECT_NEAR(back.mass / si.mass, 1.0, 1e-12);
  EXPECT_NEAR(back.charge / si.charge, 1.0, 1e-12);
  EXPECT_NEAR(back.hbar / si.hbar, 1.0, 1e-12);
  EXPECT_NEAR(back.field / si.field, 1.0, 1e-12);
  // omega * time unit is dimensionless and unit independent
  EXPECT_NEAR(cyclotron_frequency(si) * scale.time(), cyclotron_frequency(nat), 1e-12);
}

TEST(Params, BeamValidation) {
  const PhysicalParams p = PhysicalParams::natural();
  const auto b = BeamParams::perpendicular(p, 1.0, 2.0, 8.0, 1);
  EXPECT_DOUBLE_EQ(b.momentum, 8.0);
  EXPECT_THROW(BeamParams::perpendicular(p, 0.0, 2.0, 8.0), Error);
  EXPECT_THROW(BeamParams::perpendicular(p, 1.0, -2.0, 8.0), Error);
  EXPECT_THROW(BeamParams::perpendicular(p, 1.0, 2.0, 8.0, 2), Error);
  EXPECT_THROW((PhysicalParams{0.0, 1, 1, 1}.validate()), Error);
  EXPECT_THROW((TimeSpec{1.0, 0, 1e-6}.validate()), Error);
}

TEST(Params, TimeSpecDefaults) {
  const auto ts = TimeSpec::one_period(PhysicalParams::natural(), 16);
  EXPECT_DOUBLE_EQ(ts.guard, 1e-6 * 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(ts.frame_time(8), std::numbers::pi);
}
