#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "wavex/field.hpp"

using namespace wavex;
using std::numbers::pi;

namespace {

ComplexField constant_field(int n, std::complex<double> z) {
  ComplexField u(n, n, 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) u.set(i, z);
  return u;
}

TravelTimeSpec random_spec(std::mt19937_64& gen, int n, double nu) {
  std::uniform_real_distribution<double> amp(0.05, 2.0), tau(-3.0, 3.0);
  TravelTimeSpec s{Grid<double>(n, n), Grid<double>(n, n), nu};
  for (auto& a : s.amp) a = amp(gen);
  for (auto& t : s.tau) t = tau(gen);
  return s;
}

}  // namespace

TEST(Polar, AxisValues) {
  auto p = to_polar(constant_field(4, {1.0, 0.0}));
  for (std::size_t i = 0; i < p.amp.size(); ++i) {
    EXPECT_EQ(p.amp[i], 1.0);
    EXPECT_EQ(p.phase[i], 0.0);
  }
  p = to_polar(constant_field(4, {0.0, 1.0}));
  for (std::size_t i = 0; i < p.amp.size(); ++i) {
    EXPECT_DOUBLE_EQ(p.amp[i], 1.0);
    EXPECT_DOUBLE_EQ(p.phase[i], pi / 2);
  }
}

TEST(Polar, ZeroAmplitudeHasZeroPhase) {
  const auto p = to_polar(constant_field(3, {0.0, -0.0}));
  for (double ph : p.phase) EXPECT_EQ(ph, 0.0);
}

TEST(Polar, NegativeRealAxisIsPlusPi) {
  EXPECT_EQ(principal_arg(-1.0, -0.0), pi);
  EXPECT_EQ(principal_arg(-1.0, 0.0), pi);
  EXPECT_EQ(wrap_phase(-pi), pi);
  EXPECT_NEAR(wrap_phase(3 * pi + 0.1), -pi + 0.1, 1e-12);
}

TEST(Polar, RandomRoundTrip) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  ComplexField u(16, 16, 2.0);
  for (std::size_t i = 0; i < u.size(); ++i) u.set(i, {nd(gen), nd(gen)});
  const auto p = to_polar(u);
  for (double ph : p.phase) {
    EXPECT_GT(ph, -pi);
    EXPECT_LE(ph, pi);
  }
  const auto v = from_polar(p, u.nu, u.env, u.domain);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_LE(std::abs(v.at(i) - u.at(i)), 1e-12 * std::abs(u.at(i)));
}

TEST(Polar, FromPolarSpecialCases) {
  PolarField p{Grid<double>(2, 2, 1.0), Grid<double>(2, 2, 0.0)};
  auto u = from_polar(p, 1.0, {}, DomainId::SimpleWave);
  EXPECT_EQ(u.at(0), std::complex<double>(1.0, 0.0));
  p.amp = Grid<double>(2, 2, 0.0);
  p.phase = Grid<double>(2, 2, 1.234);
  u = from_polar(p, 1.0, {}, DomainId::SimpleWave);
  EXPECT_EQ(std::abs(u.at(3)), 0.0);
}

TEST(Field, InvariantsEnforced) {
  EXPECT_THROW(ComplexField(1, 4, 1.0), Error);
  EXPECT_THROW(ComplexField(4, 4, 0.0), Error);
  try {
    ComplexField(4, 4, -1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidFrequency);
  }
}

TEST(TravelTime, Synthesis) {
  TravelTimeSpec s{Grid<double>(3, 3, 2.0), Grid<double>(3, 3, 0.0), 5.0};
  auto u = synth_from_travel_time(s);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u.at(i), std::complex<double>(2.0, 0.0));
  s.amp = Grid<double>(3, 3, 1.0);
  s.tau = Grid<double>(3, 3, pi / 5.0);
  u = synth_from_travel_time(s);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(u.re[i], -1.0, 1e-15);
    EXPECT_NEAR(u.im[i], 0.0, 1e-15);
  }
  std::mt19937_64 gen(3);
  const auto r = random_spec(gen, 8, 3.7);
  u = synth_from_travel_time(r);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(std::abs(u.at(i)), r.amp[i], 1e-12);
}

TEST(Decomposition, ZeroPhaseMismatch) {
  std::mt19937_64 gen(11);
  const auto truth = random_spec(gen, 8, 2.0);
  auto pred = random_spec(gen, 8, 2.0);
  pred.tau = truth.tau;
  const auto e = decompose_regional_error(truth, pred, RegionMask::full(8, 8, 0.25));
  EXPECT_EQ(e.phase_term, 0.0);
  EXPECT_NEAR(e.lhs, e.amp_term, 1e-12 * std::max(1.0, e.lhs));
}

TEST(Decomposition, ConstantShiftEqualAmplitude) {
  std::mt19937_64 gen(12);
  const auto truth = random_spec(gen, 6, 1.5);
  auto pred = truth;
  const double c = 0.4;
  for (auto& t : pred.tau) t += c;
  const double area = 0.1;
  const auto e = decompose_regional_error(truth, pred, RegionMask::full(6, 6, area));
  double expect = 0.0;
  for (double a : truth.amp) expect += a * a;
  expect *= 4.0 * area * std::pow(std::sin(1.5 * c / 2.0), 2);
  EXPECT_NEAR(e.lhs, expect, 1e-12);
  EXPECT_NEAR(e.amp_term, 0.0, 1e-30);
}

TEST(Decomposition, PointwiseIdentity) {
  // Per-cell |u_hat - u|^2 from complex arithmetic against the polar form.
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto truth = random_spec(gen, 4, 0.5 + trial * 0.05);
    const auto pred = random_spec(gen, 4, truth.nu);
    for (std::size_t i = 0; i < truth.amp.size(); ++i) {
      const std::complex<double> u = std::polar(truth.amp[i], truth.nu * truth.tau[i]);
      const std::complex<double> uh = std::polar(pred.amp[i], pred.nu * pred.tau[i]);
      const double s = std::sin(truth.nu * (pred.tau[i] - truth.tau[i]) / 2.0);
      const double rhs = std::pow(pred.amp[i] - truth.amp[i], 2) + 4.0 * truth.amp[i] * pred.amp[i] * s * s;
      EXPECT_NEAR(std::norm(uh - u), rhs, 1e-10);
    }
  }
}

TEST(Decomposition, RegionalIdentityAndBound) {
  std::mt19937_64 gen(14);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    const double nu = 0.2 + 0.01 * trial;
    const auto truth = random_spec(gen, 16, nu);
    const auto pred = random_spec(gen, 16, nu);
    RegionMask region{Grid<std::uint8_t>(16, 16), 1.0 / 256.0};
    for (auto& m : region.mask) m = keep(gen);
    region.mask[0] = 1;
    const auto e = decompose_regional_error(truth, pred, region);
    ASSERT_LE(std::abs(e.lhs - e.amp_term - e.phase_term), 1e-10 * std::max(e.lhs, 1.0));
    double a_max = 0.0, ah_max = 0.0;
    for (std::size_t i = 0; i < region.mask.size(); ++i)
      if (region.mask[i]) {
        a_max = std::max(a_max, truth.amp[i]);
        ah_max = std::max(ah_max, pred.amp[i]);
      }
    const double b = regional_error_bound(e.amp_term, travel_time_mismatch_sq(truth, pred, region), nu, a_max, ah_max);
    ASSERT_LE(e.lhs, b * (1 + 1e-14));
  }
}

TEST(Decomposition, MismatchedFrequencyThrows) {
  std::mt19937_64 gen(15);
  const auto a = random_spec(gen, 4, 1.0);
  const auto b = random_spec(gen, 4, 2.0);
  try {
    decompose_regional_error(a, b, RegionMask::full(4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MismatchedFrequency);
  }
}

TEST(Bound, Limits) {
  EXPECT_EQ(regional_error_bound(0.3, 0.0, 5.0, 2.0, 2.0), 0.3);
  EXPECT_NEAR(regional_error_bound(0.3, 1.0, 1e-9, 2.0, 2.0), 0.3, 1e-15);
  const double p1 = regional_error_bound(0.0, 0.7, 2.0, 1.5, 0.5);
  const double p2 = regional_error_bound(0.0, 0.7, 4.0, 1.5, 0.5);
  EXPECT_EQ(p2, 4.0 * p1);
}

TEST(Bound, TightForSmallUniformMismatch) {
  // Constant amplitudes at their maxima and a tiny uniform shift: sin(x) ~ x.
  TravelTimeSpec truth{Grid<double>(4, 4, 1.0), Grid<double>(4, 4, 0.0), 3.0};
  auto pred = truth;
  for (auto& t : pred.tau) t = 1e-5;
  const auto region = RegionMask::full(4, 4, 1.0);
  const auto e = decompose_regional_error(truth, pred, region);
  const double b = regional_error_bound(e.amp_term, travel_time_mismatch_sq(truth, pred, region), 3.0, 1.0, 1.0);
  EXPECT_NEAR(e.lhs / b, 1.0, 1e-8);
}
