#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "wavex/simwave.hpp"

using namespace wavex;
using namespace wavex::simwave;
using std::numbers::pi;

TEST(SimWave, PerturbationAtOrigin) {
  const SimpleWaveConfig cfg;
  EXPECT_NEAR(q1_at(cfg, 0.0, 0.0), 0.35, 1e-15);
  EXPECT_NEAR(q2_at(cfg, 0.0, 0.0), 0.55, 1e-15);
  EXPECT_NEAR(q1_at(cfg, cfg.lx, 0.0), 0.35, 1e-14);
}

TEST(SimWave, PerturbationGridMatchesPointwise) {
  const SimpleWaveConfig cfg;
  const auto [q1, q2] = perturbation_fields(cfg);
  // x = (5 + 0.5) * 10 / 64, y = (9 + 0.5) * 10 / 64
  const double x = 5.5 * 10.0 / 64.0, y = 9.5 * 10.0 / 64.0;
  const double want1 = 0.45 * std::sin(2 * pi * x / 10) + 0.35 * std::cos(2 * pi * y / 10) +
                       0.20 * std::sin(2 * pi * (x + 0.6 * y) / 10);
  const double want2 = 0.40 * std::cos(2 * pi * (x - 0.3 * y) / 10) + 0.30 * std::sin(2 * pi * y / 10) +
                       0.15 * std::cos(2 * pi * (x + y) / 10);
  EXPECT_NEAR(q1(9, 5), want1, 1e-14);
  EXPECT_NEAR(q2(9, 5), want2, 1e-14);
}

TEST(SimWave, TravelTimes) {
  const SimpleWaveConfig cfg;
  EXPECT_EQ(tau1_at(cfg, 1.0, 2.0, 5.0), 0.0);
  EXPECT_NEAR(tau1_at(cfg, 1.0, 2.0, 6.0), 1.0 + 0.08 * q1_at(cfg, 2.0, 6.0), 1e-15);
  const auto [a1, a2] = travel_times(cfg, 0.9);
  const auto [b1, b2] = travel_times(cfg, 1.8);
  for (std::size_t i = 0; i < a1.size(); ++i) {
    EXPECT_NEAR(b1[i], a1[i] / 2.0, 1e-15 * a1[i]);
    EXPECT_NEAR(b2[i], a2[i] / 2.0, 1e-15 * a2[i]);
  }
  try {
    travel_times(cfg, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidSpeed);
  }
}

TEST(SimWave, Envelopes) {
  const SimpleWaveConfig cfg;
  EXPECT_DOUBLE_EQ(a1_of(cfg, 0.0), 1.0 / std::pow(0.8, 0.3));
  EXPECT_DOUBLE_EQ(a2_of(cfg, 1.0), std::exp(-0.12) / std::sqrt(1.0 + 1e-6));
  for (double r = 0.0; r < 20.0; r += 0.25) EXPECT_GE(a1_of(cfg, r), a1_of(cfg, r + 0.25));
  const auto [a1, a2] = envelopes(cfg);
  for (std::size_t i = 0; i < a1.size(); ++i) {
    EXPECT_GT(a1[i], 0.0);
    EXPECT_GT(a2[i], 0.0);
  }
}

TEST(SimWave, SinglePathDegenerate) {
  SimpleWaveConfig cfg;
  cfg.reflection = 0.0;
  cfg.perturb = 0.0;
  const auto s = generate(cfg, 1.1, 3.0);
  const auto [a1, a2] = envelopes(cfg);
  for (std::size_t i = 0; i < a1.size(); ++i) EXPECT_NEAR(std::abs(s.field.at(i)), a1[i], 1e-14);
}

TEST(SimWave, AmplitudeBoundAndDeterminism) {
  const SimpleWaveConfig cfg;
  const auto [a1, a2] = envelopes(cfg);
  for (double v : {0.8, 0.93, 1.2})
    for (double nu : {1.0, 4.8, 8.0}) {
      const auto s = generate(cfg, v, nu);
      const auto again = generate(cfg, v, nu);
      EXPECT_EQ(s.field.re, again.field.re);
      EXPECT_EQ(s.field.im, again.field.im);
      for (std::size_t i = 0; i < a1.size(); ++i)
        EXPECT_LE(std::abs(s.field.at(i)), a1[i] + cfg.reflection * a2[i] + 1e-14);
      EXPECT_EQ(s.input_channels.size(), 2u);
      EXPECT_EQ(s.input_channels[0](3, 7), v);
      EXPECT_EQ(s.input_channels[1](3, 7), nu);
    }
}

TEST(SimWave, FieldSpotValue) {
  const SimpleWaveConfig cfg;
  const double v = 1.05, nu = 2.0;
  const auto s = generate(cfg, v, nu);
  const int r = 40, c = 12;
  const double x = (c + 0.5) * 10.0 / 64.0, y = (r + 0.5) * 10.0 / 64.0;
  const double r1 = std::hypot(x - 2.0, y - 5.0), r2 = std::hypot(x - 2.0, y + 5.0);
  const double t1 = r1 / v * (1 + 0.08 * q1_at(cfg, x, y));
  const double t2 = (r2 + 0.35) / v * (1 + 0.08 * q2_at(cfg, x, y));
  const std::complex<double> want = std::pow(r1 + 0.8, -0.3) * std::polar(1.0, 2 * pi * nu * t1) +
                                    0.18 * std::exp(-0.12 * r2) / std::sqrt(r2 + 1e-6) * std::polar(1.0, 2 * pi * nu * t2);
  EXPECT_NEAR(std::abs(s.field.at(r, c) - want), 0.0, 1e-13);
}

TEST(SimWave, PhaseLinearInFrequency) {
  // Unwrapped phase along a row doubles when nu doubles (single path).
  SimpleWaveConfig cfg;
  cfg.reflection = 0.0;
  const auto a = generate(cfg, 1.0, 1.0).field;
  const auto b = generate(cfg, 1.0, 2.0).field;
  const int row = 20;
  double ua = 0.0, ub = 0.0;
  double pa = std::arg(a.at(row, 0)), pb = std::arg(b.at(row, 0));
  for (int c = 1; c < cfg.grid; ++c) {
    const double na = std::arg(a.at(row, c)), nb = std::arg(b.at(row, c));
    ua += std::remainder(na - pa, 2 * pi);
    ub += std::remainder(nb - pb, 2 * pi);
    pa = na;
    pb = nb;
    const double abs_a = 2 * pi * 1.0 * tau1_at(cfg, 1.0, cfg.x_at(0), cfg.y_at(row)) + ua;
    const double abs_b = 2 * pi * 2.0 * tau1_at(cfg, 1.0, cfg.x_at(0), cfg.y_at(row)) + ub;
    EXPECT_NEAR(abs_b, 2.0 * abs_a, 1e-9);
  }
}

TEST(SimWave, InvalidInputs) {
  const SimpleWaveConfig cfg;
  try {
    generate(cfg, 1.3, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidSpeed);
  }
  try {
    generate(cfg, 1.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidFrequency);
  }
}

TEST(SimWave, DatasetDeterministicAndInRange) {
  const SimpleWaveConfig cfg;
  const auto a = generate_dataset(cfg, 42, lf_frequencies(), 3);
  const auto b = generate_dataset(cfg, 42, lf_frequencies(), 3);
  const auto c = generate_dataset(cfg, 43, lf_frequencies(), 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].nu, lf_frequencies()[i / 3]);
    EXPECT_GE(a.samples[i].env[0], 0.8);
    EXPECT_LE(a.samples[i].env[0], 1.2);
  }
  const auto dir = std::filesystem::temp_directory_path();
  write_dataset((dir / "sw_a.wfd").string(), a);
  write_dataset((dir / "sw_b.wfd").string(), b);
  std::ifstream fa(dir / "sw_a.wfd", std::ios::binary), fb(dir / "sw_b.wfd", std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), {}), bb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(ba, bb);
}

TEST(SimWave, FrequencySets) {
  EXPECT_EQ(lf_frequencies(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(hf_frequencies(), (std::vector<double>{4.8, 6, 8}));
}
