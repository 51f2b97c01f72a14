#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/grid.hpp"
#include "wavex/parallel.hpp"
#include "wavex/rng.hpp"

namespace wavex::simwave {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Two-path simulator constants. Defaults are the benchmark values.
struct SimpleWaveConfig {
  int grid = 64;
  double lx = 10.0;
  double ly = 10.0;
  Point source{2.0, 5.0};
  Point mirror{2.0, -5.0};
  double reflection = 0.18;   ///< lambda
  double delay_bias = 0.35;   ///< d
  double perturb = 0.08;      ///< eta
  double alpha1 = 0.0;
  double c1 = 0.8;
  double p1 = 0.3;
  double alpha2 = 0.12;
  double eps = 1e-6;
  double speed_lo = 0.8;
  double speed_hi = 1.2;

  void validate() const {
    if (!(reflection >= 0.0 && reflection < 1.0)) fail(Errc::BadConfig, "reflection must lie in [0,1)");
    if (!(perturb >= 0.0)) fail(Errc::BadConfig, "perturbation strength must be nonnegative");
    if (!(speed_lo > 0.0 && speed_hi >= speed_lo)) fail(Errc::BadConfig, "speed range must lie in (0, inf)");
    if (grid < 2) fail(Errc::BadConfig, "grid must be at least 2");
  }

  /// Cell-centre coordinates: x_j = (j + 0.5) Lx / grid.
  double x_at(int col) const { return (col + 0.5) * lx / grid; }
  double y_at(int row) const { return (row + 0.5) * ly / grid; }
  double cell_area() const { return (lx / grid) * (ly / grid); }
};

inline const std::vector<double>& lf_frequencies() {
  static const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  return v;
}
inline const std::vector<double>& hf_frequencies() {
  static const std::vector<double> v{4.8, 6.0, 8.0};
  return v;
}

inline double q1_at(const SimpleWaveConfig& cfg, double x, double y) {
  const double tau = 2.0 * std::numbers::pi;
  return 0.45 * std::sin(tau * x / cfg.lx) + 0.35 * std::cos(tau * y / cfg.ly) +
         0.20 * std::sin(tau * (x + 0.6 * y) / cfg.lx);
}

inline double q2_at(const SimpleWaveConfig& cfg, double x, double y) {
  const double tau = 2.0 * std::numbers::pi;
  return 0.40 * std::cos(tau * (x - 0.3 * y) / cfg.lx) + 0.30 * std::sin(tau * y / cfg.ly) +
         0.15 * std::cos(tau * (x + y) / cfg.ly);
}

inline double distance(Point a, double x, double y) { return std::hypot(x - a.x, y - a.y); }

inline std::pair<Grid<double>, Grid<double>> perturbation_fields(const SimpleWaveConfig& cfg) {
  auto q1 = make_grid<double>(cfg.grid, cfg.grid, [&](int r, int c) { return q1_at(cfg, cfg.x_at(c), cfg.y_at(r)); });
  auto q2 = make_grid<double>(cfg.grid, cfg.grid, [&](int r, int c) { return q2_at(cfg, cfg.x_at(c), cfg.y_at(r)); });
  return {std::move(q1), std::move(q2)};
}

inline double tau1_at(const SimpleWaveConfig& cfg, double v, double x, double y) {
  return (distance(cfg.source, x, y) / v) * (1.0 + cfg.perturb * q1_at(cfg, x, y));
}

inline double tau2_at(const SimpleWaveConfig& cfg, double v, double x, double y) {
  return ((distance(cfg.mirror, x, y) + cfg.delay_bias) / v) * (1.0 + cfg.perturb * q2_at(cfg, x, y));
}

inline std::pair<Grid<double>, Grid<double>> travel_times(const SimpleWaveConfig& cfg, double v) {
  if (!(v > 0.0)) fail(Errc::InvalidSpeed, "speed must be positive");
  auto t1 = make_grid<double>(cfg.grid, cfg.grid, [&](int r, int c) { return tau1_at(cfg, v, cfg.x_at(c), cfg.y_at(r)); });
  auto t2 = make_grid<double>(cfg.grid, cfg.grid, [&](int r, int c) { return tau2_at(cfg, v, cfg.x_at(c), cfg.y_at(r)); });
  return {std::move(t1), std::move(t2)};
}

inline double a1_of(const SimpleWaveConfig& cfg, double r1) {
  return std::exp(-cfg.alpha1 * r1) / std::pow(r1 + cfg.c1, cfg.p1);
}

inline double a2_of(const SimpleWaveConfig& cfg, double r2) { return std::exp(-cfg.alpha2 * r2) / std::sqrt(r2 + cfg.eps); }

inline std::pair<Grid<double>, Grid<double>> envelopes(const SimpleWaveConfig& cfg) {
  auto a1 = make_grid<double>(cfg.grid, cfg.grid,
                              [&](int r, int c) { return a1_of(cfg, distance(cfg.source, cfg.x_at(c), cfg.y_at(r))); });
  auto a2 = make_grid<double>(cfg.grid, cfg.grid,
                              [&](int r, int c) { return a2_of(cfg, distance(cfg.mirror, cfg.x_at(c), cfg.y_at(r))); });
  return {std::move(a1), std::move(a2)};
}

struct SimpleWaveSample {
  std::vector<Grid<double>> input_channels;  ///< [v broadcast, nu broadcast]
  ComplexField field;
};

/// u = a1 exp(i 2 pi nu tau1) + lambda a2 exp(i 2 pi nu tau2).
inline SimpleWaveSample generate(const SimpleWaveConfig& cfg, double v, double nu) {
  cfg.validate();
  if (!(v >= cfg.speed_lo && v <= cfg.speed_hi)) fail(Errc::InvalidSpeed, "speed outside the configured range");
  if (!(nu > 0.0)) fail(Errc::InvalidFrequency, "nu must be positive");
  const auto [t1, t2] = travel_times(cfg, v);
  const auto [a1, a2] = envelopes(cfg);
  ComplexField u(cfg.grid, cfg.grid, nu, Environment{{v}}, DomainId::SimpleWave);
  const double w = 2.0 * std::numbers::pi * nu;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::complex<double> z = a1[i] * std::polar(1.0, w * t1[i]) + cfg.reflection * a2[i] * std::polar(1.0, w * t2[i]);
    u.set(i, z);
  }
  SimpleWaveSample s;
  s.input_channels.emplace_back(cfg.grid, cfg.grid, v);
  s.input_channels.emplace_back(cfg.grid, cfg.grid, nu);
  s.field = std::move(u);
  return s;
}

inline Sample to_sample(const SimpleWaveSample& g) {
  Sample s;
  s.nu = g.field.nu;
  s.env = g.field.env.scalars;
  for (const auto& ch : g.input_channels) {
    Grid<float> f(ch.rows(), ch.cols());
    for (std::size_t i = 0; i < ch.size(); ++i) f[i] = static_cast<float>(ch[i]);
    s.channels.push_back(std::move(f));
  }
  store_field(s, g.field);
  return s;
}

/// Frequencies in the given order, n_per_freq samples each. Speeds are drawn
/// sequentially from Rng(seed) before any field is generated.
inline Dataset generate_dataset(const SimpleWaveConfig& cfg, std::uint64_t seed, const std::vector<double>& freqs,
                                int n_per_freq) {
  cfg.validate();
  if (freqs.empty()) fail(Errc::EmptyInput, "no frequencies requested");
  if (n_per_freq < 1) fail(Errc::EmptyInput, "n_per_freq must be at least 1");
  Rng rng(seed);
  std::vector<std::pair<double, double>> jobs;  // (v, nu)
  for (double nu : freqs)
    for (int k = 0; k < n_per_freq; ++k) jobs.emplace_back(rng.uniform(cfg.speed_lo, cfg.speed_hi), nu);

  Dataset ds;
  ds.domain = DomainId::SimpleWave;
  ds.rows = ds.cols = cfg.grid;
  ds.n_channels = 2;
  ds.n_env = 1;
  ds.samples.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { ds.samples[i] = to_sample(generate(cfg, jobs[i].first, jobs[i].second)); });
  return ds;
}

}  // namespace wavex::simwave
