#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/grid.hpp"
#include "wavex/helmholtz.hpp"
#include "wavex/simwave.hpp"

namespace wavex {

struct PriorPath {
  double coefficient = 1.0;
  Grid<double> length;
};

/// G_prior = sum_m a_m exp(i kappa_ref L_m).
struct PhasePriorSpec {
  std::vector<PriorPath> paths;
  double kappa_ref = 1.0;
  double source_x = 0.0;
  double source_y = 0.0;

  void validate() const {
    if (paths.empty()) fail(Errc::EmptyInput, "phase prior needs at least one path");
    for (const auto& p : paths) {
      require_same_shape(p.length, paths.front().length, "phase prior path lengths");
      for (double l : p.length)
        if (!(l >= 0.0)) fail(Errc::ShapeMismatch, "path lengths must be nonnegative");
    }
    if (!(kappa_ref > 0.0)) fail(Errc::InvalidFrequency, "kappa_ref must be positive");
  }
};

struct PhaseBaseFeatures {
  Grid<double> sin_map;
  Grid<double> cos_map;
  std::size_t degenerate_cells = 0;  ///< cells where |G_prior| vanished and (0,1) was used
};

/// SimpleWave: 2 pi nu / v. Helmholtz: k sqrt(n_ref). Maxwell: k0 sqrt(eps_ref),
/// with nu in GHz and k0 = 2 pi nu 1e9 / c.
inline double kappa_ref(DomainId domain, const Environment& env, double nu) {
  if (!(nu > 0.0)) fail(Errc::InvalidFrequency, "nu must be positive");
  if (env.scalars.empty()) fail(Errc::EmptyInput, "environment carries no medium summary");
  const double e = env.scalars.front();
  switch (domain) {
    case DomainId::SimpleWave:
      if (!(e > 0.0)) fail(Errc::InvalidSpeed, "v_ref must be positive");
      return 2.0 * std::numbers::pi * nu / e;
    case DomainId::Helmholtz:
      if (!(e > 0.0)) fail(Errc::BadConfig, "n_ref must be positive");
      return nu * std::sqrt(e);
    case DomainId::Maxwell: {
      if (!(e > 0.0)) fail(Errc::BadConfig, "eps_ref must be positive");
      constexpr double c0 = 299792458.0;
      return 2.0 * std::numbers::pi * nu * 1e9 / c0 * std::sqrt(e);
    }
  }
  fail(Errc::UnknownDomain, "domain id " + std::to_string(static_cast<int>(domain)));
}

inline Grid<std::complex<double>> g_prior(const PhasePriorSpec& spec) {
  spec.validate();
  const auto& shape = spec.paths.front().length;
  Grid<std::complex<double>> g(shape.rows(), shape.cols());
  for (const auto& p : spec.paths)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += p.coefficient * std::polar(1.0, spec.kappa_ref * p.length[i]);
  return g;
}

inline PhaseBaseFeatures phase_base_features(const PhasePriorSpec& spec) {
  const auto g = g_prior(spec);
  PhaseBaseFeatures f{Grid<double>(g.rows(), g.cols()), Grid<double>(g.rows(), g.cols(), 1.0)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) <= 1e-12) {
      ++f.degenerate_cells;
      continue;
    }
    const double phi = principal_arg(g[i].real(), g[i].imag());
    f.sin_map[i] = std::sin(phi);
    f.cos_map[i] = std::cos(phi);
  }
  return f;
}

/// Grid sampling used by the generators; the prior must use the same one.
struct GridGeometry {
  int rows = 64;
  int cols = 64;
  double x0 = 0.0, dx = 1.0;  ///< x_c = x0 + c dx
  double y0 = 0.0, dy = 1.0;

  double x(int c) const { return x0 + c * dx; }
  double y(int r) const { return y0 + r * dy; }

  static GridGeometry simplewave(const simwave::SimpleWaveConfig& cfg = {}) {
    return {cfg.grid, cfg.grid, 0.5 * cfg.lx / cfg.grid, cfg.lx / cfg.grid, 0.5 * cfg.ly / cfg.grid, cfg.ly / cfg.grid};
  }
  static GridGeometry helmholtz(int nodes = 64) {
    const double h = 1.0 / (nodes - 1);
    return {nodes, nodes, 0.0, h, 0.0, h};
  }
};

struct MaxwellGeometry {
  double source_x = 0.0;
  double source_y = 0.0;
  double wall_y = 0.0;  ///< electric-wall lower boundary; the mirror source sits at 2 wall_y - source_y
};

inline GridGeometry default_geometry(DomainId domain, int rows, int cols) {
  switch (domain) {
    case DomainId::SimpleWave: {
      simwave::SimpleWaveConfig cfg;
      cfg.grid = rows;
      auto g = GridGeometry::simplewave(cfg);
      g.cols = cols;
      return g;
    }
    case DomainId::Helmholtz: return GridGeometry::helmholtz(rows);
    case DomainId::Maxwell: return {rows, cols, 0.0, 1.0 / (cols - 1), 0.0, 1.0 / (rows - 1)};
  }
  fail(Errc::UnknownDomain, "domain id " + std::to_string(static_cast<int>(domain)));
}

inline Grid<double> distance_map(const GridGeometry& g, double sx, double sy) {
  return make_grid<double>(g.rows, g.cols, [&](int r, int c) { return std::hypot(g.x(c) - sx, g.y(r) - sy); });
}

/// SimpleWave and Helmholtz keep only the direct path (M = 1); Maxwell adds
/// the wall-mirrored path with unit coefficients.
inline PhasePriorSpec build_prior(DomainId domain, const Environment& env, double nu, const GridGeometry& geom,
                                  const MaxwellGeometry& maxwell = {}) {
  PhasePriorSpec spec;
  spec.kappa_ref = kappa_ref(domain, env, nu);
  switch (domain) {
    case DomainId::SimpleWave: {
      const simwave::SimpleWaveConfig cfg;
      spec.source_x = cfg.source.x;
      spec.source_y = cfg.source.y;
      break;
    }
    case DomainId::Helmholtz: {
      const helmholtz::SourceParams src;
      spec.source_x = src.x;
      spec.source_y = src.y;
      break;
    }
    case DomainId::Maxwell:
      spec.source_x = maxwell.source_x;
      spec.source_y = maxwell.source_y;
      break;
  }
  spec.paths.push_back({1.0, distance_map(geom, spec.source_x, spec.source_y)});
  if (domain == DomainId::Maxwell)
    spec.paths.push_back({1.0, distance_map(geom, spec.source_x, 2.0 * maxwell.wall_y - spec.source_y)});
  return spec;
}

}  // namespace wavex
