#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/grid.hpp"
#include "wavex/parallel.hpp"
#include "wavex/rng.hpp"
#include "wavex/sparse.hpp"

namespace wavex::helmholtz {

using cplx = std::complex<double>;

/// Corner-anchored nodes on [0,1]^2: x_j = j / (nodes - 1).
struct GridSpec {
  int nodes = 64;
  double h() const { return 1.0 / (nodes - 1); }
  double coord(int j) const { return j * h(); }
};

inline const std::vector<double>& lf_wavenumbers() {
  static const std::vector<double> v{10.0, 15.0, 20.0, 25.0};
  return v;
}
inline const std::vector<double>& hf_wavenumbers() {
  static const std::vector<double> v{30.0, 37.5, 50.0};
  return v;
}

struct MediumParams {
  double smoothing_cells = 8.0;  ///< l_g
  double contrast = 0.25;
  double lo = 0.6;
  double hi = 1.4;
};

struct Medium {
  Grid<double> n;
  std::uint64_t seed = 0;

  double mean() const {
    double acc = 0.0;
    for (double v : n) acc += v;
    return acc / static_cast<double>(n.size());
  }
};

/// Half-sample symmetric reflection of an out-of-range index into [0, len).
inline int reflect_index(int i, int len) {
  const int period = 2 * len;
  i %= period;
  if (i < 0) i += period;
  return i < len ? i : period - 1 - i;
}

/// Separable truncated Gaussian (radius ceil(4 sigma)) with reflect padding.
inline Grid<double> gaussian_smooth(const Grid<double>& in, double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int k = -radius; k <= radius; ++k) norm += kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (auto& w : kernel) w /= norm;

  const int rows = in.rows(), cols = in.cols();
  Grid<double> tmp(rows, cols), out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * in(r, reflect_index(c + k, cols));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(reflect_index(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

/// g = (G * xi - mean) / std over the grid, then n = clip(1 + 0.25 g).
/// Also returns g before clipping through `normalized` when requested.
inline Medium medium_from_noise(const Grid<double>& noise, const MediumParams& p = {}, Grid<double>* normalized = nullptr) {
  Grid<double> g = gaussian_smooth(noise, p.smoothing_cells);
  const double count = static_cast<double>(g.size());
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  if (sd < 1e-12) fail(Errc::DegenerateField, "smoothed noise has zero variance");
  Medium m;
  m.n = Grid<double>(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = (g[i] - mean) / sd;
    m.n[i] = std::clamp(1.0 + p.contrast * g[i], p.lo, p.hi);
  }
  if (normalized) *normalized = std::move(g);
  return m;
}

inline Medium sample_medium(std::uint64_t seed, GridSpec grid = {}, const MediumParams& p = {}) {
  Rng rng(seed);
  Grid<double> noise(grid.nodes, grid.nodes);
  for (auto& v : noise) v = rng.normal();
  Medium m = medium_from_noise(noise, p);
  m.seed = seed;
  return m;
}

struct SourceParams {
  double x = 0.30;
  double y = 0.50;
  double sigma = 0.03;
  double beta = std::numbers::pi / 6.0;
  double dir_angle = std::numbers::pi / 4.0;
  double amplitude = 1.0;
};

struct SourceField {
  Grid<cplx> s;
  SourceParams params;
};

inline cplx source_at(const SourceParams& p, double x, double y) {
  const double dx = x - p.x, dy = y - p.y;
  const double along = dx * std::cos(p.dir_angle) + dy * std::sin(p.dir_angle);
  return p.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma)) *
         std::polar(1.0, p.beta * along / p.sigma);
}

inline SourceField build_source(GridSpec grid = {}, const SourceParams& p = {}) {
  SourceField f{make_grid<cplx>(grid.nodes, grid.nodes, [&](int r, int c) { return source_at(p, grid.coord(c), grid.coord(r)); }), p};
  return f;
}

struct SpongeParams {
  double width = 0.15;
  double strength = 1.5;
  double power = 2.0;
};

struct SpongeProfile {
  Grid<double> sigma;
  SpongeParams params;
};

/// D_x, D_y are distances to the continuous boundary of [0,1]^2.
inline double sponge_at(const SpongeParams& p, double x, double y) {
  const double dx = std::min(x, 1.0 - x), dy = std::min(y, 1.0 - y);
  const double rx = std::max((p.width - dx) / p.width, 0.0);
  const double ry = std::max((p.width - dy) / p.width, 0.0);
  return p.strength * (std::pow(rx, p.power) + std::pow(ry, p.power));
}

inline SpongeProfile build_sponge(GridSpec grid = {}, const SpongeParams& p = {}) {
  return {make_grid<double>(grid.nodes, grid.nodes, [&](int r, int c) { return sponge_at(p, grid.coord(c), grid.coord(r)); }), p};
}

/// Discrete -Lap u - k^2 n (1 + i sigma) u = s on the interior nodes, with
/// u = 0 on the outer ring. Unknown index = (r - 1) * (nodes - 2) + (c - 1).
struct HelmholtzSystem {
  sparse::CsrMatrix<cplx> matrix;
  std::vector<cplx> rhs;
  double k = 0.0;
  double h = 0.0;
  int nodes = 0;

  int interior() const { return nodes - 2; }
};

inline HelmholtzSystem assemble(const Medium& medium, const SourceField& source, const SpongeProfile& sponge, double k) {
  if (!(k > 0.0)) fail(Errc::InvalidWavenumber, "k must be positive");
  require_same_shape(medium.n, source.s, "assemble: medium/source");
  require_same_shape(medium.n, sponge.sigma, "assemble: medium/sponge");
  const int nodes = medium.n.rows();
  if (nodes < 3 || medium.n.cols() != nodes) fail(Errc::ShapeMismatch, "assemble needs a square grid of at least 3 nodes");
  HelmholtzSystem sys;
  sys.k = k;
  sys.nodes = nodes;
  sys.h = 1.0 / (nodes - 1);
  const int m = nodes - 2;
  const double inv_h2 = 1.0 / (sys.h * sys.h);
  auto& a = sys.matrix;
  a.n = m * m;
  a.row_ptr.assign(1, 0);
  a.col.reserve(5 * a.n);
  a.val.reserve(5 * a.n);
  sys.rhs.resize(a.n);
  for (int r = 1; r <= m; ++r) {
    for (int c = 1; c <= m; ++c) {
      const int row = (r - 1) * m + (c - 1);
      auto push = [&](int rr, int cc, cplx v) {
        if (rr < 1 || rr > m || cc < 1 || cc > m) return;
        a.col.push_back((rr - 1) * m + (cc - 1));
        a.val.push_back(v);
      };
      push(r - 1, c, -inv_h2);
      push(r, c - 1, -inv_h2);
      push(r, c, 4.0 * inv_h2 - k * k * medium.n(r, c) * cplx(1.0, sponge.sigma(r, c)));
      push(r, c + 1, -inv_h2);
      push(r + 1, c, -inv_h2);
      a.row_ptr.push_back(static_cast<int>(a.col.size()));
      sys.rhs[row] = source.s(r, c);
    }
  }
  return sys;
}

struct SolverOptions {
  double tol = 1e-11;          ///< Krylov stopping tolerance on the relative residual
  double contract = 1e-8;      ///< every returned solution satisfies this residual
  int max_iter = 4000;
  bool allow_direct_fallback = true;
  bool force_direct = false;
};

struct SolveReport {
  std::vector<cplx> x;
  double residual = 0.0;
  int iterations = 0;
  bool used_direct = false;
};

/// ILU(0)-preconditioned BiCGSTAB, falling back to sparse LU when the Krylov
/// iteration misses the contract.
inline SolveReport solve_vector(const HelmholtzSystem& sys, std::span<const cplx> b, const SolverOptions& opt = {}) {
  const auto& a = sys.matrix;
  if (b.size() != std::size_t(a.n)) fail(Errc::ShapeMismatch, "rhs length does not match system");
  SolveReport rep;
  rep.x.assign(a.n, cplx{});
  if (!opt.force_direct) {
    sparse::Ilu0<cplx> ilu(a);
    const auto st = sparse::bicgstab<cplx>(a, b, rep.x, ilu, opt.tol, opt.max_iter);
    rep.iterations = st.iterations;
    rep.residual = st.residual;
    if (rep.residual <= opt.contract && std::isfinite(rep.residual)) return rep;
    if (!opt.allow_direct_fallback)
      fail(Errc::NoConvergence, "BiCGSTAB stopped at residual " + std::to_string(rep.residual) + " after " +
                                    std::to_string(st.iterations) + " iterations");
  }
  rep.x = sparse::direct_solve<cplx>(a, b);
  rep.used_direct = true;
  rep.residual = sparse::relative_residual<cplx>(a, rep.x, b);
  if (!(rep.residual <= opt.contract)) fail(Errc::NoConvergence, "direct solve residual " + std::to_string(rep.residual));
  return rep;
}

/// Interior solution embedded into the full node grid with a zero outer ring.
inline ComplexField embed(const HelmholtzSystem& sys, std::span<const cplx> x, Environment env = {}) {
  ComplexField u(sys.nodes, sys.nodes, sys.k, std::move(env), DomainId::Helmholtz);
  const int m = sys.interior();
  for (int r = 1; r <= m; ++r)
    for (int c = 1; c <= m; ++c) {
      const cplx z = x[(r - 1) * m + (c - 1)];
      u.re(r, c) = z.real();
      u.im(r, c) = z.imag();
    }
  return u;
}

inline ComplexField solve(const HelmholtzSystem& sys, const SolverOptions& opt = {}) {
  const auto rep = solve_vector(sys, sys.rhs, opt);
  return embed(sys, rep.x);
}

struct HelmholtzConfig {
  GridSpec grid{};
  MediumParams medium{};
  SourceParams source{};
  SpongeParams sponge{};
  SolverOptions solver{};
};

/// Medium sub-seed of sample `index`.
inline std::uint64_t medium_seed(std::uint64_t seed, std::size_t index) { return mix_seed(seed, index); }

/// Samples ordered by wavenumber, n_per_k each; every sample draws its own
/// medium. Channels: [n, k broadcast]; env: {mean n}.
inline Dataset generate_dataset(std::uint64_t seed, const std::vector<double>& ks, int n_per_k, const HelmholtzConfig& cfg = {}) {
  if (ks.empty()) fail(Errc::EmptyInput, "no wavenumbers requested");
  if (n_per_k < 1) fail(Errc::EmptyInput, "n_per_k must be at least 1");
  for (double k : ks)
    if (!(k > 0.0)) fail(Errc::InvalidWavenumber, "k must be positive");
  const int nodes = cfg.grid.nodes;
  const SourceField source = build_source(cfg.grid, cfg.source);
  const SpongeProfile sponge = build_sponge(cfg.grid, cfg.sponge);

  Dataset ds;
  ds.domain = DomainId::Helmholtz;
  ds.rows = ds.cols = nodes;
  ds.n_channels = 2;
  ds.n_env = 1;
  ds.samples.resize(ks.size() * n_per_k);
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    const double k = ks[i / n_per_k];
    try {
      const Medium med = sample_medium(medium_seed(seed, i), cfg.grid, cfg.medium);
      const HelmholtzSystem sys = assemble(med, source, sponge, k);
      const auto rep = solve_vector(sys, sys.rhs, cfg.solver);
      ComplexField u = embed(sys, rep.x, Environment{{med.mean()}});
      Sample s;
      s.nu = k;
      s.env = u.env.scalars;
      Grid<float> nch(nodes, nodes), kch(nodes, nodes, static_cast<float>(k));
      for (std::size_t j = 0; j < med.n.size(); ++j) nch[j] = static_cast<float>(med.n[j]);
      s.channels.push_back(std::move(nch));
      s.channels.push_back(std::move(kch));
      store_field(s, u);
      ds.samples[i] = std::move(s);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.detail());
    }
  });
  return ds;
}

}  // namespace wavex::helmholtz
