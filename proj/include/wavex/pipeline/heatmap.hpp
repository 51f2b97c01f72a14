#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/grid.hpp"

namespace wavex::pipeline {

/// 8-bit binary PGM (P5, maxval 255), rows top to bottom.
inline void write_pgm(const std::string& path, const Grid<std::uint8_t>& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  for (std::uint8_t v : img) out.put(static_cast<char>(v));
  if (!out) fail(Errc::IoError, "write failed for " + path);
}

/// Linear map of [lo, hi] to 0..255; a flat range maps to 0.
inline Grid<std::uint8_t> scale_to_bytes(const Grid<double>& g, double lo, double hi) {
  Grid<std::uint8_t> img(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) fail(Errc::NonFinite, "heatmap value at cell " + std::to_string(i));
    const double t = hi > lo ? (g[i] - lo) / (hi - lo) : 0.0;
    img[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
  }
  return img;
}

inline Grid<std::uint8_t> minmax_bytes(const Grid<double>& g) {
  if (g.size() == 0) fail(Errc::EmptyInput, "empty heatmap");
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  return scale_to_bytes(g, *lo, *hi);
}

/// round(255 (phi + pi) / (2 pi)) for phi in (-pi, pi].
inline std::uint8_t phase_byte(double phi) {
  return static_cast<std::uint8_t>(std::lround(255.0 * (phi + std::numbers::pi) / (2.0 * std::numbers::pi)));
}

struct HeatmapPaths {
  std::string amp, phase;
};

/// <prefix>_amp.pgm (min-max scaled amplitude) and <prefix>_phase.pgm.
inline HeatmapPaths export_heatmaps(const ComplexField& u, const std::string& prefix) {
  const PolarField p = to_polar(u);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!std::isfinite(p.amp[i]) || !std::isfinite(p.phase[i])) fail(Errc::NonFinite, "field value at cell " + std::to_string(i));
  HeatmapPaths out{prefix + "_amp.pgm", prefix + "_phase.pgm"};
  write_pgm(out.amp, minmax_bytes(p.amp));
  Grid<std::uint8_t> ph(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.size(); ++i) ph[i] = phase_byte(p.phase[i]);
  write_pgm(out.phase, ph);
  return out;
}

/// Square matrix as an image, one pixel per entry scaled to [lo, hi].
inline void export_matrix(const std::vector<std::vector<double>>& m, const std::string& path, double lo = 0.0, double hi = 1.0) {
  const int n = static_cast<int>(m.size());
  Grid<double> g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = m[r].at(c);
  write_pgm(path, scale_to_bytes(g, lo, hi));
}

struct PgmImage {
  int width = 0, height = 0, maxval = 0;
  std::vector<std::uint8_t> pixels;
};

inline PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::string magic;
  PgmImage img;
  in >> magic >> img.width >> img.height >> img.maxval;
  if (magic != "P5") fail(Errc::BadMagic, path);
  in.get();
  img.pixels.resize(std::size_t(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) fail(Errc::TruncatedFile, path);
  return img;
}

}  // namespace wavex::pipeline
