#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/rng.hpp"

namespace wavex {

namespace detail {

inline void require_same_field_shape(const ComplexField& a, const ComplexField& b, const char* what) {
  require_same_shape(a.re, b.re, what);
}

/// Sum of |z|^2, |Dx z|^2, |Dy z|^2 with forward differences truncated at the
/// last column/row.
template <class F>
double h1_energy(int rows, int cols, F&& z) {
  double acc = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::complex<double> v = z(r, c);
      acc += std::norm(v);
      if (c + 1 < cols) acc += std::norm(z(r, c + 1) - v);
      if (r + 1 < rows) acc += std::norm(z(r + 1, c) - v);
    }
  return acc;
}

}  // namespace detail

/// Relative complex H1 error with forward differences.
inline double h1_error(const ComplexField& pred, const ComplexField& truth) {
  detail::require_same_field_shape(pred, truth, "h1_error");
  const int rows = truth.rows(), cols = truth.cols();
  const double den = detail::h1_energy(rows, cols, [&](int r, int c) { return truth.at(r, c); });
  if (den == 0.0) fail(Errc::ZeroDenominator, "truth field and its differences vanish");
  const double num = detail::h1_energy(rows, cols, [&](int r, int c) { return pred.at(r, c) - truth.at(r, c); });
  return std::sqrt(num / den);
}

/// |sum |u| exp(i(arg pred - arg truth))| / sum |u|.
inline double awpc(const ComplexField& pred, const ComplexField& truth) {
  detail::require_same_field_shape(pred, truth, "awpc");
  std::complex<double> acc{};
  double weight = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double a = std::hypot(truth.re[i], truth.im[i]);
    if (a == 0.0) continue;
    weight += a;
    const double dphi = principal_arg(pred.re[i], pred.im[i]) - principal_arg(truth.re[i], truth.im[i]);
    acc += a * std::polar(1.0, dphi);
  }
  if (weight == 0.0) fail(Errc::ZeroWeight, "truth amplitude sums to zero");
  return std::min(1.0, std::abs(acc) / weight);
}

/// Cosine similarity of the flattened amplitude grids.
inline double amp_similarity(const ComplexField& a, const ComplexField& b) {
  detail::require_same_field_shape(a, b, "amp_similarity");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::hypot(a.re[i], a.im[i]);
    const double y = std::hypot(b.re[i], b.im[i]);
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) fail(Errc::ZeroNorm, "amplitude grid is identically zero");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

/// |N^-1 sum exp(i(phi_a - phi_b))|.
inline double phase_similarity(const ComplexField& a, const ComplexField& b) {
  detail::require_same_field_shape(a, b, "phase_similarity");
  std::complex<double> acc{};
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::polar(1.0, principal_arg(a.re[i], a.im[i]) - principal_arg(b.re[i], b.im[i]));
  return std::min(1.0, std::abs(acc) / static_cast<double>(a.size()));
}

struct RelativePoint {
  double nu = 0.0;
  double mean_sa = 0.0;
  double mean_sp = 0.0;
  double rel_sa = 0.0;
  double rel_sp = 0.0;
};

struct SimilarityCurve {
  double ref_freq = 0.0;
  double ref_sa = 0.0;
  double ref_sp = 0.0;
  std::vector<RelativePoint> points;
};

using FieldsByFreq = std::map<double, std::vector<ComplexField>>;

/// Mean per-sample S_A and S_P at each queried frequency, divided by the means
/// at ref_freq. Queried frequencies are every key of `preds` except ref_freq.
inline SimilarityCurve relative_similarity_curve(const FieldsByFreq& preds, const FieldsByFreq& truths, double ref_freq) {
  auto means = [&](double nu) {
    const auto p = preds.find(nu);
    const auto t = truths.find(nu);
    if (p == preds.end() || t == truths.end()) fail(Errc::MissingReference, "no fields at nu = " + std::to_string(nu));
    if (p->second.size() != t->second.size() || p->second.empty())
      fail(Errc::ShapeMismatch, "prediction/truth counts differ at nu = " + std::to_string(nu));
    double sa = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < p->second.size(); ++i) {
      sa += amp_similarity(p->second[i], t->second[i]);
      sp += phase_similarity(p->second[i], t->second[i]);
    }
    const double n = static_cast<double>(p->second.size());
    return std::pair{sa / n, sp / n};
  };
  if (!preds.contains(ref_freq) || !truths.contains(ref_freq))
    fail(Errc::MissingReference, "reference frequency " + std::to_string(ref_freq) + " absent");
  SimilarityCurve curve;
  curve.ref_freq = ref_freq;
  std::tie(curve.ref_sa, curve.ref_sp) = means(ref_freq);
  for (const auto& [nu, fields] : preds) {
    if (nu == ref_freq) continue;
    RelativePoint pt;
    pt.nu = nu;
    std::tie(pt.mean_sa, pt.mean_sp) = means(nu);
    pt.rel_sa = pt.mean_sa / curve.ref_sa;
    pt.rel_sp = pt.mean_sp / curve.ref_sp;
    curve.points.push_back(pt);
  }
  return curve;
}

struct BootstrapCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  int resamples = 2000;

  double half_width() const { return 0.5 * (hi - lo); }
};

/// Linear-interpolated empirical quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

/// Percentile bootstrap of the mean. lo/hi are widened to include the sample
/// mean when a skewed resample distribution would exclude it.
inline BootstrapCI bootstrap_ci(const std::vector<double>& values, int resamples = 2000, double level = 0.95,
                                std::uint64_t seed = 0) {
  if (values.empty()) fail(Errc::EmptyInput, "bootstrap needs at least one value");
  if (resamples < 1) fail(Errc::BadConfig, "resamples must be positive");
  const std::size_t n = values.size();
  BootstrapCI ci;
  ci.level = level;
  ci.resamples = resamples;
  for (double v : values) ci.mean += v;
  ci.mean /= static_cast<double>(n);

  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += values[rng.index(n)];
    m = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  ci.lo = std::min(sorted_quantile(means, alpha), ci.mean);
  ci.hi = std::max(sorted_quantile(means, 1.0 - alpha), ci.mean);
  return ci;
}

/// S_A and S_P between every pair of fields (same environment, different
/// frequencies), in the order given.
struct SimilarityMatrices {
  std::vector<double> freqs;
  std::vector<std::vector<double>> sa;
  std::vector<std::vector<double>> sp;
};

inline SimilarityMatrices similarity_matrices(const std::vector<ComplexField>& fields) {
  if (fields.size() < 2) fail(Errc::InsufficientFrequencies, "need fields at two or more frequencies");
  const std::size_t n = fields.size();
  SimilarityMatrices m;
  m.sa.assign(n, std::vector<double>(n, 1.0));
  m.sp.assign(n, std::vector<double>(n, 1.0));
  for (const auto& f : fields) m.freqs.push_back(f.nu);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      m.sa[i][j] = m.sa[j][i] = amp_similarity(fields[i], fields[j]);
      m.sp[i][j] = m.sp[j][i] = phase_similarity(fields[i], fields[j]);
    }
  return m;
}

}  // namespace wavex
