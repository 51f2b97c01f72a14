#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "wavex/error.hpp"
#include "wavex/grid.hpp"

namespace wavex {

enum class DomainId : std::uint16_t { SimpleWave = 0, Helmholtz = 1, Maxwell = 2 };

inline std::string domain_name(DomainId id) {
  switch (id) {
    case DomainId::SimpleWave: return "simplewave";
    case DomainId::Helmholtz: return "helmholtz";
    case DomainId::Maxwell: return "maxwell";
  }
  fail(Errc::UnknownDomain, "domain id " + std::to_string(static_cast<int>(id)));
}

inline DomainId parse_domain(const std::string& name) {
  if (name == "simplewave" || name == "SimpleWave") return DomainId::SimpleWave;
  if (name == "helmholtz" || name == "Helmholtz") return DomainId::Helmholtz;
  if (name == "maxwell" || name == "Maxwell") return DomainId::Maxwell;
  fail(Errc::UnknownDomain, name);
}

/// Scalar environment summary carried with every field.
///   SimpleWave: {v}
///   Helmholtz:  {n_ref (mean of n)}
///   Maxwell:    {eps_ref}
/// Spatial environment maps (the Helmholtz medium) travel as input channels.
struct Environment {
  std::vector<double> scalars;
  bool operator==(const Environment&) const = default;
};

/// Complex field u(r; e, nu) on a rectangular grid.
struct ComplexField {
  Grid<double> re;
  Grid<double> im;
  double nu = 1.0;
  Environment env;
  DomainId domain = DomainId::SimpleWave;

  ComplexField() = default;
  ComplexField(int rows, int cols, double nu_, Environment env_ = {}, DomainId dom = DomainId::SimpleWave)
      : re(rows, cols), im(rows, cols), nu(nu_), env(std::move(env_)), domain(dom) {
    validate();
  }

  int rows() const { return re.rows(); }
  int cols() const { return re.cols(); }
  std::size_t size() const { return re.size(); }

  std::complex<double> at(std::size_t i) const { return {re[i], im[i]}; }
  std::complex<double> at(int r, int c) const { return {re(r, c), im(r, c)}; }
  void set(std::size_t i, std::complex<double> z) {
    re[i] = z.real();
    im[i] = z.imag();
  }

  void validate() const {
    if (!re.same_shape(im)) fail(Errc::ShapeMismatch, "re/im shapes differ");
    if (re.rows() < 2 || re.cols() < 2) fail(Errc::ShapeMismatch, "field grid must be at least 2x2");
    if (!(nu > 0.0)) fail(Errc::InvalidFrequency, "nu must be positive");
  }
};

/// Amplitude / principal-phase representation. phase is in (-pi, pi].
struct PolarField {
  Grid<double> amp;
  Grid<double> phase;
};

/// u = A exp(i nu tau), the local travel-time abstraction.
struct TravelTimeSpec {
  Grid<double> amp;
  Grid<double> tau;
  double nu = 1.0;
};

struct RegionMask {
  Grid<std::uint8_t> mask;
  double cell_area = 1.0;

  static RegionMask full(int rows, int cols, double cell_area = 1.0) {
    return RegionMask{Grid<std::uint8_t>(rows, cols, 1), cell_area};
  }

  void validate() const {
    if (!(cell_area > 0.0)) fail(Errc::ShapeMismatch, "cell_area must be positive");
    for (auto m : mask)
      if (m) return;
    fail(Errc::EmptyInput, "region mask selects no cells");
  }
};

/// Principal argument mapped into (-pi, pi]; atan2 may return -pi for a
/// negative-zero imaginary part.
inline double principal_arg(double re, double im) {
  if (re == 0.0 && im == 0.0) return 0.0;
  double a = std::atan2(im, re);
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

inline double wrap_phase(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline PolarField to_polar(const ComplexField& u) {
  u.validate();
  PolarField p{Grid<double>(u.rows(), u.cols()), Grid<double>(u.rows(), u.cols())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    p.amp[i] = std::hypot(u.re[i], u.im[i]);
    p.phase[i] = p.amp[i] == 0.0 ? 0.0 : principal_arg(u.re[i], u.im[i]);
  }
  return p;
}

inline ComplexField from_polar(const PolarField& p, double nu, Environment env, DomainId domain) {
  require_same_shape(p.amp, p.phase, "from_polar");
  ComplexField u(p.amp.rows(), p.amp.cols(), nu, std::move(env), domain);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.re[i] = p.amp[i] * std::cos(p.phase[i]);
    u.im[i] = p.amp[i] * std::sin(p.phase[i]);
  }
  return u;
}

inline ComplexField synth_from_travel_time(const TravelTimeSpec& s) {
  require_same_shape(s.amp, s.tau, "synth_from_travel_time");
  ComplexField u(s.amp.rows(), s.amp.cols(), s.nu);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ph = s.nu * s.tau[i];
    u.re[i] = s.amp[i] * std::cos(ph);
    u.im[i] = s.amp[i] * std::sin(ph);
  }
  return u;
}

/// The three sides of the regional amplitude/phase error identity.
struct RegionalError {
  double lhs = 0.0;         ///< int_S |u_hat - u|^2
  double amp_term = 0.0;    ///< int_S (A_hat - A)^2
  double phase_term = 0.0;  ///< 4 int_S A A_hat sin^2(nu dtau / 2)
};

/// Integrals are midpoint sums over the mask times cell_area. lhs is computed
/// from the synthesized complex fields, independently of the two terms.
inline RegionalError decompose_regional_error(const TravelTimeSpec& truth, const TravelTimeSpec& pred,
                                              const RegionMask& region) {
  if (truth.nu != pred.nu) fail(Errc::MismatchedFrequency, "truth and prediction frequencies differ");
  require_same_shape(truth.amp, pred.amp, "decompose_regional_error");
  require_same_shape(truth.amp, region.mask, "decompose_regional_error mask");
  region.validate();

  const ComplexField u = synth_from_travel_time(truth);
  const ComplexField uh = synth_from_travel_time(pred);
  RegionalError out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!region.mask[i]) continue;
    const double dr = uh.re[i] - u.re[i];
    const double di = uh.im[i] - u.im[i];
    out.lhs += dr * dr + di * di;
    const double da = pred.amp[i] - truth.amp[i];
    out.amp_term += da * da;
    const double s = std::sin(truth.nu * (pred.tau[i] - truth.tau[i]) / 2.0);
    out.phase_term += 4.0 * truth.amp[i] * pred.amp[i] * s * s;
  }
  out.lhs *= region.cell_area;
  out.amp_term *= region.cell_area;
  out.phase_term *= region.cell_area;
  return out;
}

/// ||tau_hat - tau||^2 over the region.
inline double travel_time_mismatch_sq(const TravelTimeSpec& truth, const TravelTimeSpec& pred,
                                      const RegionMask& region) {
  require_same_shape(truth.tau, pred.tau, "travel_time_mismatch_sq");
  require_same_shape(truth.tau, region.mask, "travel_time_mismatch_sq mask");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.tau.size(); ++i) {
    if (!region.mask[i]) continue;
    const double d = pred.tau[i] - truth.tau[i];
    acc += d * d;
  }
  return acc * region.cell_area;
}

/// amp_term + nu^2 A_max A_hat_max ||dtau||^2; an upper bound on lhs.
inline double regional_error_bound(double amp_term, double dtau_l2_sq, double nu, double a_max, double a_hat_max) {
  return amp_term + nu * nu * a_max * a_hat_max * dtau_l2_sq;
}

}  // namespace wavex
