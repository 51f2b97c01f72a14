#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "wavex/error.hpp"

namespace wavex::sparse {

/// Compressed sparse row matrix with sorted column indices per row.
template <class T>
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<T> val;

  int nnz_in_row(int r) const { return row_ptr[r + 1] - row_ptr[r]; }

  void multiply(std::span<const T> x, std::span<T> y) const {
    for (int r = 0; r < n; ++r) {
      T acc{};
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
      y[r] = acc;
    }
  }

  std::vector<T> operator*(std::span<const T> x) const {
    std::vector<T> y(n);
    multiply(x, y);
    return y;
  }

  /// Entry (r, c), zero when structurally absent.
  T at(int r, int c) const {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (col[k] == c) return val[k];
    return T{};
  }
};

template <class T>
double norm2(std::span<const T> v) {
  double acc = 0.0;
  for (const auto& x : v) acc += std::norm(x);
  return std::sqrt(acc);
}

template <class T>
T dot_conj(std::span<const T> a, std::span<const T> b) {
  T acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

template <class T>
double relative_residual(const CsrMatrix<T>& a, std::span<const T> x, std::span<const T> b) {
  std::vector<T> r = a * x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double nb = norm2<T>(b);
  return nb == 0.0 ? norm2<T>(r) : norm2<T>(r) / nb;
}

/// Zero-fill incomplete LU on the matrix pattern.
template <class T>
class Ilu0 {
 public:
  explicit Ilu0(const CsrMatrix<T>& a) : lu_(a), diag_(a.n) {
    const int n = a.n;
    for (int r = 0; r < n; ++r) {
      diag_[r] = -1;
      for (int k = lu_.row_ptr[r]; k < lu_.row_ptr[r + 1]; ++k)
        if (lu_.col[k] == r) diag_[r] = k;
      if (diag_[r] < 0) fail(Errc::SingularSystem, "ILU(0): missing diagonal entry");
    }
    std::vector<int> pos(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k) pos[lu_.col[k]] = k;
      for (int k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1] && lu_.col[k] < i; ++k) {
        const int p = lu_.col[k];
        const T pivot = lu_.val[diag_[p]];
        if (pivot == T{}) fail(Errc::SingularSystem, "ILU(0): zero pivot");
        lu_.val[k] /= pivot;
        const T lik = lu_.val[k];
        for (int kk = diag_[p] + 1; kk < lu_.row_ptr[p + 1]; ++kk) {
          const int j = lu_.col[kk];
          if (pos[j] >= 0) lu_.val[pos[j]] -= lik * lu_.val[kk];
        }
      }
      for (int k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k) pos[lu_.col[k]] = -1;
    }
  }

  /// z = (LU)^-1 r
  void apply(std::span<const T> r, std::span<T> z) const {
    const int n = lu_.n;
    for (int i = 0; i < n; ++i) {
      T acc = r[i];
      for (int k = lu_.row_ptr[i]; k < diag_[i]; ++k) acc -= lu_.val[k] * z[lu_.col[k]];
      z[i] = acc;
    }
    for (int i = n - 1; i >= 0; --i) {
      T acc = z[i];
      for (int k = diag_[i] + 1; k < lu_.row_ptr[i + 1]; ++k) acc -= lu_.val[k] * z[lu_.col[k]];
      z[i] = acc / lu_.val[diag_[i]];
    }
  }

 private:
  CsrMatrix<T> lu_;
  std::vector<int> diag_;
};

struct KrylovStats {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Right-preconditioned BiCGSTAB; stops on the true relative residual.
template <class T, class Precond>
KrylovStats bicgstab(const CsrMatrix<T>& a, std::span<const T> b, std::span<T> x, const Precond& m, double tol,
                     int max_iter) {
  const std::size_t n = b.size();
  KrylovStats stats;
  const double nb = norm2<T>(b);
  if (nb == 0.0) {
    std::fill(x.begin(), x.end(), T{});
    stats.converged = true;
    return stats;
  }
  std::vector<T> r(n), r_hat(n), p(n, T{}), v(n, T{}), s(n), t(n), p_hat(n), s_hat(n), ax(n);
  a.multiply(x, ax);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  r_hat = r;
  T rho_prev{1}, alpha{1}, omega{1};
  stats.residual = norm2<T>(std::span<const T>(r)) / nb;
  if (stats.residual <= tol) {
    stats.converged = true;
    return stats;
  }
  for (int it = 1; it <= max_iter; ++it) {
    stats.iterations = it;
    const T rho = dot_conj<T>(r_hat, r);
    if (std::abs(rho) < 1e-300) break;
    if (it == 1) {
      p = r;
    } else {
      const T beta = (rho / rho_prev) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    m.apply(p, p_hat);
    a.multiply(p_hat, v);
    const T rv = dot_conj<T>(r_hat, v);
    if (std::abs(rv) < 1e-300) break;
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2<T>(std::span<const T>(s)) / nb <= tol) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p_hat[i];
      stats.residual = relative_residual<T>(a, x, b);
      if (stats.residual <= tol) {
        stats.converged = true;
        return stats;
      }
      a.multiply(x, ax);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
      rho_prev = rho;
      continue;
    }
    m.apply(s, s_hat);
    a.multiply(s_hat, t);
    const double tt = std::real(dot_conj<T>(t, t));
    if (tt == 0.0) break;
    omega = dot_conj<T>(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p_hat[i] + omega * s_hat[i];
      r[i] = s[i] - omega * t[i];
    }
    stats.residual = norm2<T>(std::span<const T>(r)) / nb;
    if (stats.residual <= tol) {
      stats.residual = relative_residual<T>(a, x, b);
      if (stats.residual <= tol) {
        stats.converged = true;
        return stats;
      }
      a.multiply(x, ax);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    }
    if (std::abs(omega) < 1e-300) break;
    rho_prev = rho;
  }
  stats.residual = relative_residual<T>(a, x, b);
  stats.converged = stats.residual <= tol;
  return stats;
}

/// Sparse-direct solve through Eigen's supernodal LU.
template <class T>
std::vector<T> direct_solve(const CsrMatrix<T>& a, std::span<const T> b) {
  std::vector<Eigen::Triplet<T>> trip;
  trip.reserve(a.val.size());
  for (int r = 0; r < a.n; ++r)
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) trip.emplace_back(r, a.col[k], a.val[k]);
  Eigen::SparseMatrix<T> m(a.n, a.n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<T>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) fail(Errc::SingularSystem, "sparse LU factorization failed");
  Eigen::Matrix<T, Eigen::Dynamic, 1> rhs(a.n);
  for (int i = 0; i < a.n; ++i) rhs[i] = b[i];
  Eigen::Matrix<T, Eigen::Dynamic, 1> sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success) fail(Errc::SingularSystem, "sparse LU solve failed");
  return std::vector<T>(sol.data(), sol.data() + a.n);
}

}  // namespace wavex::sparse
