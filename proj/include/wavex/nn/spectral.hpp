#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "wavex/nn/tensor.hpp"

namespace wavex::nn {

/// Unscaled 1-D/2-D transforms over Eigen's FFT (kissfft backend).
template <class T>
class Fft {
 public:
  using C = std::complex<T>;

  Fft() { fft_.SetFlag(Eigen::FFT<T>::Unscaled); }

  void forward(C* dst, const C* src, int n) { fft_.fwd(dst, src, n); }
  /// sum_k X_k exp(+i 2 pi k j / n), no 1/n factor.
  void inverse(C* dst, const C* src, int n) { fft_.inv(dst, src, n); }

  /// Full 2-D transform of a row-major h x w array.
  std::vector<C> forward2(const std::vector<C>& x, int h, int w) { return apply2(x, h, w, false); }
  /// Inverse 2-D transform including the 1/(h w) factor.
  std::vector<C> inverse2(const std::vector<C>& x, int h, int w) {
    auto y = apply2(x, h, w, true);
    const T s = T(1) / static_cast<T>(h * w);
    for (auto& v : y) v *= s;
    return y;
  }

 private:
  std::vector<C> apply2(const std::vector<C>& x, int h, int w, bool inv) {
    std::vector<C> tmp(x.size()), col_in(h), col_out(h);
    for (int r = 0; r < h; ++r) (inv ? fft_.inv(&tmp[r * w], &x[r * w], w) : fft_.fwd(&tmp[r * w], &x[r * w], w));
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h; ++r) col_in[r] = tmp[r * w + c];
      inv ? fft_.inv(col_out.data(), col_in.data(), h) : fft_.fwd(col_out.data(), col_in.data(), h);
      for (int r = 0; r < h; ++r) tmp[r * w + c] = col_out[r];
    }
    return tmp;
  }

  Eigen::FFT<T> fft_;
};

/// Retained Fourier block for an H x W grid and m modes: ky in [0, m) (the
/// half-spectrum along H) and kx in [-ceil(m/2)+1, floor(m/2)] along W.
struct ModeBlock {
  int h = 0, w = 0, m = 0;

  ModeBlock(int h_, int w_, int m_) : h(h_), w(w_), m(m_) {
    if (m < 1 || m > h / 2 + 1 || m > w) fail(Errc::ModeOverflow, std::to_string(m) + " modes on a " + std::to_string(h) + "x" + std::to_string(w) + " grid");
  }

  int kx_of(int j) const { return j - (m + 1) / 2 + 1; }
  int col_of(int j) const { return (kx_of(j) % w + w) % w; }
  /// Weight of the half-spectrum row when taking the real part of the inverse.
  int row_factor(int ky) const { return (ky == 0 || 2 * ky == h) ? 1 : 2; }
};

namespace detail {

/// Truncated DFT factors for a mode block: exp(-i 2 pi kx c / w) split into
/// cos/sin (w x m, real) and exp(-i 2 pi ky r / h) (m x h, complex).
template <class T>
struct Twiddles {
  using C = std::complex<T>;
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cw, sw;
  Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> eh;

  explicit Twiddles(const ModeBlock& mb) : cw(mb.w, mb.m), sw(mb.w, mb.m), eh(mb.m, mb.h) {
    for (int c = 0; c < mb.w; ++c)
      for (int j = 0; j < mb.m; ++j) {
        // integer phase index keeps the angle exact modulo w
        const long k = (static_cast<long>(mb.col_of(j)) * c) % mb.w;
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / mb.w;
        cw(c, j) = static_cast<T>(std::cos(a));
        sw(c, j) = static_cast<T>(std::sin(a));
      }
    for (int ky = 0; ky < mb.m; ++ky)
      for (int r = 0; r < mb.h; ++r) {
        const long k = (static_cast<long>(ky) * r) % mb.h;
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / mb.h;
        eh(ky, r) = C(static_cast<T>(std::cos(a)), static_cast<T>(-std::sin(a)));
      }
  }
};

/// X[p, ky, j] for `planes` real h x w planes stored back to back.
template <class T>
void modes_forward(const ModeBlock& mb, const Twiddles<T>& tw, const T* x, int planes, std::complex<T>* out) {
  using C = std::complex<T>;
  using RM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CM = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int h = mb.h, w = mb.w, m = mb.m;
  Eigen::Map<const RM> xm(x, Eigen::Index(planes) * h, w);
  const RM ar = xm * tw.cw;
  const RM ai = -(xm * tw.sw);
  CM a(h, m);
  for (int p = 0; p < planes; ++p) {
    a.real() = ar.middleRows(Eigen::Index(p) * h, h);
    a.imag() = ai.middleRows(Eigen::Index(p) * h, h);
    Eigen::Map<CM>(out + std::size_t(p) * m * m, m, m).noalias() = tw.eh * a;
  }
}

/// Re( sum_{retained k} Z_k exp(+i k.r) ), unscaled, for `planes` blocks.
template <class T>
void modes_inverse(const ModeBlock& mb, const Twiddles<T>& tw, const std::complex<T>* z, int planes, T* y) {
  using C = std::complex<T>;
  using RM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CM = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int h = mb.h, w = mb.w, m = mb.m;
  RM br(Eigen::Index(planes) * h, m), bi(Eigen::Index(planes) * h, m);
  const CM ehh = tw.eh.adjoint();
  for (int p = 0; p < planes; ++p) {
    const CM b = ehh * Eigen::Map<const CM>(z + std::size_t(p) * m * m, m, m);
    br.middleRows(Eigen::Index(p) * h, h) = b.real();
    bi.middleRows(Eigen::Index(p) * h, h) = b.imag();
  }
  // Re((br + i bi)(cw - i sw)^H) = br cw^T - bi sw^T
  Eigen::Map<RM> ym(y, Eigen::Index(planes) * h, w);
  ym.noalias() = br * tw.cw.transpose();
  ym.noalias() -= bi * tw.sw.transpose();
}

}  // namespace detail

/// Fourier-space kernel integral: y = Re IFFT2( c_ky * sum_i W[i,o,ky,j] X_i[ky,j] )
/// on the retained block, all other modes zero. w_re, w_im are (Cin, Cout, m, m).
/// Only m x m modes survive, so the transforms run as truncated DFT products.
template <class T>
Tensor<T> spectral_conv2d(const Tensor<T>& x, const Tensor<T>& w_re, const Tensor<T>& w_im) {
  using C = std::complex<T>;
  require_rank(x.shape(), 4, "spectral_conv2d input");
  require_rank(w_re.shape(), 4, "spectral_conv2d weight");
  require_shape(w_re.shape(), w_im.shape(), "spectral_conv2d re/im weights");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int co = w_re.dim(1), m = w_re.dim(2);
  if (w_re.dim(0) != ci || w_re.dim(3) != m) fail(Errc::ShapeMismatch, "spectral weight " + shape_str(w_re.shape()) + " for input " + shape_str(x.shape()));
  const ModeBlock mb(h, wd, m);
  const std::size_t blk = std::size_t(m) * m, plane = std::size_t(h) * wd;
  const T inv_np = T(1) / static_cast<T>(plane);

  auto tw = std::make_shared<const detail::Twiddles<T>>(mb);
  // X modes for every (sample, input channel), kept for the weight gradient.
  auto xm = std::make_shared<std::vector<C>>(std::size_t(n) * ci * blk);
  detail::modes_forward(mb, *tw, x.data(), n * ci, xm->data());

  auto out = make_result<T>({n, co, h, wd}, {x, w_re, w_im});
  std::vector<C> wc(std::size_t(ci) * co * blk), acc(std::size_t(n) * co * blk, C{});
  for (std::size_t k = 0; k < wc.size(); ++k) wc[k] = C(w_re.data()[k], w_im.data()[k]);
  std::vector<T> rowf(blk);
  for (int ky = 0; ky < m; ++ky)
    for (int j = 0; j < m; ++j) rowf[ky * m + j] = static_cast<T>(mb.row_factor(ky)) * inv_np;
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < ci; ++i) {
      const C* xs = xm->data() + (std::size_t(b) * ci + i) * blk;
      for (int o = 0; o < co; ++o) {
        C* dst = acc.data() + (std::size_t(b) * co + o) * blk;
        const C* wk = wc.data() + (std::size_t(i) * co + o) * blk;
        for (std::size_t k = 0; k < blk; ++k) dst[k] += xs[k] * wk[k];
      }
    }
  for (std::size_t q = 0; q < acc.size(); ++q) acc[q] *= rowf[q % blk];
  detail::modes_inverse(mb, *tw, acc.data(), n * co, out.data());

  on_backward(out, [x, w_re, w_im, xm, tw, n, ci, co, m, h, wd, blk, rowf](Node<T>& self) {
    const ModeBlock mb(h, wd, m);
    // gY = c * DFT(g) / Np on the retained block
    std::vector<C> gy(std::size_t(n) * co * blk);
    detail::modes_forward(mb, *tw, self.grad.data(), n * co, gy.data());
    for (std::size_t q = 0; q < gy.size(); ++q) gy[q] *= rowf[q % blk];
    T* gwr = grad_of(w_re);
    T* gwi = grad_of(w_im);
    if (gwr || gwi)
      for (int b = 0; b < n; ++b)
        for (int i = 0; i < ci; ++i) {
          const C* xs = xm->data() + (std::size_t(b) * ci + i) * blk;
          for (int o = 0; o < co; ++o) {
            const std::size_t woff = (std::size_t(i) * co + o) * blk;
            const C* g = gy.data() + (std::size_t(b) * co + o) * blk;
            for (std::size_t k = 0; k < blk; ++k) {
              const C gw = g[k] * std::conj(xs[k]);
              if (gwr) gwr[woff + k] += gw.real();
              if (gwi) gwi[woff + k] += gw.imag();
            }
          }
        }
    if (T* gx = grad_of(x)) {
      std::vector<C> gxm(std::size_t(n) * ci * blk, C{});
      for (int b = 0; b < n; ++b)
        for (int i = 0; i < ci; ++i) {
          C* dst = gxm.data() + (std::size_t(b) * ci + i) * blk;
          for (int o = 0; o < co; ++o) {
            const std::size_t woff = (std::size_t(i) * co + o) * blk;
            const C* g = gy.data() + (std::size_t(b) * co + o) * blk;
            for (std::size_t k = 0; k < blk; ++k) dst[k] += g[k] * std::conj(C(w_re.data()[woff + k], w_im.data()[woff + k]));
          }
        }
      std::vector<T> buf(std::size_t(n) * ci * h * wd);
      detail::modes_inverse(mb, *tw, gxm.data(), n * ci, buf.data());
      for (std::size_t p = 0; p < buf.size(); ++p) gx[p] += buf[p];
    }
  });
  return out;
}

}  // namespace wavex::nn
