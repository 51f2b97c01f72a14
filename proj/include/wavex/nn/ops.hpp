#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "wavex/nn/tensor.hpp"

namespace wavex::nn {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// ---------------------------------------------------------------- elementwise

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(a.shape(), b.shape(), "add");
  auto out = make_result<T>(a.shape(), {a, b});
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  on_backward(out, [a, b](Node<T>& self) {
    for (const Tensor<T>* t : {&a, &b})
      if (T* g = grad_of(*t))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(a.shape(), b.shape(), "sub");
  auto out = make_result<T>(a.shape(), {a, b});
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  on_backward(out, [a, b](Node<T>& self) {
    if (T* g = grad_of(a))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (T* g = grad_of(b))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(a.shape(), b.shape(), "mul");
  auto out = make_result<T>(a.shape(), {a, b});
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  on_backward(out, [a, b](Node<T>& self) {
    if (T* g = grad_of(a))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * b.data()[i];
    if (T* g = grad_of(b))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * a.data()[i];
  });
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  auto out = make_result<T>(a.shape(), {a});
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = s * a.data()[i];
  on_backward(out, [a, s](Node<T>& self) {
    if (T* g = grad_of(a))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
  });
  return out;
}

/// Gaussian error linear unit, erf form.
template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  auto out = make_result<T>(x.shape(), {x});
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const T v = x.data()[i];
    out.data()[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  }
  on_backward(out, [x, inv_sqrt2](Node<T>& self) {
    T* g = grad_of(x);
    const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T v = x.data()[i];
      const T d = T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(T(-0.5) * v * v);
      g[i] += self.grad[i] * d;
    }
  });
  return out;
}

// ---------------------------------------------------------------- reductions

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  auto out = make_result<T>({1}, {x});
  T acc{0};
  for (std::size_t i = 0; i < x.numel(); ++i) acc += x.data()[i];
  out.data()[0] = acc;
  on_backward(out, [x](Node<T>& self) {
    T* g = grad_of(x);
    for (std::size_t i = 0; i < x.numel(); ++i) g[i] += self.grad[0];
  });
  return out;
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

/// mean((a - b)^2)
template <class T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(a.shape(), b.shape(), "mse");
  auto out = make_result<T>({1}, {a, b});
  const T inv_n = T(1) / static_cast<T>(a.numel());
  T acc{0};
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const T d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  out.data()[0] = acc * inv_n;
  on_backward(out, [a, b, inv_n](Node<T>& self) {
    const T s = T(2) * inv_n * self.grad[0];
    T* ga = grad_of(a);
    T* gb = grad_of(b);
    for (std::size_t i = 0; i < a.numel(); ++i) {
      const T d = s * (a.data()[i] - b.data()[i]);
      if (ga) ga[i] += d;
      if (gb) gb[i] -= d;
    }
  });
  return out;
}

// ---------------------------------------------------------------- reshaping

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) fail(Errc::ShapeMismatch, "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  auto out = make_result<T>(std::move(shape), {x}, std::vector<T>(x.values()));
  on_backward(out, [x](Node<T>& self) {
    T* g = grad_of(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
  return out;
}

/// Trailing extent after (N, C): H*W for rank 4, 1 for rank 2.
inline std::size_t plane_of(const Shape& s) {
  std::size_t p = 1;
  for (std::size_t i = 2; i < s.size(); ++i) p *= static_cast<std::size_t>(s[i]);
  return p;
}

/// Concatenate (N, C_i, ...) tensors along dim 1; trailing dims must agree.
template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) fail(Errc::EmptyInput, "concat of nothing");
  if (xs[0].rank() < 2) fail(Errc::ShapeMismatch, "concat_channels needs rank >= 2");
  const Shape& ref = xs[0].shape();
  const int n = ref[0];
  int c_total = 0;
  for (const auto& x : xs) {
    const Shape& sh = x.shape();
    bool ok = sh.size() == ref.size() && sh[0] == n;
    for (std::size_t i = 2; ok && i < sh.size(); ++i) ok = sh[i] == ref[i];
    if (!ok) fail(Errc::ShapeMismatch, "concat_channels: " + shape_str(sh) + " vs " + shape_str(ref));
    c_total += x.dim(1);
  }
  Shape out_shape = ref;
  out_shape[1] = c_total;
  auto out = make_result<T>(out_shape, xs);
  const std::size_t plane = plane_of(ref);
  for (int b = 0; b < n; ++b) {
    int off = 0;
    for (const auto& x : xs) {
      const std::size_t len = std::size_t(x.dim(1)) * plane;
      std::copy_n(x.data() + b * len, len, out.data() + (std::size_t(b) * c_total + off) * plane);
      off += x.dim(1);
    }
  }
  on_backward(out, [xs, n, c_total, plane](Node<T>& self) {
    for (int b = 0; b < n; ++b) {
      int off = 0;
      for (const auto& x : xs) {
        const std::size_t len = std::size_t(x.dim(1)) * plane;
        if (T* g = grad_of(x)) {
          const T* src = self.grad.data() + (std::size_t(b) * c_total + off) * plane;
          for (std::size_t i = 0; i < len; ++i) g[b * len + i] += src[i];
        }
        off += x.dim(1);
      }
    }
  });
  return out;
}

/// Channels [start, start + len) of an (N, C, ...) tensor.
template <class T>
Tensor<T> narrow_channels(const Tensor<T>& x, int start, int len) {
  if (x.rank() < 2) fail(Errc::ShapeMismatch, "narrow_channels needs rank >= 2");
  const int n = x.dim(0), c = x.dim(1);
  if (start < 0 || len < 0 || start + len > c) fail(Errc::ShapeMismatch, "narrow_channels out of range");
  const std::size_t plane = plane_of(x.shape());
  Shape out_shape = x.shape();
  out_shape[1] = len;
  auto out = make_result<T>(out_shape, {x});
  for (int b = 0; b < n; ++b)
    std::copy_n(x.data() + (std::size_t(b) * c + start) * plane, len * plane, out.data() + std::size_t(b) * len * plane);
  on_backward(out, [x, n, c, start, len, plane](Node<T>& self) {
    T* g = grad_of(x);
    for (int b = 0; b < n; ++b) {
      T* dst = g + (std::size_t(b) * c + start) * plane;
      const T* src = self.grad.data() + std::size_t(b) * len * plane;
      for (std::size_t i = 0; i < len * plane; ++i) dst[i] += src[i];
    }
  });
  return out;
}

// ---------------------------------------------------------------- dense

/// (M, K) x (K, N)
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul");
  require_rank(b.shape(), 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) fail(Errc::ShapeMismatch, "matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  auto out = make_result<T>({m, n}, {a, b});
  MatMap<T>(out.data(), m, n).noalias() = ConstMatMap<T>(a.data(), m, k) * ConstMatMap<T>(b.data(), k, n);
  on_backward(out, [a, b, m, k, n](Node<T>& self) {
    ConstMatMap<T> g(self.grad.data(), m, n);
    if (T* ga = grad_of(a)) MatMap<T>(ga, m, k).noalias() += g * ConstMatMap<T>(b.data(), k, n).transpose();
    if (T* gb = grad_of(b)) MatMap<T>(gb, k, n).noalias() += ConstMatMap<T>(a.data(), m, k).transpose() * g;
  });
  return out;
}

/// x (N, in), w (out, in), b (out) -> x w^T + b
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x.shape(), 2, "linear");
  const int n = x.dim(0), in = x.dim(1), o = w.dim(0);
  if (w.dim(1) != in || b.numel() != std::size_t(o)) fail(Errc::ShapeMismatch, "linear weight/bias shape");
  auto out = make_result<T>({n, o}, {x, w, b});
  MatMap<T> y(out.data(), n, o);
  y.noalias() = ConstMatMap<T>(x.data(), n, in) * ConstMatMap<T>(w.data(), o, in).transpose();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < o; ++c) y(r, c) += b.data()[c];
  on_backward(out, [x, w, b, n, in, o](Node<T>& self) {
    ConstMatMap<T> g(self.grad.data(), n, o);
    if (T* gx = grad_of(x)) MatMap<T>(gx, n, in).noalias() += g * ConstMatMap<T>(w.data(), o, in);
    if (T* gw = grad_of(w)) MatMap<T>(gw, o, in).noalias() += g.transpose() * ConstMatMap<T>(x.data(), n, in);
    if (T* gb = grad_of(b))
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < o; ++c) gb[c] += g(r, c);
  });
  return out;
}

// ---------------------------------------------------------------- convolution

namespace detail {

// Sequential sum; Eigen's packet reductions depend on buffer alignment, which
// made repeated runs differ in the last bits under wider SIMD.
template <class Row>
auto row_sum(const Row& r) {
  typename Row::Scalar s = 0;
  for (Eigen::Index j = 0; j < r.size(); ++j) s += r(j);
  return s;
}

struct ConvGeom {
  int c, h, w, k, stride, pad, ho, wo;
  int rows() const { return c * k * k; }
  int cols() const { return ho * wo; }
};

/// Output columns [lo, hi) whose input column ox*stride + kx - pad is in range.
inline std::pair<int, int> valid_cols(const ConvGeom& g, int kx) {
  int lo = 0, hi = g.wo;
  while (lo < hi && lo * g.stride + kx - g.pad < 0) ++lo;
  while (hi > lo && (hi - 1) * g.stride + kx - g.pad >= g.w) --hi;
  return {lo, hi};
}

template <class T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  for (int ci = 0; ci < g.c; ++ci)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        T* dst = col + std::size_t((ci * g.k + ky) * g.k + kx) * g.cols();
        const auto [lo, hi] = valid_cols(g, kx);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          T* row = dst + std::size_t(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.wo, T{0});
            continue;
          }
          std::fill(row, row + lo, T{0});
          std::fill(row + hi, row + g.wo, T{0});
          if (lo >= hi) continue;
          const T* in = x + (std::size_t(ci) * g.h + iy) * g.w + (lo * g.stride + kx - g.pad);
          if (g.stride == 1) {
            std::copy(in, in + (hi - lo), row + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) row[ox] = in[(ox - lo) * g.stride];
          }
        }
      }
}

template <class T>
void col2im(const T* col, const ConvGeom& g, T* x) {
  for (int ci = 0; ci < g.c; ++ci)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const T* src = col + std::size_t((ci * g.k + ky) * g.k + kx) * g.cols();
        const auto [lo, hi] = valid_cols(g, kx);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          if (lo >= hi) continue;
          T* out = x + (std::size_t(ci) * g.h + iy) * g.w + (lo * g.stride + kx - g.pad);
          const T* row = src + std::size_t(oy) * g.wo;
          for (int ox = lo; ox < hi; ++ox) out[(ox - lo) * g.stride] += row[ox];
        }
      }
}

}  // namespace detail

/// x (N, C, H, W), w (O, C, k, k), b (O); zero padding k / 2.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride = 1) {
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(w.shape(), 4, "conv2d weight");
  const int n = x.dim(0), o = w.dim(0), k = w.dim(2);
  if (w.dim(1) != x.dim(1) || w.dim(3) != k || b.numel() != std::size_t(o))
    fail(Errc::ShapeMismatch, "conv2d " + shape_str(x.shape()) + " with weight " + shape_str(w.shape()));
  if (stride < 1) fail(Errc::BadConfig, "conv2d stride must be positive");
  detail::ConvGeom g{x.dim(1), x.dim(2), x.dim(3), k, stride, k / 2, 0, 0};
  g.ho = (g.h + 2 * g.pad - k) / stride + 1;
  g.wo = (g.w + 2 * g.pad - k) / stride + 1;
  auto out = make_result<T>({n, o, g.ho, g.wo}, {x, w, b});
  const bool pointwise = (k == 1 && stride == 1);
  const std::size_t in_sz = std::size_t(g.c) * g.h * g.w, out_sz = std::size_t(o) * g.cols();
  std::vector<T> col(pointwise ? 0 : std::size_t(g.rows()) * g.cols());
  ConstMatMap<T> wm(w.data(), o, g.rows());
  for (int s = 0; s < n; ++s) {
    const T* src = x.data() + s * in_sz;
    if (!pointwise) detail::im2col(src, g, col.data());
    MatMap<T> y(out.data() + s * out_sz, o, g.cols());
    y.noalias() = wm * ConstMatMap<T>(pointwise ? src : col.data(), g.rows(), g.cols());
    for (int oc = 0; oc < o; ++oc) y.row(oc).array() += b.data()[oc];
  }
  on_backward(out, [x, w, b, g, n, o, pointwise, in_sz, out_sz](Node<T>& self) {
    T* gx = grad_of(x);
    T* gw = grad_of(w);
    T* gb = grad_of(b);
    std::vector<T> col(pointwise ? 0 : std::size_t(g.rows()) * g.cols());
    std::vector<T> gcol(pointwise || !gx ? 0 : std::size_t(g.rows()) * g.cols());
    ConstMatMap<T> wm(w.data(), o, g.rows());
    for (int s = 0; s < n; ++s) {
      ConstMatMap<T> gy(self.grad.data() + s * out_sz, o, g.cols());
      const T* src = x.data() + s * in_sz;
      if (gb)
        for (int oc = 0; oc < o; ++oc) gb[oc] += detail::row_sum(gy.row(oc));
      if (gw) {
        if (!pointwise) detail::im2col(src, g, col.data());
        MatMap<T>(gw, o, g.rows()).noalias() += gy * ConstMatMap<T>(pointwise ? src : col.data(), g.rows(), g.cols()).transpose();
      }
      if (gx) {
        if (pointwise) {
          MatMap<T>(gx + s * in_sz, g.rows(), g.cols()).noalias() += wm.transpose() * gy;
        } else {
          MatMap<T>(gcol.data(), g.rows(), g.cols()).noalias() = wm.transpose() * gy;
          detail::col2im(gcol.data(), g, gx + s * in_sz);
        }
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------- normalization

/// Per-sample, per-channel normalization over the spatial dims (no affine).
template <class T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps = T(1e-5)) {
  require_rank(x.shape(), 4, "instance_norm");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = std::size_t(x.dim(2)) * x.dim(3);
  auto out = make_result<T>(x.shape(), {x});
  std::vector<T> inv_std(std::size_t(n) * c);
  for (std::size_t p = 0; p < inv_std.size(); ++p) {
    const T* src = x.data() + p * plane;
    T mu{0};
    for (std::size_t i = 0; i < plane; ++i) mu += src[i];
    mu /= static_cast<T>(plane);
    T var{0};
    for (std::size_t i = 0; i < plane; ++i) var += (src[i] - mu) * (src[i] - mu);
    var /= static_cast<T>(plane);
    inv_std[p] = T(1) / std::sqrt(var + eps);
    T* dst = out.data() + p * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = (src[i] - mu) * inv_std[p];
  }
  on_backward(out, [x, inv_std, plane](Node<T>& self) {
    T* gx = grad_of(x);
    for (std::size_t p = 0; p < inv_std.size(); ++p) {
      const T* g = self.grad.data() + p * plane;
      const T* yh = self.data.data() + p * plane;
      T mg{0}, mgy{0};
      for (std::size_t i = 0; i < plane; ++i) {
        mg += g[i];
        mgy += g[i] * yh[i];
      }
      mg /= static_cast<T>(plane);
      mgy /= static_cast<T>(plane);
      for (std::size_t i = 0; i < plane; ++i) gx[p * plane + i] += inv_std[p] * (g[i] - mg - yh[i] * mgy);
    }
  });
  return out;
}

/// out = gamma * x + beta per (sample, channel); gamma, beta are (N, C).
template <class T>
Tensor<T> film(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  require_rank(x.shape(), 4, "film");
  const int n = x.dim(0), c = x.dim(1);
  const Shape pc{n, c};
  if (gamma.shape() != pc || beta.shape() != pc)
    fail(Errc::ShapeMismatch, "film: gamma/beta must be " + shape_str(pc) + ", got " + shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
  const std::size_t plane = std::size_t(x.dim(2)) * x.dim(3);
  auto out = make_result<T>(x.shape(), {x, gamma, beta});
  for (std::size_t p = 0; p < std::size_t(n) * c; ++p)
    for (std::size_t i = 0; i < plane; ++i) out.data()[p * plane + i] = gamma.data()[p] * x.data()[p * plane + i] + beta.data()[p];
  on_backward(out, [x, gamma, beta, n, c, plane](Node<T>& self) {
    T* gx = grad_of(x);
    T* gg = grad_of(gamma);
    T* gbt = grad_of(beta);
    for (std::size_t p = 0; p < std::size_t(n) * c; ++p) {
      const T* g = self.grad.data() + p * plane;
      T sg{0}, sgx{0};
      for (std::size_t i = 0; i < plane; ++i) {
        sg += g[i];
        sgx += g[i] * x.data()[p * plane + i];
        if (gx) gx[p * plane + i] += gamma.data()[p] * g[i];
      }
      if (gg) gg[p] += sgx;
      if (gbt) gbt[p] += sg;
    }
  });
  return out;
}

/// Adds a per-channel vector b (C) to an (N, C, ...) tensor.
template <class T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& b) {
  const int n = x.dim(0), c = x.dim(1);
  if (b.numel() != std::size_t(c)) fail(Errc::ShapeMismatch, "channel bias length");
  const std::size_t plane = x.numel() / (std::size_t(n) * c);
  auto out = make_result<T>(x.shape(), {x, b});
  for (std::size_t p = 0; p < std::size_t(n) * c; ++p)
    for (std::size_t i = 0; i < plane; ++i) out.data()[p * plane + i] = x.data()[p * plane + i] + b.data()[p % c];
  on_backward(out, [x, b, n, c, plane](Node<T>& self) {
    T* gx = grad_of(x);
    T* gb = grad_of(b);
    for (std::size_t p = 0; p < std::size_t(n) * c; ++p)
      for (std::size_t i = 0; i < plane; ++i) {
        const T g = self.grad[p * plane + i];
        if (gx) gx[p * plane + i] += g;
        if (gb) gb[p % c] += g;
      }
  });
  return out;
}

// ---------------------------------------------------------------- resampling

template <class T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "upsample2x");
  const int nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  auto out = make_result<T>({x.dim(0), x.dim(1), 2 * h, 2 * w}, {x});
  for (int p = 0; p < nc; ++p)
    for (int r = 0; r < 2 * h; ++r)
      for (int c = 0; c < 2 * w; ++c)
        out.data()[(std::size_t(p) * 2 * h + r) * 2 * w + c] = x.data()[(std::size_t(p) * h + r / 2) * w + c / 2];
  on_backward(out, [x, nc, h, w](Node<T>& self) {
    T* gx = grad_of(x);
    for (int p = 0; p < nc; ++p)
      for (int r = 0; r < 2 * h; ++r)
        for (int c = 0; c < 2 * w; ++c) gx[(std::size_t(p) * h + r / 2) * w + c / 2] += self.grad[(std::size_t(p) * 2 * h + r) * 2 * w + c];
  });
  return out;
}

template <class T>
Tensor<T> avgpool2x(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "avgpool2x");
  const int nc = x.dim(0) * x.dim(1), h = x.dim(2) / 2, w = x.dim(3) / 2;
  if (x.dim(2) % 2 || x.dim(3) % 2) fail(Errc::ShapeMismatch, "avgpool2x needs even spatial dims");
  auto out = make_result<T>({x.dim(0), x.dim(1), h, w}, {x});
  const int W = 2 * w;
  for (int p = 0; p < nc; ++p)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const T* s = x.data() + (std::size_t(p) * 2 * h + 2 * r) * W + 2 * c;
        out.data()[(std::size_t(p) * h + r) * w + c] = T(0.25) * (s[0] + s[1] + s[W] + s[W + 1]);
      }
  on_backward(out, [x, nc, h, w, W](Node<T>& self) {
    T* gx = grad_of(x);
    for (int p = 0; p < nc; ++p)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const T g = T(0.25) * self.grad[(std::size_t(p) * h + r) * w + c];
          T* d = gx + (std::size_t(p) * 2 * h + 2 * r) * W + 2 * c;
          d[0] += g;
          d[1] += g;
          d[W] += g;
          d[W + 1] += g;
        }
  });
  return out;
}

// ---------------------------------------------------------------- attention

/// Multi-head scaled dot-product self-attention. q, k, v are (N, C, L) with
/// C divisible by heads; returns (N, C, L).
template <class T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads) {
  require_rank(q.shape(), 3, "attention");
  require_shape(q.shape(), k.shape(), "attention q/k");
  require_shape(q.shape(), v.shape(), "attention q/v");
  const int n = q.dim(0), c = q.dim(1), l = q.dim(2);
  if (heads < 1 || c % heads) fail(Errc::ShapeMismatch, "channels not divisible by heads");
  const int d = c / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(d));
  auto out = make_result<T>(q.shape(), {q, k, v});
  // softmax weights kept for the backward pass: (N, heads, L, L)
  auto probs = std::make_shared<std::vector<T>>(std::size_t(n) * heads * l * l);
  for (int b = 0; b < n; ++b)
    for (int hd = 0; hd < heads; ++hd) {
      const std::size_t off = (std::size_t(b) * c + std::size_t(hd) * d) * l;
      ConstMatMap<T> qm(q.data() + off, d, l), km(k.data() + off, d, l), vm(v.data() + off, d, l);
      MatMap<T> p(probs->data() + (std::size_t(b) * heads + hd) * l * l, l, l);
      p.noalias() = sc * (qm.transpose() * km);  // (query, key)
      for (int i = 0; i < l; ++i) {
        const T mx = p.row(i).maxCoeff();
        // scalar exp: Eigen's packet exp would round differently from the
        // peeled scalar head, making results depend on the buffer address
        for (int j = 0; j < l; ++j) p(i, j) = std::exp(p(i, j) - mx);
        p.row(i) /= detail::row_sum(p.row(i));
      }
      MatMap<T>(out.data() + off, d, l).noalias() = vm * p.transpose();
    }
  on_backward(out, [q, k, v, probs, n, c, l, heads, d, sc](Node<T>& self) {
    T* gq = grad_of(q);
    T* gk = grad_of(k);
    T* gv = grad_of(v);
    RowMat<T> gp(l, l), gs(l, l);
    for (int b = 0; b < n; ++b)
      for (int hd = 0; hd < heads; ++hd) {
        const std::size_t off = (std::size_t(b) * c + std::size_t(hd) * d) * l;
        ConstMatMap<T> qm(q.data() + off, d, l), km(k.data() + off, d, l), vm(v.data() + off, d, l);
        ConstMatMap<T> p(probs->data() + (std::size_t(b) * heads + hd) * l * l, l, l);
        ConstMatMap<T> go(self.grad.data() + off, d, l);
        if (gv) MatMap<T>(gv + off, d, l).noalias() += go * p;
        gp.noalias() = go.transpose() * vm;  // dL/dP (query, key)
        for (int i = 0; i < l; ++i) {
          T dot = 0;
          for (int j = 0; j < l; ++j) dot += gp(i, j) * p(i, j);
          gs.row(i) = p.row(i).array() * (gp.row(i).array() - dot);
        }
        gs *= sc;
        if (gq) MatMap<T>(gq + off, d, l).noalias() += km * gs.transpose();
        if (gk) MatMap<T>(gk + off, d, l).noalias() += qm * gs;
      }
  });
  return out;
}

}  // namespace wavex::nn
