#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "wavex/nn/ops.hpp"
#include "wavex/nn/spectral.hpp"
#include "wavex/nn/tensor.hpp"
#include "wavex/rng.hpp"

namespace wavex::nn {

/// Ordered (name, parameter) list; order is the checkpoint and optimizer order.
template <class T>
struct ParamList {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  void add(const std::string& name, const Tensor<T>& t) { items.emplace_back(name, t); }
  std::size_t size() const { return items.size(); }
  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items) n += t.numel();
    return n;
  }
  void zero_grad() {
    for (auto& [_, t] : items) t.zero_grad();
  }
};

template <class T>
Tensor<T> uniform_param(Shape shape, T bound, Rng& rng) {
  auto t = Tensor<T>::zeros(std::move(shape), true);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <class T>
struct Linear {
  Tensor<T> weight, bias;

  Linear() = default;
  Linear(int in, int out, Rng& rng) {
    const T bound = std::sqrt(T(1) / static_cast<T>(in));
    weight = uniform_param<T>({out, in}, bound, rng);
    bias = uniform_param<T>({out}, bound, rng);
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.add(prefix + ".weight", weight);
    out.add(prefix + ".bias", bias);
  }
};

template <class T>
struct Conv2d {
  Tensor<T> weight, bias;
  int stride = 1;

  Conv2d() = default;
  Conv2d(int in, int out, int k, Rng& rng, int stride_ = 1) : stride(stride_) {
    const T bound = std::sqrt(T(1) / static_cast<T>(in * k * k));
    weight = uniform_param<T>({out, in, k, k}, bound, rng);
    bias = uniform_param<T>({out}, bound, rng);
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride); }
  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.add(prefix + ".weight", weight);
    out.add(prefix + ".bias", bias);
  }
};

/// Complex weights (Cin, Cout, m, m) held as real and imaginary tensors,
/// initialised to U[0,1) / (Cin Cout) in each part.
template <class T>
struct SpectralConv2d {
  Tensor<T> w_re, w_im;

  SpectralConv2d() = default;
  SpectralConv2d(int in, int out, int modes, Rng& rng) {
    const T s = T(1) / static_cast<T>(in * out);
    w_re = Tensor<T>::zeros({in, out, modes, modes}, true);
    w_im = Tensor<T>::zeros({in, out, modes, modes}, true);
    for (auto& v : w_re.values()) v = s * static_cast<T>(rng.uniform01());
    for (auto& v : w_im.values()) v = s * static_cast<T>(rng.uniform01());
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return spectral_conv2d(x, w_re, w_im); }
  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.add(prefix + ".w_re", w_re);
    out.add(prefix + ".w_im", w_im);
  }
};

}  // namespace wavex::nn
