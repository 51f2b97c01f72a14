#pragma once

#include <cmath>
#include <vector>

#include "wavex/nn/layers.hpp"

namespace wavex::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<std::vector<T>> m, v;
};

/// One bias-corrected Adam update of params from grads (same order/shapes).
template <class T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& grads, AdamState<T>& st) {
  if (grads.size() != params.size()) fail(Errc::ShapeMismatch, "adam: parameter/gradient count differs");
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.emplace_back(p.numel(), T{0});
      st.v.emplace_back(p.numel(), T{0});
    }
  }
  if (st.m.size() != params.size()) fail(Errc::ShapeMismatch, "adam: state does not match parameters");
  ++st.step;
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].values();
    const auto& g = grads[k];
    if (g.size() != p.size() || st.m[k].size() != p.size()) fail(Errc::ShapeMismatch, "adam: shape mismatch at parameter " + std::to_string(k));
    auto& m = st.m[k];
    auto& v = st.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = static_cast<T>(b1 * m[i] + (1.0 - b1) * g[i]);
      v[i] = static_cast<T>(b2 * v[i] + (1.0 - b2) * g[i] * g[i]);
      const double mh = m[i] / c1, vh = v[i] / c2;
      p[i] -= static_cast<T>(st.cfg.lr * mh / (std::sqrt(vh) + st.cfg.eps));
    }
  }
}

/// Adam bound to a parameter list; reads each parameter's accumulated grad.
template <class T>
class Adam {
 public:
  Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)) { state_.cfg = cfg; }

  void zero_grad() { params_.zero_grad(); }

  void step() {
    std::vector<Tensor<T>> ps;
    std::vector<std::vector<T>> gs;
    for (auto& [_, t] : params_.items) {
      ps.push_back(t);
      gs.push_back(t.grad());
    }
    adam_step(ps, gs, state_);
  }

  const AdamState<T>& state() const { return state_; }

 private:
  ParamList<T> params_;
  AdamState<T> state_;
};

}  // namespace wavex::nn
