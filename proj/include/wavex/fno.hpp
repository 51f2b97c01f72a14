#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/field.hpp"
#include "wavex/nn/checkpoint.hpp"
#include "wavex/nn/layers.hpp"
#include "wavex/nn/optim.hpp"

namespace wavex::fno {

using nn::Tensor;

/// Index of the broadcast spectral channel (nu or k) in dataset inputs.
inline constexpr int kSpectralChannel = 1;
inline constexpr double kAnchorEps = 1e-6;

struct OperatorConfig {
  int layers = 4;
  int modes = 8;
  int width = 16;
  int proj_width = 32;
  int epochs = 30;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (layers < 1 || modes < 1 || width < 1 || proj_width < 1) fail(Errc::BadConfig, "operator layers, modes and widths must be >= 1");
    if (epochs < 0 || batch < 1 || !(lr > 0)) fail(Errc::BadConfig, "operator epochs/batch/lr");
  }
};

/// Channel-wise z-score statistics for the inputs and the (mag, sin, cos) target.
struct NormStats {
  std::vector<double> in_mean, in_std;
  std::vector<double> out_mean, out_std;

  bool operator==(const NormStats&) const = default;
};

/// (|u|, sin phi, cos phi) of a sample's target, one plane each.
inline std::array<std::vector<double>, 3> target_channels(const Sample& s) {
  std::array<std::vector<double>, 3> out;
  for (auto& ch : out) ch.resize(s.re.size());
  for (std::size_t i = 0; i < s.re.size(); ++i) {
    const double re = s.re[i], im = s.im[i];
    const double a = std::hypot(re, im);
    out[0][i] = a;
    if (a > 0) {
      out[1][i] = im / a;
      out[2][i] = re / a;
    } else {
      out[1][i] = 0.0;
      out[2][i] = 1.0;
    }
  }
  return out;
}

inline double safe_std(double var) {
  const double sd = std::sqrt(std::max(var, 0.0));
  return sd > 1e-8 ? sd : 1.0;
}

inline NormStats compute_stats(const Dataset& ds) {
  if (ds.samples.empty()) fail(Errc::EmptyInput, "normalisation statistics of an empty dataset");
  NormStats st;
  const int nc = ds.n_channels;
  std::vector<double> s1(nc, 0.0), s2(nc, 0.0), t1(3, 0.0), t2(3, 0.0);
  double count = 0;
  for (const auto& s : ds.samples) {
    if (static_cast<int>(s.channels.size()) != nc) fail(Errc::ShapeMismatch, "sample channel count");
    for (int c = 0; c < nc; ++c)
      for (std::size_t i = 0; i < s.channels[c].size(); ++i) {
        const float v = s.channels[c][i];
        s1[c] += v;
        s2[c] += double(v) * v;
      }
    const auto tc = target_channels(s);
    for (int c = 0; c < 3; ++c)
      for (double v : tc[c]) {
        t1[c] += v;
        t2[c] += v * v;
      }
    count += static_cast<double>(s.re.size());
  }
  for (int c = 0; c < nc; ++c) {
    const double m = s1[c] / count;
    st.in_mean.push_back(m);
    st.in_std.push_back(safe_std(s2[c] / count - m * m));
  }
  for (int c = 0; c < 3; ++c) {
    const double m = t1[c] / count;
    st.out_mean.push_back(m);
    st.out_std.push_back(safe_std(t2[c] / count - m * m));
  }
  // rounded to checkpoint precision, so a reloaded operator predicts identically
  for (auto* v : {&st.in_mean, &st.in_std, &st.out_mean, &st.out_std})
    for (double& x : *v) x = static_cast<float>(x);
  return st;
}

/// Lift (1x1) -> L x GELU(spectral + 1x1) -> project (1x1, GELU, 1x1) to 3 channels.
/// Two fixed coordinate channels in [0,1] are appended to the inputs.
template <class T>
struct OperatorNet {
  nn::Conv2d<T> lift;
  std::vector<nn::SpectralConv2d<T>> spectral;
  std::vector<nn::Conv2d<T>> pointwise;
  nn::Conv2d<T> proj1, proj2;

  OperatorNet() = default;
  OperatorNet(int in_channels, const OperatorConfig& cfg, Rng& rng) {
    lift = nn::Conv2d<T>(in_channels + 2, cfg.width, 1, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      spectral.emplace_back(cfg.width, cfg.width, cfg.modes, rng);
      pointwise.emplace_back(cfg.width, cfg.width, 1, rng);
    }
    proj1 = nn::Conv2d<T>(cfg.width, cfg.proj_width, 1, rng);
    proj2 = nn::Conv2d<T>(cfg.proj_width, 3, 1, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    auto coords = Tensor<T>::zeros({n, 2, h, w});
    for (int b = 0; b < n; ++b)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          coords.values()[((b * 2 + 0) * h + r) * w + c] = static_cast<T>(w > 1 ? double(c) / (w - 1) : 0.0);
          coords.values()[((b * 2 + 1) * h + r) * w + c] = static_cast<T>(h > 1 ? double(r) / (h - 1) : 0.0);
        }
    auto v = lift(nn::concat_channels<T>({x, coords}));
    for (std::size_t l = 0; l < spectral.size(); ++l) v = nn::gelu(nn::add(spectral[l](v), pointwise[l](v)));
    return proj2(nn::gelu(proj1(v)));
  }

  nn::ParamList<T> params() const {
    nn::ParamList<T> p;
    lift.collect("lift", p);
    for (std::size_t l = 0; l < spectral.size(); ++l) {
      spectral[l].collect("block" + std::to_string(l) + ".spectral", p);
      pointwise[l].collect("block" + std::to_string(l) + ".w", p);
    }
    proj1.collect("proj1", p);
    proj2.collect("proj2", p);
    return p;
  }
};

struct TrainTrace {
  std::vector<double> epoch_loss;
};

class OperatorModel {
 public:
  OperatorModel() = default;
  OperatorModel(DomainId domain, int in_channels, int rows, int cols, OperatorConfig cfg)
      : domain_(domain), in_channels_(in_channels), rows_(rows), cols_(cols), cfg_(cfg) {
    cfg_.validate();
    nn::ModeBlock(rows, cols, cfg.modes);
    Rng rng(mix_seed(cfg.seed, 0xF0));
    net_ = OperatorNet<float>(in_channels, cfg_, rng);
    stats_ = {std::vector<double>(in_channels, 0.0), std::vector<double>(in_channels, 1.0), {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  }

  const OperatorConfig& config() const { return cfg_; }
  const NormStats& stats() const { return stats_; }
  DomainId domain() const { return domain_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  /// Used by the fine-tune baseline, which deliberately continues training.
  void unfreeze() { frozen_ = false; }
  nn::ParamList<float> params() const { return net_.params(); }

  /// Normalised input batch (N, C, H, W) for the given sample indices.
  Tensor<float> input_batch(const std::vector<const Sample*>& batch) const {
    const int n = static_cast<int>(batch.size());
    auto x = Tensor<float>::zeros({n, in_channels_, rows_, cols_});
    const std::size_t plane = std::size_t(rows_) * cols_;
    for (int b = 0; b < n; ++b) {
      const Sample& s = *batch[b];
      if (static_cast<int>(s.channels.size()) != in_channels_) fail(Errc::ShapeMismatch, "operator expects " + std::to_string(in_channels_) + " input channels");
      for (int c = 0; c < in_channels_; ++c) {
        const auto& g = s.channels[c];
        if (g.rows() != rows_ || g.cols() != cols_) fail(Errc::ShapeMismatch, "operator input grid");
        float* dst = x.data() + (std::size_t(b) * in_channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>((g[i] - stats_.in_mean[c]) / stats_.in_std[c]);
      }
    }
    return x;
  }

  Tensor<float> target_batch(const std::vector<const Sample*>& batch) const {
    const int n = static_cast<int>(batch.size());
    auto y = Tensor<float>::zeros({n, 3, rows_, cols_});
    const std::size_t plane = std::size_t(rows_) * cols_;
    for (int b = 0; b < n; ++b) {
      const auto tc = target_channels(*batch[b]);
      for (int c = 0; c < 3; ++c) {
        float* dst = y.data() + (std::size_t(b) * 3 + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>((tc[c][i] - stats_.out_mean[c]) / stats_.out_std[c]);
      }
    }
    return y;
  }

  /// Normalised 3-channel prediction (no graph).
  Tensor<float> raw_forward(const std::vector<const Sample*>& batch) const {
    nn::NoGradGuard ng;
    return net_(input_batch(batch));
  }

  /// Denormalises one (3, H, W) slice and assembles the complex field.
  ComplexField assemble(const float* pred, const Sample& s) const {
    ComplexField u(rows_, cols_, s.nu, Environment{s.env}, domain_);
    const std::size_t plane = std::size_t(rows_) * cols_;
    for (std::size_t i = 0; i < plane; ++i) {
      const double a = std::max(0.0, pred[i] * stats_.out_std[0] + stats_.out_mean[0]);
      double sn = pred[plane + i] * stats_.out_std[1] + stats_.out_mean[1];
      double cs = pred[2 * plane + i] * stats_.out_std[2] + stats_.out_mean[2];
      const double r = std::hypot(sn, cs);
      if (r > 1e-12) {
        sn /= r;
        cs /= r;
      } else {
        sn = 0.0;
        cs = 1.0;
      }
      u.set(i, {a * cs, a * sn});
    }
    return u;
  }

  ComplexField forward(const Sample& s) const {
    auto y = raw_forward({&s});
    return assemble(y.data(), s);
  }

  std::vector<ComplexField> forward_all(const Dataset& ds, int batch = 8) const {
    std::vector<ComplexField> out;
    for (std::size_t i = 0; i < ds.size(); i += batch) {
      std::vector<const Sample*> b;
      for (std::size_t j = i; j < std::min(ds.size(), i + batch); ++j) b.push_back(&ds.samples[j]);
      auto y = raw_forward(b);
      const std::size_t per = std::size_t(3) * rows_ * cols_;
      for (std::size_t j = 0; j < b.size(); ++j) out.push_back(assemble(y.data() + j * per, *b[j]));
    }
    return out;
  }

  /// Same path as forward, restricted to a frozen model.
  ComplexField extrapolate(const Sample& s) const {
    if (!frozen_) fail(Errc::NotFrozen, "extrapolate before the operator was frozen");
    return forward(s);
  }

  /// Epoch loop of Adam on the normalised MSE. Statistics are fitted on the
  /// first training call and kept afterwards (identity until then).
  TrainTrace fit(const Dataset& train, std::uint64_t shuffle_seed) {
    if (frozen_) fail(Errc::FrozenModel, "operator is frozen");
    if (train.samples.empty()) fail(Errc::EmptyInput, "operator training set is empty");
    if (train.rows != rows_ || train.cols != cols_ || train.n_channels != in_channels_) fail(Errc::ShapeMismatch, "training set layout differs from the model");
    if (!stats_fitted_) {
      stats_ = compute_stats(train);
      stats_fitted_ = true;
    }
    auto params = net_.params();
    nn::Adam<float> opt(params, {.lr = cfg_.lr});
    Rng rng(shuffle_seed);
    std::vector<std::size_t> order(train.size());
    TrainTrace trace;
    for (int e = 0; e < cfg_.epochs; ++e) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      double acc = 0.0;
      int batches = 0;
      for (std::size_t i = 0; i < order.size(); i += cfg_.batch) {
        std::vector<const Sample*> b;
        for (std::size_t j = i; j < std::min(order.size(), i + cfg_.batch); ++j) b.push_back(&train.samples[order[j]]);
        opt.zero_grad();
        auto loss = nn::mse(net_(input_batch(b)), target_batch(b));
        loss.backward();
        opt.step();
        acc += loss.item();
        ++batches;
      }
      trace.epoch_loss.push_back(acc / batches);
    }
    return trace;
  }

  std::vector<nn::NamedArray> to_arrays() const {
    auto arrays = nn::export_params(net_.params());
    auto vec = [](const std::string& name, const std::vector<double>& v) {
      nn::NamedArray a{name, {static_cast<int>(v.size())}, {}};
      for (double x : v) a.values.push_back(static_cast<float>(x));
      return a;
    };
    arrays.push_back(vec("stats.in_mean", stats_.in_mean));
    arrays.push_back(vec("stats.in_std", stats_.in_std));
    arrays.push_back(vec("stats.out_mean", stats_.out_mean));
    arrays.push_back(vec("stats.out_std", stats_.out_std));
    arrays.push_back(vec("meta", {double(static_cast<int>(domain_)), double(in_channels_), double(rows_), double(cols_), double(cfg_.layers),
                                  double(cfg_.modes), double(cfg_.width), double(cfg_.proj_width), frozen_ ? 1.0 : 0.0}));
    return arrays;
  }

  void save(const std::string& path) const { nn::write_checkpoint(path, to_arrays()); }

  static OperatorModel load(const std::string& path, OperatorConfig cfg = {}) { return from_arrays(nn::read_checkpoint(path), cfg); }

  static OperatorModel from_arrays(const std::vector<nn::NamedArray>& arrays, OperatorConfig cfg = {}) {
    const auto& meta = nn::find_array(arrays, "meta").values;
    if (meta.size() != 9) fail(Errc::ShapeMismatch, "operator checkpoint meta");
    cfg.layers = int(meta[4]);
    cfg.modes = int(meta[5]);
    cfg.width = int(meta[6]);
    cfg.proj_width = int(meta[7]);
    OperatorModel m(static_cast<DomainId>(int(meta[0])), int(meta[1]), int(meta[2]), int(meta[3]), cfg);
    auto params = m.net_.params();
    nn::import_params(params, arrays);
    auto vec = [&](const std::string& name) {
      std::vector<double> v;
      for (float x : nn::find_array(arrays, name).values) v.push_back(x);
      return v;
    };
    m.stats_ = {vec("stats.in_mean"), vec("stats.in_std"), vec("stats.out_mean"), vec("stats.out_std")};
    m.frozen_ = meta[8] != 0.0f;
    m.stats_fitted_ = true;
    return m;
  }

  /// Independent copy (plain copies share parameter storage). Statistics pass
  /// through f32 like a checkpoint does.
  OperatorModel clone() const { return from_arrays(to_arrays(), cfg_); }

 private:
  DomainId domain_ = DomainId::SimpleWave;
  int in_channels_ = 0, rows_ = 0, cols_ = 0;
  OperatorConfig cfg_;
  NormStats stats_;
  OperatorNet<float> net_;
  bool frozen_ = false;
  bool stats_fitted_ = false;
};

/// Trains on the lower-frequency split and freezes the model.
inline TrainTrace train_lf(OperatorModel& model, const Dataset& lf_train) {
  if (model.frozen()) fail(Errc::FrozenModel, "train_lf on a frozen operator");
  auto trace = model.fit(lf_train, mix_seed(model.config().seed, 0x1F));
  model.freeze();
  return trace;
}

inline OperatorModel make_operator(const Dataset& ds, const OperatorConfig& cfg) {
  return OperatorModel(ds.domain, ds.n_channels, ds.rows, ds.cols, cfg);
}

/// log(|u| + eps) per cell.
inline Grid<double> log_amplitude(const ComplexField& u, double eps = kAnchorEps) {
  if (!(eps > 0)) fail(Errc::BadConfig, "anchor eps must be positive");
  Grid<double> a(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::log(std::abs(u.at(i)) + eps);
  return a;
}

inline Grid<double> coarse_anchor(const OperatorModel& model, const Sample& hf, double eps = kAnchorEps) {
  return log_amplitude(model.extrapolate(hf), eps);
}

inline std::uint64_t param_digest(const OperatorModel& m) { return nn::params_digest(m.params()); }

/// LF model copy that keeps training on the HF split with a fresh optimizer.
inline OperatorModel fine_tune(const OperatorModel& lf, const Dataset& hf_train, TrainTrace* trace = nullptr) {
  OperatorModel m = lf.clone();
  m.unfreeze();
  auto t = m.fit(hf_train, mix_seed(lf.config().seed, 0x2F));
  m.freeze();
  if (trace) *trace = std::move(t);
  return m;
}

/// Baseline trained once on the union of LF and HF training samples.
inline OperatorModel train_joint(const Dataset& joint_train, const OperatorConfig& cfg, TrainTrace* trace = nullptr) {
  auto m = make_operator(joint_train, cfg);
  auto t = m.fit(joint_train, mix_seed(cfg.seed, 0x3F));
  m.freeze();
  if (trace) *trace = std::move(t);
  return m;
}

}  // namespace wavex::fno
