#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/field.hpp"
#include "wavex/nn/checkpoint.hpp"
#include "wavex/nn/layers.hpp"
#include "wavex/nn/optim.hpp"
#include "wavex/parallel.hpp"

namespace wavex::cfm {

using nn::Tensor;

inline constexpr double kTargetEps = 1e-6;

// ---------------------------------------------------------------- target rep

/// x1 = [log(|u| + eps), sin phi, cos phi].
struct TargetRep {
  std::array<Grid<double>, 3> ch;

  int rows() const { return ch[0].rows(); }
  int cols() const { return ch[0].cols(); }
};

inline TargetRep encode_target(const ComplexField& u, double eps = kTargetEps) {
  if (!(eps > 0)) fail(Errc::BadConfig, "target eps must be positive");
  TargetRep x;
  for (auto& g : x.ch) g = Grid<double>(u.rows(), u.cols());
  const PolarField p = to_polar(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    x.ch[0][i] = std::log(p.amp[i] + eps);
    x.ch[1][i] = std::sin(p.phase[i]);
    x.ch[2][i] = std::cos(p.phase[i]);
  }
  return x;
}

/// A = max(exp(ch0) - eps, 0); (s, c) projected to the unit circle, (0, 1) if both vanish.
inline ComplexField decode(const TargetRep& x, double nu, Environment env = {}, DomainId dom = DomainId::SimpleWave,
                           double eps = kTargetEps) {
  ComplexField u(x.rows(), x.cols(), nu, std::move(env), dom);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::max(std::exp(x.ch[0][i]) - eps, 0.0);
    double s = x.ch[1][i], c = x.ch[2][i];
    const double r = std::hypot(s, c);
    if (r > 1e-12) {
      s /= r;
      c /= r;
    } else {
      s = 0.0;
      c = 1.0;
    }
    u.set(i, {a * c, a * s});
  }
  return u;
}

// ---------------------------------------------------------------- frequency embedding

/// Geometric scale grid spanning [nu_min/4, 4 nu_max] of a benchmark.
struct FourierScales {
  double nu_min = 1.0;
  double nu_max = 8.0;
  int dim = 16;

  std::vector<double> scales() const {
    if (dim < 2 || dim % 2 != 0) fail(Errc::BadConfig, "Fourier feature dimension must be even and >= 2");
    const int k = dim / 2;
    const double lo = nu_min / 4.0, hi = 4.0 * nu_max;
    std::vector<double> s(k);
    for (int j = 0; j < k; ++j) s[j] = k == 1 ? lo : lo * std::pow(hi / lo, double(j) / (k - 1));
    return s;
  }
};

inline FourierScales scales_for(DomainId dom) {
  switch (dom) {
    case DomainId::SimpleWave: return {1.0, 8.0, 16};
    case DomainId::Helmholtz: return {10.0, 50.0, 16};
    default: fail(Errc::UnknownDomain, "no spectral range for this domain");
  }
}

/// [sin(nu/s_k), cos(nu/s_k)] interleaved per scale.
inline std::vector<double> fourier_features(double nu, const FourierScales& fs) {
  if (!(nu > 0)) fail(Errc::InvalidFrequency, "fourier_features needs nu > 0");
  std::vector<double> out;
  out.reserve(fs.dim);
  for (double s : fs.scales()) {
    out.push_back(std::sin(nu / s));
    out.push_back(std::cos(nu / s));
  }
  return out;
}

// ---------------------------------------------------------------- flow matching

/// (1 - t) x0 + t x1, elementwise.
template <class T>
std::vector<T> interpolate(const std::vector<T>& x0, const std::vector<T>& x1, double t) {
  if (x0.size() != x1.size()) fail(Errc::ShapeMismatch, "interpolate: sizes differ");
  if (!(t >= 0.0 && t <= 1.0)) fail(Errc::BadConfig, "interpolate: t outside [0,1]");
  std::vector<T> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>((1.0 - t) * x0[i] + t * x1[i]);
  return out;
}

/// Batched interpolation with one t per batch element; x0, x1 are (N, C, H, W).
template <class T>
Tensor<T> interpolate_batch(const Tensor<T>& x0, const Tensor<T>& x1, const std::vector<T>& t) {
  nn::require_shape(x0.shape(), x1.shape(), "interpolate");
  if (static_cast<int>(t.size()) != x0.dim(0)) fail(Errc::ShapeMismatch, "interpolate: one t per batch element");
  auto out = Tensor<T>::zeros(x0.shape());
  const std::size_t per = x0.numel() / t.size();
  for (std::size_t b = 0; b < t.size(); ++b)
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) out.values()[i] = (T(1) - t[b]) * x0.values()[i] + t[b] * x1.values()[i];
  return out;
}

/// mean || v(x_t, t; c) - (x1 - x0) ||^2 for any velocity callable.
template <class T, class Velocity>
Tensor<T> fm_loss(Velocity&& v, const Tensor<T>& x0, const Tensor<T>& x1, const std::vector<T>& t) {
  auto xt = interpolate_batch(x0, x1, t);
  auto target = Tensor<T>::zeros(x0.shape());
  for (std::size_t i = 0; i < target.numel(); ++i) target.values()[i] = x1.values()[i] - x0.values()[i];
  auto pred = v(xt, t);
  nn::require_shape(pred.shape(), target.shape(), "fm_loss velocity");
  return nn::mse(pred, target);
}

/// Midpoint (RK2) integration of dx/dt = f(x, t) from t = 0 to 1 in `steps`
/// uniform steps. f writes its result into the third argument.
using VectorField = std::function<void(const std::vector<double>&, double, std::vector<double>&)>;

inline std::vector<double> midpoint_integrate(const VectorField& f, std::vector<double> x, int steps) {
  if (steps < 1) fail(Errc::BadConfig, "steps must be >= 1");
  const double h = 1.0 / steps;
  std::vector<double> k1(x.size()), xm(x.size()), k2(x.size());
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    f(x, t, k1);
    for (std::size_t i = 0; i < x.size(); ++i) xm[i] = x[i] + 0.5 * h * k1[i];
    f(xm, t + 0.5 * h, k2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += h * k2[i];
      if (!std::isfinite(x[i])) fail(Errc::NonFinite, "trajectory left the finite range at step " + std::to_string(s));
    }
  }
  return x;
}

// ---------------------------------------------------------------- velocity network

struct EnhancerConfig {
  int base = 32;
  int time_dim = 32;
  int emb_dim = 64;
  int heads = 4;
  int ff_dim = 16;
  int epochs = 300;
  double lr = 1e-3;
  int batch = 8;
  int steps = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (base < 1 || time_dim < 2 || time_dim % 2 || emb_dim < 1 || heads < 1 || ff_dim < 2) fail(Errc::BadConfig, "enhancer widths");
    if ((2 * base) % heads != 0) fail(Errc::BadConfig, "mid-block width must be divisible by the head count");
    if (epochs < 0 || batch < 1 || steps < 1 || !(lr > 0)) fail(Errc::BadConfig, "enhancer epochs/batch/steps/lr");
  }
};

/// Sinusoidal features of t in [0,1], dimension d: [sin(1000 t w_k), cos(1000 t w_k)].
template <class T>
Tensor<T> time_features(const std::vector<T>& t, int d) {
  const int n = static_cast<int>(t.size()), half = d / 2;
  auto out = Tensor<T>::zeros({n, d});
  for (int b = 0; b < n; ++b)
    for (int k = 0; k < half; ++k) {
      const double w = std::exp(-std::log(10000.0) * k / half);
      out.values()[b * d + k] = static_cast<T>(std::sin(1000.0 * t[b] * w));
      out.values()[b * d + half + k] = static_cast<T>(std::cos(1000.0 * t[b] * w));
    }
  return out;
}

template <class T>
struct ResBlock {
  nn::Conv2d<T> conv1, conv2, skip;
  nn::Linear<T> film;
  bool has_skip = false;
  int out = 0;

  ResBlock() = default;
  ResBlock(int in, int out_, int emb, Rng& rng) : out(out_) {
    conv1 = nn::Conv2d<T>(in, out, 3, rng);
    film = nn::Linear<T>(emb, 2 * out, rng);
    conv2 = nn::Conv2d<T>(out, out, 3, rng);
    has_skip = in != out;
    if (has_skip) skip = nn::Conv2d<T>(in, out, 1, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>& emb_act) const {
    const int n = x.dim(0);
    auto h = conv1(nn::gelu(nn::instance_norm(x)));
    auto gb = nn::reshape(film(emb_act), {n, 2 * out, 1, 1});
    auto g = nn::reshape(nn::narrow_channels(gb, 0, out), {n, out});
    auto b = nn::reshape(nn::narrow_channels(gb, out, out), {n, out});
    h = nn::instance_norm(h);
    h = nn::add(h, nn::film(h, g, b));  // h (1 + gamma) + beta
    h = conv2(nn::gelu(h));
    return nn::add(h, has_skip ? skip(x) : x);
  }

  void collect(const std::string& p, nn::ParamList<T>& ps) const {
    conv1.collect(p + ".conv1", ps);
    film.collect(p + ".film", ps);
    conv2.collect(p + ".conv2", ps);
    if (has_skip) skip.collect(p + ".skip", ps);
  }
};

template <class T>
struct AttentionBlock {
  nn::Conv2d<T> q, k, v, proj;
  int heads = 1;

  AttentionBlock() = default;
  AttentionBlock(int c, int heads_, Rng& rng) : heads(heads_) {
    q = nn::Conv2d<T>(c, c, 1, rng);
    k = nn::Conv2d<T>(c, c, 1, rng);
    v = nn::Conv2d<T>(c, c, 1, rng);
    proj = nn::Conv2d<T>(c, c, 1, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    auto xn = nn::instance_norm(x);
    auto flat = [&](const Tensor<T>& t) { return nn::reshape(t, {n, c, h * w}); };
    auto a = nn::attention(flat(q(xn)), flat(k(xn)), flat(v(xn)), heads);
    return nn::add(x, proj(nn::reshape(a, {n, c, h, w})));
  }

  void collect(const std::string& p, nn::ParamList<T>& ps) const {
    q.collect(p + ".q", ps);
    k.collect(p + ".k", ps);
    v.collect(p + ".v", ps);
    proj.collect(p + ".proj", ps);
  }
};

/// Two-level U-Net (widths base, 2 base), one residual block per level, a
/// mid block with self-attention at 1/4 resolution, FiLM from the time
/// embedding joined with z_f, spatial conditioning concatenated at every level.
template <class T>
struct VelocityNet {
  int cond_channels = 0;
  EnhancerConfig cfg;
  nn::Linear<T> emb1, emb2;
  nn::Conv2d<T> conv_in, down0, down1, up1, up0, conv_out;
  ResBlock<T> enc0, enc1, mid, dec1, dec0;
  AttentionBlock<T> attn;

  VelocityNet() = default;
  VelocityNet(int cond, const EnhancerConfig& c, Rng& rng) : cond_channels(cond), cfg(c) {
    cfg.validate();
    const int c0 = c.base, c1 = 2 * c.base, e = c.emb_dim, s = cond;
    emb1 = nn::Linear<T>(c.time_dim + c.ff_dim, e, rng);
    emb2 = nn::Linear<T>(e, e, rng);
    conv_in = nn::Conv2d<T>(3 + s, c0, 3, rng);
    enc0 = ResBlock<T>(c0 + s, c0, e, rng);
    down0 = nn::Conv2d<T>(c0, c0, 3, rng, 2);
    enc1 = ResBlock<T>(c0 + s, c1, e, rng);
    down1 = nn::Conv2d<T>(c1, c1, 3, rng, 2);
    mid = ResBlock<T>(c1 + s, c1, e, rng);
    attn = AttentionBlock<T>(c1, c.heads, rng);
    up1 = nn::Conv2d<T>(c1, c1, 3, rng);
    dec1 = ResBlock<T>(c1 + c1 + s, c1, e, rng);
    up0 = nn::Conv2d<T>(c1, c0, 3, rng);
    dec0 = ResBlock<T>(c0 + c0 + s, c0, e, rng);
    conv_out = nn::Conv2d<T>(c0, 3, 3, rng);
  }

  /// x (N,3,H,W), t (N), cond (N,S,H,W), zf (N,ff_dim). H and W divisible by 4.
  Tensor<T> operator()(const Tensor<T>& x, const std::vector<T>& t, const Tensor<T>& cond, const Tensor<T>& zf) const {
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    if (x.dim(1) != 3 || cond.dim(1) != cond_channels || cond.dim(0) != n || cond.dim(2) != h || cond.dim(3) != w)
      fail(Errc::ShapeMismatch, "velocity net input " + nn::shape_str(x.shape()) + " with conditioning " + nn::shape_str(cond.shape()));
    if (h % 4 || w % 4) fail(Errc::ShapeMismatch, "velocity net needs H and W divisible by 4");
    if (zf.dim(0) != n || zf.dim(1) != cfg.ff_dim) fail(Errc::ShapeMismatch, "frequency embedding shape");
    auto emb = emb2(nn::gelu(emb1(nn::concat_channels<T>({time_features<T>(t, cfg.time_dim), zf}))));
    auto ea = nn::gelu(emb);
    auto c0 = cond, c1 = nn::avgpool2x(c0), c2 = nn::avgpool2x(c1);
    auto cat = [](const Tensor<T>& a, const Tensor<T>& b) { return nn::concat_channels<T>({a, b}); };

    auto h0 = conv_in(cat(x, c0));
    auto s0 = enc0(cat(h0, c0), ea);
    auto s1 = enc1(cat(down0(s0), c1), ea);
    auto m = attn(mid(cat(down1(s1), c2), ea));
    auto g1 = dec1(nn::concat_channels<T>({up1(nn::upsample2x(m)), s1, c1}), ea);
    auto g0 = dec0(nn::concat_channels<T>({up0(nn::upsample2x(g1)), s0, c0}), ea);
    return conv_out(nn::gelu(nn::instance_norm(g0)));
  }

  nn::ParamList<T> params() const {
    nn::ParamList<T> p;
    emb1.collect("emb1", p);
    emb2.collect("emb2", p);
    conv_in.collect("conv_in", p);
    enc0.collect("enc0", p);
    down0.collect("down0", p);
    enc1.collect("enc1", p);
    down1.collect("down1", p);
    mid.collect("mid", p);
    attn.collect("attn", p);
    up1.collect("up1", p);
    dec1.collect("dec1", p);
    up0.collect("up0", p);
    dec0.collect("dec0", p);
    conv_out.collect("conv_out", p);
    return p;
  }
};

// ---------------------------------------------------------------- conditioning and training

/// Spatial conditioning [anchor, sin base, cos base, environment...] and z_f.
struct Conditioning {
  std::vector<Grid<float>> spatial;
  std::vector<double> zf;
};

struct TrainingSet {
  std::vector<TargetRep> targets;
  std::vector<Conditioning> conds;
  std::vector<double> nus;
};

struct ChannelStats {
  std::vector<double> mean, std;
};

inline ChannelStats conditioning_stats(const std::vector<Conditioning>& conds) {
  ChannelStats st;
  if (conds.empty()) return st;
  const std::size_t s = conds[0].spatial.size();
  std::vector<double> s1(s, 0.0), s2(s, 0.0);
  double count = 0;
  for (const auto& c : conds) {
    for (std::size_t k = 0; k < s; ++k)
      for (std::size_t i = 0; i < c.spatial[k].size(); ++i) {
        s1[k] += c.spatial[k][i];
        s2[k] += double(c.spatial[k][i]) * c.spatial[k][i];
      }
    count += static_cast<double>(c.spatial[0].size());
  }
  for (std::size_t k = 0; k < s; ++k) {
    const double m = s1[k] / count;
    const double sd = std::sqrt(std::max(s2[k] / count - m * m, 0.0));
    st.mean.push_back(m);
    st.std.push_back(sd > 1e-8 ? sd : 1.0);
  }
  return st;
}

/// Per-channel z-score statistics of the targets, pooled over samples and pixels.
inline ChannelStats target_stats(const std::vector<TargetRep>& xs) {
  ChannelStats st;
  for (int c = 0; c < 3; ++c) {
    double s1 = 0.0, s2 = 0.0, count = 0.0;
    for (const auto& x : xs)
      for (double v : x.ch[c]) {
        s1 += v;
        s2 += v * v;
        count += 1.0;
      }
    const double m = count > 0 ? s1 / count : 0.0;
    const double sd = count > 0 ? std::sqrt(std::max(s2 / count - m * m, 0.0)) : 1.0;
    st.mean.push_back(m);
    st.std.push_back(sd > 1e-8 ? sd : 1.0);
  }
  return st;
}

struct TrainTrace {
  std::vector<double> epoch_loss;
};

class Enhancer {
 public:
  Enhancer() = default;
  Enhancer(DomainId dom, int cond_channels, int rows, int cols, EnhancerConfig cfg, FourierScales fs)
      : dom_(dom), rows_(rows), cols_(cols), cfg_(cfg), fs_(fs) {
    cfg_.validate();
    if (cfg_.ff_dim != fs_.dim) fail(Errc::BadConfig, "ff_dim must match the Fourier feature dimension");
    Rng rng(mix_seed(cfg.seed, 0xC0));
    net_ = VelocityNet<float>(cond_channels, cfg_, rng);
    stats_.mean.assign(cond_channels, 0.0);
    stats_.std.assign(cond_channels, 1.0);
    tstats_.mean.assign(3, 0.0);
    tstats_.std.assign(3, 1.0);
  }

  const EnhancerConfig& config() const { return cfg_; }
  const FourierScales& scales() const { return fs_; }
  int cond_channels() const { return net_.cond_channels; }
  nn::ParamList<float> params() const { return net_.params(); }
  const VelocityNet<float>& net() const { return net_; }

  Tensor<float> cond_batch(const std::vector<const Conditioning*>& cs) const {
    const int n = static_cast<int>(cs.size()), s = cond_channels();
    auto out = Tensor<float>::zeros({n, s, rows_, cols_});
    const std::size_t plane = std::size_t(rows_) * cols_;
    for (int b = 0; b < n; ++b) {
      if (static_cast<int>(cs[b]->spatial.size()) != s) fail(Errc::MissingCondition, "conditioning has " + std::to_string(cs[b]->spatial.size()) + " channels, expected " + std::to_string(s));
      for (int k = 0; k < s; ++k) {
        const auto& g = cs[b]->spatial[k];
        if (g.rows() != rows_ || g.cols() != cols_) fail(Errc::ShapeMismatch, "conditioning grid");
        float* dst = out.data() + (std::size_t(b) * s + k) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>((g[i] - stats_.mean[k]) / stats_.std[k]);
      }
    }
    return out;
  }

  Tensor<float> zf_batch(const std::vector<const Conditioning*>& cs) const {
    const int n = static_cast<int>(cs.size());
    auto out = Tensor<float>::zeros({n, cfg_.ff_dim});
    for (int b = 0; b < n; ++b) {
      if (static_cast<int>(cs[b]->zf.size()) != cfg_.ff_dim) fail(Errc::MissingCondition, "frequency embedding missing or of wrong size");
      for (int k = 0; k < cfg_.ff_dim; ++k) out.values()[b * cfg_.ff_dim + k] = static_cast<float>(cs[b]->zf[k]);
    }
    return out;
  }

  static Tensor<float> target_batch(const std::vector<const TargetRep*>& xs, int rows, int cols) {
    const int n = static_cast<int>(xs.size());
    auto out = Tensor<float>::zeros({n, 3, rows, cols});
    const std::size_t plane = std::size_t(rows) * cols;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.values()[(std::size_t(b) * 3 + c) * plane + i] = static_cast<float>(xs[b]->ch[c][i]);
    return out;
  }

  TrainTrace train(const TrainingSet& ts) {
    if (ts.targets.empty()) fail(Errc::EmptyInput, "enhancer training set is empty");
    if (ts.conds.size() != ts.targets.size()) fail(Errc::MissingCondition, std::to_string(ts.targets.size()) + " targets but " + std::to_string(ts.conds.size()) + " conditionings");
    for (std::size_t i = 0; i < ts.conds.size(); ++i)
      if (static_cast<int>(ts.conds[i].spatial.size()) != cond_channels() || static_cast<int>(ts.conds[i].zf.size()) != cfg_.ff_dim)
        fail(Errc::MissingCondition, "training sample " + std::to_string(i) + " lacks anchor, prior or embedding channels");
    // kept at checkpoint precision so a reloaded model samples identically
    auto to_f32 = [](ChannelStats st) {
      for (auto* v : {&st.mean, &st.std})
        for (double& x : *v) x = static_cast<float>(x);
      return st;
    };
    stats_ = to_f32(conditioning_stats(ts.conds));
    tstats_ = to_f32(target_stats(ts.targets));
    auto params = net_.params();
    nn::Adam<float> opt(params, {.lr = cfg_.lr});
    Rng rng(mix_seed(cfg_.seed, 0xC1));
    std::vector<std::size_t> order(ts.targets.size());
    TrainTrace trace;
    for (int e = 0; e < cfg_.epochs; ++e) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      double acc = 0.0;
      int batches = 0;
      for (std::size_t i = 0; i < order.size(); i += cfg_.batch) {
        std::vector<const TargetRep*> xs;
        std::vector<const Conditioning*> cs;
        for (std::size_t j = i; j < std::min(order.size(), i + cfg_.batch); ++j) {
          xs.push_back(&ts.targets[order[j]]);
          cs.push_back(&ts.conds[order[j]]);
        }
        auto x1 = target_batch(xs, rows_, cols_);
        normalise(x1);
        auto x0 = Tensor<float>::zeros(x1.shape());
        for (auto& v : x0.values()) v = static_cast<float>(rng.normal());
        std::vector<float> t(xs.size());
        for (auto& v : t) v = static_cast<float>(rng.uniform01());
        auto cond = cond_batch(cs);
        auto zf = zf_batch(cs);
        opt.zero_grad();
        auto loss = fm_loss<float>([&](const Tensor<float>& xt, const std::vector<float>& tt) { return net_(xt, tt, cond, zf); }, x0, x1, t);
        loss.backward();
        opt.step();
        acc += loss.item();
        ++batches;
      }
      trace.epoch_loss.push_back(acc / batches);
    }
    return trace;
  }

  /// Midpoint ODE from x0 ~ N(0, I) (seeded) to t = 1, returned in target
  /// units (the flow runs on z-scored targets).
  TargetRep sample_rep(const Conditioning& c, std::uint64_t seed, int steps) const {
    nn::NoGradGuard ng;
    std::vector<const Conditioning*> cs{&c};
    const auto cond = cond_batch(cs);
    const auto zf = zf_batch(cs);
    const std::size_t n = std::size_t(3) * rows_ * cols_;
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    auto field = [&](const std::vector<double>& xs, double t, std::vector<double>& out) {
      auto xt = Tensor<float>::zeros({1, 3, rows_, cols_});
      for (std::size_t i = 0; i < n; ++i) xt.values()[i] = static_cast<float>(xs[i]);
      auto v = net_(xt, {static_cast<float>(t)}, cond, zf);
      for (std::size_t i = 0; i < n; ++i) out[i] = v.values()[i];
    };
    x = midpoint_integrate(field, std::move(x), steps);
    TargetRep rep;
    for (int c = 0; c < 3; ++c) {
      rep.ch[c] = Grid<double>(rows_, cols_);
      for (std::size_t i = 0; i < rep.ch[c].size(); ++i) rep.ch[c][i] = x[c * rep.ch[c].size() + i] * tstats_.std[c] + tstats_.mean[c];
    }
    return rep;
  }

  ComplexField sample(const Conditioning& c, double nu, Environment env, std::uint64_t seed, int steps = 50) const {
    return decode(sample_rep(c, seed, steps), nu, std::move(env), dom_);
  }

  std::vector<nn::NamedArray> to_arrays() const {
    auto arrays = nn::export_params(net_.params());
    auto vec = [](const std::string& name, const std::vector<double>& v) {
      nn::NamedArray a{name, {static_cast<int>(v.size())}, {}};
      for (double x : v) a.values.push_back(static_cast<float>(x));
      return a;
    };
    arrays.push_back(vec("cond.mean", stats_.mean));
    arrays.push_back(vec("cond.std", stats_.std));
    arrays.push_back(vec("target.mean", tstats_.mean));
    arrays.push_back(vec("target.std", tstats_.std));
    arrays.push_back(vec("fourier", {fs_.nu_min, fs_.nu_max, double(fs_.dim)}));
    arrays.push_back(vec("meta", {double(static_cast<int>(dom_)), double(cond_channels()), double(rows_), double(cols_), double(cfg_.base),
                                  double(cfg_.time_dim), double(cfg_.emb_dim), double(cfg_.heads)}));
    return arrays;
  }

  void save(const std::string& path) const { nn::write_checkpoint(path, to_arrays()); }

  static Enhancer load(const std::string& path, EnhancerConfig cfg = {}) {
    const auto arrays = nn::read_checkpoint(path);
    const auto& meta = nn::find_array(arrays, "meta").values;
    const auto& ff = nn::find_array(arrays, "fourier").values;
    if (meta.size() != 8 || ff.size() != 3) fail(Errc::ShapeMismatch, "enhancer checkpoint meta");
    cfg.base = int(meta[4]);
    cfg.time_dim = int(meta[5]);
    cfg.emb_dim = int(meta[6]);
    cfg.heads = int(meta[7]);
    cfg.ff_dim = int(ff[2]);
    Enhancer e(static_cast<DomainId>(int(meta[0])), int(meta[1]), int(meta[2]), int(meta[3]), cfg, {ff[0], ff[1], int(ff[2])});
    auto params = e.net_.params();
    nn::import_params(params, arrays);
    e.stats_.mean.clear();
    e.stats_.std.clear();
    for (float v : nn::find_array(arrays, "cond.mean").values) e.stats_.mean.push_back(v);
    for (float v : nn::find_array(arrays, "cond.std").values) e.stats_.std.push_back(v);
    e.tstats_.mean.clear();
    e.tstats_.std.clear();
    for (float v : nn::find_array(arrays, "target.mean").values) e.tstats_.mean.push_back(v);
    for (float v : nn::find_array(arrays, "target.std").values) e.tstats_.std.push_back(v);
    return e;
  }

 private:
  void normalise(Tensor<float>& x) const {
    const int n = x.dim(0);
    const std::size_t plane = std::size_t(rows_) * cols_;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < 3; ++c) {
        float* p = x.data() + (std::size_t(b) * 3 + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] = static_cast<float>((p[i] - tstats_.mean[c]) / tstats_.std[c]);
      }
  }

  DomainId dom_ = DomainId::SimpleWave;
  int rows_ = 0, cols_ = 0;
  EnhancerConfig cfg_;
  FourierScales fs_;
  VelocityNet<float> net_;
  ChannelStats stats_;
  ChannelStats tstats_;
};

// ---------------------------------------------------------------- conditioning assembly

/// Which conditioning channels carry information; disabled ones are zero-filled
/// so every variant shares one network layout.
struct ConditionFlags {
  bool anchor = true;
  bool prior = true;
};

/// [anchor, sin base, cos base, env...] plus z_f(nu).
inline Conditioning make_conditioning(const Grid<double>* anchor, const Grid<double>* sin_base, const Grid<double>* cos_base,
                                      const std::vector<Grid<float>>& env, double nu, const FourierScales& fs, ConditionFlags flags,
                                      int rows, int cols) {
  Conditioning c;
  auto put = [&](const Grid<double>* g, bool on, const char* what) {
    Grid<float> out(rows, cols, 0.0f);
    if (on) {
      if (!g) fail(Errc::MissingCondition, std::string("missing ") + what);
      if (g->rows() != rows || g->cols() != cols) fail(Errc::ShapeMismatch, std::string(what) + " grid");
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>((*g)[i]);
    }
    c.spatial.push_back(std::move(out));
  };
  put(anchor, flags.anchor, "coarse anchor");
  put(sin_base, flags.prior, "phase prior (sin)");
  put(cos_base, flags.prior, "phase prior (cos)");
  for (const auto& g : env) {
    if (g.rows() != rows || g.cols() != cols) fail(Errc::ShapeMismatch, "environment channel grid");
    c.spatial.push_back(g);
  }
  c.zf = fourier_features(nu, fs);
  return c;
}

}  // namespace wavex::cfm
