#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "wavex/cfm.hpp"
#include "wavex/fno.hpp"
#include "wavex/helmholtz.hpp"
#include "wavex/metrics.hpp"
#include "wavex/parallel.hpp"
#include "wavex/phase_prior.hpp"
#include "wavex/pipeline/config.hpp"
#include "wavex/pipeline/heatmap.hpp"
#include "wavex/pipeline/report.hpp"
#include "wavex/pipeline/split.hpp"
#include "wavex/simwave.hpp"

namespace wavex::pipeline {

namespace fs = std::filesystem;

/// Progress sink; the library itself never prints.
using Logger = std::function<void(const std::string&)>;

inline void note(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

inline void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) fail(Errc::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline fs::path ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(Errc::IoError, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

// ---------------------------------------------------------------- data

inline std::vector<double> all_freqs(const ExperimentConfig& c) {
  auto f = c.lf_freqs();
  const auto h = c.hf_freqs();
  f.insert(f.end(), h.begin(), h.end());
  return f;
}

inline Dataset generate_data(const ExperimentConfig& c) {
  if (c.benchmark == DomainId::Helmholtz) {
    helmholtz::HelmholtzConfig h;
    h.grid.nodes = c.grid;
    return helmholtz::generate_dataset(c.data_seed, all_freqs(c), c.n_per_freq, h);
  }
  if (c.benchmark != DomainId::SimpleWave) fail(Errc::UnknownDomain, domain_key(c.benchmark));
  simwave::SimpleWaveConfig sw;
  sw.grid = c.grid;
  return simwave::generate_dataset(sw, c.data_seed, all_freqs(c), c.n_per_freq);
}

/// Dataset from <root>/cache/data_<hash>.wfd, generated on first use.
inline Dataset load_or_generate(const ExperimentConfig& c, const fs::path& root, const Logger& log = {}) {
  const fs::path path = ensure_dir(root / "cache") / ("data_" + data_hash(c) + ".wfd");
  if (fs::exists(path)) {
    note(log, "data: cached " + path.string());
    return read_dataset(path.string());
  }
  note(log, "data: generating " + std::to_string(c.n_per_freq) + " samples per frequency");
  Dataset ds = generate_data(c);
  const fs::path tmp = path.string() + ".tmp";
  write_dataset(tmp.string(), ds);
  fs::rename(tmp, path);
  return ds;
}

// ---------------------------------------------------------------- models

/// Frozen LF operator from <root>/cache/op_<hash>.wxck, trained on first use.
inline fno::OperatorModel load_or_train_operator(const ExperimentConfig& c, const Dataset& ds, const Split& sp, const fs::path& root,
                                                 const Logger& log = {}) {
  const fs::path path = ensure_dir(root / "cache") / ("op_" + operator_hash(c) + ".wxck");
  if (fs::exists(path)) {
    note(log, "operator: cached " + path.string());
    return fno::OperatorModel::load(path.string(), c.operator_config());
  }
  auto lf_train = subset(ds, sp.lf_train);
  auto model = fno::make_operator(lf_train, c.operator_config());
  const auto t0 = std::chrono::steady_clock::now();
  auto trace = fno::train_lf(model, lf_train);
  char msg[128];
  std::snprintf(msg, sizeof msg, "operator: %zu epochs, loss %.4g -> %.4g, %.1f s", trace.epoch_loss.size(),
                trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.front(), trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.back(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  note(log, msg);
  const fs::path tmp = path.string() + ".tmp";
  model.save(tmp.string());
  fs::rename(tmp, path);
  return model;
}

inline cfm::ConditionFlags flags_for(Method m) {
  switch (m) {
    case Method::Apex: return {true, true};
    case Method::ApexNoPrior: return {true, false};
    case Method::ApexNoAnchor: return {false, true};
    default: return {false, false};
  }
}

/// [anchor, sin base, cos base, input channels...] and z_f for one sample;
/// disabled channels are zero-filled.
inline cfm::Conditioning conditioning_for(const Sample& s, DomainId dom, int rows, int cols, const fno::OperatorModel* lf,
                                          cfm::ConditionFlags flags) {
  Grid<double> anchor, sn, cs;
  if (flags.anchor) {
    if (!lf) fail(Errc::MissingCondition, "coarse anchor requested without an operator");
    anchor = fno::coarse_anchor(*lf, s);
  }
  if (flags.prior) {
    auto f = phase_base_features(build_prior(dom, Environment{s.env}, s.nu, default_geometry(dom, rows, cols)));
    sn = std::move(f.sin_map);
    cs = std::move(f.cos_map);
  }
  return cfm::make_conditioning(flags.anchor ? &anchor : nullptr, flags.prior ? &sn : nullptr, flags.prior ? &cs : nullptr,
                                s.channels, s.nu, cfm::scales_for(dom), flags, rows, cols);
}

inline cfm::TrainingSet enhancer_training_set(const Dataset& ds, const std::vector<std::size_t>& idx, const fno::OperatorModel* lf,
                                              cfm::ConditionFlags flags) {
  cfm::TrainingSet ts;
  ts.targets.resize(idx.size());
  ts.conds.resize(idx.size());
  ts.nus.resize(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) {
    const Sample& s = ds.samples.at(idx[k]);
    ts.targets[k] = cfm::encode_target(to_field(s, ds.domain));
    ts.conds[k] = conditioning_for(s, ds.domain, ds.rows, ds.cols, lf, flags);
    ts.nus[k] = s.nu;
  });
  return ts;
}

/// HF training indices for the enhancer; CFM-Joint also sees the LF training split.
inline std::vector<std::size_t> enhancer_indices(const ExperimentConfig& c, const Split& sp) {
  if (c.method != Method::CfmJoint) return sp.hf_train;
  auto idx = sp.lf_train;
  idx.insert(idx.end(), sp.hf_train.begin(), sp.hf_train.end());
  return idx;
}

inline cfm::Enhancer load_or_train_enhancer(const ExperimentConfig& c, const Dataset& ds, const Split& sp,
                                            const fno::OperatorModel* lf, const fs::path& run_dir, const Logger& log = {}) {
  const fs::path path = run_dir / "enhancer.wxck";
  if (fs::exists(path)) {
    note(log, "enhancer: cached " + path.string());
    return cfm::Enhancer::load(path.string(), c.enhancer_config());
  }
  const auto flags = flags_for(c.method);
  auto ts = enhancer_training_set(ds, enhancer_indices(c, sp), lf, flags);
  cfm::Enhancer enh(ds.domain, static_cast<int>(ts.conds.front().spatial.size()), ds.rows, ds.cols, c.enhancer_config(),
                    cfm::scales_for(ds.domain));
  const auto t0 = std::chrono::steady_clock::now();
  auto trace = enh.train(ts);
  char msg[128];
  std::snprintf(msg, sizeof msg, "enhancer: %zu samples, %zu epochs, loss %.4g -> %.4g, %.1f s", ts.targets.size(),
                trace.epoch_loss.size(), trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.front(),
                trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.back(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  note(log, msg);
  const fs::path tmp = path.string() + ".tmp";
  enh.save(tmp.string());
  fs::rename(tmp, path);
  return enh;
}

/// Sampler seed of dataset sample `index`.
inline std::uint64_t sample_seed(const ExperimentConfig& c, std::size_t index) { return mix_seed(mix_seed(c.seed, 0x5A), index); }

// ---------------------------------------------------------------- experiment

struct RunResult {
  Report report;
  fs::path dir;
  double runtime_s = 0.0;
  std::vector<ComplexField> predictions;  ///< aligned with split.hf_test
};

inline RunResult run_experiment(const ExperimentConfig& c, const fs::path& root, const Logger& log = {}) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash(c);
  const fs::path dir = ensure_dir(root / "runs" / hash);
  note(log, method_name(c.method) + ": run directory " + dir.string());
  write_text(dir / "config.txt", canonical(c));

  const Dataset ds = in_stage("data", [&] { return load_or_generate(c, root, log); });
  const Split sp = in_stage("split", [&] { return make_split(ds, c); });
  write_text(dir / "split.txt", split_text(sp));
  if (sp.hf_test.empty()) fail(Errc::EmptyInput, "stage split: HF test split is empty");

  const auto lf = in_stage("operator", [&] { return load_or_train_operator(c, ds, sp, root, log); });

  std::vector<ComplexField> preds(sp.hf_test.size());
  const auto predict_all = [&](const std::function<ComplexField(std::size_t)>& f) {
    parallel_for(sp.hf_test.size(), [&](std::size_t k) { preds[k] = f(sp.hf_test[k]); });
  };
  switch (c.method) {
    case Method::FnoLf:
      in_stage("extrapolate", [&] { predict_all([&](std::size_t i) { return lf.extrapolate(ds.samples[i]); }); });
      break;
    case Method::FnoFt: {
      const fs::path path = dir / "fine_tuned.wxck";
      const auto ft = in_stage("fine-tune", [&] {
        if (fs::exists(path)) return fno::OperatorModel::load(path.string(), c.operator_config());
        fno::TrainTrace trace;
        auto m = fno::fine_tune(lf, subset(ds, sp.hf_train), &trace);
        note(log, "fine-tune: " + std::to_string(trace.epoch_loss.size()) + " epochs");
        m.save(path.string());
        return m;
      });
      in_stage("predict", [&] { predict_all([&](std::size_t i) { return ft.forward(ds.samples[i]); }); });
      break;
    }
    default: {
      const auto flags = flags_for(c.method);
      const auto enh = in_stage("enhancer", [&] { return load_or_train_enhancer(c, ds, sp, &lf, dir, log); });
      in_stage("sampling", [&] {
        predict_all([&](std::size_t i) {
          const Sample& s = ds.samples[i];
          const auto cond = conditioning_for(s, ds.domain, ds.rows, ds.cols, &lf, flags);
          try {
            return enh.sample(cond, s.nu, Environment{s.env}, sample_seed(c, i), c.enh.steps);
          } catch (const Error& e) {
            throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.detail());
          }
        });
      });
    }
  }

  std::vector<SampleScore> scores(sp.hf_test.size());
  in_stage("metrics", [&] {
    parallel_for(sp.hf_test.size(), [&](std::size_t k) {
      const std::size_t i = sp.hf_test[k];
      const auto truth = target_field(ds, i);
      scores[k] = {i, ds.samples[i].nu, h1_error(preds[k], truth), awpc(preds[k], truth)};
    });
  });

  RunResult out;
  out.dir = dir;
  out.report = in_stage("report", [&] {
    const auto lfs = c.lf_freqs();
    Report r = summarize(scores, c.hf_freqs(), *std::max_element(lfs.begin(), lfs.end()), c.bootstrap, c.eval_seed);
    r.config_hash = hash;
    r.benchmark = domain_key(c.benchmark);
    r.method = method_name(c.method);
    r.hf_ratio = c.hf_ratio.str();
    write_text(dir / "report.txt", report_table(r));
    write_text(dir / "report.kv", report_kv(r));
    write_text(dir / "scores.txt", scores_text(r));
    // one panel pair per HF group: first test sample of that frequency
    const fs::path panels = ensure_dir(dir / "panels");
    for (const auto& g : r.groups)
      for (std::size_t k = 0; k < sp.hf_test.size(); ++k)
        if (same_freq(ds.samples[sp.hf_test[k]].nu, g.nu)) {
          export_heatmaps(preds[k], (panels / ("pred_" + g.label)).string());
          export_heatmaps(target_field(ds, sp.hf_test[k]), (panels / ("truth_" + g.label)).string());
          break;
        }
    return r;
  });
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char rt[64];
  std::snprintf(rt, sizeof rt, "runtime_s=%.3f\n", out.runtime_s);
  write_text(dir / "runtime.txt", rt);
  out.predictions = std::move(preds);
  return out;
}

/// APEX and CFM-Joint at every ratio. The LF split and operator do not depend
/// on the HF ratio, so the cached operator is shared by all eight runs.
inline std::vector<RunResult> ratio_sweep(const ExperimentConfig& base, const fs::path& root,
                                          const std::vector<Ratio>& ratios = sweep_ratios(), const Logger& log = {}) {
  std::vector<RunResult> out;
  for (const auto& r : ratios)
    for (Method m : {Method::Apex, Method::CfmJoint}) {
      auto c = base;
      c.hf_ratio = r;
      c.method = m;
      out.push_back(run_experiment(c, root, log));
    }
  return out;
}

// ---------------------------------------------------------------- similarity

struct TruthSimilarity {
  SimilarityMatrices mean;  ///< averaged over environments
  int environments = 0;
};

/// S_A and S_P of ground-truth fields sharing one environment, averaged over
/// n_env environments drawn from seed.
inline TruthSimilarity truth_similarity(DomainId dom, int grid, const std::vector<double>& freqs, int n_env, std::uint64_t seed) {
  if (freqs.size() < 2) fail(Errc::InsufficientFrequencies, "need at least two frequencies");
  if (n_env < 1) fail(Errc::EmptyInput, "need at least one environment");
  std::vector<SimilarityMatrices> per(n_env);
  std::vector<double> speeds(n_env);
  Rng rng(seed);
  simwave::SimpleWaveConfig sw;
  sw.grid = grid;
  for (auto& v : speeds) v = rng.uniform(sw.speed_lo, sw.speed_hi);
  parallel_for(static_cast<std::size_t>(n_env), [&](std::size_t e) {
    std::vector<ComplexField> fields;
    if (dom == DomainId::SimpleWave) {
      for (double nu : freqs) fields.push_back(simwave::generate(sw, speeds[e], nu).field);
    } else if (dom == DomainId::Helmholtz) {
      helmholtz::GridSpec g{grid};
      const auto med = helmholtz::sample_medium(helmholtz::medium_seed(seed, e), g);
      const auto src = helmholtz::build_source(g);
      const auto sponge = helmholtz::build_sponge(g);
      for (double k : freqs) fields.push_back(helmholtz::solve(helmholtz::assemble(med, src, sponge, k)));
    } else {
      fail(Errc::UnknownDomain, domain_key(dom));
    }
    per[e] = similarity_matrices(fields);
  });
  TruthSimilarity out;
  out.environments = n_env;
  out.mean = per.front();
  const std::size_t n = freqs.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double sa = 0.0, sp = 0.0;
      for (const auto& m : per) {
        sa += m.sa[i][j];
        sp += m.sp[i][j];
      }
      out.mean.sa[i][j] = sa / n_env;
      out.mean.sp[i][j] = sp / n_env;
    }
  return out;
}

/// Relative similarity of a frozen LF operator's predictions on held-out
/// samples (LF test and HF test), normalised at ref_freq.
inline SimilarityCurve operator_similarity_curve(const fno::OperatorModel& lf, const Dataset& ds, const Split& sp, double ref_freq) {
  std::vector<std::size_t> idx = sp.lf_test;
  idx.insert(idx.end(), sp.hf_test.begin(), sp.hf_test.end());
  std::vector<ComplexField> preds(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) { preds[k] = lf.extrapolate(ds.samples[idx[k]]); });
  FieldsByFreq p, t;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double nu = ds.samples[idx[k]].nu;
    p[nu].push_back(std::move(preds[k]));
    t[nu].push_back(target_field(ds, idx[k]));
  }
  if (p.size() < 2) fail(Errc::InsufficientFrequencies, "held-out samples cover fewer than two frequencies");
  return relative_similarity_curve(p, t, ref_freq);
}

inline std::string matrix_text(const std::string& title, const std::vector<double>& freqs, const std::vector<std::vector<double>>& m) {
  std::string out = title + "\n        ";
  char buf[32];
  for (double f : freqs) {
    std::snprintf(buf, sizeof buf, "%8.2f", f);
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%8.2f", freqs[i]);
    out += buf;
    for (double v : m[i]) {
      std::snprintf(buf, sizeof buf, "%8.4f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline std::string curve_text(const SimilarityCurve& c) {
  std::string out = "# nu mean_SA mean_SP rel_SA rel_SP (reference nu = " + config_detail::fmt(c.ref_freq) + ")\n";
  char buf[128];
  for (const auto& p : c.points) {
    std::snprintf(buf, sizeof buf, "%g %.6f %.6f %.6f %.6f\n", p.nu, p.mean_sa, p.mean_sp, p.rel_sa, p.rel_sp);
    out += buf;
  }
  return out;
}

}  // namespace wavex::pipeline
