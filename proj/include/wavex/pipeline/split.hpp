#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/pipeline/config.hpp"
#include "wavex/rng.hpp"

namespace wavex::pipeline {

struct Split {
  std::vector<std::size_t> lf_train, lf_test, hf_train, hf_test;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

/// Position of nu in freqs, or -1.
inline int freq_index(const std::vector<double>& freqs, double nu) {
  for (std::size_t k = 0; k < freqs.size(); ++k)
    if (same_freq(freqs[k], nu)) return static_cast<int>(k);
  return -1;
}

/// Stratified per frequency. Each frequency's indices are shuffled by a
/// permutation that depends only on (seed, frequency), and the first
/// floor(n * train / (train + test)) go to training. Training sets of
/// different ratios are therefore nested.
inline Split make_split(const Dataset& ds, const std::vector<double>& lf, const std::vector<double>& hf, Ratio lf_ratio,
                        Ratio hf_ratio, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_lf(lf.size()), by_hf(hf.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double nu = ds.samples[i].nu;
    if (int k = freq_index(lf, nu); k >= 0) by_lf[k].push_back(i);
    else if (int k2 = freq_index(hf, nu); k2 >= 0) by_hf[k2].push_back(i);
    else fail(Errc::UnknownFrequency, "sample " + std::to_string(i) + " has nu = " + std::to_string(nu));
  }
  Split sp;
  sp.seed = seed;
  auto take = [&](std::vector<std::vector<std::size_t>>& groups, Ratio r, std::uint64_t salt, std::vector<std::size_t>& train,
                  std::vector<std::size_t>& test) {
    for (std::size_t k = 0; k < groups.size(); ++k) {
      auto& idx = groups[k];
      Rng rng(mix_seed(seed, salt + k));
      for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
      const auto n_train = static_cast<std::size_t>(r.train_count(static_cast<int>(idx.size())));
      train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
      test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
  };
  take(by_lf, lf_ratio, 0x100, sp.lf_train, sp.lf_test);
  take(by_hf, hf_ratio, 0x200, sp.hf_train, sp.hf_test);
  return sp;
}

inline Split make_split(const Dataset& ds, const ExperimentConfig& c) {
  return make_split(ds, c.lf_freqs(), c.hf_freqs(), c.lf_ratio, c.hf_ratio, mix_seed(c.seed, 0x5));
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out{ds.domain, ds.rows, ds.cols, ds.n_channels, ds.n_env, {}};
  out.samples.reserve(idx.size());
  for (std::size_t i : idx) out.samples.push_back(ds.samples.at(i));
  return out;
}

inline std::string split_text(const Split& sp) {
  std::string out = "seed = " + std::to_string(sp.seed) + "\n";
  auto line = [&](const char* name, const std::vector<std::size_t>& v) {
    out += name;
    out += " =";
    for (auto i : v) out += " " + std::to_string(i);
    out += "\n";
  };
  line("lf_train", sp.lf_train);
  line("lf_test", sp.lf_test);
  line("hf_train", sp.hf_train);
  line("hf_test", sp.hf_test);
  return out;
}

}  // namespace wavex::pipeline
