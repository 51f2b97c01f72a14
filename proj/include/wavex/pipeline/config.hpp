#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wavex/cfm.hpp"
#include "wavex/error.hpp"
#include "wavex/fno.hpp"
#include "wavex/helmholtz.hpp"
#include "wavex/simwave.hpp"

namespace wavex::pipeline {

enum class Method { FnoLf, FnoFt, CfmJoint, Apex, ApexNoPrior, ApexNoAnchor };

inline const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> v{
      {Method::FnoLf, "FNO-LF"},     {Method::FnoFt, "FNO-FT"},           {Method::CfmJoint, "CFM-Joint"},
      {Method::Apex, "APEX"},        {Method::ApexNoPrior, "APEX-noPrior"}, {Method::ApexNoAnchor, "APEX-noAnchor"}};
  return v;
}

inline std::string method_name(Method m) {
  for (const auto& [k, v] : method_names())
    if (k == m) return v;
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (const auto& [k, v] : method_names())
    if (v == s) return k;
  fail(Errc::BadConfig, "unknown method '" + s + "'");
}

inline bool same_freq(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

inline bool is_apex(Method m) { return m == Method::Apex || m == Method::ApexNoPrior || m == Method::ApexNoAnchor; }

/// train:test parts, e.g. 2/8.
struct Ratio {
  int train = 2;
  int test = 8;

  /// floor(n * train / (train + test)).
  int train_count(int n) const { return n * train / (train + test); }
  std::string str() const { return std::to_string(train) + "/" + std::to_string(test); }
  bool operator==(const Ratio&) const = default;
};

inline Ratio parse_ratio(const std::string& s) {
  Ratio r;
  char slash = 0;
  std::istringstream in(s);
  if (!(in >> r.train >> slash >> r.test) || slash != '/' || r.train < 0 || r.test < 0 || r.train + r.test == 0 || !in.eof())
    fail(Errc::BadConfig, "ratio must look like 2/8, got '" + s + "'");
  return r;
}

inline const std::vector<Ratio>& sweep_ratios() {
  static const std::vector<Ratio> v{{1, 9}, {2, 8}, {3, 7}, {4, 6}};
  return v;
}

/// Every knob of one experiment. `seed` drives the split, both models and the
/// sampler; `data_seed` the generator; `eval_seed` the bootstrap.
struct ExperimentConfig {
  DomainId benchmark = DomainId::SimpleWave;
  int grid = 64;
  int n_per_freq = 40;
  std::uint64_t data_seed = 0;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 0;
  Method method = Method::Apex;
  Ratio lf_ratio{8, 2};
  Ratio hf_ratio{2, 8};
  int bootstrap = 2000;
  fno::OperatorConfig op;
  cfm::EnhancerConfig enh;

  ExperimentConfig() {
    enh.base = 16;
    enh.epochs = 200;
    enh.steps = 25;
  }

  std::vector<double> lf_freqs() const {
    return benchmark == DomainId::Helmholtz ? helmholtz::lf_wavenumbers() : simwave::lf_frequencies();
  }
  std::vector<double> hf_freqs() const {
    return benchmark == DomainId::Helmholtz ? helmholtz::hf_wavenumbers() : simwave::hf_frequencies();
  }

  /// Model configs with seeds derived from `seed`.
  fno::OperatorConfig operator_config() const {
    auto c = op;
    c.seed = mix_seed(seed, 0x0F);
    return c;
  }
  cfm::EnhancerConfig enhancer_config() const {
    auto c = enh;
    c.seed = mix_seed(seed, 0x0C);
    return c;
  }

  void validate() const {
    if (benchmark == DomainId::Maxwell) fail(Errc::UnknownDomain, "Maxwell data is not generated by this artifact");
    if (grid < 8) fail(Errc::BadConfig, "grid must be at least 8");
    if (n_per_freq < 1) fail(Errc::BadConfig, "n_per_freq must be positive");
    if (bootstrap < 1) fail(Errc::BadConfig, "bootstrap must be positive");
    op.validate();
    enh.validate();
  }
};

inline std::string domain_key(DomainId d) {
  switch (d) {
    case DomainId::SimpleWave: return "simplewave";
    case DomainId::Helmholtz: return "helmholtz";
    case DomainId::Maxwell: return "maxwell";
  }
  return "?";
}

inline DomainId parse_domain(const std::string& s) {
  if (s == "simplewave") return DomainId::SimpleWave;
  if (s == "helmholtz") return DomainId::Helmholtz;
  if (s == "maxwell") return DomainId::Maxwell;
  fail(Errc::UnknownDomain, "benchmark '" + s + "'");
}

namespace config_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_num(const std::string& key, const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) fail(Errc::BadConfig, key + ": cannot parse '" + s + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace config_detail

/// Canonical key=value form: one line per key, sorted by key.
inline std::map<std::string, std::string> to_map(const ExperimentConfig& c) {
  using config_detail::fmt;
  std::map<std::string, std::string> m;
  m["benchmark"] = domain_key(c.benchmark);
  m["grid"] = std::to_string(c.grid);
  m["n_per_freq"] = std::to_string(c.n_per_freq);
  m["data_seed"] = std::to_string(c.data_seed);
  m["seed"] = std::to_string(c.seed);
  m["eval_seed"] = std::to_string(c.eval_seed);
  m["method"] = method_name(c.method);
  m["lf_ratio"] = c.lf_ratio.str();
  m["hf_ratio"] = c.hf_ratio.str();
  m["bootstrap"] = std::to_string(c.bootstrap);
  m["op.layers"] = std::to_string(c.op.layers);
  m["op.modes"] = std::to_string(c.op.modes);
  m["op.width"] = std::to_string(c.op.width);
  m["op.proj_width"] = std::to_string(c.op.proj_width);
  m["op.epochs"] = std::to_string(c.op.epochs);
  m["op.lr"] = fmt(c.op.lr);
  m["op.batch"] = std::to_string(c.op.batch);
  m["enh.base"] = std::to_string(c.enh.base);
  m["enh.time_dim"] = std::to_string(c.enh.time_dim);
  m["enh.emb_dim"] = std::to_string(c.enh.emb_dim);
  m["enh.heads"] = std::to_string(c.enh.heads);
  m["enh.epochs"] = std::to_string(c.enh.epochs);
  m["enh.lr"] = fmt(c.enh.lr);
  m["enh.batch"] = std::to_string(c.enh.batch);
  m["enh.steps"] = std::to_string(c.enh.steps);
  return m;
}

inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& val) {
  using config_detail::parse_num;
  auto i = [&] { return parse_num<int>(key, val); };
  auto u = [&] { return parse_num<std::uint64_t>(key, val); };
  auto d = [&] { return parse_num<double>(key, val); };
  if (key == "benchmark") c.benchmark = parse_domain(val);
  else if (key == "grid") c.grid = i();
  else if (key == "n_per_freq") c.n_per_freq = i();
  else if (key == "data_seed") c.data_seed = u();
  else if (key == "seed") c.seed = u();
  else if (key == "eval_seed") c.eval_seed = u();
  else if (key == "method") c.method = parse_method(val);
  else if (key == "lf_ratio") c.lf_ratio = parse_ratio(val);
  else if (key == "hf_ratio") c.hf_ratio = parse_ratio(val);
  else if (key == "bootstrap") c.bootstrap = i();
  else if (key == "op.layers") c.op.layers = i();
  else if (key == "op.modes") c.op.modes = i();
  else if (key == "op.width") c.op.width = i();
  else if (key == "op.proj_width") c.op.proj_width = i();
  else if (key == "op.epochs") c.op.epochs = i();
  else if (key == "op.lr") c.op.lr = d();
  else if (key == "op.batch") c.op.batch = i();
  else if (key == "enh.base") c.enh.base = i();
  else if (key == "enh.time_dim") c.enh.time_dim = i();
  else if (key == "enh.emb_dim") c.enh.emb_dim = i();
  else if (key == "enh.heads") c.enh.heads = i();
  else if (key == "enh.epochs") c.enh.epochs = i();
  else if (key == "enh.lr") c.enh.lr = d();
  else if (key == "enh.batch") c.enh.batch = i();
  else if (key == "enh.steps") c.enh.steps = i();
  else fail(Errc::BadConfig, "unknown config key '" + key + "'");
}

/// Applies "key = value" lines; '#' starts a comment, blank lines are skipped.
inline void apply_text(ExperimentConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
    set_key(c, config_detail::trim(line.substr(0, eq)), config_detail::trim(line.substr(eq + 1)));
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  apply_text(c, text);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string canonical(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_map(c)) out += k + " = " + v + "\n";
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ull;
  return h;
}

inline std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_of(const std::map<std::string, std::string>& m, const std::vector<std::string>& keys) {
  std::string s;
  for (const auto& k : keys) s += k + "=" + m.at(k) + "\n";
  return hex16(fnv1a(s));
}

/// Run directory name.
inline std::string config_hash(const ExperimentConfig& c) { return hex16(fnv1a(canonical(c))); }

/// Keys that determine the generated dataset.
inline std::string data_hash(const ExperimentConfig& c) {
  return hash_of(to_map(c), {"benchmark", "grid", "n_per_freq", "data_seed"});
}

/// Keys that determine the split and the LF operator; shared by every method.
inline std::string operator_hash(const ExperimentConfig& c) {
  return hash_of(to_map(c), {"benchmark", "grid", "n_per_freq", "data_seed", "seed", "lf_ratio", "op.layers", "op.modes",
                             "op.width", "op.proj_width", "op.epochs", "op.lr", "op.batch"});
}

}  // namespace wavex::pipeline
