#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wavex/metrics.hpp"
#include "wavex/pipeline/config.hpp"

namespace wavex::pipeline {

struct SampleScore {
  std::size_t index = 0;  ///< dataset index
  double nu = 0.0;
  double h1 = 0.0;
  double awpc = 0.0;
};

struct GroupStats {
  std::string label;
  double nu = 0.0;  ///< 0 for the pooled row
  int count = 0;
  BootstrapCI h1, awpc;
};

struct Report {
  std::string config_hash;
  std::string benchmark;
  std::string method;
  std::string hf_ratio;
  std::vector<GroupStats> groups;  ///< one per HF frequency, in order
  GroupStats overall;              ///< pooled over all HF test samples
  std::vector<SampleScore> scores;
};

/// "HF20" for a frequency 20% above the highest LF value.
inline std::string group_label(double nu, double lf_max) {
  return "HF" + std::to_string(static_cast<long>(std::lround(100.0 * (nu / lf_max - 1.0))));
}

/// Groups by HF frequency plus the pooled row. Bootstrap seeds derive from
/// eval_seed and the group position.
inline Report summarize(const std::vector<SampleScore>& scores, const std::vector<double>& hf, double lf_max, int resamples,
                        std::uint64_t eval_seed) {
  if (scores.empty()) fail(Errc::EmptyInput, "no HF test scores to summarize");
  Report r;
  r.scores = scores;
  auto stats = [&](const std::vector<double>& h1, const std::vector<double>& aw, std::uint64_t salt) {
    GroupStats g;
    g.count = static_cast<int>(h1.size());
    g.h1 = bootstrap_ci(h1, resamples, 0.95, mix_seed(eval_seed, 2 * salt));
    g.awpc = bootstrap_ci(aw, resamples, 0.95, mix_seed(eval_seed, 2 * salt + 1));
    return g;
  };
  std::vector<double> all_h1, all_aw;
  for (std::size_t k = 0; k < hf.size(); ++k) {
    std::vector<double> h1, aw;
    for (const auto& s : scores)
      if (same_freq(s.nu, hf[k])) {
        h1.push_back(s.h1);
        aw.push_back(s.awpc);
      }
    if (h1.empty()) continue;
    auto g = stats(h1, aw, k);
    g.label = group_label(hf[k], lf_max);
    g.nu = hf[k];
    r.groups.push_back(g);
  }
  for (const auto& s : scores) {
    all_h1.push_back(s.h1);
    all_aw.push_back(s.awpc);
  }
  r.overall = stats(all_h1, all_aw, hf.size());
  r.overall.label = "Overall";
  return r;
}

namespace report_detail {
inline std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace report_detail

inline std::string report_kv(const Report& r) {
  using report_detail::g;
  std::ostringstream o;
  o << "config_hash=" << r.config_hash << "\n";
  o << "benchmark=" << r.benchmark << "\n";
  o << "method=" << r.method << "\n";
  o << "hf_ratio=" << r.hf_ratio << "\n";
  o << "overall.aggregation=pooled\n";
  std::string labels;
  for (const auto& grp : r.groups) labels += (labels.empty() ? "" : ",") + grp.label;
  o << "groups=" << labels << "\n";
  auto put = [&](const std::string& p, const GroupStats& s) {
    o << p << ".nu=" << g(s.nu) << "\n" << p << ".n=" << s.count << "\n";
    o << p << ".h1.mean=" << g(s.h1.mean) << "\n" << p << ".h1.lo=" << g(s.h1.lo) << "\n" << p << ".h1.hi=" << g(s.h1.hi) << "\n";
    o << p << ".awpc.mean=" << g(s.awpc.mean) << "\n" << p << ".awpc.lo=" << g(s.awpc.lo) << "\n" << p << ".awpc.hi=" << g(s.awpc.hi)
      << "\n";
  };
  for (const auto& grp : r.groups) put(grp.label, grp);
  put("Overall", r.overall);
  return o.str();
}

inline std::string report_table(const Report& r) {
  std::ostringstream o;
  char line[160];
  o << r.method << " on " << r.benchmark << " (HF ratio " << r.hf_ratio << ", run " << r.config_hash << ")\n";
  std::snprintf(line, sizeof line, "%-8s %6s %4s  %-26s  %-26s\n", "group", "nu", "n", "H1 mean [95% CI]", "AWPC mean [95% CI]");
  o << line;
  auto row = [&](const GroupStats& s) {
    std::snprintf(line, sizeof line, "%-8s %6.2f %4d  %.4f [%.4f, %.4f]  %.4f [%.4f, %.4f]\n", s.label.c_str(), s.nu, s.count,
                  s.h1.mean, s.h1.lo, s.h1.hi, s.awpc.mean, s.awpc.lo, s.awpc.hi);
    o << line;
  };
  for (const auto& grp : r.groups) row(grp);
  row(r.overall);
  o << "Overall pools every HF test sample.\n";
  return o.str();
}

inline std::string scores_text(const Report& r) {
  using report_detail::g;
  std::string out = "# index nu h1 awpc\n";
  for (const auto& s : r.scores) out += std::to_string(s.index) + " " + g(s.nu) + " " + g(s.h1) + " " + g(s.awpc) + "\n";
  return out;
}

inline std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

/// Inverse of report_kv (scores are not part of the key-value file).
inline Report parse_report(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) fail(Errc::BadConfig, "report lacks key " + k);
    return it->second;
  };
  auto num = [&](const std::string& k) { return std::stod(get(k)); };
  Report r;
  r.config_hash = get("config_hash");
  r.benchmark = get("benchmark");
  r.method = get("method");
  r.hf_ratio = get("hf_ratio");
  auto grp = [&](const std::string& p) {
    GroupStats s;
    s.label = p;
    s.nu = num(p + ".nu");
    s.count = std::stoi(get(p + ".n"));
    s.h1 = {num(p + ".h1.mean"), num(p + ".h1.lo"), num(p + ".h1.hi")};
    s.awpc = {num(p + ".awpc.mean"), num(p + ".awpc.lo"), num(p + ".awpc.hi")};
    return s;
  };
  std::stringstream labels(get("groups"));
  std::string label;
  while (std::getline(labels, label, ','))
    if (!label.empty()) r.groups.push_back(grp(label));
  r.overall = grp("Overall");
  return r;
}

inline Report read_report(const std::string& kv_path) { return parse_report(read_kv(kv_path)); }

}  // namespace wavex::pipeline
