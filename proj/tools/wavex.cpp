// wavex command-line driver.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wavex/wavex.hpp"

using namespace wavex;
using namespace wavex::pipeline;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "wavex_out";
  std::string method;
};

ExperimentConfig build_config(const Common& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(Errc::BadConfig, "--set expects key=value, got '" + kv + "'");
    set_key(c, config_detail::trim(kv.substr(0, eq)), config_detail::trim(kv.substr(eq + 1)));
  }
  if (o.seed_given) c.seed = o.seed;
  if (!o.method.empty()) c.method = parse_method(o.method);
  c.validate();
  return c;
}

Logger stderr_logger() {
  const auto t0 = std::chrono::steady_clock::now();
  return [t0](const std::string& msg) {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[%8.1fs] %s\n", t, msg.c_str());
  };
}

void add_common(CLI::App* sub, Common& o, bool with_method) {
  sub->add_option("--config", o.config, "experiment config file (key = value lines)")->check(CLI::ExistingFile);
  sub->add_option("--set", o.sets, "override one config key, e.g. --set grid=32")->take_all();
  sub->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) {
        o.seed = s;
        o.seed_given = true;
      }, "experiment seed");
  sub->add_option("--out", o.out, "output root (cache/, runs/, ...)")->capture_default_str();
  if (with_method) sub->add_option("--method", o.method, "FNO-LF, FNO-FT, CFM-Joint, APEX, APEX-noPrior or APEX-noAnchor");
}

fs::path split_path(const ExperimentConfig& c, const fs::path& root) {
  return ensure_dir(root / "splits") / ("split_" + operator_hash(c) + "_" + c.hf_ratio.str().replace(1, 1, "-") + ".txt");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavex: high-frequency wavefield enhancement experiments"};
  app.require_subcommand(1);
  Common o;

  auto* gen = app.add_subcommand("gen-data", "generate (or reuse) the benchmark dataset");
  auto* split = app.add_subcommand("split", "write the LF/HF train/test split");
  auto* train_op = app.add_subcommand("train-operator", "train the LF operator on the LF training split");
  auto* train_enh = app.add_subcommand("train-enhancer", "train the flow-matching enhancer for one method");
  auto* run = app.add_subcommand("run", "train, sample and evaluate one method");
  auto* sweep = app.add_subcommand("sweep", "APEX and CFM-Joint over the HF train:test ratios");
  auto* sim = app.add_subcommand("similarity", "amplitude/phase similarity of truth fields and LF operator predictions");
  auto* rep = app.add_subcommand("report", "print stored run reports");
  auto* heat = app.add_subcommand("heatmap", "export amplitude/phase PGM images of a dataset sample");
  for (auto* s : {gen, split, train_op, sim, rep, heat}) add_common(s, o, false);
  for (auto* s : {train_enh, run, sweep}) add_common(s, o, true);

  int n_env = 32;
  double ref = 0.0;
  bool skip_operator = false;
  sim->add_option("--envs", n_env, "environments averaged for the truth matrices")->capture_default_str();
  sim->add_option("--ref", ref, "reference frequency of the relative curve (default: highest LF value)");
  sim->add_flag("--truth-only", skip_operator, "skip the operator curve");
  std::string run_hash;
  rep->add_option("--run", run_hash, "run directory name (default: every run under <out>/runs)");
  std::size_t index = 0;
  std::string wfd;
  heat->add_option("--index", index, "sample index")->capture_default_str();
  heat->add_option("--data", wfd, "dataset file (default: the cached dataset of the config)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto log = stderr_logger();
    const fs::path root = o.out;

    if (*rep) {
      std::vector<fs::path> dirs;
      if (!run_hash.empty()) dirs.push_back(root / "runs" / run_hash);
      else if (fs::exists(root / "runs"))
        for (const auto& e : fs::directory_iterator(root / "runs")) dirs.push_back(e.path());
      std::sort(dirs.begin(), dirs.end());
      if (dirs.empty()) fail(Errc::EmptyInput, "no runs under " + (root / "runs").string());
      std::string summary = "# run method benchmark hf_ratio n h1 awpc\n";
      for (const auto& d : dirs) {
        if (!fs::exists(d / "report.kv")) continue;
        const auto r = read_report((d / "report.kv").string());
        std::cout << report_table(r) << "\n";
        char line[256];
        std::snprintf(line, sizeof line, "%s %s %s %s %d %.6f %.6f\n", r.config_hash.c_str(), r.method.c_str(), r.benchmark.c_str(),
                      r.hf_ratio.c_str(), r.overall.count, r.overall.h1.mean, r.overall.awpc.mean);
        summary += line;
      }
      write_text(root / "summary.txt", summary);
      std::cout << summary;
      return 0;
    }

    const ExperimentConfig c = build_config(o);

    if (*gen) {
      const auto ds = load_or_generate(c, root, log);
      std::cout << (root / "cache" / ("data_" + data_hash(c) + ".wfd")).string() << ": " << ds.size() << " samples, "
                << ds.rows << "x" << ds.cols << ", " << ds.n_channels << " input channels\n";
    } else if (*split) {
      const auto ds = load_or_generate(c, root, log);
      const auto sp = make_split(ds, c);
      const auto path = split_path(c, root);
      write_text(path, split_text(sp));
      std::cout << path.string() << ": LF " << sp.lf_train.size() << " train / " << sp.lf_test.size() << " test, HF "
                << sp.hf_train.size() << " train / " << sp.hf_test.size() << " test\n";
    } else if (*train_op) {
      const auto ds = load_or_generate(c, root, log);
      const auto sp = make_split(ds, c);
      load_or_train_operator(c, ds, sp, root, log);
      std::cout << (root / "cache" / ("op_" + operator_hash(c) + ".wxck")).string() << "\n";
    } else if (*train_enh) {
      if (!is_apex(c.method) && c.method != Method::CfmJoint)
        fail(Errc::BadConfig, method_name(c.method) + " has no enhancer");
      const auto ds = load_or_generate(c, root, log);
      const auto sp = make_split(ds, c);
      const auto lf = load_or_train_operator(c, ds, sp, root, log);
      const fs::path dir = ensure_dir(root / "runs" / config_hash(c));
      write_text(dir / "config.txt", canonical(c));
      load_or_train_enhancer(c, ds, sp, &lf, dir, log);
      std::cout << (dir / "enhancer.wxck").string() << "\n";
    } else if (*run) {
      const auto r = run_experiment(c, root, log);
      std::cout << report_table(r.report);
      std::printf("runtime %.1f s, outputs in %s\n", r.runtime_s, r.dir.string().c_str());
    } else if (*sweep) {
      const auto runs = ratio_sweep(c, root, sweep_ratios(), log);
      std::printf("%-6s %-10s %10s %10s\n", "ratio", "method", "H1", "AWPC");
      std::string text = "# ratio method run h1 awpc\n";
      for (const auto& r : runs) {
        std::printf("%-6s %-10s %10.4f %10.4f\n", r.report.hf_ratio.c_str(), r.report.method.c_str(), r.report.overall.h1.mean,
                    r.report.overall.awpc.mean);
        char line[200];
        std::snprintf(line, sizeof line, "%s %s %s %.6f %.6f\n", r.report.hf_ratio.c_str(), r.report.method.c_str(),
                      r.report.config_hash.c_str(), r.report.overall.h1.mean, r.report.overall.awpc.mean);
        text += line;
      }
      write_text(ensure_dir(root / "sweeps") / ("sweep_" + config_hash(c) + ".txt"), text);
    } else if (*sim) {
      const auto freqs = all_freqs(c);
      const auto lfs = c.lf_freqs();
      if (ref == 0.0) ref = *std::max_element(lfs.begin(), lfs.end());
      const fs::path dir = ensure_dir(root / "similarity");
      log("similarity: " + std::to_string(n_env) + " environments");
      const auto t = truth_similarity(c.benchmark, c.grid, freqs, n_env, c.data_seed);
      const std::string truth = matrix_text("S_A (truth)", freqs, t.mean.sa) + "\n" + matrix_text("S_P (truth)", freqs, t.mean.sp);
      write_text(dir / ("truth_" + data_hash(c) + ".txt"), truth);
      export_matrix(t.mean.sa, dir / ("truth_sa_" + data_hash(c) + ".pgm"));
      export_matrix(t.mean.sp, dir / ("truth_sp_" + data_hash(c) + ".pgm"));
      std::cout << truth;
      if (!skip_operator) {
        const auto ds = load_or_generate(c, root, log);
        const auto sp = make_split(ds, c);
        const auto lf = load_or_train_operator(c, ds, sp, root, log);
        const auto text = curve_text(operator_similarity_curve(lf, ds, sp, ref));
        write_text(dir / ("operator_" + operator_hash(c) + ".txt"), text);
        std::cout << "\nLF operator, relative to nu = " << ref << "\n" << text;
      }
    } else if (*heat) {
      const Dataset ds = wfd.empty() ? load_or_generate(c, root, log) : read_dataset(wfd);
      if (index >= ds.size()) fail(Errc::EmptyInput, "index " + std::to_string(index) + " >= " + std::to_string(ds.size()));
      const fs::path dir = ensure_dir(root / "heatmaps");
      const auto p = export_heatmaps(target_field(ds, index), (dir / ("sample_" + std::to_string(index))).string());
      std::cout << p.amp << "\n" << p.phase << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "wavex: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
