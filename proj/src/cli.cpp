#include "kdv/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "kdv/checks.hpp"
#include "kdv/config.hpp"
#include "kdv/csv.hpp"
#include "kdv/error.hpp"
#include "kdv/experiments.hpp"
#include "kdv/spectral.hpp"

namespace kdv::cli {

namespace {

namespace fs = std::filesystem;
namespace ex = kdv::experiments;

fs::path out_root() {
  const char* env = std::getenv("KDV_SPINN_OUT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config sources in increasing precedence: defaults, --config file, --set
// pairs, then one explicit flag per config key.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app, const std::vector<std::string>& skip = {}) {
    app.add_option("--config", file, "key = value config file");
    app.add_option("--set", sets, "override one key (key=value), repeatable");
    for (const auto& [key, value] : config::entries(config::RunConfig{})) {
      if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
      options[key] = app.add_option(flag_name(key), values[key], "default " + value);
    }
  }

  config::RunConfig resolve() const {
    config::RunConfig cfg;
    if (!file.empty()) config::apply_file(cfg, file);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      config::set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) config::set(cfg, key, values.at(key));
    }
    cfg.validate();
    return cfg;
  }
};

std::string default_run_name(const config::RunConfig& cfg) {
  return std::string(physics::to_string(cfg.case_name)) + "_" +
         std::string(loss::to_string(cfg.mode)) + "_seed" + std::to_string(cfg.seed);
}

void print_run(const ex::RunArtifacts& art, std::ostream& out) {
  const auto& ev = art.evaluation;
  out << "run: " << art.dir.string() << "\n";
  out << "stop: " << art.stop_reason << "\n";
  if (!art.ok) return;
  out << "reference: " << ev.reference << "\n";
  out << "relative L2 error: " << ev.l2_relative << "\n";
  out << "max abs error: " << ev.max_abs_error << "\n";
  out << "max mass drift: " << ev.max_mass_drift << "\n";
  out << "max energy drift: " << ev.max_energy_drift << "\n";
}

int cmd_train(const ConfigOptions& opts, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  const config::RunConfig cfg = opts.resolve();
  const fs::path dir = out_dir.empty() ? out_root() / default_run_name(cfg) : fs::path(out_dir);
  const ex::RunArtifacts art = ex::run_case(cfg, dir);
  print_run(art, out);
  if (!art.ok) {
    err << "error: " << art.failure << "\n";
    return kExitFailure;
  }
  out << std::ifstream(art.table_txt).rdbuf();
  return kExitOk;
}

std::string lr_tag(double lr) { return "lr_" + config::format_value(lr); }

fs::path ablation_dir(const std::string& out_dir, const config::RunConfig& cfg) {
  return out_dir.empty() ? out_root() / ("ablation_" + std::string(physics::to_string(cfg.case_name)))
                         : fs::path(out_dir);
}

int cmd_ablation(const ConfigOptions& opts, std::vector<double> lrs, int jobs,
                 const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const config::RunConfig base = opts.resolve();
  for (double lr : lrs) {
    if (!(lr > 0.0)) throw ConfigError("--lr values must be positive");
  }
  const fs::path root = ablation_dir(out_dir, base);

  struct Job {
    config::RunConfig cfg;
    fs::path dir;
    ex::RunArtifacts art;
  };
  std::vector<Job> work;
  for (double lr : lrs) {
    for (loss::Mode mode : {loss::Mode::structure_preserving, loss::Mode::vanilla}) {
      config::RunConfig cfg = base;
      cfg.lr = lr;
      cfg.mode = mode;
      work.push_back({cfg, root / lr_tag(lr) / (mode == loss::Mode::vanilla ? "vanilla" : "sp"), {}});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      Job& job = work[i];
      {
        std::lock_guard lock(log_mutex);
        out << "running " << job.dir.string() << "\n" << std::flush;
      }
      job.art = ex::run_case(job.cfg, job.dir);
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, work.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  int code = kExitOk;
  for (std::size_t i = 0; i < work.size(); i += 2) {
    const auto& sp = work[i].art;
    const auto& va = work[i + 1].art;
    bool failed = false;
    for (const auto* a : {&sp, &va}) {
      if (!a->ok) {
        err << "error: " << a->dir.string() << ": " << a->failure << "\n";
        failed = true;
      }
    }
    if (failed) {
      code = kExitFailure;
      continue;
    }
    const auto times = ex::table_times(sp.config.case_spec().domain.t_max);
    const ex::AblationTable table = ex::ablation_table(sp, va, times);
    const std::string tag = lr_tag(sp.config.lr);
    ex::write_ablation_csv(table, root / ("table_" + tag + ".csv"));
    const std::string text = ex::render_ablation(table);
    std::ofstream(root / ("table_" + tag + ".txt"), std::ios::binary) << text;
    out << "\n" << text;
  }
  return code;
}

int cmd_oracle(const ConfigOptions& opts, std::size_t modes, double dt, std::size_t snapshots,
               const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const config::RunConfig cfg = opts.resolve();
  const physics::CaseSpec spec = cfg.case_spec();
  if (snapshots < 2) throw ConfigError("--snapshots must be >= 2");
  spectral::SpectralConfig sc;
  sc.n_modes = modes;
  sc.dt = dt;
  sc.x_min = spec.domain.x_min;
  sc.x_max = spec.domain.x_max;
  try {
    sc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const fs::path dir = out_dir.empty() ? out_root() / "oracle" / std::string(physics::to_string(spec.name))
                                       : fs::path(out_dir);
  fs::create_directories(dir);
  const auto times = sampling::linspace(0.0, spec.domain.t_max, snapshots);
  try {
    const auto sol = spectral::solve([&](double x) { return spec.initial(x); }, spec.params, sc, times);
    spectral::write_snapshots_csv(sol, dir / "snapshots.csv");
    csv::Writer w(dir / "invariants.csv", {"t", "mass", "energy"});
    double dm = 0.0, de = 0.0;
    for (std::size_t i = 0; i < sol.snapshots().size(); ++i) {
      w.row(sol.snapshots()[i].t, sol.mass(i), sol.energy(i));
      dm = std::max(dm, std::abs(sol.mass(i) - sol.mass(0)));
      de = std::max(de, std::abs(sol.energy(i) - sol.energy(0)));
    }
    out << "oracle: " << dir.string() << "\n";
    out << "max mass drift: " << dm << "\n";
    out << "max energy drift: " << de << "\n";
  } catch (const spectral::BlowUp& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

bool same_file(const fs::path& a, const fs::path& b) {
  return fs::exists(a) && fs::exists(b) && read_file(a) == read_file(b);
}

int compare_files(const std::vector<std::pair<fs::path, fs::path>>& pairs, std::ostream& out) {
  int code = kExitOk;
  for (const auto& [stored, fresh] : pairs) {
    const bool same = same_file(stored, fresh);
    out << (same ? "identical: " : "DIFFERS: ") << stored.string() << "\n";
    if (!same) code = kExitFailure;
  }
  return code;
}

int cmd_report_run(const fs::path& run_dir, const std::string& out_dir, std::ostream& out) {
  const fs::path dest = out_dir.empty() ? run_dir / "report" : fs::path(out_dir);
  const ex::RunArtifacts art = ex::rederive(run_dir, dest);
  out << read_file(art.table_txt);
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const char* name : {"table.csv", "table.txt", "metrics.json", "invariants.csv"}) {
    pairs.emplace_back(run_dir / name, dest / name);
  }
  return compare_files(pairs, out);
}

int cmd_report_ablation(const fs::path& root, const std::string& out_dir, std::ostream& out) {
  const fs::path dest = out_dir.empty() ? root / "report" : fs::path(out_dir);
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("lr_", 0) == 0) subdirs.push_back(entry.path());
  }
  if (subdirs.empty()) throw Error("no lr_* run directories under " + root.string());
  std::sort(subdirs.begin(), subdirs.end());
  int code = kExitOk;
  for (const auto& sub : subdirs) {
    const std::string tag = sub.filename().string();
    const auto sp = ex::rederive(sub / "sp", dest / tag / "sp");
    const auto va = ex::rederive(sub / "vanilla", dest / tag / "vanilla");
    const auto table =
        ex::ablation_table(sp, va, ex::table_times(sp.config.case_spec().domain.t_max));
    fs::create_directories(dest);
    ex::write_ablation_csv(table, dest / ("table_" + tag + ".csv"));
    const std::string text = ex::render_ablation(table);
    std::ofstream(dest / ("table_" + tag + ".txt"), std::ios::binary) << text;
    out << text << "\n";
    code = std::max(code, compare_files({{root / ("table_" + tag + ".csv"), dest / ("table_" + tag + ".csv")},
                                         {root / ("table_" + tag + ".txt"), dest / ("table_" + tag + ".txt")}},
                                        out));
  }
  return code;
}

int cmd_check(std::uint64_t seed, std::ostream& out) {
  int code = kExitOk;
  for (const auto& o : checks::property_suite(seed)) {
    out << checks::format_line(o) << "\n" << std::flush;
    if (!o.passed) code = kExitFailure;
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-preserving PINN for the KdV equation", "kdv-spinn"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train one network and write its artifacts");
  ConfigOptions train_opts;
  train_opts.attach(*train);
  std::string train_out;
  train->add_option("--out", train_out, "run directory");

  auto* ablation = app.add_subcommand("ablation", "SP and vanilla runs per learning rate");
  ConfigOptions ablation_opts;
  ablation_opts.attach(*ablation, {"mode", "lr"});
  std::vector<double> lrs = {0.1, 1.0};
  int jobs = 1;
  std::string ablation_out;
  ablation->add_option("--lr", lrs, "learning rates (default 0.1 1.0)");
  ablation->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  ablation->add_option("--out", ablation_out, "ablation directory");

  auto* oracle = app.add_subcommand("oracle", "spectral reference solution of a case");
  ConfigOptions oracle_opts;
  oracle_opts.attach(*oracle);
  std::size_t modes = 512;
  double dt = 1e-4;
  std::size_t snapshots = 11;
  std::string oracle_out;
  oracle->add_option("--modes", modes, "Fourier modes");
  oracle->add_option("--dt", dt, "time step");
  oracle->add_option("--snapshots", snapshots, "equispaced output times including 0 and T");
  oracle->add_option("--out", oracle_out, "output directory");

  auto* report = app.add_subcommand("report", "re-derive tables from stored artifacts");
  std::string report_run, report_ablation, report_out;
  auto* run_opt = report->add_option("--run", report_run, "run directory");
  auto* abl_opt = report->add_option("--ablation", report_ablation, "ablation directory");
  run_opt->excludes(abl_opt);
  report->add_option("--out", report_out, "where to write the re-derived files");

  auto* check = app.add_subcommand("check", "run the property suite");
  std::uint64_t check_seed = 20240611;
  check->add_option("--seed", check_seed, "seed of the randomized checks");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, train_out, out, err);
    if (ablation->parsed()) return cmd_ablation(ablation_opts, lrs, jobs, ablation_out, out, err);
    if (oracle->parsed()) return cmd_oracle(oracle_opts, modes, dt, snapshots, oracle_out, out, err);
    if (report->parsed()) {
      if (!report_run.empty()) return cmd_report_run(report_run, report_out, out);
      if (!report_ablation.empty()) return cmd_report_ablation(report_ablation, report_out, out);
      err << "error: report needs --run or --ablation\n";
      return kExitConfig;
    }
    if (check->parsed()) return cmd_check(check_seed, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // glibc maximum on 64-bit
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int main(int argc, char** argv) {
  tune_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace kdv::cli
