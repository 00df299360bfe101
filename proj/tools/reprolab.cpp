// Command-line front end: run / sweep / invariants / list / plotdata.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "reprolab/reprolab.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) {
  g_interrupted.store(true);
  std::signal(SIGINT, SIG_DFL);  // a second Ctrl-C kills the process
}

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("REPROLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return std::size_t(v);
    } catch (...) {
    }
    std::cerr << "warning: ignoring REPROLAB_THREADS='" << env << "'\n";
  }
  return 1;
}

int run_config(const std::string& path, bool need_grid, std::size_t threads, const std::string& out_dir) {
  using namespace reprolab;
  const ExperimentConfig cfg = parse_config(read_file(path));
  if (need_grid && cfg.grid.empty()) throw ConfigError("sweep needs a nonempty 'grid'");
  RunEnvironment env;
  env.threads = threads;
  env.cancel = &g_interrupted;
  if (!out_dir.empty()) env.output_dir = out_dir;
  const ResultManifest m = run_experiment(cfg, env);
  std::cout << m.to_json().dump(2) << "\n";
  return m.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace reprolab;
  CLI::App app{"reprolab: reproducibility-deviation experiments for first-order methods"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default: REPROLAB_THREADS or 1)");

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config JSON")->required();
  run->add_option("--output-dir", out_dir, "override the config's output_dir");
  auto* sweep = app.add_subcommand("sweep", "run an experiment config that has a grid");
  sweep->add_option("config", config_path, "config JSON")->required();
  sweep->add_option("--output-dir", out_dir, "override the config's output_dir");
  for (auto* sc : {run, sweep}) sc->add_option("--threads", threads, "worker threads");

  std::string suite = "all", inv_out;
  double inv_T = 64, inv_matrices = 20, inv_tol = 1e-9;
  std::uint64_t inv_seed = 0;
  auto* inv = app.add_subcommand("invariants", "check the structural identities of the lower-bound constructions");
  inv->add_option("--suite", suite, "'all' or one invariant id");
  inv->add_option("--T", inv_T, "iterations per run");
  inv->add_option("--matrices", inv_matrices, "coefficient matrices per invariant");
  inv->add_option("--tolerance", inv_tol, "max absolute residual");
  inv->add_option("--seed", inv_seed, "master seed");
  inv->add_option("--out", inv_out, "also write the report to this file");

  app.add_subcommand("list", "print the scenario catalog as JSON");

  std::string csv_path, axis = "T", svg_path, plot_out;
  auto* plot = app.add_subcommand("plotdata", "log-log plot data from a results.csv");
  plot->add_option("results", csv_path, "results.csv")->required();
  plot->add_option("--axis", axis, "T, epsilon, delta or mu");
  plot->add_option("--svg", svg_path, "also render a minimal SVG chart here");
  plot->add_option("--out", plot_out, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  std::signal(SIGINT, on_sigint);
  try {
    if (*run || *sweep) return run_config(config_path, bool(*sweep), resolve_threads(threads), out_dir);

    if (*inv) {
      std::vector<std::string> ids;
      if (suite == "all") {
        ids = invariant_ids();
      } else {
        ids = {suite};
      }
      nlohmann::json report = nlohmann::json::array();
      bool all_ok = true;
      for (const auto& id : ids) {
        const InvariantReport r = verify_invariant(id, {{"T", inv_T}, {"matrices", inv_matrices}, {"tolerance", inv_tol}}, inv_seed);
        all_ok = all_ok && r.passed;
        report.push_back({{"id", r.id},
                          {"passed", r.passed},
                          {"max_residual", r.max_residual},
                          {"tolerance", r.tolerance},
                          {"T", r.T},
                          {"matrices", r.matrices},
                          {"max_first_to_rest_ratio", r.max_first_to_rest_ratio},
                          {"notes", r.notes}});
        std::cerr << (r.passed ? "PASS " : "FAIL ") << r.id << " max_residual=" << fmt17(r.max_residual) << "\n";
      }
      const std::string text = report.dump(2) + "\n";
      std::cout << text;
      if (!inv_out.empty()) write_file(inv_out, text);
      return all_ok ? kExitOk : kExitInvariantFailed;
    }

    if (*plot) {
      const PlotData pd = emit_plotdata(csv_path, axis);
      if (plot_out.empty()) {
        std::cout << pd.csv;
      } else {
        write_file(plot_out, pd.csv);
      }
      if (!svg_path.empty()) write_file(svg_path, plot_svg(pd, axis));
      return kExitOk;
    }

    std::cout << list_catalog().dump(2) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
