#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedgan/gradient_oracle.hpp"
#include "fedgan_cli/commands.hpp"
#include "fedgan_cli/config.hpp"

namespace fs = std::filesystem;
using namespace fedgan::cli;

namespace {

/// Relative output paths live under $FEDGAN_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& out, const std::string& fallback_name) {
  const char* root = std::getenv("FEDGAN_OUT_ROOT");
  fs::path p = out.empty() ? fs::path(fallback_name) : fs::path(out);
  if (p.is_relative() && root && *root) p = fs::path(root) / p;
  return p;
}

fs::path resolve_bundle(const std::string& path) {
  const fs::path p(path);
  const char* root = std::getenv("FEDGAN_OUT_ROOT");
  if (!fs::exists(p) && p.is_relative() && root && *root && fs::exists(fs::path(root) / p)) {
    return fs::path(root) / p;
  }
  return p;
}

struct ConfigFlags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stride;

  void add_to(CLI::App* app) {
    auto* c = app->add_option("--config", config, "experiment config file");
    auto* p = app->add_option("--preset", preset, "built-in preset name");
    c->excludes(p);
    app->add_option("--seed", seed, "override the master seed");
    app->add_option("--stride", stride, "override the record stride");
  }

  ExperimentConfig load() const {
    if (config.empty() && preset.empty()) throw ConfigError("one of --config or --preset is required");
    ExperimentConfig cfg = config.empty() ? make_preset(preset) : load_config_file(config);
    if (seed) cfg.master_seed = *seed;
    if (stride) cfg.record_stride = *stride;
    validate_config(cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedGAN simulation and verification tool"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  std::string run_out;
  auto* run = app.add_subcommand("run", "train an experiment and write a bundle");
  run_flags.add_to(run);
  run->add_option("--out", run_out, "bundle directory");

  std::string verify_bundle;
  std::vector<std::string> checks;
  auto* verify = app.add_subcommand("verify", "check the convergence analysis on a bundle");
  verify->add_option("bundle", verify_bundle, "bundle directory")->required();
  verify->add_option("--check", checks, "lemmas, theorem1 or two-timescale (default: enabled in config)");

  std::string metrics_bundle, real_csv;
  auto* metrics = app.add_subcommand("metrics", "score the trained generator");
  metrics->add_option("bundle", metrics_bundle, "bundle directory")->required();
  metrics->add_option("--real", real_csv, "reference dataset CSV (default: holdout split)");

  std::string plot_bundle;
  auto* plot = app.add_subcommand("plot", "render SVG plots for a bundle");
  plot->add_option("bundle", plot_bundle, "bundle directory")->required();

  ConfigFlags sweep_flags;
  std::string sweep_out;
  std::vector<std::size_t> k_list;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run one config for several K");
  sweep_flags.add_to(sweep);
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--k-list", k_list, "synchronization intervals")->delimiter(',')->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  auto* presets = app.add_subcommand("presets", "list built-in presets");
  std::string show_preset;
  presets->add_option("--show", show_preset, "print the full config of a preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) {
      const ExperimentConfig cfg = run_flags.load();
      return cmd_run(cfg, resolve_out(run_out, cfg.name));
    }
    if (*verify) return cmd_verify(resolve_bundle(verify_bundle), checks);
    if (*metrics) {
      return cmd_metrics(resolve_bundle(metrics_bundle),
                         real_csv.empty() ? std::nullopt : std::optional<fs::path>(real_csv));
    }
    if (*plot) return cmd_plot(resolve_bundle(plot_bundle));
    if (*sweep) {
      const ExperimentConfig cfg = sweep_flags.load();
      return cmd_sweep(cfg, k_list, resolve_out(sweep_out, cfg.name + "-sweep"), jobs);
    }
    if (*presets) {
      if (!show_preset.empty()) {
        std::cout << render_config(make_preset(show_preset));
      } else {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const fedgan::PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << '\n';
    return kExitRuntimeAbort;
  }
  return kExitOk;
}
