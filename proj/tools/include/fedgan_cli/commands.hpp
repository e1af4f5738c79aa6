#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedgan_cli/config.hpp"

namespace fedgan::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitViolated = 1,
  kExitConfigError = 2,
  kExitRuntimeAbort = 3,
};

/// Trains the configured experiment and writes a bundle into `out`:
/// config.ini, trajectory.csv, final_params.csv, comm.csv, summary.csv,
/// the centralized counterparts when enabled, and manifest.json. A
/// non-finite abort is recorded in the manifest and returns kExitRuntimeAbort.
int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Checks to run when `which` is empty: those enabled in the config.
/// Names: "lemmas", "theorem1", "two-timescale".
int cmd_verify(const std::filesystem::path& bundle, std::vector<std::string> which = {});

/// Samples the trained generator and scores it against the holdout split,
/// or against the rows of `real_csv` when given.
int cmd_metrics(const std::filesystem::path& bundle,
                const std::optional<std::filesystem::path>& real_csv = std::nullopt);

/// Renders every plot whose inputs are present; the rest are skipped with a
/// notice in the manifest.
int cmd_plot(const std::filesystem::path& bundle);

/// Runs the config once per K into out/k<K> and writes sweep.csv.
int cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& k_list,
              const std::filesystem::path& out, std::size_t jobs = 1);

/// L-infinity distance of the final synced (theta, psi) of a 2D bundle
/// from (1, 0).
double distance_to_target_2d(const std::vector<double>& stacked);

}  // namespace fedgan::cli
