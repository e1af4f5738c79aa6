#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/models.hpp"
#include "fedgan_cli/config.hpp"

namespace fedgan::cli {

/// Everything a config determines before training: model, data, partition.
struct Experiment {
  ExperimentConfig cfg;
  GanModel model;
  Dataset data;
  /// Agent partition after moving the holdout rows out.
  Partition train;
  std::vector<std::size_t> holdout;

  RunOptions run_options() const;
  std::uint64_t oracle_seed() const;
  /// Split stacked (w, theta) into the model's two parameter vectors.
  std::pair<ParamVector, ParamVector> unstack(const std::vector<double>& z) const;
};

Experiment build_experiment(const ExperimentConfig& cfg);

GanModel build_model(const ExperimentConfig& cfg);
Dataset build_dataset(const DataConfig& cfg);

}  // namespace fedgan::cli
