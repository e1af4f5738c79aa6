#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/models.hpp"
#include "fedgan/schedule.hpp"

namespace fedgan::cli {

/// Config parse or validation failure; carries file/line context in what().
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key = value text. '#' and ';' start comments.
class IniFile {
 public:
  static IniFile parse(std::string_view text, const std::string& origin = "<config>");
  static IniFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  /// Raw value; throws ConfigError when missing.
  const std::string& get(const std::string& section, const std::string& key) const;
  /// Line of a key in the source text, 0 when unknown.
  std::size_t line_of(const std::string& section, const std::string& key) const;
  const std::string& origin() const { return origin_; }

  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::pair<std::string, std::size_t>>> values_;
};

enum class ModelKind { kAnalytic2d, kMlp, kConditional };
std::string_view to_string(ModelKind kind);

struct DataConfig {
  std::string generator = "uniform_1d";
  std::size_t n = 10000;
  double lo = -1.0;
  double hi = 1.0;
  std::size_t modes = 8;
  double radius = 2.0;
  double sigma = 0.02;
  double noise = 0.05;
  std::size_t archetypes = 6;
  std::size_t agents = 5;
  PartitionStrategy partition = PartitionStrategy::kByRange;
  double holdout = 0.0;
  std::uint64_t seed = 0;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kAnalytic2d;
  LossKind loss = LossKind::kMinimax;
  std::size_t hidden = 64;
  std::size_t depth = 2;
  std::size_t latent_dim = 2;
  double theta0 = 0.5;
  double psi0 = 0.8;
  /// Uniform half-width of the initial weights; <= 0 selects 1/sqrt(fan_in).
  double init_scale = 0.0;
};

struct AnalysisConfig {
  bool lemmas = false;
  bool theorem1 = false;
  bool two_timescale = false;
  bool metrics = false;
  std::size_t oracle_latents = std::size_t{1} << 16;
  std::size_t lemma_windows = 20;
  double lemma_start_fraction = 0.1;
  std::size_t lemma_mc_runs = 32;
  double lemma_slack = 0.05;
  std::size_t constants_probes = 100;
  std::size_t noise_batches = 64;
  double theorem1_T = 50.0;
  std::vector<double> theorem1_quantiles = {0.2, 0.4, 0.6, 0.8};
  double theorem1_max_ratio = 0.25;
  double ode_tol = 1e-6;
  std::size_t tts_samples = 40;
  double lambda_tol = 1e-6;
  double lambda_rate = 1.0;
  double tts_gap = 0.05;
};

struct MetricsConfig {
  std::size_t n_generated = 10000;
  double mmd_ratio = 3.0;
  std::size_t mmd_null_draws = 5;
  std::size_t centroid_k = 9;
  std::size_t centroid_null_draws = 20;
  double coverage_sigmas = 3.0;
  std::size_t min_modes = 7;
  double min_high_quality = 0.75;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::uint64_t master_seed = 1;
  std::size_t N = 10000;
  std::size_t batch = 64;
  std::size_t record_stride = 1;
  std::size_t threads = 1;
  bool compare_centralized = false;
  DataConfig data;
  ModelConfig model;
  Schedule schedule;
  AnalysisConfig analysis;
  MetricsConfig metrics;
};

/// Fills a config from an INI file. Unknown sections/keys and malformed
/// values are ConfigErrors with line context. A `preset` key in
/// [experiment] starts from that preset and applies the remaining keys on top.
ExperimentConfig load_config(const IniFile& ini);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Throws ConfigError when the config is inconsistent (invalid schedule,
/// partition incompatible with the data, zero sizes, ...).
void validate_config(const ExperimentConfig& cfg);

/// Text with every field materialized.
std::string render_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig make_preset(const std::string& name);

}  // namespace fedgan::cli
