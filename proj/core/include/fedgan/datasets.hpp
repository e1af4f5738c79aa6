#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedgan/models.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

struct DatasetMeta {
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

/// A generated (or imported) sample set. `labels`, when present, are
/// row-aligned with `samples`:
///   mixed Gaussians: mode index (n x 1)
///   swiss roll:      arc parameter t (n x 1)
///   profiles:        one-hot archetype followed by a weekend bit
struct Dataset {
  Tensor samples;
  Tensor labels;
  DatasetMeta meta;

  std::size_t size() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
  bool has_labels() const { return !labels.empty(); }

  Batch batch(std::span<const std::size_t> indices) const;
  Batch all() const;
};

Dataset gen_uniform_1d(std::size_t n, double lo, double hi, std::uint64_t seed);
Dataset gen_mixed_gaussians(std::size_t n, std::size_t modes, double radius, double sigma,
                            std::uint64_t seed);
/// Points (t cos t, t sin t) / scale with t ~ uniform[1.5 pi, 4.5 pi] plus
/// Gaussian noise; scale = 4.5 pi / 2 so the noise-free roll fits [-2, 2]^2.
Dataset gen_swiss_roll(std::size_t n, double noise, std::uint64_t seed);
/// 24-hour profiles from smooth archetype curves with lognormal amplitude and
/// additive noise, clipped to [0, 1].
Dataset gen_synthetic_profiles(std::size_t n, std::size_t archetypes, std::uint64_t seed);

inline constexpr double kSwissRollScale = 4.5 * 3.14159265358979323846 / 2.0;
inline constexpr std::size_t kProfileLength = 24;

/// Noise-free mean curve of one profile archetype.
std::vector<double> profile_base_curve(std::size_t archetype, bool weekend);
/// Mode centers of the mixed-Gaussian generator, (modes x 2).
Tensor mixture_centers(std::size_t modes, double radius);

/// Group index per sample: distinct label rows, ordered lexicographically.
std::vector<std::size_t> label_groups(const Dataset& ds, std::size_t* group_count = nullptr);

enum class PartitionStrategy { kByRange, kByLabel, kByArc, kIid };

std::string_view to_string(PartitionStrategy s);
PartitionStrategy parse_partition_strategy(std::string_view text);

/// Disjoint cover of a dataset's rows by B agents, with p_i = |R_i| / sum |R_j|.
struct Partition {
  std::vector<std::vector<std::size_t>> assignments;
  std::vector<double> weights;

  std::size_t agents() const { return assignments.size(); }
  std::size_t total() const;

  /// Builds weights from the assignment sizes; throws on an empty agent.
  static Partition from_assignments(std::vector<std::vector<std::size_t>> assignments);
};

/// by_range: equal-width value segments of a 1-D dataset.
/// by_label: whole label groups dealt round-robin.
/// by_arc:   equal-count contiguous arc segments of a swiss roll.
/// iid:      seeded shuffle dealt into equal-size shares.
Partition partition_noniid(const Dataset& ds, std::size_t agents, PartitionStrategy strategy,
                           std::uint64_t seed);

struct HoldoutSplit {
  Partition train;
  std::vector<std::size_t> holdout;
};

/// Moves floor(fraction * |R_i|) random rows of each agent into a shared
/// holdout set; training weights are recomputed from what remains.
HoldoutSplit split_holdout(const Partition& partition, double fraction, std::uint64_t seed);

/// Uniform draws with replacement from `indices`.
Batch sample_minibatch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t batch,
                       Rng& rng);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace fedgan
