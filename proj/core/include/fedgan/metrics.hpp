#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "fedgan/tensor.hpp"

namespace fedgan {

struct MmdResult {
  double mmd2 = 0.0;
  double bandwidth = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Median pairwise Euclidean distance over A and B together. At most
/// `max_points` rows (evenly strided) of the union enter the median.
double median_bandwidth(const Tensor& a, const Tensor& b, std::size_t max_points = 2000);

/// Biased V-statistic of squared MMD with the Gaussian kernel
/// k(x, y) = exp(-||x - y||^2 / (2 bw^2)). bandwidth <= 0 selects the
/// median heuristic.
MmdResult mmd2(const Tensor& a, const Tensor& b, double bandwidth = 0.0);

struct ModeCoverage {
  std::size_t modes_hit = 0;
  std::size_t total_modes = 0;
  double high_quality_fraction = 0.0;
  std::vector<std::size_t> per_mode;
};

/// A sample counts for its nearest center when within r of it. A mode is hit
/// when it gathers at least max(10, 0.05 n / k) samples.
ModeCoverage mode_coverage(const Tensor& samples, const Tensor& centers, double r);

struct KMeansResult {
  Tensor centroids;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> assignment;
  /// Within-cluster sum of squares after seeding and after each Lloyd step.
  std::vector<double> inertia;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded with
/// the point farthest from its centroid. Centroids are returned sorted by
/// descending cluster size (ties keep their original order).
KMeansResult kmeans(const Tensor& samples, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

/// Minimum-cost perfect matching on a square cost matrix; result[i] is the
/// column assigned to row i.
std::vector<std::size_t> optimal_assignment(const std::vector<std::vector<double>>& cost);

struct CentroidReport {
  std::size_t k = 0;
  Tensor real_centroids;
  Tensor gen_centroids;
  std::vector<std::pair<std::size_t, std::size_t>> matching;
  std::vector<double> distances;
  double mean_matched_distance = 0.0;

  void write_csv(const std::filesystem::path& path) const;
};

CentroidReport centroid_compare(const Tensor& real, const Tensor& gen, std::size_t k,
                                std::uint64_t seed, std::size_t max_iter = 300);

/// Distances of centroid_compare between random equal halves of `real`,
/// one per split.
std::vector<double> centroid_null(const Tensor& real, std::size_t k, std::size_t splits,
                                  std::uint64_t seed);

/// Linear-interpolated quantile of a sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace fedgan
