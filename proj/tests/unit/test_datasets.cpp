#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "fedgan/datasets.hpp"

namespace fedgan {
namespace {

void expect_disjoint_cover(const Partition& p, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& a : p.assignments) {
    EXPECT_FALSE(a.empty());
    for (std::size_t i : a) ++seen.at(i);
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  double total = 0.0;
  for (std::size_t i = 0; i < p.agents(); ++i) {
    EXPECT_DOUBLE_EQ(p.weights[i], static_cast<double>(p.assignments[i].size()) / static_cast<double>(n));
    total += p.weights[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(UniformDataTest, SamplesStayInRangeAndAreSeeded) {
  const Dataset a = gen_uniform_1d(5000, -1.0, 1.0, 4);
  const Dataset b = gen_uniform_1d(5000, -1.0, 1.0, 4);
  EXPECT_EQ(a.samples, b.samples);
  for (double v : a.samples.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_NE(gen_uniform_1d(5000, -1.0, 1.0, 5).samples, a.samples);
}

TEST(MixedGaussianTest, ModeCountsWithinBinomialBand) {
  const std::size_t n = 100000, k = 8;
  const Dataset ds = gen_mixed_gaussians(n, k, 2.0, 0.02, 12);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) ++counts.at(static_cast<std::size_t>(ds.labels[i]));
  const double mean = static_cast<double>(n) / k;
  const double sd = std::sqrt(static_cast<double>(n) * (1.0 / k) * (1.0 - 1.0 / k));
  for (std::size_t c : counts) EXPECT_LE(std::abs(static_cast<double>(c) - mean), 3.0 * sd);
}

TEST(MixedGaussianTest, ZeroSigmaPutsSamplesOnCenters) {
  const Dataset ds = gen_mixed_gaussians(200, 8, 2.0, 0.0, 1);
  const Tensor centers = mixture_centers(8, 2.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto k = static_cast<std::size_t>(ds.labels[i]);
    EXPECT_DOUBLE_EQ(ds.samples.at(i, 0), centers.at(k, 0));
    EXPECT_DOUBLE_EQ(ds.samples.at(i, 1), centers.at(k, 1));
  }
  EXPECT_NEAR(centers.at(2, 0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(centers.at(2, 1), 2.0);
}

TEST(SwissRollTest, NoiseFreeRollFitsTheBox) {
  const Dataset ds = gen_swiss_roll(20000, 0.0, 3);
  double max_r = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double t = ds.labels[i];
    EXPECT_GE(t, 1.5 * std::numbers::pi);
    EXPECT_LE(t, 4.5 * std::numbers::pi);
    const double r = std::hypot(ds.samples.at(i, 0), ds.samples.at(i, 1));
    EXPECT_NEAR(r, t / kSwissRollScale, 1e-12);
    max_r = std::max(max_r, r);
    EXPECT_LE(std::abs(ds.samples.at(i, 0)), 2.0);
    EXPECT_LE(std::abs(ds.samples.at(i, 1)), 2.0);
  }
  EXPECT_GT(max_r, 1.99);
}

TEST(ProfilesTest, ValuesInUnitIntervalWithOneHotLabels) {
  const Dataset ds = gen_synthetic_profiles(3000, 6, 5);
  EXPECT_EQ(ds.dim(), kProfileLength);
  EXPECT_EQ(ds.labels.cols(), 7u);
  std::size_t weekend = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.samples.row(i)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    double hot = 0.0;
    for (std::size_t j = 0; j < 6; ++j) hot += ds.labels.at(i, j);
    EXPECT_EQ(hot, 1.0);
    weekend += ds.labels.at(i, 6) == 1.0;
  }
  // Weekend share 2/7 within 4 binomial standard deviations.
  const double p = 2.0 / 7.0, n = 3000.0;
  EXPECT_NEAR(static_cast<double>(weekend), n * p, 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST(PartitionTest, ByRangeSplitsEqualWidthSegments) {
  const Dataset ds = gen_uniform_1d(10000, -1.0, 1.0, 2);
  const Partition p = partition_noniid(ds, 5, PartitionStrategy::kByRange, 0);
  expect_disjoint_cover(p, ds.size());
  for (std::size_t a = 0; a < 5; ++a) {
    const double lo = -1.0 + 0.4 * static_cast<double>(a);
    for (std::size_t i : p.assignments[a]) {
      EXPECT_GE(ds.samples[i], lo - 1e-12);
      EXPECT_LE(ds.samples[i], lo + 0.4 + 1e-12);
    }
  }
}

TEST(PartitionTest, ByLabelGivesEachAgentWholeGroups) {
  const Dataset ds = gen_mixed_gaussians(8000, 8, 2.0, 0.02, 3);
  const Partition p = partition_noniid(ds, 4, PartitionStrategy::kByLabel, 0);
  expect_disjoint_cover(p, ds.size());
  std::set<double> owned_all;
  for (const auto& a : p.assignments) {
    std::set<double> labels;
    for (std::size_t i : a) labels.insert(ds.labels[i]);
    EXPECT_EQ(labels.size(), 2u);
    for (double l : labels) EXPECT_TRUE(owned_all.insert(l).second);
  }
  EXPECT_THROW(partition_noniid(ds, 9, PartitionStrategy::kByLabel, 0), std::invalid_argument);
}

TEST(PartitionTest, ByArcGivesContiguousEqualSegments) {
  const Dataset ds = gen_swiss_roll(4000, 0.05, 3);
  const Partition p = partition_noniid(ds, 4, PartitionStrategy::kByArc, 0);
  expect_disjoint_cover(p, ds.size());
  double prev_max = -1.0;
  for (const auto& a : p.assignments) {
    EXPECT_EQ(a.size(), 1000u);
    double lo = 1e9, hi = -1e9;
    for (std::size_t i : a) {
      lo = std::min(lo, ds.labels[i]);
      hi = std::max(hi, ds.labels[i]);
    }
    EXPECT_GE(lo, prev_max);
    prev_max = hi;
  }
  EXPECT_THROW(partition_noniid(gen_uniform_1d(100, 0, 1, 1), 2, PartitionStrategy::kByArc, 0),
               std::invalid_argument);
}

TEST(PartitionTest, IidIsSeededShuffle) {
  const Dataset ds = gen_uniform_1d(1003, 0.0, 1.0, 1);
  const Partition a = partition_noniid(ds, 4, PartitionStrategy::kIid, 9);
  expect_disjoint_cover(a, ds.size());
  EXPECT_EQ(a.assignments, partition_noniid(ds, 4, PartitionStrategy::kIid, 9).assignments);
  EXPECT_NE(a.assignments, partition_noniid(ds, 4, PartitionStrategy::kIid, 10).assignments);
}

TEST(PartitionTest, EmptyAgentIsRejected) {
  EXPECT_THROW(Partition::from_assignments({{0, 1}, {}}), std::invalid_argument);
}

TEST(HoldoutTest, MovesTenPercentOfEachAgent) {
  const Dataset ds = gen_mixed_gaussians(8000, 8, 2.0, 0.02, 3);
  const Partition p = partition_noniid(ds, 4, PartitionStrategy::kByLabel, 0);
  const HoldoutSplit s = split_holdout(p, 0.1, 4);
  std::size_t expected = 0;
  for (std::size_t a = 0; a < 4; ++a) {
    const std::size_t taken = p.assignments[a].size() / 10;
    expected += taken;
    EXPECT_EQ(s.train.assignments[a].size(), p.assignments[a].size() - taken);
  }
  EXPECT_EQ(s.holdout.size(), expected);
  std::set<std::size_t> all(s.holdout.begin(), s.holdout.end());
  for (const auto& a : s.train.assignments) {
    for (std::size_t i : a) EXPECT_TRUE(all.insert(i).second);
  }
  EXPECT_EQ(all.size(), ds.size());
}

TEST(DatasetCsvTest, RoundTripsSamplesAndLabels) {
  const Dataset ds = gen_synthetic_profiles(50, 3, 2);
  const auto path = std::filesystem::temp_directory_path() / "fedgan_dataset_roundtrip.csv";
  write_dataset_csv(ds, path);
  const Dataset back = read_dataset_csv(path);
  EXPECT_EQ(back.samples, ds.samples);
  EXPECT_EQ(back.labels, ds.labels);
  std::filesystem::remove(path);
}

TEST(MinibatchTest, DrawsOnlyFromTheGivenRows) {
  const Dataset ds = gen_uniform_1d(100, 0.0, 1.0, 1);
  const std::vector<std::size_t> rows = {3, 7, 11};
  Rng rng(1);
  const Batch b = sample_minibatch(ds, rows, 64, rng);
  EXPECT_EQ(b.size(), 64u);
  for (std::size_t r = 0; r < 64; ++r) {
    const double v = b.samples[r];
    EXPECT_TRUE(v == ds.samples[3] || v == ds.samples[7] || v == ds.samples[11]);
  }
}

}  // namespace
}  // namespace fedgan
