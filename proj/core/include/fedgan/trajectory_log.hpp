#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/param_vector.hpp"

namespace fedgan {

/// Models above this many parameters are logged as norm + checksum only.
inline constexpr std::size_t kParamLevelLimit = 10000;

inline constexpr long kSyncedAgent = -1;

struct LogRow {
  std::size_t step = 0;
  /// Agent index, or kSyncedAgent for the averaged state.
  long agent = 0;
  double rate_a = 0.0;
  double rate_b = 0.0;
  /// Discriminator parameters followed by generator parameters; empty when
  /// the log is norm-only.
  std::vector<double> params;
  double param_norm = 0.0;
  std::uint64_t checksum = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double grad_norm_d = 0.0;
  double grad_norm_g = 0.0;
  std::uint64_t cum_scalars = 0;

  bool synced() const { return agent == kSyncedAgent; }
};

/// FNV-1a over the bit patterns of the values.
std::uint64_t param_checksum(std::span<const double> values);

/// Recorded rows of a run. Agent rows are written every `stride` steps;
/// synced rows at every sync step that is also a stride multiple; step 0 and
/// the final local and synced states are always present.
class TrajectoryLog {
 public:
  TrajectoryLog() = default;
  TrajectoryLog(std::size_t agents, std::size_t dim_d, std::size_t dim_g, std::size_t K,
                std::size_t stride);

  std::size_t agents() const { return agents_; }
  std::size_t dim_d() const { return dim_d_; }
  std::size_t dim_g() const { return dim_g_; }
  std::size_t K() const { return K_; }
  std::size_t stride() const { return stride_; }
  bool param_level() const { return dim_d_ + dim_g_ <= kParamLevelLimit; }

  void add(const ParamVector& d, const ParamVector& g, LogRow meta);

  const std::vector<LogRow>& rows() const { return rows_; }
  std::vector<const LogRow*> synced_rows() const;
  std::vector<const LogRow*> agent_rows(long agent) const;
  /// Last synced row; throws if none was recorded.
  const LogRow& last_synced() const;
  std::uint64_t cum_scalars() const { return rows_.empty() ? 0 : rows_.back().cum_scalars; }

  /// Split a param-level row back into (w, theta) given the layouts.
  std::pair<ParamVector, ParamVector> split(const LogRow& row, LayoutPtr layout_d,
                                            LayoutPtr layout_g) const;

  void write_csv(const std::filesystem::path& path) const;
  /// Param columns are split as dim_d discriminator values then dim_g
  /// generator values.
  static TrajectoryLog read_csv(const std::filesystem::path& path, std::size_t agents,
                                std::size_t dim_d, std::size_t dim_g, std::size_t K,
                                std::size_t stride);

  /// Index of the last recorded step (N - 1).
  std::size_t final_step = 0;
  /// Full-precision (w, theta) of the most recent synced state, kept even
  /// when rows are norm-only. Not part of the CSV form.
  std::vector<double> final_synced_params;

 private:
  std::size_t agents_ = 0;
  std::size_t dim_d_ = 0;
  std::size_t dim_g_ = 0;
  std::size_t K_ = 1;
  std::size_t stride_ = 1;
  std::vector<LogRow> rows_;
};

}  // namespace fedgan
