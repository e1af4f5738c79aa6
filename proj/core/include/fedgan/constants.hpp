#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/gradient_oracle.hpp"
#include "fedgan/trajectory_log.hpp"

namespace fedgan {

/// Axis-aligned box over stacked z = (w, theta).
struct ProbeRegion {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  double diameter() const;
};

/// Bounding box of the param-level rows of a log, widened by `inflate` times
/// its extent per coordinate (and by at least `min_halfwidth`).
ProbeRegion probe_region_from_log(const TrajectoryLog& log, double inflate = 0.1,
                                  double min_halfwidth = 1e-3);

struct ConstantsOptions {
  std::size_t n_probes = 100;
  std::size_t batch = 64;
  /// Mini-batches per probe for the noise estimates.
  std::size_t noise_batches = 64;
  /// Draw noise batches with replacement (as training does).
  bool replacement = true;
  /// Relative size of the local perturbation pairs used for L.
  double local_step = 0.02;
  std::uint64_t seed = 0;
};

struct EstimatedConstants {
  double L = 0.0;
  double sigma_g = 0.0;
  double sigma_h = 0.0;
  double mu_g = 0.0;
  std::size_t n_probes = 0;
  std::size_t noise_batches = 0;
  std::size_t batch = 0;
  ProbeRegion region;

  EstimatedConstants inflated(double factor) const;
};

/// Running-max estimates over random probes of the region:
///   L       = max ||q^i(z) - q^i(z')|| / ||z - z'|| over probe pairs, for every
///             agent's true gradient and the pooled one
///   sigma_g = max over probes and agents of mean ||g~^i - g^i|| (likewise sigma_h)
///   mu_g    = max over probes and agents of ||g^i - g||
EstimatedConstants estimate_constants(const GradientOracle& oracle, const Dataset& data,
                                      const Partition& partition, const ProbeRegion& region,
                                      const ConstantsOptions& opts);

}  // namespace fedgan
