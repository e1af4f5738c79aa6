#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/models.hpp"
#include "fedgan/param_vector.hpp"

namespace fedgan {

/// Thrown when an analysis is asked to run on inputs that do not meet its
/// preconditions (wrong schedule mode, missing log rows, misaligned window).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr std::size_t kDefaultOracleLatents = std::size_t{1} << 16;

/// Deterministic true-gradient oracle. Agent i's gradient (g^i, h^i) uses
/// all of R_i and a fixed common latent sample; the pooled gradient
/// (g, h) = sum_i p_i (g^i, h^i) is evaluated in one pass over the union of
/// the agents' rows, which is the same quantity by linearity of the mean.
/// (Conditional models draw fake labels per row set, so there the pooled
/// gradient is that of the pooled data.)
class GradientOracle {
 public:
  GradientOracle(GanModel model, LossKind loss, const Dataset& data, const Partition& partition,
                 std::size_t n_latent, std::uint64_t latent_seed);

  const GanModel& model() const { return model_; }
  LossKind loss() const { return loss_; }
  std::size_t agents() const { return agent_batches_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t dim_d() const { return model_.discriminator_params(); }
  std::size_t dim_g() const { return model_.generator_params(); }
  std::size_t dim() const { return dim_d() + dim_g(); }

  GradPair agent(std::size_t i, const ParamVector& w, const ParamVector& theta) const;
  GradPair pooled(const ParamVector& w, const ParamVector& theta) const;

  /// Stacked helpers on z = (w, theta).
  std::vector<double> stack(const ParamVector& w, const ParamVector& theta) const;
  std::pair<ParamVector, ParamVector> unstack(std::span<const double> z) const;
  /// q(z) = (g, h) at the stacked point.
  std::vector<double> field(std::span<const double> z) const;

  std::size_t evaluations() const { return evaluations_; }

 private:
  GanModel model_;
  LossKind loss_;
  std::vector<Batch> agent_batches_;
  Batch pooled_batch_;
  std::vector<double> weights_;
  std::vector<LatentSample> agent_latents_;
  LatentSample pooled_latents_;
  mutable std::size_t evaluations_ = 0;
};

}  // namespace fedgan
