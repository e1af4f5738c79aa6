#include "fedgan/gradient_oracle.hpp"

#include <algorithm>

namespace fedgan {

GradientOracle::GradientOracle(GanModel model, LossKind loss, const Dataset& data,
                               const Partition& partition, std::size_t n_latent,
                               std::uint64_t latent_seed)
    : model_(std::move(model)), loss_(loss), weights_(partition.weights) {
  if (partition.agents() == 0) throw std::invalid_argument("GradientOracle: empty partition");
  if (n_latent < 1) throw std::invalid_argument("GradientOracle: n_latent must be >= 1");
  std::vector<std::size_t> all;
  for (const auto& idx : partition.assignments) {
    agent_batches_.push_back(data.batch(idx));
    all.insert(all.end(), idx.begin(), idx.end());
  }
  pooled_batch_ = data.batch(all);
  // The same latent draw serves every agent so that the fake-sample terms of
  // g^i agree exactly across agents, as they do in expectation.
  pooled_latents_ = common_latents(model_, pooled_batch_, n_latent, latent_seed);
  for (const Batch& b : agent_batches_) {
    agent_latents_.push_back(model_.conditional() ? common_latents(model_, b, n_latent, latent_seed)
                                                  : pooled_latents_);
  }
}

GradPair GradientOracle::agent(std::size_t i, const ParamVector& w, const ParamVector& theta) const {
  ++evaluations_;
  const LatentSample& s = agent_latents_.at(i);
  return gan_grads(model_, loss_, w, theta, agent_batches_.at(i), s.latent, s.fake_labels);
}

GradPair GradientOracle::pooled(const ParamVector& w, const ParamVector& theta) const {
  ++evaluations_;
  return gan_grads(model_, loss_, w, theta, pooled_batch_, pooled_latents_.latent,
                   pooled_latents_.fake_labels);
}

std::vector<double> GradientOracle::stack(const ParamVector& w, const ParamVector& theta) const {
  std::vector<double> z;
  z.reserve(w.size() + theta.size());
  z.insert(z.end(), w.data().begin(), w.data().end());
  z.insert(z.end(), theta.data().begin(), theta.data().end());
  return z;
}

std::pair<ParamVector, ParamVector> GradientOracle::unstack(std::span<const double> z) const {
  if (z.size() != dim()) throw ShapeError("GradientOracle::unstack: wrong stacked size");
  const auto mid = z.begin() + static_cast<std::ptrdiff_t>(dim_d());
  return {ParamVector(model_.discriminator.layout(), std::vector<double>(z.begin(), mid)),
          ParamVector(model_.generator.layout(), std::vector<double>(mid, z.end()))};
}

std::vector<double> GradientOracle::field(std::span<const double> z) const {
  const auto [w, theta] = unstack(z);
  const GradPair gp = pooled(w, theta);
  return stack(gp.d_grad, gp.g_grad);
}

}  // namespace fedgan
