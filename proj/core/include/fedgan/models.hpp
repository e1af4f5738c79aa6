#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "fedgan/network.hpp"
#include "fedgan/param_vector.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

enum class LatentLaw { kUniform, kNormal };

/// Both players ascend their own objective, so updates are always
/// params + rate * gradient.
///   discriminator: mean log D(x) + mean log(1 - D(G(z)))
///   minimax generator: -mean log(1 - D(G(z)))
///   non-saturating generator: mean log D(G(z))
/// D is the sigmoid of the discriminator network's logit.
enum class LossKind { kMinimax, kNonSaturating };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);
std::string_view to_string(LatentLaw law);

struct GanModel {
  std::string name;
  NetSpec generator;
  NetSpec discriminator;
  std::size_t latent_dim = 1;
  std::size_t data_dim = 1;
  /// Zero for unconditional models; otherwise labels are concatenated to the
  /// generator latent and to the discriminator input.
  std::size_t label_dim = 0;
  LatentLaw latent_law = LatentLaw::kUniform;

  bool conditional() const { return label_dim > 0; }
  std::size_t discriminator_params() const { return discriminator.param_count(); }
  std::size_t generator_params() const { return generator.param_count(); }
};

/// D(x) = psi * x^2 and G(z) = theta * z with z ~ uniform[-1, 1]. Each network
/// holds a single scalar parameter.
GanModel make_analytic2d();
/// Generator: latent -> (hidden, ReLU) x depth -> data_dim (linear).
/// Discriminator: data_dim -> (hidden, LeakyReLU 0.2) x depth -> 1 logit.
GanModel make_mlp_gan(std::size_t hidden, std::size_t depth, std::size_t data_dim,
                      std::size_t latent_dim = 2);
/// Label-concatenated MLP pair for fixed-length profiles in [0, 1]; the
/// generator ends in a sigmoid.
GanModel make_conditional_gan(std::size_t label_dim, std::size_t profile_len, std::size_t hidden,
                              std::size_t latent_dim = 8, std::size_t depth = 2);

/// Parameter-free helpers to read and write the analytic 2D pair.
ParamVector analytic2d_params(const NetSpec& net, double value);
double analytic2d_value(const ParamVector& params);

/// Real samples with optional row-aligned labels.
struct Batch {
  Tensor samples;
  Tensor labels;

  std::size_t size() const { return samples.rows(); }
  bool has_labels() const { return !labels.empty(); }
};

struct GradPair {
  ParamVector d_grad;
  ParamVector g_grad;
  std::size_t batch_size_used = 0;
  /// Values of the two ascent objectives at the evaluation point.
  double objective_d = 0.0;
  double objective_g = 0.0;
};

Tensor sample_latent(const GanModel& model, std::size_t n, Rng& rng);

/// Generator output for the given latents (and labels, when conditional).
Tensor generate(const GanModel& model, const ParamVector& params_g, const Tensor& latent,
                const Tensor& labels = {});

/// Gradients of both objectives at the same (params_d, params_g) for a fixed
/// real batch, latent batch and fake-batch labels. Deterministic.
GradPair gan_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                   const ParamVector& params_g, const Batch& real, const Tensor& latent,
                   const Tensor& fake_labels = {});

/// Mini-batch estimate: draws one latent per real sample; conditional models
/// reuse the real batch's labels for the fake batch.
GradPair stochastic_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                          const ParamVector& params_g, const Batch& real, Rng& rng);

/// Expectation-level gradients: the whole dataset plus n_latent common random
/// latents drawn from `latent_seed`. Conditional fakes cycle through the
/// dataset's labels.
GradPair true_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                    const ParamVector& params_g, const Batch& full_dataset, std::size_t n_latent,
                    std::uint64_t latent_seed);

/// Latents and fake labels used by true_grads, exposed so callers can reuse
/// them across many evaluations.
struct LatentSample {
  Tensor latent;
  Tensor fake_labels;
};
LatentSample common_latents(const GanModel& model, const Batch& full_dataset, std::size_t n_latent,
                            std::uint64_t latent_seed);

}  // namespace fedgan
