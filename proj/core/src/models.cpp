#include "fedgan/models.hpp"

#include <stdexcept>
#include <string>

namespace fedgan {

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kMinimax ? "minimax" : "non_saturating";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "minimax") return LossKind::kMinimax;
  if (text == "non_saturating" || text == "nonsaturating") return LossKind::kNonSaturating;
  throw std::invalid_argument("unknown loss kind '" + std::string(text) + "'");
}

std::string_view to_string(LatentLaw law) {
  return law == LatentLaw::kUniform ? "uniform" : "normal";
}

GanModel make_analytic2d() {
  GanModel m;
  m.name = "analytic2d";
  m.generator = NetSpec(1, {Layer::linear(1, 1, false)});
  m.discriminator = NetSpec(1, {Layer::square(), Layer::linear(1, 1, false)});
  m.latent_dim = 1;
  m.data_dim = 1;
  m.latent_law = LatentLaw::kUniform;
  return m;
}

GanModel make_mlp_gan(std::size_t hidden, std::size_t depth, std::size_t data_dim,
                      std::size_t latent_dim) {
  if (hidden < 1 || depth < 1) throw std::invalid_argument("make_mlp_gan: hidden and depth must be >= 1");
  if (data_dim < 1 || latent_dim < 1) throw std::invalid_argument("make_mlp_gan: dimensions must be >= 1");
  std::vector<Layer> g, d;
  std::size_t in = latent_dim;
  for (std::size_t i = 0; i < depth; ++i) {
    g.push_back(Layer::linear(in, hidden));
    g.push_back(Layer::relu());
    in = hidden;
  }
  g.push_back(Layer::linear(in, data_dim));
  in = data_dim;
  for (std::size_t i = 0; i < depth; ++i) {
    d.push_back(Layer::linear(in, hidden));
    d.push_back(Layer::leaky_relu(0.2));
    in = hidden;
  }
  d.push_back(Layer::linear(in, 1));

  GanModel m;
  m.name = "mlp";
  m.generator = NetSpec(latent_dim, std::move(g));
  m.discriminator = NetSpec(data_dim, std::move(d));
  m.latent_dim = latent_dim;
  m.data_dim = data_dim;
  m.latent_law = LatentLaw::kNormal;
  return m;
}

GanModel make_conditional_gan(std::size_t label_dim, std::size_t profile_len, std::size_t hidden,
                              std::size_t latent_dim, std::size_t depth) {
  if (label_dim < 1) throw std::invalid_argument("make_conditional_gan: label_dim must be >= 1");
  if (profile_len < 2) throw std::invalid_argument("make_conditional_gan: profile_len must be >= 2");
  if (hidden < 1 || depth < 1 || latent_dim < 1) {
    throw std::invalid_argument("make_conditional_gan: hidden, depth and latent_dim must be >= 1");
  }
  std::vector<Layer> g, d;
  std::size_t in = latent_dim + label_dim;
  for (std::size_t i = 0; i < depth; ++i) {
    g.push_back(Layer::linear(in, hidden));
    g.push_back(Layer::relu());
    in = hidden;
  }
  g.push_back(Layer::linear(in, profile_len));
  g.push_back(Layer::sigmoid());
  in = profile_len + label_dim;
  for (std::size_t i = 0; i < depth; ++i) {
    d.push_back(Layer::linear(in, hidden));
    d.push_back(Layer::leaky_relu(0.2));
    in = hidden;
  }
  d.push_back(Layer::linear(in, 1));

  GanModel m;
  m.name = "conditional";
  m.generator = NetSpec(latent_dim + label_dim, std::move(g));
  m.discriminator = NetSpec(profile_len + label_dim, std::move(d));
  m.latent_dim = latent_dim;
  m.data_dim = profile_len;
  m.label_dim = label_dim;
  m.latent_law = LatentLaw::kNormal;
  return m;
}

ParamVector analytic2d_params(const NetSpec& net, double value) {
  if (net.param_count() != 1) throw ShapeError("analytic2d_params: network has more than one parameter");
  return ParamVector(net.layout(), {value});
}

double analytic2d_value(const ParamVector& params) {
  if (params.size() != 1) throw ShapeError("analytic2d_value: expected a single parameter");
  return params[0];
}

Tensor sample_latent(const GanModel& model, std::size_t n, Rng& rng) {
  Tensor z({n, model.latent_dim});
  if (model.latent_law == LatentLaw::kUniform) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : z.data()) v = u(rng);
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : z.data()) v = g(rng);
  }
  return z;
}

namespace {

void check_labels(const GanModel& model, const Tensor& labels, std::size_t rows, const char* what) {
  if (!model.conditional()) return;
  if (labels.empty() || labels.rows() != rows || labels.cols() != model.label_dim) {
    throw ShapeError(std::string(what) + ": conditional model needs (" + std::to_string(rows) +
                     ", " + std::to_string(model.label_dim) + ") labels, got " +
                     shape_string(labels.shape()));
  }
}

}  // namespace

Tensor generate(const GanModel& model, const ParamVector& params_g, const Tensor& latent,
                const Tensor& labels) {
  check_labels(model, labels, latent.rows(), "generate");
  Tape tape;
  const BindingId bg = tape.bind(params_g);
  ValueId z = tape.input(latent);
  if (model.conditional()) z = tape.concat(z, tape.input(labels));
  return tape.value(model.generator.apply(tape, bg, z));
}

GradPair gan_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                   const ParamVector& params_g, const Batch& real, const Tensor& latent,
                   const Tensor& fake_labels) {
  if (real.size() == 0) throw ShapeError("gan_grads: empty real batch");
  check_labels(model, real.labels, real.size(), "gan_grads (real)");
  check_labels(model, fake_labels, latent.rows(), "gan_grads (fake)");

  Tape tape;
  const BindingId bd = tape.bind(params_d);
  const BindingId bg = tape.bind(params_g);

  ValueId z = tape.input(latent);
  ValueId real_in = tape.input(real.samples);
  if (model.conditional()) {
    const ValueId fl = tape.input(fake_labels);
    z = tape.concat(z, fl);
    real_in = tape.concat(real_in, tape.input(real.labels));
  }
  ValueId fake = model.generator.apply(tape, bg, z);
  if (model.conditional()) fake = tape.concat(fake, tape.input(fake_labels));

  const ValueId logit_real = model.discriminator.apply(tape, bd, real_in);
  const ValueId logit_fake = model.discriminator.apply(tape, bd, fake);

  const ValueId real_term = tape.mean(tape.bce_with_logits(logit_real, 1.0));
  const ValueId fake_term = tape.mean(tape.bce_with_logits(logit_fake, 0.0));
  const ValueId objective_d = tape.scale(tape.add(real_term, fake_term), -1.0);
  const ValueId objective_g = loss == LossKind::kMinimax
                                  ? fake_term
                                  : tape.scale(tape.mean(tape.bce_with_logits(logit_fake, 1.0)), -1.0);

  GradPair out;
  out.d_grad = std::move(tape.backward(objective_d)[bd.index]);
  out.g_grad = std::move(tape.backward(objective_g)[bg.index]);
  out.batch_size_used = real.size();
  out.objective_d = tape.value(objective_d)[0];
  out.objective_g = tape.value(objective_g)[0];
  return out;
}

GradPair stochastic_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                          const ParamVector& params_g, const Batch& real, Rng& rng) {
  if (real.size() == 0) throw ShapeError("stochastic_grads: empty real batch");
  const Tensor latent = sample_latent(model, real.size(), rng);
  return gan_grads(model, loss, params_d, params_g, real, latent,
                   model.conditional() ? real.labels : Tensor{});
}

LatentSample common_latents(const GanModel& model, const Batch& full_dataset, std::size_t n_latent,
                            std::uint64_t latent_seed) {
  if (n_latent == 0) throw std::invalid_argument("common_latents: n_latent must be positive");
  Rng rng(latent_seed);
  LatentSample s;
  s.latent = sample_latent(model, n_latent, rng);
  if (model.conditional()) {
    check_labels(model, full_dataset.labels, full_dataset.size(), "common_latents");
    std::vector<std::size_t> idx(n_latent);
    for (std::size_t j = 0; j < n_latent; ++j) idx[j] = j % full_dataset.size();
    s.fake_labels = full_dataset.labels.gather_rows(idx);
  }
  return s;
}

GradPair true_grads(const GanModel& model, LossKind loss, const ParamVector& params_d,
                    const ParamVector& params_g, const Batch& full_dataset, std::size_t n_latent,
                    std::uint64_t latent_seed) {
  const LatentSample s = common_latents(model, full_dataset, n_latent, latent_seed);
  return gan_grads(model, loss, params_d, params_g, full_dataset, s.latent, s.fake_labels);
}

}  // namespace fedgan
