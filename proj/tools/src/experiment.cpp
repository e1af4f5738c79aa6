#include "fedgan_cli/experiment.hpp"

#include "fedgan/rng.hpp"

namespace fedgan::cli {

GanModel build_model(const ExperimentConfig& cfg) {
  switch (cfg.model.kind) {
    case ModelKind::kAnalytic2d:
      return make_analytic2d();
    case ModelKind::kMlp:
      return make_mlp_gan(cfg.model.hidden, cfg.model.depth, 2, cfg.model.latent_dim);
    case ModelKind::kConditional:
      return make_conditional_gan(cfg.data.archetypes + 1, kProfileLength, cfg.model.hidden,
                                  cfg.model.latent_dim, cfg.model.depth);
  }
  throw ConfigError("unsupported model kind");
}

Dataset build_dataset(const DataConfig& d) {
  if (d.generator == "uniform_1d") return gen_uniform_1d(d.n, d.lo, d.hi, d.seed);
  if (d.generator == "mixed_gaussians") return gen_mixed_gaussians(d.n, d.modes, d.radius, d.sigma, d.seed);
  if (d.generator == "swiss_roll") return gen_swiss_roll(d.n, d.noise, d.seed);
  if (d.generator == "profiles") return gen_synthetic_profiles(d.n, d.archetypes, d.seed);
  throw ConfigError("unknown data generator '" + d.generator + "'");
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Experiment e;
  e.cfg = cfg;
  e.model = build_model(cfg);
  e.data = build_dataset(cfg.data);
  const std::uint64_t part_seed = derive_seed(cfg.data.seed, {stream::kPartition});
  const Partition full = partition_noniid(e.data, cfg.data.agents, cfg.data.partition, part_seed);
  HoldoutSplit split = split_holdout(full, cfg.data.holdout, derive_seed(cfg.data.seed, {stream::kHoldout}));
  e.train = std::move(split.train);
  e.holdout = std::move(split.holdout);
  return e;
}

RunOptions Experiment::run_options() const {
  RunOptions o;
  o.N = cfg.N;
  o.batch = cfg.batch;
  o.master_seed = cfg.master_seed;
  o.record_stride = cfg.record_stride;
  o.threads = cfg.threads;
  o.init_scale = cfg.model.init_scale;
  if (cfg.model.kind == ModelKind::kAnalytic2d) {
    o.init_d = analytic2d_params(model.discriminator, cfg.model.psi0);
    o.init_g = analytic2d_params(model.generator, cfg.model.theta0);
  }
  return o;
}

std::uint64_t Experiment::oracle_seed() const { return derive_seed(cfg.master_seed, {stream::kOracle}); }

std::pair<ParamVector, ParamVector> Experiment::unstack(const std::vector<double>& z) const {
  const std::size_t md = model.discriminator_params();
  if (z.size() != md + model.generator_params()) throw ShapeError("parameter count does not match the model");
  return {ParamVector(model.discriminator.layout(), std::vector<double>(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(md))),
          ParamVector(model.generator.layout(), std::vector<double>(z.begin() + static_cast<std::ptrdiff_t>(md), z.end()))};
}

}  // namespace fedgan::cli
