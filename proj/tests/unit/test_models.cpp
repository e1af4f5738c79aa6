#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedgan/models.hpp"
#include "fedgan/network.hpp"
#include "test_util.hpp"

namespace fedgan {
namespace {

double sig(double u) { return 1.0 / (1.0 + std::exp(-u)); }

Tensor column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::matrix(n, 1, std::move(v));
}

TEST(Analytic2dTest, GradientsMatchClosedForm) {
  const GanModel m = make_analytic2d();
  const double psi = 0.7, theta = 0.4;
  const std::vector<double> x = {-0.9, -0.2, 0.1, 0.5, 0.8};
  const std::vector<double> z = {-1.0, -0.3, 0.0, 0.6, 0.95};
  Batch real{column(x), {}};
  const GradPair gp = gan_grads(m, LossKind::kMinimax, analytic2d_params(m.discriminator, psi),
                                analytic2d_params(m.generator, theta), real, column(z));
  double g = 0.0, h = 0.0, obj_d = 0.0, obj_g = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fx = theta * z[i];
    g += ((1.0 - sig(psi * x[i] * x[i])) * x[i] * x[i] - sig(psi * fx * fx) * fx * fx) / 5.0;
    h += sig(psi * fx * fx) * psi * 2.0 * theta * z[i] * z[i] / 5.0;
    obj_d += (std::log(sig(psi * x[i] * x[i])) + std::log(1.0 - sig(psi * fx * fx))) / 5.0;
    obj_g += -std::log(1.0 - sig(psi * fx * fx)) / 5.0;
  }
  EXPECT_NEAR(gp.d_grad[0], g, 1e-14);
  EXPECT_NEAR(gp.g_grad[0], h, 1e-14);
  EXPECT_NEAR(gp.objective_d, obj_d, 1e-14);
  EXPECT_NEAR(gp.objective_g, obj_g, 1e-14);
}

TEST(Analytic2dTest, EquilibriumIsAStationaryPointInExpectation) {
  // At theta = 1, psi = 0 the generator reproduces uniform data and the
  // discriminator is flat, so both expected gradients vanish.
  const GanModel m = make_analytic2d();
  const Dataset ds = gen_uniform_1d(20000, -1.0, 1.0, 3);
  const GradPair gp = true_grads(m, LossKind::kMinimax, analytic2d_params(m.discriminator, 0.0),
                                 analytic2d_params(m.generator, 1.0), ds.all(), 1 << 16, 9);
  EXPECT_NEAR(gp.d_grad[0], 0.0, 5e-3);
  EXPECT_EQ(gp.g_grad[0], 0.0);
}

/// Central difference of an objective along parameter i.
template <typename F>
double fd(F&& f, ParamVector p, std::size_t i, double h = 1e-6) {
  const double o = p[i];
  p[i] = o + h;
  const double up = f(p);
  p[i] = o - h;
  const double down = f(p);
  return (up - down) / (2.0 * h);
}

class GanGradTest : public ::testing::TestWithParam<LossKind> {};

TEST_P(GanGradTest, MlpGradientsMatchObjectiveDifferences) {
  const LossKind loss = GetParam();
  const GanModel m = make_mlp_gan(5, 2, 2, 2);
  std::mt19937_64 rng(17);
  const ParamVector pd = init_params(m.discriminator, rng, 0.0);
  const ParamVector pg = init_params(m.generator, rng, 0.0);
  const Dataset ds = gen_mixed_gaussians(8, 8, 2.0, 0.02, 5);
  const Batch real = ds.all();
  Rng lr(4);
  const Tensor z = sample_latent(m, 8, lr);
  const GradPair gp = gan_grads(m, loss, pd, pg, real, z);
  auto obj_d = [&](const ParamVector& d) { return gan_grads(m, loss, d, pg, real, z).objective_d; };
  auto obj_g = [&](const ParamVector& g) { return gan_grads(m, loss, pd, g, real, z).objective_g; };
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double ref = fd(obj_d, pd, i);
    EXPECT_NEAR(gp.d_grad[i], ref, 1e-6 * std::max(1.0, std::abs(ref))) << "d param " << i;
  }
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const double ref = fd(obj_g, pg, i);
    EXPECT_NEAR(gp.g_grad[i], ref, 1e-6 * std::max(1.0, std::abs(ref))) << "g param " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Losses, GanGradTest, ::testing::Values(LossKind::kMinimax, LossKind::kNonSaturating));

TEST(ConditionalGanTest, GeneratesProfilesInUnitInterval) {
  const std::size_t label_dim = 7;
  const GanModel m = make_conditional_gan(label_dim, kProfileLength, 16, 8, 2);
  std::mt19937_64 rng(2);
  const ParamVector pg = init_params(m.generator, rng, 0.0);
  Rng lr(3);
  const Tensor z = sample_latent(m, 10, lr);
  Tensor labels(Shape{10, label_dim});
  for (std::size_t r = 0; r < 10; ++r) labels.at(r, r % label_dim) = 1.0;
  const Tensor out = generate(m, pg, z, labels);
  EXPECT_EQ(out.rows(), 10u);
  EXPECT_EQ(out.cols(), kProfileLength);
  for (double v : out.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(generate(m, pg, z), ShapeError);
}

TEST(ConditionalGanTest, GradientsMatchObjectiveDifferences) {
  const Dataset ds = gen_synthetic_profiles(6, 3, 1);
  const GanModel m = make_conditional_gan(ds.labels.cols(), kProfileLength, 4, 3, 1);
  std::mt19937_64 rng(8);
  const ParamVector pd = init_params(m.discriminator, rng, 0.0);
  const ParamVector pg = init_params(m.generator, rng, 0.0);
  Rng lr(5);
  const Tensor z = sample_latent(m, 6, lr);
  const Batch real = ds.all();
  const GradPair gp = gan_grads(m, LossKind::kNonSaturating, pd, pg, real, z, real.labels);
  auto obj_g = [&](const ParamVector& g) {
    return gan_grads(m, LossKind::kNonSaturating, pd, g, real, z, real.labels).objective_g;
  };
  for (std::size_t i = 0; i < pg.size(); i += 7) {
    const double ref = fd(obj_g, pg, i);
    EXPECT_NEAR(gp.g_grad[i], ref, 1e-6 * std::max(1.0, std::abs(ref)));
  }
}

TEST(StochasticGradsTest, DeterministicGivenRngState) {
  const GanModel m = make_mlp_gan(4, 1, 2, 2);
  std::mt19937_64 rng(1);
  const ParamVector pd = init_params(m.discriminator, rng, 0.0);
  const ParamVector pg = init_params(m.generator, rng, 0.0);
  const Batch real = gen_mixed_gaussians(16, 8, 2.0, 0.02, 2).all();
  Rng a(99), b(99);
  const GradPair x = stochastic_grads(m, LossKind::kMinimax, pd, pg, real, a);
  const GradPair y = stochastic_grads(m, LossKind::kMinimax, pd, pg, real, b);
  EXPECT_EQ(x.d_grad, y.d_grad);
  EXPECT_EQ(x.g_grad, y.g_grad);
  EXPECT_EQ(x.batch_size_used, 16u);
}

}  // namespace
}  // namespace fedgan
