#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedgan/network.hpp"
#include "fedgan/tape.hpp"
#include "test_util.hpp"

namespace fedgan {
namespace {

TEST(AutodiffTest, RandomMlpsMatchCentralDifferences) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const testing::GradCheckCase c = testing::random_grad_check_case(rng);
    EXPECT_LT(grad_check(c.net, c.params, c.input, 1e-5), 1e-6) << "trial " << trial;
  }
}

TEST(AutodiffTest, AffineGradientHasClosedForm) {
  // f = sum(x W + b): df/dW[i][j] = sum_r x[r][i], df/db[j] = rows.
  const NetSpec net(2, {Layer::linear(2, 3)});
  std::mt19937_64 rng(1);
  const ParamVector p = init_params(net, rng, 0.5);
  const Tensor x = Tensor::matrix(2, 2, {1.0, 2.0, 3.0, -4.0});
  const ForwardResult r = forward(net, p, x);
  const ParamVector g = backward(r, Tensor(r.output.shape(), 1.0));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(g.entry(0)[0 * 3 + j], 4.0);
    EXPECT_DOUBLE_EQ(g.entry(0)[1 * 3 + j], -2.0);
    EXPECT_DOUBLE_EQ(g.entry(1)[j], 2.0);
  }
}

TEST(AutodiffTest, BceWithLogitsGradient) {
  // d/du mean(-log sigmoid(u)) = (sigmoid(u) - 1) / n for target 1.
  Tape tape;
  const auto layout = std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Shape>>{{"u", Shape{2, 1}}});
  const BindingId b = tape.bind(ParamVector(layout, {0.3, -2.0}));
  const ValueId u = tape.param(b, 0);
  const ValueId loss = tape.mean(tape.bce_with_logits(u, 1.0));
  const auto grads = tape.backward(loss);
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  EXPECT_NEAR(grads[0][0], (sig(0.3) - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(grads[0][1], (sig(-2.0) - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(tape.value(loss)[0], 0.5 * (std::log1p(std::exp(-0.3)) + std::log1p(std::exp(2.0))), 1e-15);
}

TEST(AutodiffTest, BceStaysFiniteForExtremeLogits) {
  Tape tape;
  const ValueId u = tape.input(Tensor::matrix(2, 1, {800.0, -800.0}));
  const ValueId l1 = tape.mean(tape.bce_with_logits(u, 1.0));
  EXPECT_TRUE(std::isfinite(tape.value(l1)[0]));
  EXPECT_NEAR(tape.value(l1)[0], 400.0, 1e-9);
}

TEST(AutodiffTest, ConcatRoutesGradientsToBothInputs) {
  Tape tape;
  const auto layout = std::make_shared<const ParamLayout>(
      std::vector<std::pair<std::string, Shape>>{{"a", Shape{2, 1}}, {"b", Shape{2, 2}}});
  const BindingId bind = tape.bind(ParamVector(layout, {1, 2, 3, 4, 5, 6}));
  const ValueId c = tape.concat(tape.param(bind, 0), tape.param(bind, 1));
  EXPECT_EQ(tape.value(c).cols(), 3u);
  const auto g = tape.backward(tape.mean(tape.square(c)));
  // d/dx mean(x^2) = 2 x / 6.
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(g[0][i], 2.0 * static_cast<double>(i + 1) / 6.0, 1e-15);
}

TEST(AutodiffTest, LayoutMismatchIsRejected) {
  const NetSpec a(2, {Layer::linear(2, 3)});
  const NetSpec b(2, {Layer::linear(2, 4)});
  std::mt19937_64 rng(1);
  EXPECT_THROW(forward(a, init_params(b, rng), Tensor::matrix(1, 2, {0, 0})), ShapeError);
  EXPECT_THROW(NetSpec(3, {Layer::linear(2, 3)}), ShapeError);
}

}  // namespace
}  // namespace fedgan
