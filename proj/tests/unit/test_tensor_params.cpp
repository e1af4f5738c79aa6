#include <gtest/gtest.h>

#include <random>

#include "fedgan/csv.hpp"
#include "fedgan/network.hpp"
#include "fedgan/param_vector.hpp"
#include "fedgan/tensor.hpp"
#include "test_util.hpp"

namespace fedgan {
namespace {

LayoutPtr small_layout() {
  return std::make_shared<const ParamLayout>(
      std::vector<std::pair<std::string, Shape>>{{"w", Shape{3, 2}}, {"b", Shape{2}}, {"v", Shape{2, 1}}});
}

TEST(ParamLayoutTest, OffsetsPartitionTheFlatArray) {
  const LayoutPtr layout = small_layout();
  ASSERT_EQ(layout->entry_count(), 3u);
  EXPECT_EQ(layout->entry(0).offset, 0u);
  EXPECT_EQ(layout->entry(1).offset, 6u);
  EXPECT_EQ(layout->entry(2).offset, 8u);
  EXPECT_EQ(layout->total(), 10u);
}

TEST(ParamVectorTest, FlattenUnflattenRoundTripIsExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector p = testing::random_params(small_layout(), rng, 100.0);
    const std::vector<Tensor> parts = p.unflatten();
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0].shape(), (Shape{3, 2}));
    const ParamVector back = ParamVector::flatten(p.layout_ptr(), parts);
    EXPECT_EQ(back, p);
  }
}

TEST(ParamVectorTest, NetworkLayoutsRoundTrip) {
  std::mt19937_64 rng(5);
  const GanModel m = make_mlp_gan(8, 2, 2, 2);
  for (const NetSpec* net : {&m.generator, &m.discriminator}) {
    const ParamVector p = init_params(*net, rng, 0.0);
    EXPECT_EQ(ParamVector::flatten(net->layout(), p.unflatten()), p);
  }
}

TEST(ParamVectorTest, FlattenRejectsWrongShapes) {
  std::vector<Tensor> parts = {Tensor(Shape{3, 2}), Tensor(Shape{3}), Tensor(Shape{2, 1})};
  EXPECT_THROW(ParamVector::flatten(small_layout(), parts), ShapeError);
  parts.pop_back();
  EXPECT_THROW(ParamVector::flatten(small_layout(), parts), ShapeError);
}

TEST(ParamVectorTest, AxpyAndNorms) {
  const LayoutPtr layout = small_layout();
  ParamVector x(layout, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  ParamVector y(layout, std::vector<double>(10, 1.0));
  const ParamVector z = axpy(2.0, x, y);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(z[i], 1.0 + 2.0 * static_cast<double>(i + 1));
  axpy_inplace(-1.0, y, y);
  EXPECT_EQ(l2_norm(y), 0.0);
  EXPECT_DOUBLE_EQ(l2_norm(x), std::sqrt(385.0));
  EXPECT_DOUBLE_EQ(l2_distance(x, scaled(0.0, x)), std::sqrt(385.0));
}

TEST(ParamVectorTest, MismatchedLayoutsThrow) {
  const ParamVector a(small_layout());
  const ParamVector b(std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Shape>>{{"w", Shape{10}}}));
  EXPECT_THROW(axpy(1.0, a, b), ShapeError);
  EXPECT_THROW(l2_distance(a, b), ShapeError);
}

TEST(ParamVectorTest, WeightedSumIsCompensated) {
  // A naive left-to-right sum of 1e16 + 1 - 1e16 loses the 1.
  const auto layout = std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Shape>>{{"x", Shape{1}}});
  const std::vector<ParamVector> v = {ParamVector(layout, {1e16}), ParamVector(layout, {1.0}),
                                      ParamVector(layout, {-1e16})};
  const std::vector<double> w = {1.0, 1.0, 1.0};
  EXPECT_EQ(weighted_sum(w, v)[0], 1.0);
}

TEST(ParamVectorTest, WeightedSumOfEqualVectorsWithDyadicWeights) {
  std::mt19937_64 rng(11);
  const ParamVector p = testing::random_params(small_layout(), rng);
  const std::vector<ParamVector> v = {p, p, p};
  const std::vector<double> w = {0.25, 0.5, 0.25};
  EXPECT_EQ(weighted_sum(w, v), p);
}

TEST(TensorTest, GatherRowsAndShapes) {
  const Tensor t = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx = {2, 0};
  const Tensor g = t.gather_rows(idx);
  EXPECT_EQ(g.rows(), 2u);
  EXPECT_EQ(g.at(0, 1), 6.0);
  EXPECT_EQ(g.at(1, 0), 1.0);
  EXPECT_THROW(Tensor::matrix(2, 2, {1, 2, 3}), ShapeError);
}

TEST(CsvTest, DoublesRoundTripExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
}

}  // namespace
}  // namespace fedgan
