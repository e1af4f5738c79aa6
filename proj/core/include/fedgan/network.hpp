#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "fedgan/param_vector.hpp"
#include "fedgan/tape.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

enum class LayerKind { kLinear, kRelu, kLeakyRelu, kTanh, kSigmoid, kSquare, kScale };

struct Layer {
  LayerKind kind = LayerKind::kLinear;
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;
  /// LeakyReLU slope or constant scale factor.
  double attr = 0.0;

  static Layer linear(std::size_t in, std::size_t out, bool bias = true);
  static Layer relu() { return {LayerKind::kRelu}; }
  static Layer leaky_relu(double slope = 0.2) { return {LayerKind::kLeakyRelu, 0, 0, false, slope}; }
  static Layer tanh() { return {LayerKind::kTanh}; }
  static Layer sigmoid() { return {LayerKind::kSigmoid}; }
  static Layer square() { return {LayerKind::kSquare}; }
  static Layer scale(double factor) { return {LayerKind::kScale, 0, 0, false, factor}; }
};

/// Sequential layer list applied to (batch, input_dim) matrices.
class NetSpec {
 public:
  NetSpec() = default;
  NetSpec(std::size_t input_dim, std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const LayoutPtr& layout() const { return layout_; }
  std::size_t param_count() const { return layout_->total(); }

  /// Records the network on `tape` with parameters from `binding`.
  ValueId apply(Tape& tape, BindingId binding, ValueId input) const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<Layer> layers_;
  LayoutPtr layout_ = std::make_shared<const ParamLayout>();
};

struct ForwardResult {
  Tensor output;
  Tape tape;
  ValueId out;
  BindingId binding;
};

ForwardResult forward(const NetSpec& net, const ParamVector& params, const Tensor& input);
/// Gradient of <out_grad, output> with respect to the parameters used in the
/// forward pass.
ParamVector backward(const ForwardResult& record, const Tensor& out_grad);

/// Max over parameters of |autodiff - central difference| /
/// max(1e-12, |central difference|) for the scalar sum of the outputs.
double grad_check(const NetSpec& net, const ParamVector& params, const Tensor& input,
                  double step);

/// Weights uniform in [-scale, scale], biases zero. scale <= 0 selects fan-in
/// scaling: weights and biases uniform in +-1/sqrt(fan_in) of their layer.
ParamVector init_params(const NetSpec& net, std::mt19937_64& rng, double scale = 0.05);

}  // namespace fedgan
