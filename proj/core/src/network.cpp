#include "fedgan/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedgan {

Layer Layer::linear(std::size_t in, std::size_t out, bool bias) {
  return Layer{LayerKind::kLinear, in, out, bias, 0.0};
}

NetSpec::NetSpec(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), output_dim_(input_dim), layers_(std::move(layers)) {
  std::vector<std::pair<std::string, Shape>> entries;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.kind != LayerKind::kLinear) continue;
    if (l.in != output_dim_) {
      throw ShapeError("NetSpec: layer " + std::to_string(i) + " expects " +
                       std::to_string(l.in) + " inputs but receives " +
                       std::to_string(output_dim_));
    }
    if (l.out == 0) throw ShapeError("NetSpec: linear layer with zero outputs");
    entries.emplace_back("layer" + std::to_string(i) + ".weight", Shape{l.in, l.out});
    if (l.bias) entries.emplace_back("layer" + std::to_string(i) + ".bias", Shape{l.out});
    output_dim_ = l.out;
  }
  layout_ = std::make_shared<const ParamLayout>(std::move(entries));
}

ValueId NetSpec::apply(Tape& tape, BindingId binding, ValueId input) const {
  if (tape.bound(binding).layout() != *layout_) {
    throw ShapeError("NetSpec::apply: parameter layout does not match the network");
  }
  if (tape.value(input).cols() != input_dim_) {
    throw ShapeError("NetSpec::apply: input has " + std::to_string(tape.value(input).cols()) +
                     " features, network expects " + std::to_string(input_dim_));
  }
  ValueId x = input;
  std::size_t entry = 0;
  for (const Layer& l : layers_) {
    switch (l.kind) {
      case LayerKind::kLinear: {
        const ValueId w = tape.param(binding, entry++);
        if (l.bias) {
          const ValueId b = tape.param(binding, entry++);
          x = tape.affine(x, w, b);
        } else {
          x = tape.affine(x, w);
        }
        break;
      }
      case LayerKind::kRelu: x = tape.relu(x); break;
      case LayerKind::kLeakyRelu: x = tape.leaky_relu(x, l.attr); break;
      case LayerKind::kTanh: x = tape.tanh(x); break;
      case LayerKind::kSigmoid: x = tape.sigmoid(x); break;
      case LayerKind::kSquare: x = tape.square(x); break;
      case LayerKind::kScale: x = tape.scale(x, l.attr); break;
    }
  }
  return x;
}

ForwardResult forward(const NetSpec& net, const ParamVector& params, const Tensor& input) {
  ForwardResult r;
  r.binding = r.tape.bind(params);
  Tensor in = input;
  if (in.rank() == 1) in = Tensor::matrix(1, in.size(), in.values());
  const ValueId x = r.tape.input(std::move(in));
  r.out = net.apply(r.tape, r.binding, x);
  r.output = r.tape.value(r.out);
  return r;
}

ParamVector backward(const ForwardResult& record, const Tensor& out_grad) {
  Tensor g = out_grad;
  if (g.shape() != record.output.shape() && g.size() == record.output.size()) {
    g = Tensor(record.output.shape(), g.values());
  }
  auto grads = record.tape.backward(record.out, g);
  return std::move(grads.at(record.binding.index));
}

double grad_check(const NetSpec& net, const ParamVector& params, const Tensor& input,
                  double step) {
  if (!(step > 0)) throw std::invalid_argument("grad_check: step must be positive");
  if (params.size() == 0) return 0.0;

  const ForwardResult base = forward(net, params, input);
  const ParamVector analytic = backward(base, Tensor(base.output.shape(), 1.0));

  auto total = [&](const ParamVector& p) {
    const ForwardResult r = forward(net, p, input);
    double s = 0.0;
    for (double v : r.output.data()) s += v;
    return s;
  };

  double worst = 0.0;
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    probe[i] = orig + step;
    const double up = total(probe);
    probe[i] = orig - step;
    const double down = total(probe);
    probe[i] = orig;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1e-12, std::abs(fd)));
  }
  return worst;
}

ParamVector init_params(const NetSpec& net, std::mt19937_64& rng, double scale) {
  ParamVector p(net.layout());
  const ParamLayout& layout = p.layout();
  double bound = scale;
  for (std::size_t i = 0; i < layout.entry_count(); ++i) {
    // Weight matrices are rank 2 with shape (fan_in, fan_out); biases rank 1.
    const Shape& shape = layout.entry(i).shape;
    const bool weight = shape.size() == 2;
    if (scale <= 0.0 && weight) bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
    if (!weight && scale > 0.0) continue;
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : p.entry(i)) v = u(rng);
  }
  return p;
}

}  // namespace fedgan
