#include "fedgan/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace fedgan {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid_scalar(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

template <typename F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out(x.shape());
  const auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

void accumulate(Tensor& slot, const Tensor& g) {
  if (slot.empty()) {
    slot = g;
    return;
  }
  auto d = slot.data();
  const auto s = g.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kAffine: return "affine";
    case OpKind::kRelu: return "relu";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSquare: return "square";
    case OpKind::kScale: return "scale";
    case OpKind::kAdd: return "add";
    case OpKind::kConcat: return "concat";
    case OpKind::kMean: return "mean";
    case OpKind::kBceWithLogits: return "bce_with_logits";
  }
  return "unknown";
}

ValueId Tape::push(Node n) {
  if (!n.value.all_finite()) {
    throw NonFiniteError("forward: non-finite output of " +
                         std::string(op_name(n.op)) + " at node " +
                         std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(n));
  return ValueId{nodes_.size() - 1};
}

const Tape::Node& Tape::node(ValueId id) const {
  if (id.index >= nodes_.size()) throw ShapeError("tape: unknown value id");
  return nodes_[id.index];
}

ValueId Tape::input(Tensor value) {
  Node n;
  n.op = OpKind::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

BindingId Tape::bind(const ParamVector& params) {
  bindings_.push_back(params);
  return BindingId{bindings_.size() - 1};
}

ValueId Tape::param(BindingId binding, std::size_t entry) {
  const ParamVector& p = bindings_.at(binding.index);
  if (entry >= p.layout().entry_count()) throw ShapeError("tape: parameter entry out of range");
  Node n;
  n.op = OpKind::kParam;
  n.value = p.entry_tensor(entry);
  n.binding = binding.index;
  n.entry = entry;
  return push(std::move(n));
}

ValueId Tape::affine(ValueId x, ValueId weight) {
  const Tensor& xv = node(x).value;
  const Tensor& wv = node(weight).value;
  if (wv.rank() != 2 || xv.cols() != wv.shape()[0]) {
    throw ShapeError("affine: input " + shape_string(xv.shape()) +
                     " does not match weight " + shape_string(wv.shape()));
  }
  Tensor out({xv.rows(), wv.shape()[1]});
  as_matrix(out).noalias() = as_matrix(xv) * as_matrix(wv);
  Node n;
  n.op = OpKind::kAffine;
  n.inputs = {x.index, weight.index};
  n.value = std::move(out);
  return push(std::move(n));
}

ValueId Tape::affine(ValueId x, ValueId weight, ValueId bias) {
  const Tensor& bv = node(bias).value;
  const Tensor& wv = node(weight).value;
  if (bv.size() != (wv.rank() == 2 ? wv.shape()[1] : 0)) {
    throw ShapeError("affine: bias " + shape_string(bv.shape()) +
                     " does not match weight " + shape_string(wv.shape()));
  }
  ValueId y = affine(x, weight);
  Node& yn = nodes_[y.index];
  auto m = as_matrix(yn.value);
  const Eigen::Map<const Eigen::RowVectorXd> b(bv.data().data(),
                                               static_cast<Eigen::Index>(bv.size()));
  m.rowwise() += b;
  yn.inputs.push_back(bias.index);
  if (!yn.value.all_finite()) throw NonFiniteError("forward: non-finite output of affine");
  return y;
}

ValueId Tape::relu(ValueId x) {
  Node n;
  n.op = OpKind::kRelu;
  n.inputs = {x.index};
  n.value = map_values(node(x).value, [](double v) { return v > 0 ? v : 0.0; });
  return push(std::move(n));
}

ValueId Tape::leaky_relu(ValueId x, double slope) {
  Node n;
  n.op = OpKind::kLeakyRelu;
  n.inputs = {x.index};
  n.attr = slope;
  n.value = map_values(node(x).value, [slope](double v) { return v > 0 ? v : slope * v; });
  return push(std::move(n));
}

ValueId Tape::tanh(ValueId x) {
  Node n;
  n.op = OpKind::kTanh;
  n.inputs = {x.index};
  n.value = map_values(node(x).value, [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

ValueId Tape::sigmoid(ValueId x) {
  Node n;
  n.op = OpKind::kSigmoid;
  n.inputs = {x.index};
  n.value = map_values(node(x).value, sigmoid_scalar);
  return push(std::move(n));
}

ValueId Tape::square(ValueId x) {
  Node n;
  n.op = OpKind::kSquare;
  n.inputs = {x.index};
  n.value = map_values(node(x).value, [](double v) { return v * v; });
  return push(std::move(n));
}

ValueId Tape::scale(ValueId x, double factor) {
  Node n;
  n.op = OpKind::kScale;
  n.inputs = {x.index};
  n.attr = factor;
  n.value = map_values(node(x).value, [factor](double v) { return factor * v; });
  return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: shapes " + shape_string(av.shape()) + " and " +
                     shape_string(bv.shape()) + " differ");
  }
  Tensor out = av;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += bv[i];
  Node n;
  n.op = OpKind::kAdd;
  n.inputs = {a.index, b.index};
  n.value = std::move(out);
  return push(std::move(n));
}

ValueId Tape::concat(ValueId a, ValueId b) {
  Node n;
  n.op = OpKind::kConcat;
  n.inputs = {a.index, b.index};
  n.value = concat_cols(node(a).value, node(b).value);
  return push(std::move(n));
}

ValueId Tape::mean(ValueId x) {
  const Tensor& xv = node(x).value;
  if (xv.empty()) throw ShapeError("mean: empty input");
  double s = 0.0;
  for (double v : xv.data()) s += v;
  Node n;
  n.op = OpKind::kMean;
  n.inputs = {x.index};
  n.value = Tensor::scalar(s / static_cast<double>(xv.size()));
  return push(std::move(n));
}

ValueId Tape::bce_with_logits(ValueId logits, double target) {
  if (!(target >= 0.0 && target <= 1.0)) throw ShapeError("bce_with_logits: target outside [0, 1]");
  Node n;
  n.op = OpKind::kBceWithLogits;
  n.inputs = {logits.index};
  n.attr = target;
  n.value = map_values(node(logits).value, [target](double l) {
    return target * softplus(-l) + (1.0 - target) * softplus(l);
  });
  return push(std::move(n));
}

std::vector<ParamVector> Tape::backward(ValueId out) const {
  const Tensor& v = node(out).value;
  return backward(out, Tensor(v.shape(), 1.0));
}

std::vector<ParamVector> Tape::backward(ValueId out, const Tensor& out_grad) const {
  if (node(out).value.shape() != out_grad.shape()) {
    throw ShapeError("backward: out_grad shape " + shape_string(out_grad.shape()) +
                     " does not match output " + shape_string(node(out).value.shape()));
  }
  std::vector<ParamVector> result;
  result.reserve(bindings_.size());
  for (const ParamVector& b : bindings_) result.emplace_back(b.layout_ptr());

  std::vector<Tensor> grads(out.index + 1);
  grads[out.index] = out_grad;

  for (std::size_t k = out.index + 1; k-- > 0;) {
    if (grads[k].empty()) continue;
    const Node& n = nodes_[k];
    const Tensor& gy = grads[k];
    switch (n.op) {
      case OpKind::kInput:
        break;
      case OpKind::kParam: {
        auto dst = result[n.binding].entry(n.entry);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gy[i];
        break;
      }
      case OpKind::kAffine: {
        const Tensor& xv = nodes_[n.inputs[0]].value;
        const Tensor& wv = nodes_[n.inputs[1]].value;
        Tensor gx(xv.shape());
        as_matrix(gx).noalias() = as_matrix(gy) * as_matrix(wv).transpose();
        Tensor gw(wv.shape());
        as_matrix(gw).noalias() = as_matrix(xv).transpose() * as_matrix(gy);
        accumulate(grads[n.inputs[0]], gx);
        accumulate(grads[n.inputs[1]], gw);
        if (n.inputs.size() == 3) {
          const Tensor& bv = nodes_[n.inputs[2]].value;
          Tensor gb(bv.shape());
          Eigen::Map<Eigen::RowVectorXd>(gb.data().data(), static_cast<Eigen::Index>(gb.size())) =
              as_matrix(gy).colwise().sum();
          accumulate(grads[n.inputs[2]], gb);
        }
        break;
      }
      case OpKind::kRelu:
      case OpKind::kLeakyRelu:
      case OpKind::kTanh:
      case OpKind::kSigmoid:
      case OpKind::kSquare:
      case OpKind::kScale: {
        const Tensor& xv = nodes_[n.inputs[0]].value;
        Tensor gx(xv.shape());
        auto g = gx.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          double d = 0.0;
          switch (n.op) {
            case OpKind::kRelu: d = xv[i] > 0 ? 1.0 : 0.0; break;
            case OpKind::kLeakyRelu: d = xv[i] > 0 ? 1.0 : n.attr; break;
            case OpKind::kTanh: d = 1.0 - n.value[i] * n.value[i]; break;
            case OpKind::kSigmoid: d = n.value[i] * (1.0 - n.value[i]); break;
            case OpKind::kSquare: d = 2.0 * xv[i]; break;
            default: d = n.attr; break;
          }
          g[i] = gy[i] * d;
        }
        accumulate(grads[n.inputs[0]], gx);
        break;
      }
      case OpKind::kAdd:
        accumulate(grads[n.inputs[0]], gy);
        accumulate(grads[n.inputs[1]], gy);
        break;
      case OpKind::kConcat: {
        const Tensor& av = nodes_[n.inputs[0]].value;
        const Tensor& bv = nodes_[n.inputs[1]].value;
        const std::size_t rows = av.rows(), ca = av.cols(), cb = bv.cols();
        Tensor ga(av.shape()), gb(bv.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] = gy[r * (ca + cb) + c];
          for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] = gy[r * (ca + cb) + ca + c];
        }
        accumulate(grads[n.inputs[0]], ga);
        accumulate(grads[n.inputs[1]], gb);
        break;
      }
      case OpKind::kMean: {
        const Tensor& xv = nodes_[n.inputs[0]].value;
        accumulate(grads[n.inputs[0]],
                   Tensor(xv.shape(), gy[0] / static_cast<double>(xv.size())));
        break;
      }
      case OpKind::kBceWithLogits: {
        const Tensor& lv = nodes_[n.inputs[0]].value;
        Tensor gl(lv.shape());
        for (std::size_t i = 0; i < gl.size(); ++i) {
          gl[i] = gy[i] * (sigmoid_scalar(lv[i]) - n.attr);
        }
        accumulate(grads[n.inputs[0]], gl);
        break;
      }
    }
  }
  return result;
}

}  // namespace fedgan
