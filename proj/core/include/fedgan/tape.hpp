#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "fedgan/param_vector.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

/// Handle to a value slot on a Tape.
struct ValueId {
  std::size_t index = 0;
  friend bool operator==(ValueId, ValueId) = default;
};

/// Handle to a parameter vector bound to a Tape.
struct BindingId {
  std::size_t index = 0;
  friend bool operator==(BindingId, BindingId) = default;
};

enum class OpKind {
  kInput,
  kParam,
  kAffine,
  kRelu,
  kLeakyRelu,
  kTanh,
  kSigmoid,
  kSquare,
  kScale,
  kAdd,
  kConcat,
  kMean,
  kBceWithLogits,
};

std::string_view op_name(OpKind op);

/// Reverse-mode computation record. Every primitive appends one node whose
/// inputs precede it, so the node list is already topologically ordered and
/// backward is a single reverse sweep.
///
/// Matrices are (batch, features). Bound parameter vectors are copied, so a
/// tape stays valid after the caller's ParamVector changes.
class Tape {
 public:
  ValueId input(Tensor value);
  BindingId bind(const ParamVector& params);
  ValueId param(BindingId binding, std::size_t entry);

  /// x * W (+ b). W has shape (in, out); b has shape (out).
  ValueId affine(ValueId x, ValueId weight);
  ValueId affine(ValueId x, ValueId weight, ValueId bias);
  ValueId relu(ValueId x);
  ValueId leaky_relu(ValueId x, double slope);
  ValueId tanh(ValueId x);
  ValueId sigmoid(ValueId x);
  ValueId square(ValueId x);
  ValueId scale(ValueId x, double factor);
  ValueId add(ValueId a, ValueId b);
  /// Column-wise concatenation of two matrices with equal row counts.
  ValueId concat(ValueId a, ValueId b);
  /// Mean over every entry; produces a scalar.
  ValueId mean(ValueId x);
  /// Element-wise binary cross-entropy of sigmoid(logits) against a constant
  /// target in [0, 1], evaluated in log-sum-exp form so it never takes log(0).
  ValueId bce_with_logits(ValueId logits, double target);

  const Tensor& value(ValueId id) const { return nodes_.at(id.index).value; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t binding_count() const { return bindings_.size(); }
  const ParamVector& bound(BindingId b) const { return bindings_.at(b.index); }

  /// Propagates `out_grad` (shaped like value(out)) back to every bound
  /// parameter vector. Result i has the layout of binding i.
  std::vector<ParamVector> backward(ValueId out, const Tensor& out_grad) const;
  /// Convenience for scalar outputs: seeds with 1.
  std::vector<ParamVector> backward(ValueId out) const;

 private:
  struct Node {
    OpKind op = OpKind::kInput;
    std::vector<std::size_t> inputs;
    Tensor value;
    double attr = 0.0;
    std::size_t binding = 0;
    std::size_t entry = 0;
  };

  ValueId push(Node node);
  const Node& node(ValueId id) const;

  std::vector<Node> nodes_;
  std::vector<ParamVector> bindings_;
};

}  // namespace fedgan
