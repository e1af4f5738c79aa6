#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/tensor.hpp"

namespace fedgan {

struct ParamEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t size = 0;

  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Describes how a flat parameter array maps onto named network tensors.
/// Entries are laid out back to back; offsets partition [0, total).
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<std::pair<std::string, Shape>> entries);

  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::size_t entry_count() const { return entries_.size(); }
  std::size_t total() const { return total_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<ParamEntry> entries_;
  std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

/// Flat vector of every trainable parameter of one network. This is the unit
/// the federation layer updates, averages and communicates.
class ParamVector {
 public:
  ParamVector() : layout_(std::make_shared<const ParamLayout>()) {}
  explicit ParamVector(LayoutPtr layout);
  ParamVector(LayoutPtr layout, std::vector<double> data);

  static ParamVector zeros(LayoutPtr layout) { return ParamVector(std::move(layout)); }
  /// Packs per-entry tensors (in layout order) into one flat vector.
  static ParamVector flatten(LayoutPtr layout, const std::vector<Tensor>& tensors);

  const ParamLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> entry(std::size_t i) const;
  std::span<double> entry(std::size_t i);
  Tensor entry_tensor(std::size_t i) const;

  std::vector<Tensor> unflatten() const;

  bool same_layout(const ParamVector& other) const;
  /// Throws ShapeError when layouts differ.
  void require_same_layout(const ParamVector& other, const char* op) const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.same_layout(b) && a.data_ == b.data_;
  }

 private:
  LayoutPtr layout_;
  std::vector<double> data_;
};

/// Returns y + alpha * x.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);
/// y += alpha * x in place.
void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y);
ParamVector scaled(double alpha, const ParamVector& x);

double l2_norm(std::span<const double> v);
double l2_norm(const ParamVector& v);
double l2_distance(const ParamVector& a, const ParamVector& b);
double max_abs(std::span<const double> v);

/// Fixed-order Neumaier-compensated sum of weights[j] * vectors[j].
ParamVector weighted_sum(std::span<const double> weights,
                         std::span<const ParamVector* const> vectors);
ParamVector weighted_sum(std::span<const double> weights,
                         std::span<const ParamVector> vectors);

}  // namespace fedgan
