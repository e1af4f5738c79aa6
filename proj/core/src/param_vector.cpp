#include "fedgan/param_vector.hpp"

#include <algorithm>
#include <cmath>

namespace fedgan {

ParamLayout::ParamLayout(std::vector<std::pair<std::string, Shape>> entries) {
  entries_.reserve(entries.size());
  for (auto& [name, shape] : entries) {
    const std::size_t n = shape_size(shape);
    entries_.push_back(ParamEntry{std::move(name), std::move(shape), total_, n});
    total_ += n;
  }
}

ParamVector::ParamVector(LayoutPtr layout)
    : layout_(std::move(layout)), data_(layout_->total(), 0.0) {}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (data_.size() != layout_->total()) {
    throw ShapeError("ParamVector: layout expects " +
                     std::to_string(layout_->total()) + " values, got " +
                     std::to_string(data_.size()));
  }
}

ParamVector ParamVector::flatten(LayoutPtr layout,
                                 const std::vector<Tensor>& tensors) {
  if (tensors.size() != layout->entry_count()) {
    throw ShapeError("flatten: expected " +
                     std::to_string(layout->entry_count()) + " tensors");
  }
  ParamVector out(layout);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const ParamEntry& e = layout->entry(i);
    if (tensors[i].shape() != e.shape) {
      throw ShapeError("flatten: entry '" + e.name + "' expects shape " +
                       shape_string(e.shape) + ", got " +
                       shape_string(tensors[i].shape()));
    }
    std::copy(tensors[i].data().begin(), tensors[i].data().end(),
              out.data_.begin() + static_cast<std::ptrdiff_t>(e.offset));
  }
  return out;
}

std::span<const double> ParamVector::entry(std::size_t i) const {
  const ParamEntry& e = layout_->entry(i);
  return std::span<const double>(data_).subspan(e.offset, e.size);
}

std::span<double> ParamVector::entry(std::size_t i) {
  const ParamEntry& e = layout_->entry(i);
  return std::span<double>(data_).subspan(e.offset, e.size);
}

Tensor ParamVector::entry_tensor(std::size_t i) const {
  const auto s = entry(i);
  return Tensor(layout_->entry(i).shape, std::vector<double>(s.begin(), s.end()));
}

std::vector<Tensor> ParamVector::unflatten() const {
  std::vector<Tensor> out;
  out.reserve(layout_->entry_count());
  for (std::size_t i = 0; i < layout_->entry_count(); ++i) {
    out.push_back(entry_tensor(i));
  }
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  return layout_ == other.layout_ || *layout_ == *other.layout_;
}

void ParamVector::require_same_layout(const ParamVector& other,
                                      const char* op) const {
  if (!same_layout(other)) {
    throw ShapeError(std::string(op) + ": parameter layouts differ (" +
                     std::to_string(size()) + " vs " +
                     std::to_string(other.size()) + " values)");
  }
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  ParamVector out = y;
  axpy_inplace(alpha, x, out);
  return out;
}

void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y) {
  x.require_same_layout(y, "axpy");
  auto yd = y.data();
  const auto xd = x.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += alpha * xd[i];
}

ParamVector scaled(double alpha, const ParamVector& x) {
  ParamVector out = x;
  for (double& v : out.data()) v *= alpha;
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_norm(const ParamVector& v) { return l2_norm(v.data()); }

double l2_distance(const ParamVector& a, const ParamVector& b) {
  a.require_same_layout(b, "l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

ParamVector weighted_sum(std::span<const double> weights,
                         std::span<const ParamVector* const> vectors) {
  if (vectors.empty() || weights.size() != vectors.size()) {
    throw ShapeError("weighted_sum: need one weight per vector and at least one vector");
  }
  const ParamVector& first = *vectors.front();
  for (const ParamVector* v : vectors) first.require_same_layout(*v, "weighted_sum");

  ParamVector out(first.layout_ptr());
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    // Neumaier summation, agents in fixed index order.
    double sum = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      const double term = weights[j] * (*vectors[j])[i];
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        comp += (sum - t) + term;
      } else {
        comp += (term - t) + sum;
      }
      sum = t;
    }
    od[i] = sum + comp;
  }
  return out;
}

ParamVector weighted_sum(std::span<const double> weights,
                         std::span<const ParamVector> vectors) {
  std::vector<const ParamVector*> ptrs;
  ptrs.reserve(vectors.size());
  for (const ParamVector& v : vectors) ptrs.push_back(&v);
  return weighted_sum(weights, std::span<const ParamVector* const>(ptrs));
}

}  // namespace fedgan
