#include "fedgan/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedgan {

namespace {

void add_scaled(std::vector<double>& out, const std::vector<double>& z, double s,
                const std::vector<double>& k) {
  out.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] + s * k[i];
}

std::vector<double> eval(const VectorField& q, const std::vector<double>& z) {
  std::vector<double> d = q(z);
  if (d.size() != z.size()) throw ShapeError("vector field returned the wrong dimension");
  for (double v : d) {
    if (!std::isfinite(v)) throw NonFiniteError("vector field returned a non-finite value");
  }
  return d;
}

}  // namespace

std::vector<std::vector<double>> rk4_grid(const VectorField& q, std::vector<double> z0, double t0,
                                          double t1, std::size_t steps,
                                          std::vector<std::vector<double>>* derivs) {
  if (steps == 0) throw std::invalid_argument("rk4_grid: steps must be >= 1");
  const double h = (t1 - t0) / static_cast<double>(steps);
  std::vector<std::vector<double>> out;
  out.reserve(steps + 1);
  if (derivs) {
    derivs->clear();
    derivs->reserve(steps + 1);
  }
  std::vector<double> z = std::move(z0), tmp;
  out.push_back(z);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::vector<double> k1 = eval(q, z);
    if (derivs) derivs->push_back(k1);
    add_scaled(tmp, z, 0.5 * h, k1);
    const std::vector<double> k2 = eval(q, tmp);
    add_scaled(tmp, z, 0.5 * h, k2);
    const std::vector<double> k3 = eval(q, tmp);
    add_scaled(tmp, z, h, k3);
    const std::vector<double> k4 = eval(q, tmp);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out.push_back(z);
  }
  if (derivs) derivs->push_back(eval(q, z));
  return out;
}

std::vector<double> euler_solve(const VectorField& q, std::vector<double> z0, double t0, double t1,
                                std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("euler_solve: steps must be >= 1");
  const double h = (t1 - t0) / static_cast<double>(steps);
  std::vector<double> z = std::move(z0);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::vector<double> k = eval(q, z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += h * k[i];
  }
  return z;
}

OdeSolution::OdeSolution(double t0, double t1, std::vector<std::vector<double>> states,
                         std::vector<std::vector<double>> derivs)
    : t0_(t0), t1_(t1), states_(std::move(states)), derivs_(std::move(derivs)) {
  if (states_.size() < 2 || derivs_.size() != states_.size()) {
    throw std::invalid_argument("OdeSolution: need at least two nodes with derivatives");
  }
  h_ = (t1_ - t0_) / static_cast<double>(states_.size() - 1);
}

std::vector<double> OdeSolution::operator()(double t) const {
  const double lo = std::min(t0_, t1_), hi = std::max(t0_, t1_);
  const double eps = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (t < lo - eps || t > hi + eps) {
    throw std::out_of_range("OdeSolution: t = " + std::to_string(t) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (h_ == 0.0) return states_.front();
  const double x = std::clamp((t - t0_) / h_, 0.0, static_cast<double>(steps()));
  auto j = static_cast<std::size_t>(std::floor(x));
  if (j >= steps()) j = steps() - 1;
  const double u = x - static_cast<double>(j);
  if (u == 0.0) return states_[j];
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  const auto& a = states_[j];
  const auto& b = states_[j + 1];
  const auto& da = derivs_[j];
  const auto& db = derivs_[j + 1];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = h00 * a[i] + h10 * h_ * da[i] + h01 * b[i] + h11 * h_ * db[i];
  }
  return out;
}

OdeSolution integrate_ode(const VectorField& q, std::vector<double> z0, double t0, double t1,
                          const OdeOptions& opts) {
  if (!(opts.tol > 0)) throw std::invalid_argument("integrate_ode: tol must be positive");
  if (!(opts.h0 > 0)) throw std::invalid_argument("integrate_ode: h0 must be positive");
  const double span = std::abs(t1 - t0);
  if (span == 0.0) {
    std::vector<std::vector<double>> d;
    auto states = rk4_grid(q, z0, t0, t0, 1, &d);
    return OdeSolution(t0, t1, std::move(states), std::move(d));
  }
  std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / opts.h0)));
  std::vector<std::vector<double>> coarse = rk4_grid(q, z0, t0, t1, steps);
  for (std::size_t halving = 0; halving < opts.max_halvings; ++halving) {
    std::vector<std::vector<double>> derivs;
    std::vector<std::vector<double>> fine = rk4_grid(q, z0, t0, t1, 2 * steps, &derivs);
    double diff = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      for (std::size_t i = 0; i < z0.size(); ++i) {
        diff = std::max(diff, std::abs(fine[2 * j][i] - coarse[j][i]));
      }
    }
    if (diff < opts.tol) return OdeSolution(t0, t1, std::move(fine), std::move(derivs));
    coarse = std::move(fine);
    steps *= 2;
  }
  throw StepUnderflowError("integrate_ode: no convergence to tol " + std::to_string(opts.tol) +
                           " after " + std::to_string(opts.max_halvings) + " halvings");
}

OdeSolution integrate_ode(const GradientOracle& oracle, const ParamVector& w0,
                          const ParamVector& theta0, double t0, double t1, const OdeOptions& opts) {
  const VectorField q = [&oracle](std::span<const double> z) { return oracle.field(z); };
  return integrate_ode(q, oracle.stack(w0, theta0), t0, t1, opts);
}

}  // namespace fedgan
