#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedgan/gradient_oracle.hpp"

namespace fedgan {

using VectorField = std::function<std::vector<double>(std::span<const double>)>;

/// Thrown when step halving cannot reach the requested tolerance.
class StepUnderflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double tol = 1e-6;
  /// Largest step tried first; halved until two successive solutions agree.
  double h0 = 0.25;
  std::size_t max_halvings = 16;
};

/// Classical RK4 on a uniform grid from t0 to t1 (t1 may be below t0).
/// Returns the states at every grid point; `derivs` receives q at each node.
std::vector<std::vector<double>> rk4_grid(const VectorField& q, std::vector<double> z0, double t0,
                                          double t1, std::size_t steps,
                                          std::vector<std::vector<double>>* derivs = nullptr);

/// Forward Euler with `steps` uniform steps; returns the final state.
std::vector<double> euler_solve(const VectorField& q, std::vector<double> z0, double t0, double t1,
                                std::size_t steps);

/// Dense RK4 solution with cubic Hermite interpolation between grid nodes.
class OdeSolution {
 public:
  OdeSolution() = default;
  OdeSolution(double t0, double t1, std::vector<std::vector<double>> states,
              std::vector<std::vector<double>> derivs);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  /// Signed grid step.
  double step() const { return h_; }
  std::size_t steps() const { return states_.size() - 1; }
  const std::vector<double>& final_state() const { return states_.back(); }

  /// State at t, which must lie between t0 and t1.
  std::vector<double> operator()(double t) const;

 private:
  double t0_ = 0.0;
  double t1_ = 0.0;
  double h_ = 0.0;
  std::vector<std::vector<double>> states_;
  std::vector<std::vector<double>> derivs_;
};

/// Integrates z' = q(z) from z0 at t0 to t1 with RK4, halving the step until
/// the sup-norm difference between successive solutions on the coarse grid
/// is below tol. Returns the finer solution.
OdeSolution integrate_ode(const VectorField& q, std::vector<double> z0, double t0, double t1,
                          const OdeOptions& opts = {});

/// Same for the mean-field GAN dynamics z = (w, theta), q(z) = (g, h).
OdeSolution integrate_ode(const GradientOracle& oracle, const ParamVector& w0,
                          const ParamVector& theta0, double t0, double t1,
                          const OdeOptions& opts = {});

}  // namespace fedgan
