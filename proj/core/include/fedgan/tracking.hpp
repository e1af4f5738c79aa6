#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "fedgan/gradient_oracle.hpp"
#include "fedgan/ode.hpp"
#include "fedgan/schedule.hpp"
#include "fedgan/trajectory_log.hpp"

namespace fedgan {

/// Median of pairwise slopes (y_j - y_i) / (x_j - x_i) over i < j with x_i != x_j.
double theil_sen_slope(std::span<const double> x, std::span<const double> y);

/// Cumulative learning-rate time t(n) = sum_{m < n} a(m) for n = 0..N.
std::vector<double> rate_time(const Schedule& schedule, std::size_t N);

/// Piecewise-linear path through (t_k, z_k).
class InterpolatedPath {
 public:
  InterpolatedPath(std::vector<double> knots, std::vector<std::vector<double>> values);

  /// z_bar from the synced rows of a param-level log, with knots
  /// t(n) = sum_{m<n} a(m) at each synced step n.
  static InterpolatedPath from_log(const TrajectoryLog& log, const Schedule& schedule);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<std::vector<double>>& values() const { return values_; }
  double t_begin() const { return knots_.front(); }
  double t_end() const { return knots_.back(); }

  std::vector<double> operator()(double t) const;

 private:
  std::vector<double> knots_;
  std::vector<std::vector<double>> values_;
};

/// sup over t in [s, s + T] of ||z_bar(t) - z^s(t)||, where z^s solves the
/// ODE from z^s(s) = z_bar(s). Sampled at s, every knot inside the interval
/// and s + T.
std::vector<double> theorem1_deviation(const InterpolatedPath& path, const VectorField& q,
                                       std::span<const double> s_list, double T,
                                       const OdeOptions& opts = {});

struct Theorem1Report {
  std::vector<double> s;
  std::vector<double> deviation;
  double T = 0.0;
  double slope = 0.0;
  double last_over_first = 0.0;
  bool trend_ok = false;
  bool ratio_ok = false;

  bool satisfied() const { return trend_ok && ratio_ok; }
  void write_csv(const std::filesystem::path& path) const;
};

/// Deviations at s = q (t_end - T) for the given quantiles q, plus the
/// Theil-Sen trend and the last/first ratio against `max_ratio`.
Theorem1Report check_theorem1(const InterpolatedPath& path, const VectorField& q,
                              std::span<const double> quantiles, double T, double max_ratio,
                              const OdeOptions& opts = {});

struct LambdaOptions {
  double tol = 1e-6;
  double rate = 1.0;
  std::size_t max_iter = 20000;
};

struct LambdaResult {
  ParamVector w;
  bool converged = false;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

/// Numerical attractor lambda(theta): true-gradient ascent on w with theta
/// frozen until ||g(theta, w)|| < tol.
LambdaResult find_lambda(const GradientOracle& oracle, const ParamVector& theta,
                         const ParamVector& w_init, const LambdaOptions& opts = {});

struct TwoTimescaleRow {
  std::size_t n = 0;
  double gap = 0.0;
  bool converged = true;
  bool late = false;
};

struct TwoTimescaleReport {
  std::vector<TwoTimescaleRow> rows;
  double late_gap = 0.0;
  double trend = 0.0;
  double threshold = 0.05;
  std::size_t skipped = 0;
  bool satisfied = false;

  void write_csv(const std::filesystem::path& path) const;
};

/// Gap ||w_n - lambda(theta_n)|| at each sampled synced step; the late phase
/// is the last quarter of the samples. Satisfied iff every late sample
/// converged and its gap is below `threshold`. Throws PreconditionError
/// unless the schedule is two time-scale.
TwoTimescaleReport check_two_timescale(const GradientOracle& oracle, const Schedule& schedule,
                                       const TrajectoryLog& log,
                                       std::span<const std::size_t> sample_steps,
                                       const LambdaOptions& opts, double threshold = 0.05);

/// Evenly spaced synced steps of a log (count of them, including the last).
std::vector<std::size_t> sample_synced_steps(const TrajectoryLog& log, std::size_t count);

}  // namespace fedgan
