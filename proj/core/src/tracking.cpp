#include "fedgan/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedgan/csv.hpp"

namespace fedgan {

double theil_sen_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("theil_sen_slope: size mismatch");
  std::vector<double> slopes;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    }
  }
  if (slopes.empty()) throw std::invalid_argument("theil_sen_slope: need two distinct x values");
  std::sort(slopes.begin(), slopes.end());
  const std::size_t m = slopes.size();
  return m % 2 ? slopes[m / 2] : 0.5 * (slopes[m / 2 - 1] + slopes[m / 2]);
}

std::vector<double> rate_time(const Schedule& schedule, std::size_t N) {
  std::vector<double> t(N + 1, 0.0);
  for (std::size_t n = 1; n <= N; ++n) t[n] = t[n - 1] + schedule.a(n - 1);
  return t;
}

InterpolatedPath::InterpolatedPath(std::vector<double> knots, std::vector<std::vector<double>> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) {
    throw std::invalid_argument("InterpolatedPath: need one value per knot");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("InterpolatedPath: knots must increase");
  }
}

InterpolatedPath InterpolatedPath::from_log(const TrajectoryLog& log, const Schedule& schedule) {
  if (!log.param_level()) throw PreconditionError("interpolated path needs a param-level log");
  const auto rows = log.synced_rows();
  if (rows.empty()) throw PreconditionError("interpolated path needs synced rows");
  const std::vector<double> t = rate_time(schedule, rows.back()->step);
  std::vector<double> knots;
  std::vector<std::vector<double>> values;
  for (const LogRow* r : rows) {
    knots.push_back(t[r->step]);
    values.push_back(r->params);
  }
  return InterpolatedPath(std::move(knots), std::move(values));
}

std::vector<double> InterpolatedPath::operator()(double t) const {
  if (t < knots_.front() || t > knots_.back()) {
    throw std::out_of_range("InterpolatedPath: t = " + std::to_string(t) + " outside the path");
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.end()) return values_.back();
  const std::size_t j = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (knots_[j] == t) return values_[j];
  const double u = (t - knots_[j]) / (knots_[j + 1] - knots_[j]);
  std::vector<double> out(values_[j].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = values_[j][i] + u * (values_[j + 1][i] - values_[j][i]);
  }
  return out;
}

namespace {

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::vector<double> theorem1_deviation(const InterpolatedPath& path, const VectorField& q,
                                       std::span<const double> s_list, double T,
                                       const OdeOptions& opts) {
  if (T < 0) throw std::invalid_argument("theorem1_deviation: T must be >= 0");
  std::vector<double> out;
  for (double s : s_list) {
    if (s < path.t_begin() || s + T > path.t_end()) {
      throw std::out_of_range("theorem1_deviation: [" + std::to_string(s) + ", " +
                              std::to_string(s + T) + "] outside the trajectory's t-range");
    }
    const std::vector<double> z0 = path(s);
    if (T == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const OdeSolution sol = integrate_ode(q, z0, s, s + T, opts);
    double dev = 0.0;
    const auto& knots = path.knots();
    for (auto it = std::lower_bound(knots.begin(), knots.end(), s);
         it != knots.end() && *it <= s + T; ++it) {
      dev = std::max(dev, norm_diff(path(*it), sol(*it)));
    }
    dev = std::max(dev, norm_diff(path(s + T), sol(s + T)));
    out.push_back(dev);
  }
  return out;
}

Theorem1Report check_theorem1(const InterpolatedPath& path, const VectorField& q,
                              std::span<const double> quantiles, double T, double max_ratio,
                              const OdeOptions& opts) {
  if (quantiles.size() < 2) throw std::invalid_argument("check_theorem1: need at least two quantiles");
  const double span = path.t_end() - T - path.t_begin();
  if (span < 0) throw PreconditionError("check_theorem1: trajectory shorter than T");
  Theorem1Report r;
  r.T = T;
  for (double qt : quantiles) r.s.push_back(path.t_begin() + qt * span);
  r.deviation = theorem1_deviation(path, q, r.s, T, opts);
  r.slope = theil_sen_slope(r.s, r.deviation);
  r.last_over_first = r.deviation.front() > 0 ? r.deviation.back() / r.deviation.front() : 0.0;
  r.trend_ok = r.slope <= 0.0;
  r.ratio_ok = r.last_over_first <= max_ratio;
  return r;
}

void Theorem1Report::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.row({"s", "T", "deviation"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    w.row({format_double(s[i]), format_double(T), format_double(deviation[i])});
  }
}

LambdaResult find_lambda(const GradientOracle& oracle, const ParamVector& theta,
                         const ParamVector& w_init, const LambdaOptions& opts) {
  if (!(opts.tol > 0)) throw std::invalid_argument("find_lambda: tol must be positive");
  if (!(opts.rate > 0)) throw std::invalid_argument("find_lambda: rate must be positive");
  LambdaResult r;
  r.w = w_init;
  for (;;) {
    const GradPair gp = oracle.pooled(r.w, theta);
    r.grad_norm = l2_norm(gp.d_grad);
    if (r.grad_norm < opts.tol) {
      r.converged = true;
      return r;
    }
    if (r.iterations >= opts.max_iter) return r;
    axpy_inplace(opts.rate, gp.d_grad, r.w);
    ++r.iterations;
  }
}

std::vector<std::size_t> sample_synced_steps(const TrajectoryLog& log, std::size_t count) {
  const auto rows = log.synced_rows();
  if (rows.empty() || count == 0) return {};
  std::vector<std::size_t> out;
  const std::size_t m = rows.size();
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = count == 1 ? m - 1 : (k * (m - 1)) / (count - 1);
    if (out.empty() || out.back() != rows[idx]->step) out.push_back(rows[idx]->step);
  }
  return out;
}

TwoTimescaleReport check_two_timescale(const GradientOracle& oracle, const Schedule& schedule,
                                       const TrajectoryLog& log,
                                       std::span<const std::size_t> sample_steps,
                                       const LambdaOptions& opts, double threshold) {
  if (schedule.mode != ScheduleMode::kTwoTimescale) {
    throw PreconditionError("check_two_timescale needs a two time-scale schedule (b = o(a))");
  }
  if (!log.param_level()) throw PreconditionError("check_two_timescale needs a param-level log");
  if (sample_steps.empty()) throw std::invalid_argument("check_two_timescale: no sample steps");
  const auto synced = log.synced_rows();
  TwoTimescaleReport rep;
  rep.threshold = threshold;
  const std::size_t late_from = sample_steps.size() - std::max<std::size_t>(1, sample_steps.size() / 4);
  std::vector<double> late_x, late_y;
  bool late_ok = true;
  for (std::size_t k = 0; k < sample_steps.size(); ++k) {
    const std::size_t n = sample_steps[k];
    const auto it = std::find_if(synced.begin(), synced.end(), [n](const LogRow* r) { return r->step == n; });
    if (it == synced.end()) throw PreconditionError("no synced row at step " + std::to_string(n));
    const auto [w, theta] = log.split(**it, oracle.model().discriminator.layout(),
                                      oracle.model().generator.layout());
    const LambdaResult lam = find_lambda(oracle, theta, w, opts);
    TwoTimescaleRow row;
    row.n = n;
    row.converged = lam.converged;
    row.gap = l2_distance(w, lam.w);
    row.late = k >= late_from;
    if (!lam.converged) ++rep.skipped;
    if (row.late) {
      if (!lam.converged) {
        late_ok = false;
      } else {
        rep.late_gap = std::max(rep.late_gap, row.gap);
        late_x.push_back(static_cast<double>(n));
        late_y.push_back(row.gap);
      }
    }
    rep.rows.push_back(row);
  }
  rep.trend = late_x.size() >= 2 ? theil_sen_slope(late_x, late_y) : 0.0;
  rep.satisfied = late_ok && !late_x.empty() && rep.late_gap < threshold;
  return rep;
}

void TwoTimescaleReport::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.row({"n", "gap", "converged", "late"});
  for (const auto& r : rows) {
    w.row({std::to_string(r.n), format_double(r.gap), r.converged ? "1" : "0", r.late ? "1" : "0"});
  }
}

}  // namespace fedgan
