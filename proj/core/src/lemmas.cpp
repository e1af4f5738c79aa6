#include "fedgan/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedgan/csv.hpp"
#include "fedgan/federation.hpp"

namespace fedgan {

namespace {

void require_positive_L(const EstimatedConstants& c) {
  if (!(c.L > 0)) throw std::invalid_argument("lemma bound: L must be positive");
}

}  // namespace

double lemma1_bound(const EstimatedConstants& c, double a_window, std::size_t n, std::size_t K) {
  require_positive_L(c);
  if (K == 0) throw std::invalid_argument("lemma1_bound: K must be >= 1");
  const double growth = std::pow(1.0 + 2.0 * a_window * c.L, static_cast<double>(n % K)) - 1.0;
  return (c.sigma_g + c.mu_g + c.sigma_h) / (2.0 * c.L) * growth;
}

double lemma2_bound(const EstimatedConstants& c, double a_window, std::size_t K) {
  require_positive_L(c);
  const double growth = std::pow(1.0 + 2.0 * a_window * c.L, static_cast<double>(K)) - 1.0;
  return (c.sigma_g + c.sigma_h + c.mu_g) / (2.0 * c.L) * growth -
         a_window * c.mu_g * static_cast<double>(K);
}

std::string_view to_string(LemmaVerdict v) {
  switch (v) {
    case LemmaVerdict::kSatisfied: return "satisfied";
    case LemmaVerdict::kConstantsUnderestimated: return "constants_underestimated";
    case LemmaVerdict::kViolated: return "violated";
  }
  return "unknown";
}

WindowTrajectory window_trajectory(const GradientOracle& oracle, const Schedule& schedule,
                                   const ParamVector& w_n1, const ParamVector& theta_n1,
                                   std::size_t n1) {
  WindowTrajectory t;
  t.n1 = n1;
  t.v.push_back(w_n1);
  t.phi.push_back(theta_n1);
  const double a = schedule.a(n1), b = schedule.b(n1);
  for (std::size_t k = 0; k < schedule.K; ++k) {
    const GradPair gp = oracle.pooled(t.v.back(), t.phi.back());
    t.v.push_back(axpy(a, gp.d_grad, t.v.back()));
    t.phi.push_back(axpy(b, gp.g_grad, t.phi.back()));
  }
  return t;
}

namespace {

const LogRow& synced_row_at(const TrajectoryLog& log, std::size_t n) {
  for (const LogRow* r : log.synced_rows()) {
    if (r->step == n) return *r;
  }
  throw PreconditionError("no synced row logged at step " + std::to_string(n) +
                          " (record every sync step with stride 1)");
}

struct WindowStats {
  std::vector<double> lemma1_lhs;  // k = 0..K-1, max over agents
  double lemma2_lhs = 0.0;
};

WindowStats window_stats(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, std::size_t n1, const LemmaOptions& opts) {
  if (n1 % schedule.K != 0) {
    throw PreconditionError("window start " + std::to_string(n1) + " is not aligned to K = " +
                            std::to_string(schedule.K));
  }
  if (!log.param_level()) throw PreconditionError("lemma checks need a param-level log");
  if (opts.mc_runs < 32) throw std::invalid_argument("lemma checks need at least 32 replays");
  const LogRow& row = synced_row_at(log, n1);
  const auto [w0, th0] = log.split(row, oracle.model().discriminator.layout(),
                                   oracle.model().generator.layout());
  const WindowTrajectory vt = window_trajectory(oracle, schedule, w0, th0, n1);
  const std::size_t K = schedule.K;
  const std::size_t B = partition.agents();

  std::vector<std::vector<double>> per_agent(K, std::vector<double>(B, 0.0));
  double avg_sum = 0.0;
  for (std::size_t r = 0; r < opts.mc_runs; ++r) {
    const WindowReplay rep =
        replay_window(oracle.model(), oracle.loss(), data, partition, schedule, w0, th0, n1,
                      opts.batch, derive_seed(opts.seed, {stream::kReplay, n1, r}));
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < B; ++i) {
        per_agent[k][i] += l2_distance(rep.agent_d[k][i], vt.v[k]) + l2_distance(rep.agent_g[k][i], vt.phi[k]);
      }
    }
    avg_sum += l2_distance(rep.avg_d, vt.v[K]) + l2_distance(rep.avg_g, vt.phi[K]);
  }
  WindowStats s;
  const auto runs = static_cast<double>(opts.mc_runs);
  for (std::size_t k = 0; k < K; ++k) {
    s.lemma1_lhs.push_back(*std::max_element(per_agent[k].begin(), per_agent[k].end()) / runs);
  }
  s.lemma2_lhs = avg_sum / runs;
  return s;
}

void finish(LemmaReport& rep) {
  bool inflated_ok = true;
  for (const LemmaRow& r : rep.rows) {
    if (!r.ok) (r.lemma == 1 ? rep.lemma1_satisfied : rep.lemma2_satisfied) = false;
    inflated_ok = inflated_ok && r.ok_inflated;
  }
  if (rep.satisfied()) {
    rep.verdict = LemmaVerdict::kSatisfied;
  } else {
    rep.verdict = inflated_ok ? LemmaVerdict::kConstantsUnderestimated : LemmaVerdict::kViolated;
  }
}

LemmaReport run_checks(const GradientOracle& oracle, const Dataset& data,
                       const Partition& partition, const Schedule& schedule,
                       const TrajectoryLog& log, const EstimatedConstants& consts,
                       std::size_t first_window, std::size_t windows, const LemmaOptions& opts,
                       bool lemma1, bool lemma2) {
  require_positive_L(consts);
  const EstimatedConstants big = consts.inflated(2.0);
  const std::size_t K = schedule.K;
  LemmaReport rep;
  rep.constants = consts;
  rep.slack = opts.slack;
  rep.mc_runs = opts.mc_runs;
  rep.windows = windows;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t n1 = first_window + w * K;
    const WindowStats s = window_stats(oracle, data, partition, schedule, log, n1, opts);
    const double a = schedule.a(n1);
    if (lemma1) {
      for (std::size_t k = 0; k < K; ++k) {
        LemmaRow r;
        r.lemma = 1;
        r.n = n1 + k;
        r.n1 = n1;
        r.lhs = s.lemma1_lhs[k];
        r.bound = lemma1_bound(consts, a, r.n, K);
        r.bound_inflated = lemma1_bound(big, a, r.n, K);
        r.ok = r.lhs <= r.bound * (1.0 + opts.slack);
        r.ok_inflated = r.lhs <= r.bound_inflated * (1.0 + opts.slack);
        rep.rows.push_back(r);
      }
    }
    if (lemma2) {
      LemmaRow r;
      r.lemma = 2;
      r.n = n1 + K;
      r.n1 = n1;
      r.lhs = s.lemma2_lhs;
      r.bound = lemma2_bound(consts, a, K);
      r.bound_inflated = lemma2_bound(big, a, K);
      r.ok = r.lhs <= r.bound * (1.0 + opts.slack);
      r.ok_inflated = r.lhs <= r.bound_inflated * (1.0 + opts.slack);
      rep.rows.push_back(r);
    }
  }
  finish(rep);
  return rep;
}

}  // namespace

LemmaReport check_lemmas(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t first_window, std::size_t windows, const LemmaOptions& opts) {
  return run_checks(oracle, data, partition, schedule, log, consts, first_window, windows, opts,
                    true, true);
}

LemmaReport check_lemma1(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t n1, const LemmaOptions& opts) {
  return run_checks(oracle, data, partition, schedule, log, consts, n1, 1, opts, true, false);
}

LemmaReport check_lemma2(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t n1, const LemmaOptions& opts) {
  return run_checks(oracle, data, partition, schedule, log, consts, n1, 1, opts, false, true);
}

void LemmaReport::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.row({"lemma", "n", "n1", "lhs", "bound", "bound_inflated", "ok", "ok_inflated"});
  for (const LemmaRow& r : rows) {
    w.row({std::to_string(r.lemma), std::to_string(r.n), std::to_string(r.n1), format_double(r.lhs),
           format_double(r.bound), format_double(r.bound_inflated), r.ok ? "1" : "0",
           r.ok_inflated ? "1" : "0"});
  }
}

void LemmaReport::write_summary_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.row({"satisfied", "verdict", "slack", "mc_runs", "windows", "L", "sigma_g", "sigma_h", "mu_g",
         "n_probes", "noise_batches", "batch", "region_diameter"});
  w.row({satisfied() ? "1" : "0", std::string(to_string(verdict)), format_double(slack),
         std::to_string(mc_runs), std::to_string(windows), format_double(constants.L),
         format_double(constants.sigma_g), format_double(constants.sigma_h),
         format_double(constants.mu_g), std::to_string(constants.n_probes),
         std::to_string(constants.noise_batches), std::to_string(constants.batch),
         format_double(constants.region.diameter())});
}

}  // namespace fedgan
