#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedgan/constants.hpp"
#include "fedgan/datasets.hpp"
#include "fedgan/gradient_oracle.hpp"
#include "fedgan/schedule.hpp"
#include "fedgan/trajectory_log.hpp"

namespace fedgan {

/// r1(n) = (sigma_g + mu_g + sigma_h) / (2L) * ((1 + 2 a L)^(n mod K) - 1).
double lemma1_bound(const EstimatedConstants& c, double a_window, std::size_t n, std::size_t K);
/// r2 = (sigma_g + sigma_h + mu_g) / (2L) * ((1 + 2 a L)^K - 1) - a mu_g K.
double lemma2_bound(const EstimatedConstants& c, double a_window, std::size_t K);

/// Centralized true-gradient recursion started from the synced state at n1:
/// v_{k+1} = v_k + a g(phi_k, v_k), phi_{k+1} = phi_k + b h(phi_k, v_k).
struct WindowTrajectory {
  std::size_t n1 = 0;
  std::vector<ParamVector> v;
  std::vector<ParamVector> phi;
};

WindowTrajectory window_trajectory(const GradientOracle& oracle, const Schedule& schedule,
                                   const ParamVector& w_n1, const ParamVector& theta_n1,
                                   std::size_t n1);

struct LemmaOptions {
  std::size_t mc_runs = 32;
  double slack = 0.05;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
};

enum class LemmaVerdict { kSatisfied, kConstantsUnderestimated, kViolated };
std::string_view to_string(LemmaVerdict v);

struct LemmaRow {
  std::size_t lemma = 1;
  std::size_t n = 0;
  std::size_t n1 = 0;
  double lhs = 0.0;
  double bound = 0.0;
  /// Bound with all constants inflated 2x.
  double bound_inflated = 0.0;
  bool ok = true;
  bool ok_inflated = true;
};

struct LemmaReport {
  std::vector<LemmaRow> rows;
  EstimatedConstants constants;
  double slack = 0.05;
  std::size_t mc_runs = 0;
  std::size_t windows = 0;
  bool lemma1_satisfied = true;
  bool lemma2_satisfied = true;
  LemmaVerdict verdict = LemmaVerdict::kSatisfied;

  bool satisfied() const { return lemma1_satisfied && lemma2_satisfied; }
  void write_csv(const std::filesystem::path& path) const;
  /// One line: satisfied,verdict,slack,mc_runs,windows,L,sigma_g,sigma_h,mu_g,...
  void write_summary_csv(const std::filesystem::path& path) const;
};

/// Checks Lemma 1 at every in-window n in [n1, n1 + K) and Lemma 2 at the
/// window end n1 + K for `windows` consecutive windows starting at
/// first_window (a multiple of K). Expectations are estimated by mc_runs
/// replays of each window from the logged synced state with fresh noise.
LemmaReport check_lemmas(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t first_window, std::size_t windows, const LemmaOptions& opts);

/// Single-window forms.
LemmaReport check_lemma1(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t n1, const LemmaOptions& opts);
LemmaReport check_lemma2(const GradientOracle& oracle, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const TrajectoryLog& log, const EstimatedConstants& consts,
                         std::size_t n1, const LemmaOptions& opts);

}  // namespace fedgan
