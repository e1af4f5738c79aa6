#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace fedgan {

enum class ScheduleMode { kEqual, kTwoTimescale };

std::string_view to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(std::string_view text);

/// Rates of the family a(n) = a0 / (1 + n / tau)^p_a and b(n) = b0 / (1 + n / tau)^p_b,
/// plus the synchronization interval K. Rates used by step n are frozen at the
/// start of the K-window containing n - 1.
struct Schedule {
  ScheduleMode mode = ScheduleMode::kEqual;
  double a0 = 0.1;
  double b0 = 0.1;
  double tau = 1000.0;
  double p_a = 0.6;
  double p_b = 0.6;
  std::size_t K = 1;

  /// Raw family values, not window-frozen.
  double a_raw(std::size_t n) const;
  double b_raw(std::size_t n) const;

  /// First index of the K-window containing n.
  std::size_t window_start(std::size_t n) const { return (n / K) * K; }

  /// Rates applied by the update that produces step n + 1.
  double a(std::size_t n) const { return a_raw(window_start(n)); }
  double b(std::size_t n) const { return b_raw(window_start(n)); }

  static Schedule equal(double a0, double tau, double p, std::size_t K);
  static Schedule two_timescale(double a0, double b0, double tau, double p_a, double p_b,
                                std::size_t K);
};

/// True iff p_a, p_b lie in (0.5, 1] and, for two time-scale schedules,
/// p_b > p_a. Equal mode additionally requires a0 == b0 and p_a == p_b.
/// Throws std::invalid_argument for parameters outside the family
/// (non-positive a0, b0, tau or K == 0).
bool validate_schedule(const Schedule& s);

/// Human-readable reason validate_schedule returned false, or empty.
std::string schedule_problem(const Schedule& s);

}  // namespace fedgan
