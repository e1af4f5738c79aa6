#include "fedgan/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace fedgan {

std::string_view to_string(ScheduleMode mode) {
  return mode == ScheduleMode::kEqual ? "equal" : "two_timescale";
}

ScheduleMode parse_schedule_mode(std::string_view text) {
  if (text == "equal") return ScheduleMode::kEqual;
  if (text == "two_timescale") return ScheduleMode::kTwoTimescale;
  throw std::invalid_argument("unknown schedule mode '" + std::string(text) + "'");
}

double Schedule::a_raw(std::size_t n) const {
  return a0 / std::pow(1.0 + static_cast<double>(n) / tau, p_a);
}

double Schedule::b_raw(std::size_t n) const {
  if (mode == ScheduleMode::kEqual) return a_raw(n);
  return b0 / std::pow(1.0 + static_cast<double>(n) / tau, p_b);
}

Schedule Schedule::equal(double a0, double tau, double p, std::size_t K) {
  Schedule s;
  s.mode = ScheduleMode::kEqual;
  s.a0 = s.b0 = a0;
  s.tau = tau;
  s.p_a = s.p_b = p;
  s.K = K;
  return s;
}

Schedule Schedule::two_timescale(double a0, double b0, double tau, double p_a, double p_b,
                                 std::size_t K) {
  Schedule s;
  s.mode = ScheduleMode::kTwoTimescale;
  s.a0 = a0;
  s.b0 = b0;
  s.tau = tau;
  s.p_a = p_a;
  s.p_b = p_b;
  s.K = K;
  return s;
}

std::string schedule_problem(const Schedule& s) {
  if (!(s.a0 > 0) || !(s.b0 > 0) || !(s.tau > 0) || s.K == 0 || !std::isfinite(s.p_a) ||
      !std::isfinite(s.p_b)) {
    throw std::invalid_argument(
        "schedule outside the supported family a0/(1+n/tau)^p: need a0, b0, tau > 0 and K >= 1");
  }
  auto in_range = [](double p) { return p > 0.5 && p <= 1.0; };
  if (!in_range(s.p_a)) return "p_a must lie in (0.5, 1] so that sum a = inf and sum a^2 < inf";
  if (!in_range(s.p_b)) return "p_b must lie in (0.5, 1] so that sum b = inf and sum b^2 < inf";
  if (s.mode == ScheduleMode::kEqual) {
    if (s.p_a != s.p_b || s.a0 != s.b0) return "equal mode requires a0 == b0 and p_a == p_b";
  } else if (!(s.p_b > s.p_a)) {
    return "two time-scale mode requires p_b > p_a so that b(n) = o(a(n))";
  }
  return {};
}

bool validate_schedule(const Schedule& s) { return schedule_problem(s).empty(); }

}  // namespace fedgan
