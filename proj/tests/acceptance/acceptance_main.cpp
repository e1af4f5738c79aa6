// End-to-end acceptance suite. Drives the fedgan executable on the built-in
// presets, then re-derives every verdict from the written CSV files with
// arithmetic that does not go through the tool's own pass/fail columns.
// Prints one PASS/FAIL line per criterion and exits 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedgan/csv.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/network.hpp"
#include "fedgan/ode.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace fedgan;

namespace {

constexpr const char* kMarker = ".fedgan_acceptance";

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct ToolRun {
  int code = -1;
  double seconds = 0.0;
};

class Suite {
 public:
  explicit Suite(fs::path work) : work_(std::move(work)) {}

  const fs::path& work() const { return work_; }

  ToolRun tool(const std::string& args, const std::string& log_name) {
    const fs::path log = work_ / "logs" / (log_name + ".log");
    fs::create_directories(log.parent_path());
    const std::string cmd = std::string("\"") + FEDGAN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = std::system(cmd.c_str());
    ToolRun r;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
  }

  /// Trains a preset once; later calls return the first result.
  const ToolRun& run_preset(const std::string& preset) {
    auto it = runs_.find(preset);
    if (it != runs_.end()) return it->second;
    const ToolRun r = tool("run --preset " + preset + " --out \"" + bundle(preset).string() + "\"", "run-" + preset);
    return runs_.emplace(preset, r).first->second;
  }

  fs::path bundle(const std::string& preset) const { return work_ / preset; }

 private:
  fs::path work_;
  std::map<std::string, ToolRun> runs_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t k = t.column("key"), v = t.column("value");
  std::map<std::string, std::string> out;
  for (const auto& row : t.rows) out[row[k]] = row[v];
  return out;
}

std::map<std::string, double> read_metrics(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t k = t.column("metric"), v = t.column("value");
  std::map<std::string, double> out;
  for (const auto& row : t.rows) out[row[k]] = parse_double(row[v]);
  return out;
}

/// (psi, theta) of the last synced row of a 2D trajectory.
std::optional<std::pair<double, double>> final_synced_2d(const fs::path& trajectory) {
  const CsvTable t = read_csv(trajectory);
  const std::size_t c_agent = t.column("agent_id"), c_psi = t.column("param_0"), c_theta = t.column("param_1");
  for (auto it = t.rows.rbegin(); it != t.rows.rend(); ++it) {
    if ((*it)[c_agent] == "synced") return std::make_pair(parse_double((*it)[c_psi]), parse_double((*it)[c_theta]));
  }
  return std::nullopt;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pairwise_slope_median(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> slopes;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
  return median(slopes);
}

double percentile_linear(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Convergence of one 2D preset: synced (theta, psi) near (1, 0) within the time budget.
Verdict check_2d_run(Suite& s, const std::string& preset) {
  const ToolRun& r = s.run_preset(preset);
  if (r.code != 0) return {false, preset + ": run exited " + std::to_string(r.code)};
  const auto kv = read_key_values(s.bundle(preset) / "summary.csv");
  const std::size_t N = std::stoull(kv.at("N"));
  const auto z = final_synced_2d(s.bundle(preset) / "trajectory.csv");
  if (!z) return {false, preset + ": no synced row"};
  const double linf = std::max(std::abs(z->second - 1.0), std::abs(z->first));
  const bool ok = linf <= 0.05 && r.seconds < 60.0 && N == 10000;
  return {ok, preset + " linf=" + fmt(linf) + " t=" + fmt(r.seconds) + "s"};
}

Verdict criterion1(Suite& s) {
  Verdict v{true, ""};
  for (const char* p : {"2d-k1", "2d-k5", "2d-k20", "2d-k50"}) {
    const Verdict one = check_2d_run(s, p);
    v.pass &= one.pass;
    v.detail += (v.detail.empty() ? "" : "; ") + one.detail;
  }
  return v;
}

Verdict criterion2(Suite& s) {
  const Verdict equal = check_2d_run(s, "2d-k5");
  const Verdict tts = check_2d_run(s, "2d-k5-tts");
  const ToolRun vr = s.tool("verify \"" + s.bundle("2d-k5-tts").string() + "\" --check two-timescale", "verify-tts");
  std::string detail = equal.detail + "; " + tts.detail + "; verify exit " + std::to_string(vr.code);
  const fs::path csv = s.bundle("2d-k5-tts") / "two_timescale.csv";
  if (!fs::exists(csv)) return {false, detail + "; two_timescale.csv missing"};
  const CsvTable t = read_csv(csv);
  const std::size_t c_gap = t.column("gap"), c_conv = t.column("converged"), c_late = t.column("late");
  double late_gap = 0.0;
  std::size_t late = 0;
  bool converged = true;
  for (const auto& row : t.rows) {
    if (row[c_late] != "1") continue;
    ++late;
    converged &= row[c_conv] == "1";
    late_gap = std::max(late_gap, parse_double(row[c_gap]));
  }
  detail += "; late samples=" + std::to_string(late) + " max late gap=" + fmt(late_gap);
  return {equal.pass && tts.pass && vr.code == 0 && late > 0 && converged && late_gap < 0.05, detail};
}

Verdict criterion3(Suite& s) {
  if (s.run_preset("2d-k5").code != 0) return {false, "2d-k5 run failed"};
  const ToolRun vr = s.tool("verify \"" + s.bundle("2d-k5").string() + "\" --check lemmas", "verify-lemmas");
  const fs::path csv = s.bundle("2d-k5") / "lemmas.csv";
  if (!fs::exists(csv)) return {false, "lemmas.csv missing, verify exit " + std::to_string(vr.code)};
  const CsvTable t = read_csv(csv);
  const std::size_t c_lemma = t.column("lemma"), c_n = t.column("n"), c_n1 = t.column("n1");
  const std::size_t c_lhs = t.column("lhs"), c_bound = t.column("bound");
  const std::size_t K = 5;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> windows;  // n1 -> (lemma1 rows, lemma2 rows)
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& row : t.rows) {
    const std::size_t lemma = std::stoull(row[c_lemma]), n = std::stoull(row[c_n]), n1 = std::stoull(row[c_n1]);
    const double lhs = parse_double(row[c_lhs]), bound = parse_double(row[c_bound]);
    const bool placed = lemma == 1 ? (n >= n1 && n < n1 + K) : (n == n1 + K);
    if (!placed || lhs > bound * 1.05) ++violations;
    if (bound > 0) worst = std::max(worst, lhs / bound);
    auto& w = windows[n1];
    (lemma == 1 ? w.first : w.second)++;
  }
  std::size_t run = 0, best = 0;
  std::optional<std::size_t> prev;
  for (const auto& [n1, counts] : windows) {
    const bool complete = counts.first == K && counts.second == 1;
    run = complete && prev && n1 == *prev + K ? run + 1 : (complete ? 1 : 0);
    best = std::max(best, run);
    prev = n1;
  }
  return {vr.code == 0 && violations == 0 && best >= 20,
          "consecutive windows=" + std::to_string(best) + " violations=" + std::to_string(violations) +
              " max lhs/bound=" + fmt(worst) + " verify exit " + std::to_string(vr.code)};
}

Verdict criterion4(Suite& s) {
  if (s.run_preset("2d-k5").code != 0) return {false, "2d-k5 run failed"};
  const ToolRun vr = s.tool("verify \"" + s.bundle("2d-k5").string() + "\" --check theorem1", "verify-theorem1");
  const fs::path csv = s.bundle("2d-k5") / "theorem1.csv";
  if (!fs::exists(csv)) return {false, "theorem1.csv missing, verify exit " + std::to_string(vr.code)};
  const CsvTable t = read_csv(csv);
  std::vector<double> x, y;
  bool horizon = true;
  for (const auto& row : t.rows) {
    x.push_back(parse_double(row[t.column("s")]));
    y.push_back(parse_double(row[t.column("deviation")]));
    horizon &= parse_double(row[t.column("T")]) == 50.0;
  }
  if (y.size() != 4) return {false, "expected 4 quantile points, got " + std::to_string(y.size())};
  const double slope = pairwise_slope_median(x, y);
  const double ratio = y.back() / y.front();
  return {vr.code == 0 && horizon && slope <= 0.0 && ratio <= 0.25,
          "deviations " + fmt(y[0]) + "," + fmt(y[1]) + "," + fmt(y[2]) + "," + fmt(y[3]) + " slope=" + fmt(slope) +
              " last/first=" + fmt(ratio) + " verify " + fmt(vr.seconds) + "s"};
}

/// Runs a preset and scores it; returns the metric table (empty on failure).
std::map<std::string, double> scored(Suite& s, const std::string& preset, double* seconds, std::string* why) {
  const ToolRun& r = s.run_preset(preset);
  if (r.code != 0) {
    *why = preset + " run exited " + std::to_string(r.code);
    return {};
  }
  const ToolRun m = s.tool("metrics \"" + s.bundle(preset).string() + "\"", "metrics-" + preset);
  if (seconds) *seconds = r.seconds + m.seconds;
  if (!fs::exists(s.bundle(preset) / "metrics.csv")) {
    *why = preset + " metrics exited " + std::to_string(m.code);
    return {};
  }
  return read_metrics(s.bundle(preset) / "metrics.csv");
}

Verdict criterion5(Suite& s) {
  double seconds = 0.0;
  std::string why;
  const auto m = scored(s, "gauss8-b4-k5", &seconds, &why);
  if (m.empty()) return {false, why};
  const double modes = m.at("modes_hit"), hq = m.at("high_quality_fraction");
  const double mmd = m.at("mmd2"), null = m.at("mmd2_null");
  const bool ok = modes >= 7 && hq >= 0.75 && mmd <= 3.0 * null && seconds < 600.0;
  return {ok, "modes_hit=" + fmt(modes) + " high_quality=" + fmt(hq) + " mmd2=" + fmt(mmd) +
                  " (limit " + fmt(3.0 * null) + ") t=" + fmt(seconds) + "s"};
}

Verdict criterion6(Suite& s) {
  std::string why;
  double seconds = 0.0;
  const auto m = scored(s, "swiss-b4-k5", &seconds, &why);
  if (m.empty()) return {false, why};
  const double mmd = m.at("mmd2"), null = m.at("mmd2_null");
  return {mmd <= 3.0 * null, "mmd2=" + fmt(mmd) + " (limit " + fmt(3.0 * null) + ") t=" + fmt(seconds) + "s"};
}

Verdict criterion7(Suite& s) {
  const std::vector<std::string> presets = {"2d-k1",        "2d-k5",       "2d-k20",         "2d-k50",
                                            "2d-k5-tts",    "gauss8-b4-k5", "swiss-b4-k5", "profiles-b5-k20"};
  Verdict v{true, ""};
  std::size_t checked = 0;
  for (const std::string& p : presets) {
    if (s.run_preset(p).code != 0) {
      v.pass = false;
      v.detail += p + " run failed; ";
      continue;
    }
    const CsvTable c = read_csv(s.bundle(p) / "comm.csv");
    const auto& row = c.rows.at(0);
    const std::uint64_t md = std::stoull(row[c.column("M_d")]), mg = std::stoull(row[c.column("M_g")]);
    const std::uint64_t B = std::stoull(row[c.column("B")]), K = std::stoull(row[c.column("K")]);
    const auto kv = read_key_values(s.bundle(p) / "summary.csv");
    const std::uint64_t steps = std::stoull(kv.at("N")) - 1;
    const std::uint64_t expected = (steps / K) * B * 2 * (md + mg);
    const std::uint64_t reported = std::stoull(row[c.column("total_scalars")]);
    const std::uint64_t logged = std::stoull(row[c.column("logged_cum_scalars")]);
    const CsvTable traj = read_csv(s.bundle(p) / "trajectory.csv");
    const std::uint64_t last_logged = std::stoull(traj.rows.back()[traj.column("cum_scalars")]);
    bool ok = expected == reported && expected == logged && expected == last_logged;
    const std::string central = row[c.column("centralized_logged_cum_scalars")];
    if (!central.empty()) ok &= std::stoull(central) == steps * B * 2 * (md + mg);
    if (!ok) {
      v.pass = false;
      v.detail += p + " expected " + std::to_string(expected) + " got " + std::to_string(logged) + "; ";
    }
    ++checked;
  }
  v.detail += std::to_string(checked) + " presets exact";

  const ToolRun sw = s.tool("sweep --preset 2d-k5 --k-list 1,5,20,50 --out \"" + (s.work() / "sweep").string() + "\"",
                            "sweep");
  const fs::path table = s.work() / "sweep" / "sweep.csv";
  if (sw.code != 0 || !fs::exists(table)) return {false, v.detail + "; sweep exited " + std::to_string(sw.code)};
  const CsvTable comm = read_csv(s.bundle("2d-k5") / "comm.csv");
  const double M = 0.5 * static_cast<double>(std::stoull(comm.rows[0][comm.column("M_d")]) +
                                             std::stoull(comm.rows[0][comm.column("M_g")]));
  const CsvTable t = read_csv(table);
  std::string cells;
  for (const auto& row : t.rows) {
    const double K = static_cast<double>(std::stoull(row[t.column("K")]));
    const double per = parse_double(row[t.column("per_agent_per_round")]);
    const double baseline = parse_double(row[t.column("baseline_per_agent_per_round")]);
    v.pass &= per == 4.0 * M / K && baseline == 4.0 * M;
    if (K == 1.0) v.pass &= per == baseline;
    cells += " K=" + fmt(K) + ":" + fmt(per);
  }
  v.pass &= t.rows.size() == 4;
  v.detail += "; sweep" + cells + " (4M=" + fmt(4.0 * M) + ")";
  return v;
}

Verdict criterion8() {
  Verdict v{true, ""};
  for (std::size_t B : {2u, 5u}) {
    testing::TwoDProblem pr(B, 10000, 11);
    pr.opts.batch = 64;
    pr.opts.N = 1001;
    const Schedule sched = Schedule::equal(0.3, 100.0, 1.0, 1);
    const TrajectoryLog log = run_fedgan(pr.model, LossKind::kMinimax, pr.data, pr.partition, sched, pr.opts);
    const auto ref = testing::reference_trajectory(pr, sched, pr.opts.N, LossKind::kMinimax);
    const auto synced = log.synced_rows();
    std::size_t identical = 0;
    while (identical < ref.size() && identical < synced.size() && synced[identical]->params == ref[identical]) {
      ++identical;
    }
    const bool ok = synced.size() == ref.size() && identical == ref.size();
    v.pass &= ok;
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("B=") + std::to_string(B) + " bit-identical steps " +
                std::to_string(identical) + "/" + std::to_string(ref.size());
  }
  return v;
}

Verdict criterion9() {
  Verdict v{true, ""};
  std::mt19937_64 rng(1);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const testing::GradCheckCase c = testing::random_grad_check_case(rng);
    worst_grad = std::max(worst_grad, grad_check(c.net, c.params, c.input, 1e-5));
  }
  v.pass &= worst_grad < 1e-6;

  const VectorField rotation = [](std::span<const double> z) { return std::vector<double>{z[1], -z[0]}; };
  auto rk4_error = [&](std::size_t steps) {
    const auto g = rk4_grid(rotation, {1.0, 0.0}, 0.0, 2.0, steps);
    return std::hypot(g.back()[0] - std::cos(2.0), g.back()[1] + std::sin(2.0));
  };
  double lo_ratio = 1e300, hi_ratio = 0.0;
  for (std::size_t steps : {10u, 20u, 40u}) {
    const double r = rk4_error(steps) / rk4_error(2 * steps);
    lo_ratio = std::min(lo_ratio, r);
    hi_ratio = std::max(hi_ratio, r);
  }
  v.pass &= lo_ratio > 4.0 && hi_ratio < 64.0;

  bool round_trip = true;
  const GanModel gan = make_mlp_gan(16, 2, 2, 2);
  for (const NetSpec* net : {&gan.generator, &gan.discriminator}) {
    const ParamVector p = testing::random_params(net->layout(), rng, 1.0);
    round_trip &= ParamVector::flatten(net->layout(), p.unflatten()) == p;
  }
  v.pass &= round_trip;

  testing::TwoDProblem pr(4);
  std::vector<AgentState> agents = make_agents(pr.model, pr.partition, pr.opts);
  for (int k = 0; k < 3; ++k)
    for (AgentState& a : agents) local_step(a, pr.model, LossKind::kMinimax, pr.data, 0.1, 0.1, 8);
  const SyncResult first = sync(agents);
  const SyncResult second = sync(agents);
  const bool idempotent = first.w_bar == second.w_bar && first.theta_bar == second.theta_bar;
  v.pass &= idempotent;

  const auto t0 = std::chrono::steady_clock::now();
  const int unit = std::system((std::string("\"") + FEDGAN_UNIT_TESTS_PATH + "\" --gtest_brief=1 > /dev/null 2>&1").c_str());
  const bool unit_ok = WIFEXITED(unit) && WEXITSTATUS(unit) == 0;
  v.pass &= unit_ok;
  v.detail = "grad max rel err=" + fmt(worst_grad) + " rk4 ratios in [" + fmt(lo_ratio) + "," + fmt(hi_ratio) +
             "] round trip=" + (round_trip ? "exact" : "broken") + " sync idempotent=" + (idempotent ? "yes" : "no") +
             " invariant suite=" + (unit_ok ? "green" : "red") + " (" +
             fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + "s)";
  return v;
}

Verdict criterion10(Suite& s) {
  std::string why;
  const auto m = scored(s, "profiles-b5-k20", nullptr, &why);
  if (m.empty()) return {false, why};
  const CsvTable centroids = read_csv(s.bundle("profiles-b5-k20") / "centroids.csv");
  const CsvTable null = read_csv(s.bundle("profiles-b5-k20") / "centroid_null.csv");
  std::vector<double> null_d;
  for (const auto& row : null.rows) null_d.push_back(parse_double(row[null.column("mean_matched_distance")]));
  std::vector<double> dist;
  for (const auto& row : centroids.rows) dist.push_back(parse_double(row[centroids.column("distance")]));
  double mean = 0.0;
  for (double d : dist) mean += d;
  mean /= static_cast<double>(std::max<std::size_t>(1, dist.size()));
  const double p95 = null_d.empty() ? 0.0 : percentile_linear(null_d, 0.95);
  return {dist.size() == 9 && !null_d.empty() && mean < p95,
          "k=" + std::to_string(dist.size()) + " mean matched distance=" + fmt(mean) + " null p95=" + fmt(p95) +
              " (" + std::to_string(null_d.size()) + " draws)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedGAN acceptance suite"};
  std::string work = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory for bundles");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = fs::absolute(work);
  if (fs::exists(dir) && !fs::is_empty(dir) && !fs::exists(dir / kMarker)) {
    std::cerr << dir << " is not empty and was not created by this suite\n";
    return 2;
  }
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / kMarker) << "scratch space of the acceptance suite\n";

  Suite suite(dir);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"2D convergence for K in {1,5,20,50}", [&] { return criterion1(suite); }},
      {"equal and two time-scale schedules", [&] { return criterion2(suite); }},
      {"within-window deviation bounds", [&] { return criterion3(suite); }},
      {"ODE tracking of the averaged path", [&] { return criterion4(suite); }},
      {"mixed Gaussians", [&] { return criterion5(suite); }},
      {"swiss roll", [&] { return criterion6(suite); }},
      {"communication arithmetic", [&] { return criterion7(suite); }},
      {"K=1 lockstep equivalence", [] { return criterion8(); }},
      {"numerical hygiene", [] { return criterion9(); }},
      {"profile centroids", [&] { return criterion10(suite); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all &= v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " | " << v.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
