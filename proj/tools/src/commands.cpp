#include "fedgan_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "fedgan/constants.hpp"
#include "fedgan/csv.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/gradient_oracle.hpp"
#include "fedgan/lemmas.hpp"
#include "fedgan/metrics.hpp"
#include "fedgan/tracking.hpp"
#include "fedgan_cli/bundle.hpp"
#include "fedgan_cli/experiment.hpp"
#include "fedgan_cli/svg.hpp"

namespace fedgan::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return format_double(v); }

void write_params(const fs::path& path, const std::vector<double>& stacked, std::size_t dim_d) {
  CsvWriter w(path);
  w.row({"network", "index", "value"});
  for (std::size_t i = 0; i < stacked.size(); ++i) {
    const bool d = i < dim_d;
    w.row({d ? "discriminator" : "generator", std::to_string(d ? i : i - dim_d), fmt(stacked[i])});
  }
}

std::vector<double> read_params(const fs::path& path, std::size_t dim_d, std::size_t dim_g) {
  const CsvTable t = read_csv(path);
  const std::size_t c_net = t.column("network"), c_val = t.column("value");
  std::vector<double> d, g;
  for (const auto& row : t.rows) {
    (row[c_net] == "discriminator" ? d : g).push_back(parse_double(row[c_val]));
  }
  if (d.size() != dim_d || g.size() != dim_g) {
    throw PreconditionError(path.string() + ": parameter count does not match the model");
  }
  d.insert(d.end(), g.begin(), g.end());
  return d;
}

std::vector<std::size_t> train_rows(const Partition& p) {
  std::vector<std::size_t> rows;
  for (const auto& a : p.assignments) rows.insert(rows.end(), a.begin(), a.end());
  return rows;
}

/// Key/value CSV used for summaries.
void write_kv(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  CsvWriter w(path);
  w.row({"key", "value"});
  for (const auto& [k, v] : kv) w.row({k, v});
}

std::map<std::string, std::string> read_kv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::map<std::string, std::string> out;
  for (const auto& row : t.rows) out[row[t.column("key")]] = row[t.column("value")];
  return out;
}

struct LoadedBundle {
  Experiment exp;
  TrajectoryLog log;
};

LoadedBundle load_bundle(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "config.ini")) {
    throw PreconditionError(dir.string() + " is not a bundle (no config.ini)");
  }
  LoadedBundle b{build_experiment(load_config_file(dir / "config.ini")), {}};
  const Experiment& e = b.exp;
  if (!fs::is_regular_file(dir / "trajectory.csv")) throw PreconditionError("bundle has no trajectory.csv");
  b.log = TrajectoryLog::read_csv(dir / "trajectory.csv", e.train.agents(), e.model.discriminator_params(),
                                  e.model.generator_params(), e.cfg.schedule.K, e.cfg.record_stride);
  if (fs::is_regular_file(dir / "final_params.csv")) {
    b.log.final_synced_params =
        read_params(dir / "final_params.csv", e.model.discriminator_params(), e.model.generator_params());
  }
  return b;
}

/// Removes the contents of a previous bundle; refuses other non-empty dirs.
void prepare_output(const fs::path& out) {
  if (fs::exists(out) && !fs::is_directory(out)) throw ConfigError(out.string() + " exists and is not a directory");
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!fs::exists(out / kManifestName)) {
      throw ConfigError(out.string() + " is not empty and holds no bundle; refusing to overwrite");
    }
    for (const auto& entry : fs::directory_iterator(out)) fs::remove_all(entry.path());
  }
  fs::create_directories(out);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double distance_to_target_2d(const std::vector<double>& stacked) {
  if (stacked.size() != 2) throw std::invalid_argument("distance_to_target_2d: expected (psi, theta)");
  return std::max(std::abs(stacked[1] - 1.0), std::abs(stacked[0]));
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out) {
  const Experiment e = build_experiment(cfg);
  if (cfg.N < 2) throw ConfigError("N must be >= 2 for a training run");
  prepare_output(out);
  Bundle bundle(out);
  write_text(out / "config.ini", render_config(cfg));

  const std::size_t md = e.model.discriminator_params(), mg = e.model.generator_params();
  const std::size_t B = e.train.agents(), K = cfg.schedule.K;
  const auto t0 = std::chrono::steady_clock::now();
  TrajectoryLog log, central;
  RunOptions opts = e.run_options();
  try {
    log = run_fedgan(e.model, cfg.model.loss, e.data, e.train, cfg.schedule, opts);
    log.write_csv(out / "trajectory.csv");
    write_params(out / "final_params.csv", log.final_synced_params, md);
    if (cfg.compare_centralized) {
      opts.baseline_agents = B;
      central = run_centralized(e.model, cfg.model.loss, e.data, train_rows(e.train), cfg.schedule, opts);
      central.write_csv(out / "centralized_trajectory.csv");
      write_params(out / "centralized_final_params.csv", central.final_synced_params, md);
    }
  } catch (const NonFiniteError& err) {
    bundle.set_status("aborted");
    bundle.set_error(err.what());
    bundle.write_manifest();
    std::cerr << "run aborted: " << err.what() << '\n';
    return kExitRuntimeAbort;
  }
  const double elapsed = seconds_since(t0);

  const CommReport comm = comm_report(md, mg, B, K, cfg.N - 1);
  const bool comm_ok = comm.total_scalars == log.cum_scalars();
  const std::uint64_t baseline_total =
      static_cast<std::uint64_t>(B) * 2u * (md + mg) * static_cast<std::uint64_t>(cfg.N - 1);
  const bool central_ok = !cfg.compare_centralized || central.cum_scalars() == baseline_total;
  {
    CsvWriter w(out / "comm.csv");
    w.row({"M_d", "M_g", "M", "B", "K", "rounds", "per_agent_per_round", "baseline_per_agent_per_round",
           "total_scalars", "logged_cum_scalars", "match", "baseline_total_scalars", "centralized_logged_cum_scalars",
           "centralized_match"});
    w.row({std::to_string(md), std::to_string(mg), fmt(0.5 * static_cast<double>(md + mg)), std::to_string(B),
           std::to_string(K), std::to_string(comm.rounds), fmt(comm.per_agent_per_round),
           fmt(comm.baseline_per_agent_per_round), std::to_string(comm.total_scalars),
           std::to_string(log.cum_scalars()), comm_ok ? "true" : "false", std::to_string(baseline_total),
           cfg.compare_centralized ? std::to_string(central.cum_scalars()) : "",
           central_ok ? "true" : "false"});
  }

  std::vector<std::pair<std::string, std::string>> kv = {
      {"name", cfg.name},
      {"B", std::to_string(B)},
      {"K", std::to_string(K)},
      {"N", std::to_string(cfg.N)},
      {"final_step", std::to_string(log.final_step)},
      {"final_param_norm", fmt(log.last_synced().param_norm)},
      {"cum_scalars", std::to_string(log.cum_scalars())},
      {"per_agent_per_round", fmt(comm.per_agent_per_round)},
      {"comm_match", comm_ok && central_ok ? "true" : "false"},
  };
  if (cfg.model.kind == ModelKind::kAnalytic2d) {
    const auto& z = log.final_synced_params;
    kv.push_back({"final_theta", fmt(z[1])});
    kv.push_back({"final_psi", fmt(z[0])});
    kv.push_back({"linf_to_target", fmt(distance_to_target_2d(z))});
    if (cfg.compare_centralized) {
      kv.push_back({"centralized_final_theta", fmt(central.final_synced_params[1])});
      kv.push_back({"centralized_final_psi", fmt(central.final_synced_params[0])});
      kv.push_back({"centralized_linf_to_target", fmt(distance_to_target_2d(central.final_synced_params))});
    }
  }
  write_kv(out / "summary.csv", kv);
  bundle.set_status(comm_ok && central_ok ? "ok" : "violated");
  if (!comm_ok || !central_ok) bundle.set_check("communication", "violated");
  bundle.write_manifest();

  std::cout << cfg.name << ": " << cfg.N << " steps, B=" << B << ", K=" << K << " in " << elapsed << " s\n";
  for (const auto& [k, v] : kv) std::cout << "  " << k << " = " << v << '\n';
  return comm_ok && central_ok ? kExitOk : kExitViolated;
}

int cmd_verify(const fs::path& dir, std::vector<std::string> which) {
  LoadedBundle lb = load_bundle(dir);
  const Experiment& e = lb.exp;
  const ExperimentConfig& cfg = e.cfg;
  const AnalysisConfig& an = cfg.analysis;
  if (which.empty()) {
    if (an.lemmas) which.push_back("lemmas");
    if (an.theorem1) which.push_back("theorem1");
    if (an.two_timescale) which.push_back("two-timescale");
    if (which.empty()) throw ConfigError("no checks enabled in the config and none requested");
  }
  for (const auto& w : which) {
    if (w != "lemmas" && w != "theorem1" && w != "two-timescale") throw ConfigError("unknown check '" + w + "'");
  }
  if (!lb.log.param_level()) {
    throw PreconditionError("model has more than " + std::to_string(kParamLevelLimit) +
                            " parameters; the log holds no parameter values to replay");
  }
  Bundle bundle(dir);
  const GradientOracle oracle(e.model, cfg.model.loss, e.data, e.train, an.oracle_latents, e.oracle_seed());

  bool violated = false;
  bool precondition = false;
  for (const auto& w : which) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (w == "lemmas") {
        const std::size_t K = cfg.schedule.K;
        const std::size_t first = static_cast<std::size_t>(an.lemma_start_fraction * static_cast<double>(cfg.N - 1)) / K * K;
        if (first + an.lemma_windows * K > lb.log.last_synced().step) {
          throw PreconditionError("run too short for " + std::to_string(an.lemma_windows) + " windows from step " +
                                  std::to_string(first));
        }
        ConstantsOptions co;
        co.n_probes = an.constants_probes;
        co.batch = cfg.batch;
        co.noise_batches = an.noise_batches;
        co.seed = derive_seed(cfg.master_seed, {stream::kProbe});
        const EstimatedConstants consts =
            estimate_constants(oracle, e.data, e.train, probe_region_from_log(lb.log), co);
        LemmaOptions lo;
        lo.mc_runs = an.lemma_mc_runs;
        lo.slack = an.lemma_slack;
        lo.batch = cfg.batch;
        lo.seed = derive_seed(cfg.master_seed, {stream::kReplay});
        const LemmaReport rep = check_lemmas(oracle, e.data, e.train, cfg.schedule, lb.log, consts, first,
                                             an.lemma_windows, lo);
        {
          CsvWriter cw(dir / "constants.csv");
          cw.row({"L", "sigma_g", "sigma_h", "mu_g", "n_probes", "noise_batches", "batch", "region_diameter"});
          cw.row({fmt(consts.L), fmt(consts.sigma_g), fmt(consts.sigma_h), fmt(consts.mu_g),
                  std::to_string(consts.n_probes), std::to_string(consts.noise_batches),
                  std::to_string(consts.batch), fmt(consts.region.diameter())});
        }
        rep.write_csv(dir / "lemmas.csv");
        rep.write_summary_csv(dir / "lemmas_summary.csv");
        bundle.set_check("lemmas", std::string(to_string(rep.verdict)));
        violated |= rep.verdict == LemmaVerdict::kViolated;
        std::cout << "lemmas: " << to_string(rep.verdict) << " over " << rep.windows << " windows (L=" << consts.L
                  << ", sigma_g=" << consts.sigma_g << ", sigma_h=" << consts.sigma_h << ", mu_g=" << consts.mu_g
                  << ")";
      } else if (w == "theorem1") {
        const InterpolatedPath path = InterpolatedPath::from_log(lb.log, cfg.schedule);
        const VectorField q = [&oracle](std::span<const double> z) { return oracle.field(z); };
        OdeOptions oo;
        oo.tol = an.ode_tol;
        const Theorem1Report rep =
            check_theorem1(path, q, an.theorem1_quantiles, an.theorem1_T, an.theorem1_max_ratio, oo);
        rep.write_csv(dir / "theorem1.csv");
        bundle.set_check("theorem1", rep.satisfied() ? "satisfied" : "violated");
        violated |= !rep.satisfied();
        std::cout << "theorem1: " << (rep.satisfied() ? "satisfied" : "violated") << " (slope " << rep.slope
                  << ", last/first " << rep.last_over_first << ")";
      } else {
        const std::vector<std::size_t> steps = sample_synced_steps(lb.log, an.tts_samples);
        LambdaOptions lo;
        lo.tol = an.lambda_tol;
        lo.rate = an.lambda_rate;
        const TwoTimescaleReport rep = check_two_timescale(oracle, cfg.schedule, lb.log, steps, lo, an.tts_gap);
        rep.write_csv(dir / "two_timescale.csv");
        bundle.set_check("two-timescale", rep.satisfied ? "satisfied" : "violated");
        violated |= !rep.satisfied;
        std::cout << "two-timescale: " << (rep.satisfied ? "satisfied" : "violated") << " (late gap "
                  << rep.late_gap << ")";
      }
      std::cout << " in " << seconds_since(t0) << " s\n";
    } catch (const PreconditionError& err) {
      precondition = true;
      bundle.set_check(w, "precondition_error");
      bundle.add_notice(w + ": " + err.what());
      std::cerr << w << ": precondition error: " << err.what() << '\n';
    }
  }
  bundle.write_manifest();
  if (precondition) return kExitConfigError;
  return violated ? kExitViolated : kExitOk;
}

namespace {

Tensor subsample(const Tensor& x, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(m, idx.size()));
  return x.gather_rows(idx);
}

Tensor head_rows(const Tensor& x, std::size_t m) {
  std::vector<std::size_t> idx(std::min(m, x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  return x.gather_rows(idx);
}

void write_samples(const fs::path& path, const Tensor& x) {
  CsvWriter w(path);
  std::vector<std::string> header;
  for (std::size_t c = 0; c < x.cols(); ++c) header.push_back("x" + std::to_string(c));
  w.row(header);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<std::string> cells;
    for (double v : x.row(r)) cells.push_back(fmt(v));
    w.row(cells);
  }
}

Tensor read_samples(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<double> data;
  for (const auto& row : t.rows) {
    for (const auto& c : row) data.push_back(parse_double(c));
  }
  return Tensor::matrix(t.rows.size(), t.header.size(), std::move(data));
}

constexpr std::size_t kPlotSamples = 2000;

}  // namespace

int cmd_metrics(const fs::path& dir, const std::optional<fs::path>& real_csv) {
  LoadedBundle lb = load_bundle(dir);
  const Experiment& e = lb.exp;
  const ExperimentConfig& cfg = e.cfg;
  const MetricsConfig& mc = cfg.metrics;
  if (lb.log.final_synced_params.empty()) throw PreconditionError("bundle holds no final generator parameters");
  Bundle bundle(dir);
  const auto [pd, pg] = e.unstack(lb.log.final_synced_params);
  (void)pd;

  Tensor ref, ref_labels;
  if (real_csv) {
    const Dataset real = read_dataset_csv(*real_csv);
    if (real.dim() != e.data.dim()) throw ConfigError(real_csv->string() + ": dimension does not match the dataset");
    ref = real.samples;
    ref_labels = real.labels;
  } else if (!e.holdout.empty()) {
    ref = e.data.samples.gather_rows(e.holdout);
    if (e.data.has_labels()) ref_labels = e.data.labels.gather_rows(e.holdout);
  } else {
    bundle.add_notice("metrics: no holdout split; reference is the full dataset");
    ref = e.data.samples;
    ref_labels = e.data.labels;
  }
  const std::size_t m = ref.rows();
  const Tensor train = e.data.samples.gather_rows(train_rows(e.train));
  const std::string& family = cfg.data.generator;

  Rng latent_rng(derive_seed(cfg.master_seed, {stream::kMetrics, 0}));
  Tensor generated;
  if (e.model.conditional()) {
    if (!ref.empty() && ref_labels.empty()) throw ConfigError("conditional metrics need labelled reference rows");
    generated = generate(e.model, pg, sample_latent(e.model, m, latent_rng), ref_labels);
  } else {
    generated = generate(e.model, pg, sample_latent(e.model, std::max(mc.n_generated, m), latent_rng));
  }
  if (!generated.all_finite()) throw NonFiniteError("generator produced non-finite samples");

  struct MetricRow {
    std::string name;
    double value;
    std::string threshold;
    std::string pass;
  };
  std::vector<MetricRow> rows;
  bool failed = false;
  auto add = [&](const std::string& name, double value, std::optional<double> bound, bool upper) {
    std::string pass;
    if (bound) {
      const bool ok = upper ? value <= *bound : value >= *bound;
      failed |= !ok;
      pass = ok ? "true" : "false";
    }
    rows.push_back({name, value, bound ? fmt(*bound) : "", pass});
  };

  // Kernel two-sample distance with one bandwidth for all comparisons.
  const Tensor gen_m = head_rows(generated, m);
  const double bw = median_bandwidth(ref, subsample(train, m, derive_seed(cfg.master_seed, {stream::kMetrics, 1, 0})));
  std::vector<double> null_draws;
  for (std::size_t d = 0; d < mc.mmd_null_draws; ++d) {
    const Tensor sub = subsample(train, m, derive_seed(cfg.master_seed, {stream::kMetrics, 1, d}));
    null_draws.push_back(mmd2(sub, ref, bw).mmd2);
  }
  const double null_mean = std::accumulate(null_draws.begin(), null_draws.end(), 0.0) /
                           static_cast<double>(std::max<std::size_t>(1, null_draws.size()));
  const double gen_mmd = mmd2(gen_m, ref, bw).mmd2;
  const bool mmd_scored = family != "profiles";
  add("mmd2_bandwidth", bw, std::nullopt, true);
  add("mmd2_null", null_mean, std::nullopt, true);
  add("mmd2", gen_mmd, mmd_scored ? std::optional<double>(mc.mmd_ratio * null_mean) : std::nullopt, true);

  if (family == "mixed_gaussians") {
    const Tensor centers = mixture_centers(cfg.data.modes, cfg.data.radius);
    const ModeCoverage cov = mode_coverage(generated, centers, mc.coverage_sigmas * cfg.data.sigma);
    add("modes_hit", static_cast<double>(cov.modes_hit), static_cast<double>(mc.min_modes), false);
    add("high_quality_fraction", cov.high_quality_fraction, mc.min_high_quality, false);
    CsvWriter w(dir / "mode_coverage.csv");
    w.row({"mode", "center_x", "center_y", "samples"});
    for (std::size_t k = 0; k < cov.per_mode.size(); ++k) {
      w.row({std::to_string(k), fmt(centers.at(k, 0)), fmt(centers.at(k, 1)), std::to_string(cov.per_mode[k])});
    }
  }
  if (family == "profiles") {
    const std::uint64_t km_seed = derive_seed(cfg.master_seed, {stream::kMetrics, 2});
    const CentroidReport rep = centroid_compare(ref, gen_m, mc.centroid_k, km_seed);
    rep.write_csv(dir / "centroids.csv");
    std::vector<double> null_d;
    for (std::size_t d = 0; d < mc.centroid_null_draws; ++d) {
      const Tensor sub = subsample(train, m, derive_seed(cfg.master_seed, {stream::kMetrics, 3, d}));
      null_d.push_back(centroid_compare(ref, sub, mc.centroid_k, km_seed).mean_matched_distance);
    }
    {
      CsvWriter w(dir / "centroid_null.csv");
      w.row({"draw", "mean_matched_distance"});
      for (std::size_t d = 0; d < null_d.size(); ++d) w.row({std::to_string(d), fmt(null_d[d])});
    }
    add("centroid_null_p95", quantile(null_d, 0.95), std::nullopt, true);
    add("mean_matched_distance", rep.mean_matched_distance, quantile(null_d, 0.95), true);
  }
  if (e.data.dim() <= 2) {
    write_samples(dir / "generated_samples.csv", head_rows(generated, kPlotSamples));
    write_samples(dir / "reference_samples.csv", head_rows(ref, kPlotSamples));
  }
  {
    CsvWriter w(dir / "metrics.csv");
    w.row({"metric", "value", "threshold", "pass"});
    for (const auto& r : rows) w.row({r.name, fmt(r.value), r.threshold, r.pass});
  }
  bundle.set_check("metrics", failed ? "violated" : "satisfied");
  bundle.write_manifest();
  for (const auto& r : rows) {
    std::cout << "  " << r.name << " = " << r.value;
    if (!r.threshold.empty()) std::cout << " (threshold " << r.threshold << ", pass " << r.pass << ")";
    std::cout << '\n';
  }
  return failed ? kExitViolated : kExitOk;
}

namespace {

Series column_series(const CsvTable& t, const std::string& x, const std::string& y, const std::string& label,
                     const std::string& color, const std::function<bool(const std::vector<std::string>&)>& keep = {}) {
  Series s;
  s.label = label;
  s.color = color;
  const std::size_t cx = t.column(x), cy = t.column(y);
  for (const auto& row : t.rows) {
    if (keep && !keep(row)) continue;
    s.x.push_back(parse_double(row[cx]));
    s.y.push_back(parse_double(row[cy]));
  }
  return s;
}

void plot_trajectory(Bundle& bundle, const LoadedBundle& lb) {
  const Experiment& e = lb.exp;
  if (e.cfg.model.kind == ModelKind::kAnalytic2d) {
    Plot p;
    p.title = e.cfg.name + ": synced (theta, psi)";
    p.x_label = "theta";
    p.y_label = "psi";
    auto add_path = [&](const TrajectoryLog& log, const std::string& label, const std::string& color) {
      Series s;
      s.label = label;
      s.color = color;
      for (const LogRow* r : log.synced_rows()) {
        s.x.push_back(r->params[1]);
        s.y.push_back(r->params[0]);
      }
      p.series.push_back(std::move(s));
    };
    add_path(lb.log, "FedGAN", "#1f77b4");
    if (bundle.has("centralized_trajectory.csv")) {
      const TrajectoryLog c = TrajectoryLog::read_csv(bundle.file("centralized_trajectory.csv"), 1,
                                                      e.model.discriminator_params(), e.model.generator_params(),
                                                      e.cfg.schedule.K, e.cfg.record_stride);
      add_path(c, "centralized", "#2ca02c");
    }
    const LogRow* first = lb.log.synced_rows().front();
    p.markers.push_back({first->params[1], first->params[0], "#d62728", 5.0, "initial"});
    p.markers.push_back({1.0, 0.0, "#000000", 3.5, "(1, 0)"});
    p.equal_aspect = true;
    write_text(bundle.file("trajectory.svg"), render_svg(p));
    return;
  }
  Plot p;
  p.title = e.cfg.name + ": parameter norm";
  p.x_label = "step";
  p.y_label = "||(w, theta)||";
  Series s;
  s.label = "synced";
  for (const LogRow* r : lb.log.synced_rows()) {
    s.x.push_back(static_cast<double>(r->step));
    s.y.push_back(r->param_norm);
  }
  p.series.push_back(std::move(s));
  write_text(bundle.file("trajectory.svg"), render_svg(p));
}

}  // namespace

int cmd_plot(const fs::path& dir) {
  LoadedBundle lb = load_bundle(dir);
  Bundle bundle(dir);
  auto skip = [&](const std::string& plot, const std::string& why) {
    bundle.add_notice("plot " + plot + " skipped: " + why);
    std::cout << "skipped " << plot << ": " << why << '\n';
  };

  plot_trajectory(bundle, lb);

  if (bundle.has("generated_samples.csv") && bundle.has("reference_samples.csv")) {
    const Tensor gen = read_samples(bundle.file("generated_samples.csv"));
    const Tensor ref = read_samples(bundle.file("reference_samples.csv"));
    if (gen.cols() == 2) {
      Plot p;
      p.title = lb.exp.cfg.name + ": real vs generated";
      p.x_label = "x0";
      p.y_label = "x1";
      p.equal_aspect = true;
      for (const auto& [t, label, color] : {std::tuple{&ref, "real", "#1f77b4"}, std::tuple{&gen, "generated", "#ff7f0e"}}) {
        Series s;
        s.label = label;
        s.color = color;
        s.line = false;
        for (std::size_t r = 0; r < t->rows(); ++r) {
          s.x.push_back(t->at(r, 0));
          s.y.push_back(t->at(r, 1));
        }
        p.series.push_back(std::move(s));
      }
      write_text(bundle.file("scatter.svg"), render_svg(p));
    } else {
      skip("scatter.svg", "samples are not 2-D");
    }
  } else {
    skip("scatter.svg", "no generated samples (run metrics first)");
  }

  if (bundle.has("theorem1.csv")) {
    const CsvTable t = read_csv(bundle.file("theorem1.csv"));
    Plot p;
    p.title = "ODE tracking deviation";
    p.x_label = "s (learning-rate time)";
    p.y_label = "sup deviation over [s, s + T]";
    p.series.push_back(column_series(t, "s", "deviation", "deviation", "#1f77b4"));
    write_text(bundle.file("theorem1.svg"), render_svg(p));
  } else {
    skip("theorem1.svg", "no theorem1.csv (run verify theorem1 first)");
  }

  if (bundle.has("lemmas.csv")) {
    const CsvTable t = read_csv(bundle.file("lemmas.csv"));
    std::vector<Plot> panels;
    for (const std::string lemma : {"1", "2"}) {
      const std::size_t c_lemma = t.column("lemma");
      auto keep = [&](const std::vector<std::string>& row) { return row[c_lemma] == lemma; };
      Plot p;
      p.title = "Lemma " + lemma + ": expected divergence vs bound";
      p.x_label = "step n";
      p.y_label = "value";
      p.log_y = true;
      p.series.push_back(column_series(t, "n", "lhs", "LHS", "#1f77b4", keep));
      p.series.push_back(column_series(t, "n", "bound", "bound", "#d62728", keep));
      panels.push_back(std::move(p));
    }
    write_text(bundle.file("lemmas.svg"), render_svg_grid(panels, 2));
  } else {
    skip("lemmas.svg", "no lemmas.csv (run verify lemmas first)");
  }

  if (bundle.has("two_timescale.csv")) {
    const CsvTable t = read_csv(bundle.file("two_timescale.csv"));
    Plot p;
    p.title = "Gap to the discriminator attractor";
    p.x_label = "step n";
    p.y_label = "||w_n - lambda(theta_n)||";
    p.series.push_back(column_series(t, "n", "gap", "gap", "#1f77b4"));
    write_text(bundle.file("two_timescale.svg"), render_svg(p));
  }

  if (bundle.has("centroids.csv")) {
    const CsvTable t = read_csv(bundle.file("centroids.csv"));
    std::vector<Plot> panels;
    for (const auto& row : t.rows) {
      Plot p;
      p.width = 300;
      p.height = 220;
      p.title = "centroid " + row[t.column("rank")] + " (d = " + row[t.column("distance")].substr(0, 6) + ")";
      p.x_label = "hour";
      Series real, gen;
      real.label = "real";
      gen.label = "generated";
      gen.color = "#ff7f0e";
      for (std::size_t h = 0;; ++h) {
        const auto cr = t.find("real_" + std::to_string(h));
        const auto cg = t.find("gen_" + std::to_string(h));
        if (!cr || !cg) break;
        real.x.push_back(static_cast<double>(h));
        real.y.push_back(parse_double(row[*cr]));
        gen.x.push_back(static_cast<double>(h));
        gen.y.push_back(parse_double(row[*cg]));
      }
      p.series = {real, gen};
      panels.push_back(std::move(p));
    }
    write_text(bundle.file("centroids.svg"), render_svg_grid(panels, 3, lb.exp.cfg.name + ": matched centroids"));
  } else if (lb.exp.cfg.data.generator == "profiles") {
    skip("centroids.svg", "no centroids.csv (run metrics first)");
  }
  bundle.write_manifest();
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& k_list, const fs::path& out,
              std::size_t jobs) {
  if (k_list.size() < 2) throw ConfigError("sweep needs at least two K values");
  std::vector<std::size_t> ks = k_list;
  std::sort(ks.begin(), ks.end());
  if (std::adjacent_find(ks.begin(), ks.end()) != ks.end()) throw ConfigError("sweep K values must be distinct");
  std::vector<ExperimentConfig> cfgs;
  for (std::size_t K : k_list) {
    ExperimentConfig c = cfg;
    c.schedule.K = K;
    c.name = cfg.name + "/k" + std::to_string(K);
    validate_config(c);
    cfgs.push_back(std::move(c));
  }
  prepare_output(out);
  std::vector<int> codes(cfgs.size(), kExitOk);
  std::vector<std::string> errors(cfgs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) {
      try {
        codes[i] = cmd_run(cfgs[i], out / ("k" + std::to_string(cfgs[i].schedule.K)));
      } catch (const std::exception& err) {
        std::lock_guard lock(io);
        codes[i] = kExitRuntimeAbort;
        errors[i] = err.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::max<std::size_t>(1, std::min(jobs, cfgs.size())); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  Bundle bundle(out);
  bool any_violated = false, any_abort = false;
  {
    CsvWriter w(out / "sweep.csv");
    w.row({"K", "status", "final_theta", "final_psi", "linf_to_target", "final_param_norm", "cum_scalars",
           "total_scalars", "per_agent_per_round", "baseline_per_agent_per_round", "comm_match"});
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      const fs::path sub = out / ("k" + std::to_string(cfgs[i].schedule.K));
      any_violated |= codes[i] == kExitViolated;
      any_abort |= codes[i] == kExitRuntimeAbort;
      if (!fs::is_regular_file(sub / "summary.csv")) {
        w.row({std::to_string(cfgs[i].schedule.K), "aborted", "", "", "", "", "", "", "", "", ""});
        bundle.add_notice("k" + std::to_string(cfgs[i].schedule.K) + ": " +
                          (errors[i].empty() ? std::string("aborted") : errors[i]));
        continue;
      }
      auto kv = read_kv(sub / "summary.csv");
      const CsvTable comm = read_csv(sub / "comm.csv");
      const auto& c = comm.rows.at(0);
      w.row({std::to_string(cfgs[i].schedule.K), codes[i] == kExitOk ? "ok" : "violated", kv["final_theta"],
             kv["final_psi"], kv["linf_to_target"], kv["final_param_norm"], kv["cum_scalars"],
             c[comm.column("total_scalars")], c[comm.column("per_agent_per_round")],
             c[comm.column("baseline_per_agent_per_round")], kv["comm_match"]});
    }
  }
  bundle.set_status(any_abort ? "aborted" : any_violated ? "violated" : "ok");
  bundle.write_manifest();
  std::cout << "sweep table written to " << (out / "sweep.csv").string() << '\n';
  if (any_abort) return kExitRuntimeAbort;
  return any_violated ? kExitViolated : kExitOk;
}

}  // namespace fedgan::cli
