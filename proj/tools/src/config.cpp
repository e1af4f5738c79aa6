#include "fedgan_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fedgan/csv.hpp"
#include "fedgan/rng.hpp"

namespace fedgan::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

IniFile IniFile::parse(std::string_view text, const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) throw ConfigError(where() + "malformed section header '" + body + "'");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      ini.values_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value', got '" + body + "'");
    if (section.empty()) throw ConfigError(where() + "key outside of any [section]");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    auto& sec = ini.values_[section];
    if (sec.count(key)) throw ConfigError(where() + "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = {value, line_no};
  }
  return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.count(key);
}

const std::string& IniFile::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ConfigError(origin_ + ": missing key '" + key + "' in [" + section + "]");
  return values_.at(section).at(key).first;
}

std::size_t IniFile::line_of(const std::string& section, const std::string& key) const {
  return has(section, key) ? values_.at(section).at(key).second : 0;
}

std::vector<std::string> IniFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto it = values_.find(section);
  if (it == values_.end()) return out;
  for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

std::vector<std::string> IniFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [s, v] : values_) out.push_back(s);
  return out;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAnalytic2d: return "analytic2d";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kConditional: return "conditional";
  }
  return "unknown";
}

namespace {

ModelKind parse_model_kind(std::string_view s) {
  if (s == "analytic2d") return ModelKind::kAnalytic2d;
  if (s == "mlp") return ModelKind::kMlp;
  if (s == "conditional") return ModelKind::kConditional;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt_bool(bool b) { return b ? "true" : "false"; }
std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  auto str = [&](const char* sec, const char* key, std::string& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }});
  };
  auto size = [&](const char* sec, const char* key, std::size_t& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = static_cast<std::size_t>(parse_u64(v)); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto u64 = [&](const char* sec, const char* key, std::uint64_t& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = parse_u64(v); }, [&ref] { return std::to_string(ref); }});
  };
  auto dbl = [&](const char* sec, const char* key, double& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = parse_double(v); }, [&ref] { return fmt(ref); }});
  };
  auto flag = [&](const char* sec, const char* key, bool& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = parse_bool(v); }, [&ref] { return fmt_bool(ref); }});
  };

  str("experiment", "name", c.name);
  u64("experiment", "master_seed", c.master_seed);
  size("experiment", "N", c.N);
  size("experiment", "batch", c.batch);
  size("experiment", "record_stride", c.record_stride);
  size("experiment", "threads", c.threads);
  flag("experiment", "compare_centralized", c.compare_centralized);

  str("data", "generator", c.data.generator);
  size("data", "n", c.data.n);
  dbl("data", "lo", c.data.lo);
  dbl("data", "hi", c.data.hi);
  size("data", "modes", c.data.modes);
  dbl("data", "radius", c.data.radius);
  dbl("data", "sigma", c.data.sigma);
  dbl("data", "noise", c.data.noise);
  size("data", "archetypes", c.data.archetypes);
  size("data", "agents", c.data.agents);
  f.push_back({"data", "partition",
               [&c](const std::string& v) { c.data.partition = parse_partition_strategy(v); },
               [&c] { return std::string(to_string(c.data.partition)); }});
  dbl("data", "holdout", c.data.holdout);
  u64("data", "seed", c.data.seed);

  f.push_back({"model", "kind", [&c](const std::string& v) { c.model.kind = parse_model_kind(v); },
               [&c] { return std::string(to_string(c.model.kind)); }});
  f.push_back({"model", "loss", [&c](const std::string& v) { c.model.loss = parse_loss_kind(v); },
               [&c] { return std::string(to_string(c.model.loss)); }});
  size("model", "hidden", c.model.hidden);
  size("model", "depth", c.model.depth);
  size("model", "latent_dim", c.model.latent_dim);
  dbl("model", "theta0", c.model.theta0);
  dbl("model", "psi0", c.model.psi0);
  dbl("model", "init_scale", c.model.init_scale);

  f.push_back({"schedule", "mode", [&c](const std::string& v) { c.schedule.mode = parse_schedule_mode(v); },
               [&c] { return std::string(to_string(c.schedule.mode)); }});
  dbl("schedule", "a0", c.schedule.a0);
  dbl("schedule", "b0", c.schedule.b0);
  dbl("schedule", "tau", c.schedule.tau);
  dbl("schedule", "p_a", c.schedule.p_a);
  dbl("schedule", "p_b", c.schedule.p_b);
  size("schedule", "K", c.schedule.K);

  flag("analysis", "lemmas", c.analysis.lemmas);
  flag("analysis", "theorem1", c.analysis.theorem1);
  flag("analysis", "two_timescale", c.analysis.two_timescale);
  flag("analysis", "metrics", c.analysis.metrics);
  size("analysis", "oracle_latents", c.analysis.oracle_latents);
  size("analysis", "lemma_windows", c.analysis.lemma_windows);
  dbl("analysis", "lemma_start_fraction", c.analysis.lemma_start_fraction);
  size("analysis", "lemma_mc_runs", c.analysis.lemma_mc_runs);
  dbl("analysis", "lemma_slack", c.analysis.lemma_slack);
  size("analysis", "constants_probes", c.analysis.constants_probes);
  size("analysis", "noise_batches", c.analysis.noise_batches);
  dbl("analysis", "theorem1_T", c.analysis.theorem1_T);
  f.push_back({"analysis", "theorem1_quantiles",
               [&c](const std::string& v) { c.analysis.theorem1_quantiles = parse_list(v); },
               [&c] { return fmt_list(c.analysis.theorem1_quantiles); }});
  dbl("analysis", "theorem1_max_ratio", c.analysis.theorem1_max_ratio);
  dbl("analysis", "ode_tol", c.analysis.ode_tol);
  size("analysis", "tts_samples", c.analysis.tts_samples);
  dbl("analysis", "lambda_tol", c.analysis.lambda_tol);
  dbl("analysis", "lambda_rate", c.analysis.lambda_rate);
  dbl("analysis", "tts_gap", c.analysis.tts_gap);

  size("metrics", "n_generated", c.metrics.n_generated);
  dbl("metrics", "mmd_ratio", c.metrics.mmd_ratio);
  size("metrics", "mmd_null_draws", c.metrics.mmd_null_draws);
  size("metrics", "centroid_k", c.metrics.centroid_k);
  size("metrics", "centroid_null_draws", c.metrics.centroid_null_draws);
  dbl("metrics", "coverage_sigmas", c.metrics.coverage_sigmas);
  size("metrics", "min_modes", c.metrics.min_modes);
  dbl("metrics", "min_high_quality", c.metrics.min_high_quality);
  return f;
}

}  // namespace

ExperimentConfig load_config(const IniFile& ini) {
  ExperimentConfig cfg;
  if (ini.has("experiment", "preset")) {
    try {
      cfg = make_preset(ini.get("experiment", "preset"));
    } catch (const ConfigError& e) {
      throw ConfigError(ini.origin() + ":" + std::to_string(ini.line_of("experiment", "preset")) + ": " + e.what());
    }
  }
  std::vector<Field> all = fields(cfg);
  std::set<std::pair<std::string, std::string>> known;
  for (const Field& f : all) known.insert({f.section, f.key});
  known.insert({"experiment", "preset"});
  for (const std::string& sec : ini.sections()) {
    for (const std::string& key : ini.keys(sec)) {
      if (!known.count({sec, key})) {
        throw ConfigError(ini.origin() + ":" + std::to_string(ini.line_of(sec, key)) + ": unknown key '" + key +
                          "' in [" + sec + "]");
      }
    }
  }
  const bool explicit_data_seed = ini.has("data", "seed");
  for (const Field& f : all) {
    if (!ini.has(f.section, f.key)) continue;
    try {
      f.set(ini.get(f.section, f.key));
    } catch (const std::exception& e) {
      throw ConfigError(ini.origin() + ":" + std::to_string(ini.line_of(f.section, f.key)) + ": [" + f.section +
                        "] " + f.key + ": " + e.what());
    }
  }
  if (!explicit_data_seed && !ini.has("experiment", "preset")) {
    cfg.data.seed = derive_seed(cfg.master_seed, {stream::kData});
  }
  // Equal mode has a single rate family.
  if (cfg.schedule.mode == ScheduleMode::kEqual) {
    if (!ini.has("schedule", "b0")) cfg.schedule.b0 = cfg.schedule.a0;
    if (!ini.has("schedule", "p_b")) cfg.schedule.p_b = cfg.schedule.p_a;
  }
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(ini.origin() + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  return load_config(IniFile::load(path));
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.N < 1) fail("N must be >= 1");
  if (c.batch < 1) fail("batch must be >= 1");
  if (c.record_stride < 1) fail("record_stride must be >= 1");
  if (c.threads < 1) fail("threads must be >= 1");
  if (c.data.n < 1) fail("data.n must be >= 1");
  if (c.data.agents < 1) fail("data.agents must be >= 1");
  if (!(c.data.holdout >= 0.0 && c.data.holdout < 1.0)) fail("data.holdout must lie in [0, 1)");
  std::string problem;
  try {
    problem = schedule_problem(c.schedule);
  } catch (const std::invalid_argument& e) {
    fail(std::string("schedule: ") + e.what());
  }
  if (!problem.empty()) fail("schedule: " + problem);

  const std::string& g = c.data.generator;
  const bool known = g == "uniform_1d" || g == "mixed_gaussians" || g == "swiss_roll" || g == "profiles";
  if (!known) fail("unknown data generator '" + g + "'");
  if (g == "uniform_1d" && !(c.data.lo < c.data.hi)) fail("data: need lo < hi");
  if (g == "mixed_gaussians" && c.data.modes < 2) fail("data: modes must be >= 2");
  if (g == "profiles" && c.data.archetypes < 2) fail("data: archetypes must be >= 2");

  using P = PartitionStrategy;
  const P p = c.data.partition;
  if (p == P::kByRange && g != "uniform_1d") fail("partition by_range needs 1-D uniform data");
  if (p == P::kByArc && g != "swiss_roll") fail("partition by_arc needs swiss roll data");
  if (p == P::kByLabel && !(g == "mixed_gaussians" || g == "profiles")) fail("partition by_label needs labelled data");
  if (p == P::kByLabel && g == "mixed_gaussians" && c.data.agents > c.data.modes) {
    fail("by_label: more agents than label groups");
  }
  if (p != P::kIid && c.data.agents < 2) fail("non-iid partitions need at least 2 agents");

  switch (c.model.kind) {
    case ModelKind::kAnalytic2d:
      if (g != "uniform_1d") fail("analytic2d model needs uniform_1d data");
      break;
    case ModelKind::kMlp:
      if (g == "uniform_1d" || g == "profiles") fail("mlp model is for 2-D point data");
      if (c.model.hidden < 1 || c.model.depth < 1 || c.model.latent_dim < 1) fail("mlp sizes must be >= 1");
      break;
    case ModelKind::kConditional:
      if (g != "profiles") fail("conditional model needs profile data");
      if (c.model.hidden < 1 || c.model.depth < 1 || c.model.latent_dim < 1) fail("model sizes must be >= 1");
      break;
  }
  if (c.schedule.mode != ScheduleMode::kTwoTimescale && c.analysis.two_timescale) {
    fail("analysis.two_timescale needs schedule.mode = two_timescale");
  }
  if (c.analysis.lemma_mc_runs < 32) fail("analysis.lemma_mc_runs must be >= 32");
  if (c.analysis.constants_probes < 100) fail("analysis.constants_probes must be >= 100");
  if (c.analysis.oracle_latents < 1024) fail("analysis.oracle_latents must be >= 1024");
  if (c.analysis.theorem1_quantiles.size() < 2) fail("analysis.theorem1_quantiles needs at least 2 values");
  for (double q : c.analysis.theorem1_quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) fail("analysis.theorem1_quantiles must lie in [0, 1]");
  }
  if (c.metrics.centroid_k < 1) fail("metrics.centroid_k must be >= 1");
}

std::string render_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  const std::vector<Field> all = fields(copy);
  std::ostringstream out;
  out << "# Fully materialized experiment configuration.\n";
  std::string section;
  for (const Field& f : all) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get() << "\n";
  }
  return out.str();
}

namespace {

ExperimentConfig preset_2d(std::size_t K) {
  ExperimentConfig c;
  c.name = "2d-k" + std::to_string(K);
  c.master_seed = 1;
  c.N = 10000;
  c.batch = 64;
  c.record_stride = 1;
  c.compare_centralized = true;
  c.data.generator = "uniform_1d";
  c.data.n = 10000;
  c.data.lo = -1.0;
  c.data.hi = 1.0;
  c.data.agents = 5;
  c.data.partition = PartitionStrategy::kByRange;
  c.data.seed = 11;
  c.model.kind = ModelKind::kAnalytic2d;
  c.model.loss = LossKind::kMinimax;
  c.model.theta0 = 0.5;
  c.model.psi0 = 0.8;
  c.schedule = Schedule::equal(0.3, 100.0, 1.0, K);
  c.analysis.lemmas = true;
  c.analysis.theorem1 = true;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"2d-k1", "2d-k5", "2d-k20", "2d-k50", "2d-k5-tts", "gauss8-b4-k5", "swiss-b4-k5", "profiles-b5-k20"};
}

ExperimentConfig make_preset(const std::string& name) {
  if (name == "2d-k1") return preset_2d(1);
  if (name == "2d-k5") return preset_2d(5);
  if (name == "2d-k20") return preset_2d(20);
  if (name == "2d-k50") return preset_2d(50);
  if (name == "2d-k5-tts") {
    ExperimentConfig c = preset_2d(5);
    c.name = name;
    c.schedule = Schedule::two_timescale(0.1, 0.1, 1000.0, 0.6, 0.9, 5);
    c.analysis.lemmas = false;
    c.analysis.theorem1 = false;
    c.analysis.two_timescale = true;
    return c;
  }
  if (name == "gauss8-b4-k5") {
    ExperimentConfig c;
    c.name = name;
    c.master_seed = 1;
    c.N = 15000;
    c.batch = 64;
    c.record_stride = 500;
    c.data.generator = "mixed_gaussians";
    c.data.n = 20000;
    c.data.modes = 8;
    c.data.radius = 2.0;
    c.data.sigma = 0.02;
    c.data.agents = 4;
    c.data.partition = PartitionStrategy::kByLabel;
    c.data.holdout = 0.1;
    c.data.seed = 21;
    c.model.kind = ModelKind::kMlp;
    c.model.loss = LossKind::kMinimax;
    c.model.hidden = 64;
    c.model.depth = 2;
    c.model.latent_dim = 2;
    c.schedule = Schedule::two_timescale(0.1, 0.02, 1000.0, 0.6, 1.0, 5);
    c.analysis.metrics = true;
    return c;
  }
  if (name == "swiss-b4-k5") {
    ExperimentConfig c;
    c.name = name;
    c.master_seed = 1;
    c.N = 27000;
    c.batch = 64;
    c.record_stride = 500;
    c.data.generator = "swiss_roll";
    c.data.n = 20000;
    c.data.noise = 0.05;
    c.data.agents = 4;
    c.data.partition = PartitionStrategy::kByArc;
    c.data.holdout = 0.1;
    c.data.seed = 31;
    c.model.kind = ModelKind::kMlp;
    c.model.loss = LossKind::kMinimax;
    c.model.hidden = 128;
    c.model.depth = 2;
    c.model.latent_dim = 2;
    c.schedule = Schedule::two_timescale(0.1, 0.02, 1000.0, 0.6, 0.9, 5);
    c.analysis.metrics = true;
    return c;
  }
  if (name == "profiles-b5-k20") {
    ExperimentConfig c;
    c.name = name;
    c.master_seed = 1;
    c.N = 20000;
    c.batch = 64;
    c.record_stride = 1000;
    c.data.generator = "profiles";
    c.data.n = 20000;
    c.data.archetypes = 6;
    c.data.agents = 5;
    c.data.partition = PartitionStrategy::kByLabel;
    c.data.holdout = 0.1;
    c.data.seed = 41;
    c.model.kind = ModelKind::kConditional;
    c.model.loss = LossKind::kNonSaturating;
    c.model.hidden = 64;
    c.model.depth = 2;
    c.model.latent_dim = 8;
    c.schedule = Schedule::two_timescale(0.1, 0.02, 1000.0, 0.6, 0.9, 20);
    c.analysis.metrics = true;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace fedgan::cli
