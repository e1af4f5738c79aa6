#include "fedgan/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedgan/csv.hpp"

namespace fedgan {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Bump {
  double center;
  double width;
  double height;
};

struct Archetype {
  double floor;
  std::vector<Bump> bumps;
};

// Morning peak, evening peak, flat, night charging, midday, double peak.
const std::vector<Archetype>& archetype_table() {
  static const std::vector<Archetype> table = {
      {0.15, {{7.5, 1.5, 0.55}, {19.0, 2.5, 0.20}}},
      {0.15, {{19.0, 2.0, 0.60}, {8.0, 1.5, 0.15}}},
      {0.35, {{13.0, 5.0, 0.10}}},
      {0.12, {{1.5, 2.0, 0.65}}},
      {0.15, {{13.0, 2.5, 0.55}}},
      {0.12, {{7.0, 1.2, 0.40}, {20.0, 1.2, 0.45}}},
  };
  return table;
}

double circular_hours(double a, double b) {
  double d = std::fmod(std::abs(a - b), 24.0);
  return std::min(d, 24.0 - d);
}

}  // namespace

Batch Dataset::batch(std::span<const std::size_t> indices) const {
  Batch b;
  b.samples = samples.gather_rows(indices);
  if (has_labels()) b.labels = labels.gather_rows(indices);
  return b;
}

Batch Dataset::all() const { return Batch{samples, labels}; }

Dataset gen_uniform_1d(std::size_t n, double lo, double hi, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_uniform_1d: n must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("gen_uniform_1d: need lo < hi");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor x({n, 1});
  for (double& v : x.data()) v = u(rng);
  Dataset ds;
  ds.samples = std::move(x);
  ds.meta = {"uniform_1d", {{"lo", lo}, {"hi", hi}, {"n", static_cast<double>(n)}}, seed};
  return ds;
}

Tensor mixture_centers(std::size_t modes, double radius) {
  Tensor c({modes, 2});
  for (std::size_t k = 0; k < modes; ++k) {
    const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(modes);
    c.at(k, 0) = radius * std::cos(a);
    c.at(k, 1) = radius * std::sin(a);
  }
  return c;
}

Dataset gen_mixed_gaussians(std::size_t n, std::size_t modes, double radius, double sigma,
                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_mixed_gaussians: n must be >= 1");
  if (modes < 2) throw std::invalid_argument("gen_mixed_gaussians: modes must be >= 2");
  if (sigma < 0) throw std::invalid_argument("gen_mixed_gaussians: sigma must be >= 0");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, modes - 1);
  std::normal_distribution<double> g(0.0, 1.0);
  const Tensor centers = mixture_centers(modes, radius);
  Tensor x({n, 2});
  Tensor labels({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    x.at(i, 0) = centers.at(k, 0) + sigma * g(rng);
    x.at(i, 1) = centers.at(k, 1) + sigma * g(rng);
    labels.at(i, 0) = static_cast<double>(k);
  }
  Dataset ds;
  ds.samples = std::move(x);
  ds.labels = std::move(labels);
  ds.meta = {"mixed_gaussians",
             {{"modes", static_cast<double>(modes)},
              {"radius", radius},
              {"sigma", sigma},
              {"n", static_cast<double>(n)}},
             seed};
  return ds;
}

Dataset gen_swiss_roll(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_swiss_roll: n must be >= 1");
  if (noise < 0) throw std::invalid_argument("gen_swiss_roll: noise must be >= 0");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(1.5 * kPi, 4.5 * kPi);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor x({n, 2});
  Tensor arc({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = u(rng);
    x.at(i, 0) = t * std::cos(t) / kSwissRollScale + noise * g(rng);
    x.at(i, 1) = t * std::sin(t) / kSwissRollScale + noise * g(rng);
    arc.at(i, 0) = t;
  }
  Dataset ds;
  ds.samples = std::move(x);
  ds.labels = std::move(arc);
  ds.meta = {"swiss_roll",
             {{"noise", noise}, {"scale", kSwissRollScale}, {"n", static_cast<double>(n)}},
             seed};
  return ds;
}

std::vector<double> profile_base_curve(std::size_t archetype, bool weekend) {
  const auto& table = archetype_table();
  const Archetype& a = table[archetype % table.size()];
  // Archetypes beyond the table reuse a shape shifted by three hours per lap.
  const double lap_shift = 3.0 * static_cast<double>(archetype / table.size());
  const double shift = lap_shift + (weekend ? 1.5 : 0.0);
  const double height_scale = weekend ? 0.85 : 1.0;
  const double floor = a.floor + (weekend ? 0.05 : 0.0);
  std::vector<double> curve(kProfileLength, floor);
  for (std::size_t h = 0; h < kProfileLength; ++h) {
    for (const Bump& b : a.bumps) {
      const double d = circular_hours(static_cast<double>(h), b.center + shift);
      curve[h] += height_scale * b.height * std::exp(-0.5 * d * d / (b.width * b.width));
    }
  }
  return curve;
}

Dataset gen_synthetic_profiles(std::size_t n, std::size_t archetypes, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_synthetic_profiles: n must be >= 1");
  if (archetypes < 2) throw std::invalid_argument("gen_synthetic_profiles: archetypes must be >= 2");
  constexpr double kAmplitudeSigma = 0.15;
  constexpr double kNoise = 0.02;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, archetypes - 1);
  std::bernoulli_distribution weekend_draw(2.0 / 7.0);
  std::lognormal_distribution<double> amp(-0.5 * kAmplitudeSigma * kAmplitudeSigma, kAmplitudeSigma);
  std::normal_distribution<double> g(0.0, kNoise);

  std::vector<std::vector<double>> curves;
  for (std::size_t a = 0; a < archetypes; ++a) {
    curves.push_back(profile_base_curve(a, false));
    curves.push_back(profile_base_curve(a, true));
  }

  const std::size_t label_dim = archetypes + 1;
  Tensor x({n, kProfileLength});
  Tensor labels({n, label_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = pick(rng);
    const bool weekend = weekend_draw(rng);
    const double scale = amp(rng);
    const auto& curve = curves[2 * a + (weekend ? 1 : 0)];
    for (std::size_t h = 0; h < kProfileLength; ++h) {
      x.at(i, h) = std::clamp(curve[h] * scale + g(rng), 0.0, 1.0);
    }
    labels.at(i, a) = 1.0;
    labels.at(i, archetypes) = weekend ? 1.0 : 0.0;
  }
  Dataset ds;
  ds.samples = std::move(x);
  ds.labels = std::move(labels);
  ds.meta = {"profiles",
             {{"archetypes", static_cast<double>(archetypes)},
              {"amplitude_sigma", kAmplitudeSigma},
              {"noise", kNoise},
              {"n", static_cast<double>(n)}},
             seed};
  return ds;
}

std::vector<std::size_t> label_groups(const Dataset& ds, std::size_t* group_count) {
  if (!ds.has_labels()) throw std::invalid_argument("label_groups: dataset has no labels");
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = ds.labels.row(a), rb = ds.labels.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), row_less);
  std::vector<std::size_t> groups(n, 0);
  std::size_t g = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && row_less(order[k - 1], order[k])) ++g;
    groups[order[k]] = g;
  }
  if (group_count) *group_count = n ? g + 1 : 0;
  return groups;
}

std::string_view to_string(PartitionStrategy s) {
  switch (s) {
    case PartitionStrategy::kByRange: return "by_range";
    case PartitionStrategy::kByLabel: return "by_label";
    case PartitionStrategy::kByArc: return "by_arc";
    case PartitionStrategy::kIid: return "iid";
  }
  return "unknown";
}

PartitionStrategy parse_partition_strategy(std::string_view text) {
  if (text == "by_range") return PartitionStrategy::kByRange;
  if (text == "by_label") return PartitionStrategy::kByLabel;
  if (text == "by_arc") return PartitionStrategy::kByArc;
  if (text == "iid") return PartitionStrategy::kIid;
  throw std::invalid_argument("unknown partition strategy '" + std::string(text) + "'");
}

std::size_t Partition::total() const {
  std::size_t t = 0;
  for (const auto& a : assignments) t += a.size();
  return t;
}

Partition Partition::from_assignments(std::vector<std::vector<std::size_t>> assignments) {
  Partition p;
  std::size_t total = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i].empty()) {
      throw std::invalid_argument("partition: agent " + std::to_string(i) + " received no data");
    }
    total += assignments[i].size();
  }
  p.weights.reserve(assignments.size());
  for (const auto& a : assignments) {
    p.weights.push_back(static_cast<double>(a.size()) / static_cast<double>(total));
  }
  p.assignments = std::move(assignments);
  return p;
}

namespace {

std::vector<std::vector<std::size_t>> split_contiguous(const std::vector<std::size_t>& order,
                                                       std::size_t agents) {
  std::vector<std::vector<std::size_t>> out(agents);
  const std::size_t n = order.size();
  const std::size_t base = n / agents, extra = n % agents;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < agents; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

}  // namespace

Partition partition_noniid(const Dataset& ds, std::size_t agents, PartitionStrategy strategy,
                           std::uint64_t seed) {
  if (agents < 2 && strategy != PartitionStrategy::kIid) {
    throw std::invalid_argument("partition_noniid: need at least 2 agents");
  }
  if (agents < 1) throw std::invalid_argument("partition: need at least 1 agent");
  const std::size_t n = ds.size();
  std::vector<std::vector<std::size_t>> assign(agents);

  switch (strategy) {
    case PartitionStrategy::kByRange: {
      if (ds.dim() != 1) throw std::invalid_argument("by_range: needs 1-D samples");
      double lo = 0.0, hi = 0.0;
      if (ds.meta.params.count("lo") && ds.meta.params.count("hi")) {
        lo = ds.meta.params.at("lo");
        hi = ds.meta.params.at("hi");
      } else {
        const auto [mn, mx] = std::minmax_element(ds.samples.data().begin(), ds.samples.data().end());
        lo = *mn;
        hi = *mx;
      }
      if (!(hi > lo)) throw std::invalid_argument("by_range: degenerate value range");
      for (std::size_t i = 0; i < n; ++i) {
        const double f = (ds.samples[i] - lo) / (hi - lo) * static_cast<double>(agents);
        const auto seg = static_cast<std::size_t>(std::clamp(std::floor(f), 0.0, static_cast<double>(agents - 1)));
        assign[seg].push_back(i);
      }
      break;
    }
    case PartitionStrategy::kByLabel: {
      std::size_t count = 0;
      const auto groups = label_groups(ds, &count);
      if (agents > count) {
        throw std::invalid_argument("by_label: " + std::to_string(agents) + " agents but only " +
                                    std::to_string(count) + " label groups");
      }
      for (std::size_t i = 0; i < n; ++i) assign[groups[i] % agents].push_back(i);
      break;
    }
    case PartitionStrategy::kByArc: {
      if (ds.meta.generator != "swiss_roll" || ds.labels.cols() != 1) {
        throw std::invalid_argument("by_arc: needs a swiss roll dataset with its arc parameter");
      }
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return ds.labels[a] < ds.labels[b]; });
      assign = split_contiguous(order, agents);
      for (auto& a : assign) std::sort(a.begin(), a.end());
      break;
    }
    case PartitionStrategy::kIid: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      Rng rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      assign = split_contiguous(order, agents);
      for (auto& a : assign) std::sort(a.begin(), a.end());
      break;
    }
  }
  return Partition::from_assignments(std::move(assign));
}

HoldoutSplit split_holdout(const Partition& partition, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("split_holdout: fraction must be in [0, 1)");
  HoldoutSplit out;
  std::vector<std::vector<std::size_t>> train;
  for (std::size_t i = 0; i < partition.agents(); ++i) {
    std::vector<std::size_t> idx = partition.assignments[i];
    Rng rng = make_rng(seed, {stream::kHoldout, i});
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size())));
    out.holdout.insert(out.holdout.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    std::sort(rest.begin(), rest.end());
    train.push_back(std::move(rest));
  }
  std::sort(out.holdout.begin(), out.holdout.end());
  out.train = Partition::from_assignments(std::move(train));
  return out;
}

Batch sample_minibatch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t batch,
                       Rng& rng) {
  if (indices.empty()) throw std::invalid_argument("sample_minibatch: empty index list");
  if (batch < 1) throw std::invalid_argument("sample_minibatch: batch must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  std::vector<std::size_t> rows(batch);
  for (std::size_t& r : rows) r = indices[pick(rng)];
  return ds.batch(rows);
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  CsvWriter w(path);
  std::vector<std::string> header;
  for (std::size_t j = 0; j < ds.dim(); ++j) header.push_back("x" + std::to_string(j));
  const std::size_t lc = ds.has_labels() ? ds.labels.cols() : 0;
  for (std::size_t j = 0; j < lc; ++j) header.push_back("label" + std::to_string(j));
  w.row(header);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<std::string> cells;
    cells.reserve(header.size());
    for (std::size_t j = 0; j < ds.dim(); ++j) cells.push_back(format_double(ds.samples.at(i, j)));
    for (std::size_t j = 0; j < lc; ++j) cells.push_back(format_double(ds.labels.at(i, j)));
    w.row(cells);
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> xcols, lcols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j].rfind("label", 0) == 0) {
      lcols.push_back(j);
    } else if (t.header[j].rfind('x', 0) == 0) {
      xcols.push_back(j);
    } else {
      throw std::invalid_argument(path.string() + ": unexpected column '" + t.header[j] + "'");
    }
  }
  if (xcols.empty() || t.rows.empty()) throw std::invalid_argument(path.string() + ": no samples");
  const std::size_t n = t.rows.size();
  Dataset ds;
  ds.samples = Tensor({n, xcols.size()});
  if (!lcols.empty()) ds.labels = Tensor({n, lcols.size()});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < xcols.size(); ++j) ds.samples.at(i, j) = parse_double(t.rows[i][xcols[j]]);
    for (std::size_t j = 0; j < lcols.size(); ++j) ds.labels.at(i, j) = parse_double(t.rows[i][lcols[j]]);
  }
  ds.meta.generator = "csv";
  return ds;
}

}  // namespace fedgan
