#include "fedgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedgan/csv.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected an (n, d) matrix");
}

struct Neumaier {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double kernel_mean(const Tensor& a, const Tensor& b, double inv_two_bw2) {
  Neumaier total;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Neumaier row;
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) row.add(std::exp(-sq_dist(ai, b.row(j)) * inv_two_bw2));
    total.add(row.value());
  }
  return total.value() / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median_bandwidth(const Tensor& a, const Tensor& b, std::size_t max_points) {
  require_matrix(a, "median_bandwidth");
  require_matrix(b, "median_bandwidth");
  if (a.cols() != b.cols()) throw ShapeError("median_bandwidth: dimension mismatch");
  std::vector<std::span<const double>> pts;
  const std::size_t n = a.rows() + b.rows();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / std::max<std::size_t>(1, max_points));
  for (std::size_t i = 0; i < n; i += stride) pts.push_back(i < a.rows() ? a.row(i) : b.row(i - a.rows()));
  std::vector<double> d;
  d.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d.push_back(std::sqrt(sq_dist(pts[i], pts[j])));
  }
  if (d.empty()) return 0.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

MmdResult mmd2(const Tensor& a, const Tensor& b, double bandwidth) {
  require_matrix(a, "mmd2");
  require_matrix(b, "mmd2");
  if (a.cols() != b.cols()) throw ShapeError("mmd2: dimension mismatch");
  if (a.rows() < 2 || b.rows() < 2) throw std::invalid_argument("mmd2: need at least 2 samples per set");
  MmdResult r;
  r.n_a = a.rows();
  r.n_b = b.rows();
  r.bandwidth = bandwidth > 0 ? bandwidth : median_bandwidth(a, b);
  if (!(r.bandwidth > 0)) throw std::invalid_argument("mmd2: degenerate bandwidth 0");
  const double inv = 1.0 / (2.0 * r.bandwidth * r.bandwidth);
  const double kaa = kernel_mean(a, a, inv);
  const double kbb = kernel_mean(b, b, inv);
  // Cross term averaged over both orders so that mmd2(A, B) == mmd2(B, A).
  const double kab = 0.5 * (kernel_mean(a, b, inv) + kernel_mean(b, a, inv));
  r.mmd2 = std::max(0.0, kaa + kbb - 2.0 * kab);
  return r;
}

ModeCoverage mode_coverage(const Tensor& samples, const Tensor& centers, double r) {
  require_matrix(samples, "mode_coverage");
  require_matrix(centers, "mode_coverage");
  if (!(r > 0)) throw std::invalid_argument("mode_coverage: r must be positive");
  if (samples.cols() != centers.cols()) throw ShapeError("mode_coverage: dimension mismatch");
  const std::size_t k = centers.rows(), n = samples.rows();
  ModeCoverage mc;
  mc.total_modes = k;
  mc.per_mode.assign(k, 0);
  std::size_t near = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(samples.row(i), centers.row(c));
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    if (best <= r * r) {
      ++near;
      ++mc.per_mode[arg];
    }
  }
  const double need = std::max(10.0, 0.05 * static_cast<double>(n) / static_cast<double>(k));
  for (std::size_t c : mc.per_mode) mc.modes_hit += static_cast<double>(c) >= need ? 1 : 0;
  mc.high_quality_fraction = n ? static_cast<double>(near) / static_cast<double>(n) : 0.0;
  return mc;
}

namespace {

double assign_points(const Tensor& x, const Tensor& c, std::vector<std::size_t>& assign,
                     std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < c.rows(); ++j) {
      const double d = sq_dist(x.row(i), c.row(j));
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    assign[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

Tensor kmeanspp_seed(const Tensor& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor c({k, d});
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  std::vector<bool> used(n, false);
  for (std::size_t j = 0; j < k; ++j) {
    used[pick] = true;
    std::copy(x.row(pick).begin(), x.row(pick).end(), c.data().begin() + static_cast<std::ptrdiff_t>(j * d));
    if (j + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], sq_dist(x.row(i), c.row(j)));
      total += dist[i];
    }
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist[i];
        if (acc >= target && dist[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point coincides with a chosen center: take the next unused row.
      pick = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
      if (pick >= n) pick = 0;
    }
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const Tensor& samples, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  require_matrix(samples, "kmeans");
  const std::size_t n = samples.rows(), d = samples.cols();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (n < k) throw std::invalid_argument("kmeans: need at least k samples");
  Rng rng(seed);
  Tensor c = kmeanspp_seed(samples, k, rng);
  std::vector<std::size_t> assign(n);
  std::vector<double> dist(n);
  KMeansResult r;
  r.inertia.push_back(assign_points(samples, c, assign, dist));

  for (std::size_t it = 0; it < max_iter; ++it) {
    Tensor next({k, d});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      for (std::size_t j = 0; j < d; ++j) next.at(assign[i], j) += samples.at(i, j);
    }
    std::vector<bool> taken(n, false);
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] == 0) {
        std::size_t far = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && dist[i] > best) {
            best = dist[i];
            far = i;
          }
        }
        taken[far] = true;
        for (std::size_t q = 0; q < d; ++q) next.at(j, q) = samples.at(far, q);
      } else {
        for (std::size_t q = 0; q < d; ++q) next.at(j, q) /= static_cast<double>(count[j]);
      }
    }
    const std::vector<std::size_t> before = assign;
    const double inertia = assign_points(samples, next, assign, dist);
    c = std::move(next);
    r.inertia.push_back(inertia);
    r.iterations = it + 1;
    if (assign == before) break;
  }

  r.sizes.assign(k, 0);
  for (std::size_t a : assign) ++r.sizes[a];
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.sizes[a] > r.sizes[b]; });
  std::vector<std::size_t> rank(k);
  r.centroids = Tensor({k, d});
  std::vector<std::size_t> sizes(k);
  for (std::size_t j = 0; j < k; ++j) {
    rank[order[j]] = j;
    sizes[j] = r.sizes[order[j]];
    for (std::size_t q = 0; q < d; ++q) r.centroids.at(j, q) = c.at(order[j], q);
  }
  r.sizes = std::move(sizes);
  for (std::size_t& a : assign) a = rank[a];
  r.assignment = std::move(assign);
  return r;
}

std::vector<std::size_t> optimal_assignment(const std::vector<std::vector<double>>& cost) {
  // Hungarian algorithm with potentials (rows and columns 1-based inside).
  const std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw std::invalid_argument("optimal_assignment: cost matrix must be square");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) result[p[j] - 1] = j - 1;
  return result;
}

CentroidReport centroid_compare(const Tensor& real, const Tensor& gen, std::size_t k,
                                std::uint64_t seed, std::size_t max_iter) {
  require_matrix(real, "centroid_compare");
  require_matrix(gen, "centroid_compare");
  if (real.cols() != gen.cols()) throw ShapeError("centroid_compare: dimension mismatch");
  CentroidReport r;
  r.k = k;
  r.real_centroids = kmeans(real, k, seed, max_iter).centroids;
  r.gen_centroids = kmeans(gen, k, seed, max_iter).centroids;
  std::vector<std::vector<double>> cost(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      cost[i][j] = std::sqrt(sq_dist(r.real_centroids.row(i), r.gen_centroids.row(j)));
    }
  }
  const auto match = optimal_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    r.matching.emplace_back(i, match[i]);
    r.distances.push_back(cost[i][match[i]]);
    total += cost[i][match[i]];
  }
  r.mean_matched_distance = total / static_cast<double>(k);
  return r;
}

std::vector<double> centroid_null(const Tensor& real, std::size_t k, std::size_t splits,
                                  std::uint64_t seed) {
  require_matrix(real, "centroid_null");
  const std::size_t half = real.rows() / 2;
  if (half < k) throw std::invalid_argument("centroid_null: each half needs at least k samples");
  std::vector<double> out;
  std::vector<std::size_t> idx(real.rows());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t s = 0; s < splits; ++s) {
    Rng rng = make_rng(seed, {stream::kMetrics, s});
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::span<const std::size_t> all(idx);
    const Tensor a = real.gather_rows(all.subspan(0, half));
    const Tensor b = real.gather_rows(all.subspan(half, half));
    out.push_back(centroid_compare(a, b, k, derive_seed(seed, {stream::kMetrics, s, 1})).mean_matched_distance);
  }
  return out;
}

void CentroidReport::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  const std::size_t d = real_centroids.cols();
  std::vector<std::string> header = {"rank", "gen_index"};
  for (std::size_t j = 0; j < d; ++j) header.push_back("real_" + std::to_string(j));
  for (std::size_t j = 0; j < d; ++j) header.push_back("gen_" + std::to_string(j));
  header.push_back("distance");
  w.row(header);
  for (const auto& [i, j] : matching) {
    std::vector<std::string> cells = {std::to_string(i), std::to_string(j)};
    for (std::size_t q = 0; q < d; ++q) cells.push_back(format_double(real_centroids.at(i, q)));
    for (std::size_t q = 0; q < d; ++q) cells.push_back(format_double(gen_centroids.at(j, q)));
    cells.push_back(format_double(distances[i]));
    w.row(cells);
  }
}

}  // namespace fedgan
