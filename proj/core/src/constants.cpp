#include "fedgan/constants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedgan/rng.hpp"

namespace fedgan {

double ProbeRegion::diameter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

ProbeRegion probe_region_from_log(const TrajectoryLog& log, double inflate, double min_halfwidth) {
  if (!log.param_level()) throw PreconditionError("probe region needs a param-level log");
  const std::size_t dim = log.dim_d() + log.dim_g();
  ProbeRegion r;
  r.lo.assign(dim, INFINITY);
  r.hi.assign(dim, -INFINITY);
  for (const LogRow& row : log.rows()) {
    for (std::size_t i = 0; i < dim; ++i) {
      r.lo[i] = std::min(r.lo[i], row.params[i]);
      r.hi[i] = std::max(r.hi[i], row.params[i]);
    }
  }
  if (log.rows().empty()) throw PreconditionError("probe region needs at least one log row");
  for (std::size_t i = 0; i < dim; ++i) {
    const double mid = 0.5 * (r.lo[i] + r.hi[i]);
    const double half = std::max(0.5 * (r.hi[i] - r.lo[i]) * (1.0 + inflate), min_halfwidth);
    r.lo[i] = mid - half;
    r.hi[i] = mid + half;
  }
  return r;
}

EstimatedConstants EstimatedConstants::inflated(double factor) const {
  EstimatedConstants c = *this;
  c.L *= factor;
  c.sigma_g *= factor;
  c.sigma_h *= factor;
  c.mu_g *= factor;
  return c;
}

namespace {

std::vector<double> draw_point(const ProbeRegion& r, Rng& rng) {
  std::vector<double> z(r.dim());
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::uniform_real_distribution<double> u(r.lo[i], r.hi[i]);
    z[i] = u(rng);
  }
  return z;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Gradients of every agent and the pooled gradient at one point, stacked.
struct ProbeGrads {
  std::vector<std::vector<double>> agent;
  std::vector<GradPair> agent_pairs;
  std::vector<double> pooled;
  GradPair pooled_pair;
};

ProbeGrads probe(const GradientOracle& oracle, std::span<const double> z) {
  const auto [w, theta] = oracle.unstack(z);
  ProbeGrads p;
  for (std::size_t i = 0; i < oracle.agents(); ++i) {
    p.agent_pairs.push_back(oracle.agent(i, w, theta));
    p.agent.push_back(oracle.stack(p.agent_pairs.back().d_grad, p.agent_pairs.back().g_grad));
  }
  p.pooled_pair = oracle.pooled(w, theta);
  p.pooled = oracle.stack(p.pooled_pair.d_grad, p.pooled_pair.g_grad);
  return p;
}

double lipschitz_ratio(const ProbeGrads& a, const ProbeGrads& b, double dz) {
  double m = distance(a.pooled, b.pooled) / dz;
  for (std::size_t i = 0; i < a.agent.size(); ++i) m = std::max(m, distance(a.agent[i], b.agent[i]) / dz);
  return m;
}

}  // namespace

EstimatedConstants estimate_constants(const GradientOracle& oracle, const Dataset& data,
                                      const Partition& partition, const ProbeRegion& region,
                                      const ConstantsOptions& opts) {
  if (opts.n_probes < 100) throw std::invalid_argument("estimate_constants: need at least 100 probes");
  if (region.dim() != oracle.dim()) throw ShapeError("estimate_constants: region dimension mismatch");
  const double diam = region.diameter();
  if (!(diam > 0)) throw std::invalid_argument("estimate_constants: probe region has zero diameter");
  if (opts.batch < 1 || opts.noise_batches < 1) {
    throw std::invalid_argument("estimate_constants: batch and noise_batches must be >= 1");
  }

  EstimatedConstants c;
  c.n_probes = opts.n_probes;
  c.noise_batches = opts.noise_batches;
  c.batch = opts.batch;
  c.region = region;

  Rng rng = make_rng(opts.seed, {stream::kProbe});
  std::normal_distribution<double> gauss(0.0, 1.0);
  ProbeGrads previous;
  std::vector<double> previous_z;

  for (std::size_t k = 0; k < opts.n_probes; ++k) {
    const std::vector<double> z = draw_point(region, rng);
    ProbeGrads here = probe(oracle, z);

    // Lipschitz: a random pair across the region and a local perturbation.
    if (!previous_z.empty()) {
      const double dz = distance(z, previous_z);
      if (dz > 0) c.L = std::max(c.L, lipschitz_ratio(here, previous, dz));
    }
    std::vector<double> zp = z;
    for (double& v : zp) v += opts.local_step * diam * gauss(rng) / std::sqrt(static_cast<double>(zp.size()));
    const double dloc = distance(z, zp);
    if (dloc > 0) c.L = std::max(c.L, lipschitz_ratio(here, probe(oracle, zp), dloc));

    // Gradient divergence.
    for (std::size_t i = 0; i < oracle.agents(); ++i) {
      c.mu_g = std::max(c.mu_g, l2_distance(here.agent_pairs[i].d_grad, here.pooled_pair.d_grad));
    }

    // Mini-batch noise.
    const auto [w, theta] = oracle.unstack(z);
    for (std::size_t i = 0; i < oracle.agents(); ++i) {
      Rng noise = make_rng(opts.seed, {stream::kProbe, k + 1, i});
      const auto& idx = partition.assignments.at(i);
      double sum_g = 0.0, sum_h = 0.0;
      for (std::size_t b = 0; b < opts.noise_batches; ++b) {
        Batch real;
        if (opts.replacement) {
          real = sample_minibatch(data, idx, opts.batch, noise);
        } else {
          if (opts.batch > idx.size()) {
            throw std::invalid_argument("estimate_constants: batch exceeds agent data without replacement");
          }
          std::vector<std::size_t> pick = idx;
          std::shuffle(pick.begin(), pick.end(), noise);
          pick.resize(opts.batch);
          real = data.batch(pick);
        }
        const GradPair gp = stochastic_grads(oracle.model(), oracle.loss(), w, theta, real, noise);
        sum_g += l2_distance(gp.d_grad, here.agent_pairs[i].d_grad);
        sum_h += l2_distance(gp.g_grad, here.agent_pairs[i].g_grad);
      }
      const auto nb = static_cast<double>(opts.noise_batches);
      c.sigma_g = std::max(c.sigma_g, sum_g / nb);
      c.sigma_h = std::max(c.sigma_h, sum_h / nb);
    }

    previous = std::move(here);
    previous_z = z;
  }
  return c;
}

}  // namespace fedgan
