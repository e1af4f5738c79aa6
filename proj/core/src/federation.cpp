#include "fedgan/federation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace fedgan {

ParamVector AgentState::displacement_d() const {
  if (window_steps == 0) return ParamVector::zeros(params_d.layout_ptr());
  if (window_exact) return scaled(window_a, sum_d);
  return axpy(-1.0, anchor_d, params_d);
}

ParamVector AgentState::displacement_g() const {
  if (window_steps == 0) return ParamVector::zeros(params_g.layout_ptr());
  if (window_exact) return scaled(window_b, sum_g);
  return axpy(-1.0, anchor_g, params_g);
}

void AgentState::reset_window() {
  window_steps = 0;
  window_exact = true;
}

AgentState make_agent(std::size_t id, ParamVector params_d, ParamVector params_g,
                      std::vector<std::size_t> data_indices, double p, std::uint64_t seed) {
  if (data_indices.empty()) {
    throw std::invalid_argument("make_agent: agent " + std::to_string(id) + " has no data");
  }
  AgentState a;
  a.id = id;
  a.params_d = std::move(params_d);
  a.params_g = std::move(params_g);
  a.data_indices = std::move(data_indices);
  a.p = p;
  a.rng.seed(seed);
  return a;
}

namespace {

void require_finite(const ParamVector& v, const char* what) {
  for (double x : v.data()) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string("non-finite ") + what);
  }
}

}  // namespace

void local_step(AgentState& agent, const GanModel& model, LossKind loss, const Dataset& data,
                double a_n, double b_n, std::size_t batch) {
  if (!(a_n >= 0.0) || !(b_n >= 0.0)) throw std::invalid_argument("local_step: rates must be >= 0");
  const Batch real = sample_minibatch(data, agent.data_indices, batch, agent.rng);
  GradPair gp = stochastic_grads(model, loss, agent.params_d, agent.params_g, real, agent.rng);
  require_finite(gp.d_grad, "discriminator gradient");
  require_finite(gp.g_grad, "generator gradient");

  if (agent.window_steps == 0) {
    agent.anchor_d = agent.params_d;
    agent.anchor_g = agent.params_g;
    agent.window_a = a_n;
    agent.window_b = b_n;
    agent.window_exact = true;
    agent.sum_d = gp.d_grad;
    agent.sum_g = gp.g_grad;
  } else if (agent.window_exact && a_n == agent.window_a && b_n == agent.window_b) {
    axpy_inplace(1.0, gp.d_grad, agent.sum_d);
    axpy_inplace(1.0, gp.g_grad, agent.sum_g);
  } else {
    agent.window_exact = false;
  }

  if (agent.window_exact) {
    agent.params_d = axpy(agent.window_a, agent.sum_d, agent.anchor_d);
    agent.params_g = axpy(agent.window_b, agent.sum_g, agent.anchor_g);
  } else {
    axpy_inplace(a_n, gp.d_grad, agent.params_d);
    axpy_inplace(b_n, gp.g_grad, agent.params_g);
  }
  ++agent.window_steps;
  agent.last_objective_d = gp.objective_d;
  agent.last_objective_g = gp.objective_g;
  agent.last_grad_norm_d = l2_norm(gp.d_grad);
  agent.last_grad_norm_g = l2_norm(gp.g_grad);
}

namespace {

std::vector<double> checked_weights(const std::vector<AgentState>& agents) {
  if (agents.empty()) throw std::invalid_argument("sync: no agents");
  std::vector<double> p;
  p.reserve(agents.size());
  for (const AgentState& a : agents) {
    a.params_d.require_same_layout(agents.front().params_d, "sync");
    a.params_g.require_same_layout(agents.front().params_g, "sync");
    p.push_back(a.p);
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("sync: agent weights sum to " + std::to_string(total) + ", not 1");
  }
  return p;
}

bool shared_window(const std::vector<AgentState>& agents) {
  const AgentState& f = agents.front();
  for (const AgentState& a : agents) {
    if (a.window_steps == 0 || !a.window_exact) return false;
    if (a.window_a != f.window_a || a.window_b != f.window_b) return false;
    if (a.anchor_d != f.anchor_d || a.anchor_g != f.anchor_g) return false;
  }
  return true;
}

bool all_idle_and_equal(const std::vector<AgentState>& agents) {
  const AgentState& f = agents.front();
  for (const AgentState& a : agents) {
    if (a.window_steps != 0) return false;
    if (a.params_d != f.params_d || a.params_g != f.params_g) return false;
  }
  return true;
}

}  // namespace

SyncResult average(const std::vector<AgentState>& agents) {
  const std::vector<double> p = checked_weights(agents);
  const AgentState& f = agents.front();
  if (all_idle_and_equal(agents)) return {f.params_d, f.params_g};

  std::vector<const ParamVector*> xd, xg;
  xd.reserve(agents.size());
  xg.reserve(agents.size());
  if (shared_window(agents)) {
    for (const AgentState& a : agents) {
      xd.push_back(&a.sum_d);
      xg.push_back(&a.sum_g);
    }
    return {axpy(f.window_a, weighted_sum(p, xd), f.anchor_d),
            axpy(f.window_b, weighted_sum(p, xg), f.anchor_g)};
  }
  for (const AgentState& a : agents) {
    xd.push_back(&a.params_d);
    xg.push_back(&a.params_g);
  }
  return {weighted_sum(p, xd), weighted_sum(p, xg)};
}

SyncResult sync(std::vector<AgentState>& agents) {
  SyncResult r = average(agents);
  for (AgentState& a : agents) {
    a.params_d = r.w_bar;
    a.params_g = r.theta_bar;
    a.reset_window();
  }
  return r;
}

CommReport comm_report(std::size_t M, std::size_t B, std::size_t K, std::size_t rounds) {
  if (M < 1 || B < 1 || K < 1 || rounds < 1) {
    throw std::invalid_argument("comm_report: M, B, K and rounds must be >= 1");
  }
  CommReport r;
  r.M = M;
  r.B = B;
  r.K = K;
  r.rounds = rounds;
  r.per_agent_per_round = 4.0 * static_cast<double>(M) / static_cast<double>(K);
  r.baseline_per_agent_per_round = 4.0 * static_cast<double>(M);
  r.total_scalars = static_cast<std::uint64_t>(B) * 4u * M * (rounds / K);
  return r;
}

CommReport comm_report(std::size_t M_d, std::size_t M_g, std::size_t B, std::size_t K,
                       std::size_t rounds) {
  if (M_d + M_g < 1 || B < 1 || K < 1 || rounds < 1) {
    throw std::invalid_argument("comm_report: M, B, K and rounds must be >= 1");
  }
  CommReport r;
  const double M = 0.5 * static_cast<double>(M_d + M_g);
  r.M = (M_d + M_g) / 2;
  r.B = B;
  r.K = K;
  r.rounds = rounds;
  r.per_agent_per_round = 4.0 * M / static_cast<double>(K);
  r.baseline_per_agent_per_round = 4.0 * M;
  r.total_scalars = static_cast<std::uint64_t>(B) * 2u * (M_d + M_g) * (rounds / K);
  return r;
}

std::pair<ParamVector, ParamVector> initial_params(const GanModel& model, const RunOptions& opts) {
  ParamVector d, g;
  if (opts.init_d) {
    d = *opts.init_d;
    if (d.layout() != *model.discriminator.layout()) {
      throw ShapeError("initial discriminator parameters do not match the model");
    }
  } else {
    Rng rng = make_rng(opts.master_seed, {stream::kInit, 0});
    d = init_params(model.discriminator, rng, opts.init_scale);
  }
  if (opts.init_g) {
    g = *opts.init_g;
    if (g.layout() != *model.generator.layout()) {
      throw ShapeError("initial generator parameters do not match the model");
    }
  } else {
    Rng rng = make_rng(opts.master_seed, {stream::kInit, 1});
    g = init_params(model.generator, rng, opts.init_scale);
  }
  return {std::move(d), std::move(g)};
}

std::vector<AgentState> make_agents(const GanModel& model, const Partition& partition,
                                    const RunOptions& opts) {
  if (partition.agents() == 0) throw std::invalid_argument("make_agents: empty partition");
  auto [d, g] = initial_params(model, opts);
  std::vector<AgentState> agents;
  agents.reserve(partition.agents());
  for (std::size_t i = 0; i < partition.agents(); ++i) {
    agents.push_back(make_agent(i, d, g, partition.assignments[i], partition.weights[i],
                                derive_seed(opts.master_seed, {stream::kAgent, i})));
  }
  return agents;
}

namespace {

void step_all(std::vector<AgentState>& agents, const GanModel& model, LossKind loss,
              const Dataset& data, double a, double b, std::size_t batch, std::size_t threads,
              std::size_t n) {
  std::vector<std::exception_ptr> errors(agents.size());
  auto work = [&](std::size_t i) {
    try {
      local_step(agents[i], model, loss, data, a, b, batch);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, agents.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < agents.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < agents.size(); i += workers) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("step " + std::to_string(n) + ", agent " + std::to_string(i) + ": " +
                           e.what());
    }
  }
}

struct Accounting {
  std::uint64_t per_sync = 0;
  std::uint64_t per_step = 0;
};

TrajectoryLog run_engine(const GanModel& model, LossKind loss, const Dataset& data,
                         std::vector<AgentState> agents, const Schedule& schedule,
                         const RunOptions& opts, Accounting acc) {
  if (opts.N < 1) throw std::invalid_argument("run: N must be >= 1");
  if (opts.batch < 1) throw std::invalid_argument("run: batch must be >= 1");
  if (schedule.K < 1) throw std::invalid_argument("run: K must be >= 1");
  const std::size_t K = schedule.K;
  const std::size_t stride = std::max<std::size_t>(1, opts.record_stride);
  const std::size_t last = opts.N - 1;
  const std::size_t last_sync = (last / K) * K;

  TrajectoryLog log(agents.size(), model.discriminator_params(), model.generator_params(), K, stride);
  std::uint64_t cum = 0;

  auto log_agents = [&](std::size_t n, double a, double b) {
    for (const AgentState& ag : agents) {
      LogRow r;
      r.step = n;
      r.agent = static_cast<long>(ag.id);
      r.rate_a = a;
      r.rate_b = b;
      r.loss_d = ag.last_objective_d;
      r.loss_g = ag.last_objective_g;
      r.grad_norm_d = ag.last_grad_norm_d;
      r.grad_norm_g = ag.last_grad_norm_g;
      r.cum_scalars = cum;
      log.add(ag.params_d, ag.params_g, std::move(r));
    }
  };
  auto log_synced = [&](std::size_t n, double a, double b, const SyncResult& s) {
    LogRow r;
    r.step = n;
    r.agent = kSyncedAgent;
    r.rate_a = a;
    r.rate_b = b;
    for (const AgentState& ag : agents) {
      r.loss_d += ag.p * ag.last_objective_d;
      r.loss_g += ag.p * ag.last_objective_g;
    }
    r.cum_scalars = cum;
    log.add(s.w_bar, s.theta_bar, std::move(r));
  };

  log_agents(0, schedule.a(0), schedule.b(0));
  log_synced(0, schedule.a(0), schedule.b(0), SyncResult{agents.front().params_d, agents.front().params_g});

  for (std::size_t n = 1; n <= last; ++n) {
    const double a = schedule.a(n - 1);
    const double b = schedule.b(n - 1);
    step_all(agents, model, loss, data, a, b, opts.batch, opts.threads, n);
    cum += acc.per_step;
    const bool record = n % stride == 0 || n == last;
    if (n % K == 0) {
      cum += acc.per_sync * agents.size();
      if (record) log_agents(n, a, b);
      const SyncResult s = sync(agents);
      if (n % stride == 0 || n == last_sync) log_synced(n, a, b, s);
    } else if (record) {
      log_agents(n, a, b);
    }
  }
  log.final_step = last;
  return log;
}

}  // namespace

TrajectoryLog run_fedgan(const GanModel& model, LossKind loss, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const RunOptions& opts) {
  std::vector<AgentState> agents = make_agents(model, partition, opts);
  const auto M2 = 2u * static_cast<std::uint64_t>(model.discriminator_params() + model.generator_params());
  return run_engine(model, loss, data, std::move(agents), schedule, opts, Accounting{M2, 0});
}

TrajectoryLog run_centralized(const GanModel& model, LossKind loss, const Dataset& data,
                              const Schedule& schedule, const RunOptions& opts) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return run_centralized(model, loss, data, std::move(all), schedule, opts);
}

TrajectoryLog run_centralized(const GanModel& model, LossKind loss, const Dataset& data,
                              std::vector<std::size_t> rows, const Schedule& schedule,
                              const RunOptions& opts) {
  const Partition pooled = Partition::from_assignments({std::move(rows)});
  std::vector<AgentState> agents = make_agents(model, pooled, opts);
  const auto M2 = 2u * static_cast<std::uint64_t>(model.discriminator_params() + model.generator_params());
  return run_engine(model, loss, data, std::move(agents), schedule, opts,
                    Accounting{0, M2 * opts.baseline_agents});
}

WindowReplay replay_window(const GanModel& model, LossKind loss, const Dataset& data,
                           const Partition& partition, const Schedule& schedule,
                           const ParamVector& start_d, const ParamVector& start_g, std::size_t n1,
                           std::size_t batch, std::uint64_t seed) {
  if (n1 % schedule.K != 0) {
    throw std::invalid_argument("replay_window: window start " + std::to_string(n1) +
                                " is not a multiple of K");
  }
  std::vector<AgentState> agents;
  for (std::size_t i = 0; i < partition.agents(); ++i) {
    agents.push_back(make_agent(i, start_d, start_g, partition.assignments[i], partition.weights[i],
                                derive_seed(seed, {stream::kReplay, i})));
  }
  const double a = schedule.a(n1), b = schedule.b(n1);
  WindowReplay w;
  auto snapshot = [&] {
    std::vector<ParamVector> d, g;
    for (const AgentState& ag : agents) {
      d.push_back(ag.params_d);
      g.push_back(ag.params_g);
    }
    w.agent_d.push_back(std::move(d));
    w.agent_g.push_back(std::move(g));
  };
  snapshot();
  for (std::size_t k = 1; k <= schedule.K; ++k) {
    step_all(agents, model, loss, data, a, b, batch, 1, n1 + k);
    snapshot();
  }
  SyncResult s = average(agents);
  w.avg_d = std::move(s.w_bar);
  w.avg_g = std::move(s.theta_bar);
  return w;
}

}  // namespace fedgan
