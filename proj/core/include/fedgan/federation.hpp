#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fedgan/datasets.hpp"
#include "fedgan/models.hpp"
#include "fedgan/param_vector.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/schedule.hpp"
#include "fedgan/trajectory_log.hpp"

namespace fedgan {

/// One agent's local model pair, data share and noise stream.
///
/// Within a synchronization window the agent keeps the parameters it last
/// received (the anchor) and the running sums of its stochastic gradients, so
/// that params = anchor + rate * sum. Averaging then reduces to
/// anchor + rate * sum_j p_j sum_j, which makes K = 1 identical to the
/// weighted-average-gradient recursion.
struct AgentState {
  std::size_t id = 0;
  ParamVector params_d;
  ParamVector params_g;
  std::vector<std::size_t> data_indices;
  double p = 1.0;
  Rng rng;

  ParamVector anchor_d;
  ParamVector anchor_g;
  ParamVector sum_d;
  ParamVector sum_g;
  double window_a = 0.0;
  double window_b = 0.0;
  std::size_t window_steps = 0;
  /// False once an update could not be expressed as anchor + rate * sum
  /// (rates changed inside a window).
  bool window_exact = true;

  double last_objective_d = 0.0;
  double last_objective_g = 0.0;
  double last_grad_norm_d = 0.0;
  double last_grad_norm_g = 0.0;

  /// Displacement accumulated since the last sync: rate * gradient sum.
  ParamVector displacement_d() const;
  ParamVector displacement_g() const;

  /// Resets window bookkeeping so the current params become the anchor.
  void reset_window();
};

AgentState make_agent(std::size_t id, ParamVector params_d, ParamVector params_g,
                      std::vector<std::size_t> data_indices, double p, std::uint64_t seed);

/// One local update for one agent: draws a with-replacement mini-batch and a latent
/// batch, evaluates both gradients at the pre-update parameters, then
/// w += a_n * g~ and theta += b_n * h~. Throws NonFiniteError on a
/// non-finite gradient.
void local_step(AgentState& agent, const GanModel& model, LossKind loss, const Dataset& data,
                double a_n, double b_n, std::size_t batch);

struct SyncResult {
  ParamVector w_bar;
  ParamVector theta_bar;
};

/// Weighted average of all agents' parameters, broadcast back to every agent.
/// Agents that share an anchor and window rates are averaged through their
/// gradient sums; otherwise sum_j p_j w^j is formed with fixed-order
/// compensated summation. Throws ShapeError on layout mismatch and
/// std::invalid_argument when the weights do not sum to 1 within 1e-12.
SyncResult sync(std::vector<AgentState>& agents);

/// Weighted average without broadcasting.
SyncResult average(const std::vector<AgentState>& agents);

struct CommReport {
  std::size_t M = 0;
  std::size_t B = 0;
  std::size_t K = 1;
  std::size_t rounds = 0;
  double per_agent_per_round = 0.0;
  std::uint64_t total_scalars = 0;
  double baseline_per_agent_per_round = 0.0;
};

/// Scalars exchanged over `rounds` local steps: each sync moves 2M up and 2M
/// down per agent, and syncs happen every K steps.
CommReport comm_report(std::size_t M, std::size_t B, std::size_t K, std::size_t rounds);
/// Same with M = (M_d + M_g) / 2 so that 4M equals the exact per-sync count
/// 2 (M_d + M_g) for unequal network sizes.
CommReport comm_report(std::size_t M_d, std::size_t M_g, std::size_t B, std::size_t K,
                       std::size_t rounds);

struct RunOptions {
  /// Steps n = 0..N-1; N - 1 local updates are applied.
  std::size_t N = 1;
  std::size_t batch = 64;
  std::uint64_t master_seed = 0;
  std::size_t record_stride = 1;
  /// Worker threads for the per-agent local steps; results do not depend on it.
  std::size_t threads = 1;
  /// Common initial parameters; drawn from the initializer when absent.
  std::optional<ParamVector> init_d;
  std::optional<ParamVector> init_g;
  /// Uniform half-width of the initial weights; <= 0 selects 1/sqrt(fan_in).
  double init_scale = 0.0;
  /// Centralized runs only: account 4M scalars per step for this many agents,
  /// modelling a distributed GAN that exchanges parameters every step.
  std::size_t baseline_agents = 0;
};

/// Common initial pair shared by every agent.
std::pair<ParamVector, ParamVector> initial_params(const GanModel& model, const RunOptions& opts);

/// Builds agents with common initial parameters and derived RNG streams.
std::vector<AgentState> make_agents(const GanModel& model, const Partition& partition,
                                    const RunOptions& opts);

/// The FedGAN loop: for n = 1..N-1 every agent takes a local step with rates
/// a(n-1), b(n-1); when n mod K == 0 the agents are averaged and the result
/// broadcast.
TrajectoryLog run_fedgan(const GanModel& model, LossKind loss, const Dataset& data,
                         const Partition& partition, const Schedule& schedule,
                         const RunOptions& opts);

/// Single learner on the pooled data with the same schedule. Runs the same
/// engine as run_fedgan with one agent holding every row, so it coincides
/// with run_fedgan for B = 1 under any K.
TrajectoryLog run_centralized(const GanModel& model, LossKind loss, const Dataset& data,
                              const Schedule& schedule, const RunOptions& opts);
/// Same on a subset of rows (for example a partition's training rows).
TrajectoryLog run_centralized(const GanModel& model, LossKind loss, const Dataset& data,
                              std::vector<std::size_t> rows, const Schedule& schedule,
                              const RunOptions& opts);

/// Per-step agent parameters of one replayed synchronization window.
struct WindowReplay {
  /// agent_d[k][i], agent_g[k][i]: agent i after k local steps, k = 0..K.
  std::vector<std::vector<ParamVector>> agent_d;
  std::vector<std::vector<ParamVector>> agent_g;
  /// Weighted average at the window end, before broadcast.
  ParamVector avg_d;
  ParamVector avg_g;
};

/// Replays the K local steps that follow a sync at n1 from the given common
/// state, with fresh mini-batch noise drawn from `seed`.
WindowReplay replay_window(const GanModel& model, LossKind loss, const Dataset& data,
                           const Partition& partition, const Schedule& schedule,
                           const ParamVector& start_d, const ParamVector& start_g, std::size_t n1,
                           std::size_t batch, std::uint64_t seed);

}  // namespace fedgan
