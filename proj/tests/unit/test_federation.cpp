#include <gtest/gtest.h>

#include <numeric>

#include "fedgan/federation.hpp"
#include "test_util.hpp"

namespace fedgan {
namespace {

using testing::reference_trajectory;
using testing::TwoDProblem;

class LockstepTest : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LockstepTest, KEqualsOneIsBitExactWithAveragedGradients) {
  TwoDProblem pr(GetParam());
  const std::size_t N = 1001;
  pr.opts.N = N;
  const Schedule s = Schedule::equal(0.3, 100.0, 1.0, 1);
  const TrajectoryLog log = run_fedgan(pr.model, LossKind::kMinimax, pr.data, pr.partition, s, pr.opts);
  const auto ref = reference_trajectory(pr, s, N, LossKind::kMinimax);
  const auto synced = log.synced_rows();
  ASSERT_EQ(synced.size(), N);
  for (std::size_t n = 0; n < N; ++n) {
    ASSERT_EQ(synced[n]->step, n);
    ASSERT_EQ(synced[n]->params, ref[n]) << "first difference at step " << n;
  }
}

INSTANTIATE_TEST_SUITE_P(Agents, LockstepTest, ::testing::Values(2u, 5u));

TEST(FederationTest, TwoTimescaleLockstepToo) {
  TwoDProblem pr(3);
  pr.opts.N = 201;
  const Schedule s = Schedule::two_timescale(0.2, 0.1, 50.0, 0.6, 0.9, 1);
  const TrajectoryLog log = run_fedgan(pr.model, LossKind::kNonSaturating, pr.data, pr.partition, s, pr.opts);
  const auto ref = reference_trajectory(pr, s, 201, LossKind::kNonSaturating);
  const auto synced = log.synced_rows();
  ASSERT_EQ(synced.size(), ref.size());
  for (std::size_t n = 0; n < ref.size(); ++n) ASSERT_EQ(synced[n]->params, ref[n]) << "step " << n;
}

TEST(FederationTest, SyncIsIdempotent) {
  TwoDProblem pr(4);
  std::vector<AgentState> agents = make_agents(pr.model, pr.partition, pr.opts);
  for (int k = 0; k < 3; ++k) {
    for (AgentState& a : agents) local_step(a, pr.model, LossKind::kMinimax, pr.data, 0.1, 0.1, 8);
  }
  const SyncResult first = sync(agents);
  const SyncResult second = sync(agents);
  EXPECT_EQ(first.w_bar, second.w_bar);
  EXPECT_EQ(first.theta_bar, second.theta_bar);
  for (const AgentState& a : agents) {
    EXPECT_EQ(a.params_d, first.w_bar);
    EXPECT_EQ(a.window_steps, 0u);
  }
}

TEST(FederationTest, AverageMatchesCompensatedWeightedMean) {
  TwoDProblem pr(5);
  std::vector<AgentState> agents = make_agents(pr.model, pr.partition, pr.opts);
  for (AgentState& a : agents) local_step(a, pr.model, LossKind::kMinimax, pr.data, 0.1, 0.1, 8);
  // Rates differ per step inside this window, so averaging uses the parameters.
  for (AgentState& a : agents) local_step(a, pr.model, LossKind::kMinimax, pr.data, 0.05, 0.05, 8);
  double w = 0.0, th = 0.0;
  for (const AgentState& a : agents) {
    EXPECT_FALSE(a.window_exact);
    w += a.p * a.params_d[0];
    th += a.p * a.params_g[0];
  }
  const SyncResult r = average(agents);
  EXPECT_NEAR(r.w_bar[0], w, 1e-15);
  EXPECT_NEAR(r.theta_bar[0], th, 1e-15);
}

TEST(FederationTest, WeightsMustSumToOne) {
  TwoDProblem pr(2);
  std::vector<AgentState> agents = make_agents(pr.model, pr.partition, pr.opts);
  agents[0].p += 1e-9;
  EXPECT_THROW(sync(agents), std::invalid_argument);
}

TEST(FederationTest, DisplacementScalesWithTheRate) {
  // Doubling the rate doubles the displacement exactly (power-of-two scaling).
  TwoDProblem pr(2);
  const GanModel mlp = make_mlp_gan(4, 1, 2, 2);
  const Dataset ds = gen_mixed_gaussians(400, 8, 2.0, 0.02, 1);
  const Partition part = partition_noniid(ds, 2, PartitionStrategy::kByLabel, 0);
  RunOptions o;
  o.master_seed = 5;
  for (double c : {0.5, 2.0, 4.0}) {
    std::vector<AgentState> base = make_agents(mlp, part, o), sc = make_agents(mlp, part, o);
    for (std::size_t i = 0; i < 2; ++i) {
      local_step(base[i], mlp, LossKind::kMinimax, ds, 0.01, 0.02, 16);
      local_step(sc[i], mlp, LossKind::kMinimax, ds, 0.01 * c, 0.02 * c, 16);
      EXPECT_EQ(sc[i].displacement_d(), scaled(c, base[i].displacement_d()));
      EXPECT_EQ(sc[i].displacement_g(), scaled(c, base[i].displacement_g()));
    }
  }
}

TEST(FederationTest, ZeroRateLeavesParametersUnchanged) {
  TwoDProblem pr(2);
  std::vector<AgentState> agents = make_agents(pr.model, pr.partition, pr.opts);
  const ParamVector before = agents[0].params_d;
  local_step(agents[0], pr.model, LossKind::kMinimax, pr.data, 0.0, 0.0, 8);
  EXPECT_EQ(agents[0].params_d, before);
  EXPECT_THROW(local_step(agents[0], pr.model, LossKind::kMinimax, pr.data, -0.1, 0.0, 8), std::invalid_argument);
}

TEST(FederationTest, CentralizedEqualsSingleAgentFederationForAnyK) {
  TwoDProblem pr(1);
  std::vector<std::size_t> all(pr.data.size());
  std::iota(all.begin(), all.end(), 0);
  const Partition one = Partition::from_assignments({all});
  for (std::size_t K : {1u, 5u, 20u}) {
    const Schedule s = Schedule::equal(0.3, 100.0, 1.0, K);
    RunOptions o = pr.opts;
    o.N = 301;
    const TrajectoryLog fed = run_fedgan(pr.model, LossKind::kMinimax, pr.data, one, s, o);
    const TrajectoryLog cen = run_centralized(pr.model, LossKind::kMinimax, pr.data, s, o);
    EXPECT_EQ(fed.final_synced_params, cen.final_synced_params) << "K = " << K;
    ASSERT_EQ(fed.rows().size(), cen.rows().size());
    for (std::size_t i = 0; i < fed.rows().size(); ++i) EXPECT_EQ(fed.rows()[i].params, cen.rows()[i].params);
  }
}

TEST(FederationTest, ThreadCountDoesNotChangeResults) {
  const GanModel mlp = make_mlp_gan(8, 2, 2, 2);
  const Dataset ds = gen_mixed_gaussians(800, 8, 2.0, 0.02, 1);
  const Partition part = partition_noniid(ds, 4, PartitionStrategy::kByLabel, 0);
  const Schedule s = Schedule::two_timescale(0.05, 0.01, 100.0, 0.6, 0.9, 5);
  RunOptions o;
  o.N = 60;
  o.batch = 16;
  o.init_scale = 0.0;
  const TrajectoryLog a = run_fedgan(mlp, LossKind::kMinimax, ds, part, s, o);
  o.threads = 4;
  const TrajectoryLog b = run_fedgan(mlp, LossKind::kMinimax, ds, part, s, o);
  EXPECT_EQ(a.final_synced_params, b.final_synced_params);
}

TEST(FederationTest, RowsAreRecordedAtStrideAndSyncSteps) {
  TwoDProblem pr(2);
  RunOptions o = pr.opts;
  o.N = 103;
  o.record_stride = 10;
  const TrajectoryLog log = run_fedgan(pr.model, LossKind::kMinimax, pr.data, pr.partition,
                                       Schedule::equal(0.1, 100.0, 1.0, 4), o);
  std::vector<std::size_t> synced;
  for (const LogRow* r : log.synced_rows()) synced.push_back(r->step);
  EXPECT_EQ(synced, (std::vector<std::size_t>{0, 20, 40, 60, 80, 100}));
  EXPECT_EQ(log.agent_rows(0).back()->step, 102u);
  EXPECT_EQ(log.final_step, 102u);
}

TEST(CommTest, ReportArithmetic) {
  const CommReport r = comm_report(10, 4, 5, 100);
  EXPECT_DOUBLE_EQ(r.per_agent_per_round, 8.0);
  EXPECT_DOUBLE_EQ(r.baseline_per_agent_per_round, 40.0);
  EXPECT_EQ(r.total_scalars, 4u * 40u * 20u);
  EXPECT_DOUBLE_EQ(comm_report(10, 4, 10, 100).per_agent_per_round, 4.0);
  const CommReport u = comm_report(3, 4, 2, 1, 9);
  EXPECT_DOUBLE_EQ(u.per_agent_per_round, 14.0);
  EXPECT_EQ(u.total_scalars, 2u * 14u * 9u);
  EXPECT_THROW(comm_report(0, 1, 1, 1), std::invalid_argument);
}

TEST(CommTest, LoggedScalarsMatchTheReport) {
  TwoDProblem pr(5);
  for (std::size_t K : {1u, 3u, 7u}) {
    RunOptions o = pr.opts;
    o.N = 50;
    const TrajectoryLog log = run_fedgan(pr.model, LossKind::kMinimax, pr.data, pr.partition,
                                         Schedule::equal(0.1, 100.0, 1.0, K), o);
    EXPECT_EQ(log.cum_scalars(), comm_report(1, 1, 5, K, o.N - 1).total_scalars);
  }
}

TEST(ReplayTest, ReplayFromSyncedStateReproducesOneWindow) {
  TwoDProblem pr(3);
  const Schedule s = Schedule::equal(0.2, 100.0, 1.0, 4);
  const auto [d, g] = initial_params(pr.model, pr.opts);
  const WindowReplay a = replay_window(pr.model, LossKind::kMinimax, pr.data, pr.partition, s, d, g, 8, 16, 3);
  const WindowReplay b = replay_window(pr.model, LossKind::kMinimax, pr.data, pr.partition, s, d, g, 8, 16, 3);
  ASSERT_EQ(a.agent_d.size(), 5u);
  EXPECT_EQ(a.agent_d[0][0], d);
  EXPECT_EQ(a.avg_d, b.avg_d);
  double w = 0.0;
  for (std::size_t i = 0; i < 3; ++i) w += pr.partition.weights[i] * a.agent_d[4][i][0];
  EXPECT_NEAR(a.avg_d[0], w, 1e-15);
  EXPECT_THROW(replay_window(pr.model, LossKind::kMinimax, pr.data, pr.partition, s, d, g, 6, 16, 3),
               std::invalid_argument);
}

}  // namespace
}  // namespace fedgan
