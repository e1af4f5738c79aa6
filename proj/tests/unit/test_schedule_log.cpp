#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fedgan/schedule.hpp"
#include "fedgan/trajectory_log.hpp"
#include "test_util.hpp"

namespace fedgan {
namespace {

TEST(ScheduleTest, RawFamilyValues) {
  const Schedule s = Schedule::two_timescale(0.2, 0.1, 100.0, 0.6, 0.9, 4);
  EXPECT_DOUBLE_EQ(s.a_raw(0), 0.2);
  EXPECT_DOUBLE_EQ(s.a_raw(100), 0.2 / std::pow(2.0, 0.6));
  EXPECT_DOUBLE_EQ(s.b_raw(300), 0.1 / std::pow(4.0, 0.9));
}

TEST(ScheduleTest, RatesAreFrozenWithinAWindow) {
  const Schedule s = Schedule::equal(0.3, 10.0, 1.0, 5);
  for (std::size_t n = 0; n < 40; ++n) {
    EXPECT_EQ(s.a(n), s.a_raw((n / 5) * 5));
    EXPECT_EQ(s.b(n), s.a(n));
  }
  EXPECT_EQ(s.window_start(14), 10u);
}

TEST(ScheduleTest, Validation) {
  EXPECT_TRUE(validate_schedule(Schedule::equal(0.1, 100.0, 0.6, 1)));
  EXPECT_TRUE(validate_schedule(Schedule::equal(0.1, 100.0, 1.0, 1)));
  EXPECT_FALSE(validate_schedule(Schedule::equal(0.1, 100.0, 0.5, 1)));
  EXPECT_FALSE(validate_schedule(Schedule::equal(0.1, 100.0, 1.2, 1)));
  EXPECT_TRUE(validate_schedule(Schedule::two_timescale(0.1, 0.1, 100.0, 0.6, 0.9, 5)));
  EXPECT_FALSE(validate_schedule(Schedule::two_timescale(0.1, 0.1, 100.0, 0.9, 0.6, 5)));
  EXPECT_FALSE(validate_schedule(Schedule::two_timescale(0.1, 0.1, 100.0, 0.7, 0.7, 5)));
  Schedule bad = Schedule::equal(0.1, 100.0, 0.6, 1);
  bad.b0 = 0.2;
  EXPECT_FALSE(validate_schedule(bad));
  EXPECT_THROW(validate_schedule(Schedule::equal(0.0, 100.0, 0.6, 1)), std::invalid_argument);
  EXPECT_THROW(validate_schedule(Schedule::equal(0.1, 100.0, 0.6, 0)), std::invalid_argument);
  EXPECT_THROW(validate_schedule(Schedule::equal(0.1, -1.0, 0.6, 1)), std::invalid_argument);
}

TEST(ScheduleTest, ModeNamesRoundTrip) {
  EXPECT_EQ(parse_schedule_mode(to_string(ScheduleMode::kTwoTimescale)), ScheduleMode::kTwoTimescale);
  EXPECT_EQ(parse_schedule_mode("equal"), ScheduleMode::kEqual);
  EXPECT_THROW(parse_schedule_mode("fast"), std::invalid_argument);
}

LogRow meta(std::size_t step, long agent, std::uint64_t cum) {
  LogRow r;
  r.step = step;
  r.agent = agent;
  r.rate_a = 0.1;
  r.rate_b = 0.05;
  r.loss_d = -1.25;
  r.loss_g = 0.5;
  r.cum_scalars = cum;
  return r;
}

TEST(TrajectoryLogTest, CsvRoundTripAtParameterLevel) {
  const GanModel m = make_mlp_gan(3, 1, 2, 2);
  std::mt19937_64 rng(3);
  TrajectoryLog log(2, m.discriminator_params(), m.generator_params(), 2, 1);
  for (std::size_t n = 0; n <= 4; ++n) {
    for (long a = 0; a < 2; ++a) {
      log.add(testing::random_params(m.discriminator.layout(), rng),
              testing::random_params(m.generator.layout(), rng), meta(n, a, n * 10));
    }
    if (n % 2 == 0) {
      log.add(testing::random_params(m.discriminator.layout(), rng),
              testing::random_params(m.generator.layout(), rng), meta(n, kSyncedAgent, n * 10));
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "fedgan_log_roundtrip.csv";
  log.write_csv(path);
  const TrajectoryLog back =
      TrajectoryLog::read_csv(path, 2, m.discriminator_params(), m.generator_params(), 2, 1);
  ASSERT_EQ(back.rows().size(), log.rows().size());
  for (std::size_t i = 0; i < log.rows().size(); ++i) {
    EXPECT_EQ(back.rows()[i].params, log.rows()[i].params);
    EXPECT_EQ(back.rows()[i].checksum, log.rows()[i].checksum);
    EXPECT_EQ(back.rows()[i].agent, log.rows()[i].agent);
    EXPECT_EQ(back.rows()[i].loss_d, log.rows()[i].loss_d);
  }
  EXPECT_EQ(back.final_synced_params, log.final_synced_params);
  EXPECT_EQ(back.synced_rows().size(), 3u);
  std::filesystem::remove(path);
}

TEST(TrajectoryLogTest, LargeModelsLogNormsAndChecksums) {
  const auto big = std::make_shared<const ParamLayout>(
      std::vector<std::pair<std::string, Shape>>{{"w", Shape{kParamLevelLimit + 1}}});
  const auto small = std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Shape>>{{"v", Shape{1}}});
  TrajectoryLog log(1, big->total(), 1, 1, 1);
  EXPECT_FALSE(log.param_level());
  ParamVector d(big);
  d[0] = 3.0;
  ParamVector g(small, {4.0});
  log.add(d, g, meta(0, kSyncedAgent, 0));
  EXPECT_TRUE(log.rows()[0].params.empty());
  EXPECT_DOUBLE_EQ(log.rows()[0].param_norm, 5.0);
  EXPECT_EQ(log.final_synced_params.size(), big->total() + 1);
  const auto path = std::filesystem::temp_directory_path() / "fedgan_log_norms.csv";
  log.write_csv(path);
  const TrajectoryLog back = TrajectoryLog::read_csv(path, 1, big->total(), 1, 1, 1);
  EXPECT_EQ(back.rows()[0].checksum, log.rows()[0].checksum);
  EXPECT_EQ(back.rows()[0].param_norm, 5.0);
  std::filesystem::remove(path);
}

TEST(TrajectoryLogTest, RejectsInconsistentRows) {
  const auto one = std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Shape>>{{"v", Shape{1}}});
  TrajectoryLog log(1, 1, 1, 5, 1);
  const ParamVector p(one, {1.0});
  log.add(p, p, meta(0, 0, 10));
  EXPECT_THROW(log.add(p, p, meta(1, 0, 5)), std::logic_error);
  EXPECT_THROW(log.add(p, p, meta(3, kSyncedAgent, 20)), std::logic_error);
  EXPECT_THROW(log.add(ParamVector(), p, meta(4, 0, 20)), ShapeError);
}

TEST(ChecksumTest, DistinguishesSignedZero) {
  const std::vector<double> a = {0.0, 1.0}, b = {-0.0, 1.0};
  EXPECT_NE(param_checksum(a), param_checksum(b));
  EXPECT_EQ(param_checksum(a), param_checksum(std::vector<double>{0.0, 1.0}));
}

}  // namespace
}  // namespace fedgan
