#include <gtest/gtest.h>

#include <cmath>

#include "evpred/combined_forecast.hpp"
#include "evpred/simulate.hpp"
#include "test_util.hpp"

using namespace evpred;

namespace {
SimConfig shape08_config(std::uint64_t seed = 5) {
  SimConfig c;
  c.truth = evpred::testing::shape08_truth();
  c.seed = seed;
  return c;
}
}  // namespace

TEST(SimulateTrial, FullyCuredHasNoEvents) {
  auto c = shape08_config();
  c.truth.cure_prob = 1.0;
  const auto t = simulate_trial(c);
  EXPECT_TRUE(t.event_days.empty());
  EXPECT_FALSE(t.target_hit_day);
  EXPECT_EQ(t.snapshot.count(Group::EventA), 0u);
}

TEST(SimulateTrial, EveryoneHasEventWithoutCureOrDropout) {
  SimConfig c;
  c.truth = {Exponential{0.01}, Exponential{0.0}, 0.0};
  c.n_patients = 400;
  c.target_events = 400;
  const auto t = simulate_trial(c);
  EXPECT_EQ(t.patients.size(), 400u);
  EXPECT_EQ(t.event_days.size(), 400u);
  EXPECT_EQ(events_by(t, 1e12), 400);
  ASSERT_TRUE(t.target_hit_day);
  EXPECT_EQ(*t.target_hit_day, t.event_days.back());
}

TEST(SimulateTrial, Deterministic) {
  const auto a = simulate_trial(shape08_config(), 3);
  const auto b = simulate_trial(shape08_config(), 3);
  EXPECT_EQ(a.event_days, b.event_days);
  EXPECT_EQ(a.target_hit_day, b.target_hit_day);
  ASSERT_EQ(a.snapshot.recruited(), b.snapshot.recruited());
  EXPECT_EQ(a.snapshot.exposures(Group::AtRiskO), b.snapshot.exposures(Group::AtRiskO));
  const auto c = simulate_trial(shape08_config(), 4);
  EXPECT_NE(a.event_days, c.event_days);
  EXPECT_NE(replication_seed(1, 0), replication_seed(1, 1));
  EXPECT_NE(replication_seed(1, 0), replication_seed(2, 0));
}

TEST(SimulateTrial, SnapshotConsistentWithPatients) {
  const auto cfg = shape08_config(8);
  const auto t = simulate_trial(cfg);
  const double cut = cfg.interim_day();
  std::size_t recruited = 0, events = 0, dropouts = 0, cured = 0;
  for (const auto& p : t.patients) {
    if (p.randomisation_day > cut) continue;
    ++recruited;
    const auto d = p.event_day();
    if (d && *d <= cut)
      ++events;
    else if (p.randomisation_day + p.dropout_time <= cut)
      ++dropouts;
  }
  for (const auto& p : t.patients) cured += p.cured;
  EXPECT_EQ(t.snapshot.recruited(), recruited);
  EXPECT_EQ(t.snapshot.count(Group::EventA), events);
  EXPECT_EQ(t.snapshot.count(Group::DropoutL), dropouts);
  const auto s = summarize(t.snapshot);
  EXPECT_EQ(s.total(), recruited);
  EXPECT_EQ(long(t.patients.size()), cfg.n_patients);
  EXPECT_LE(t.event_days.size(), t.patients.size() - cured);
  EXPECT_EQ(events_by(t, cut), long(events));
  EXPECT_LE(t.recruitment_end_day, cfg.window_days() + 1e-9 + 1e9);
  for (double v : t.centre_open_day) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, cfg.window_days());
  }
  // expected enrolment under the default rate: C * rate * W / 2 = n
  EXPECT_NEAR(cfg.default_rate() * cfg.centre_count * cfg.window_days() / 2, cfg.n_patients, 1e-9);
}

TEST(SimulateTrial, PerPatientFrequencyMatchesUnconditional) {
  auto cfg = shape08_config(9);
  std::size_t n = 0, hits = 0;
  const double x = 150.0;
  for (std::uint64_t rep = 0; n < 100000; ++rep) {
    const auto t = simulate_trial(cfg, rep);
    for (const auto& p : t.patients) {
      ++n;
      hits += p.event_time && *p.event_time < p.dropout_time && *p.event_time <= x;
    }
  }
  const double f = double(hits) / n;
  EXPECT_NEAR(f, p_event_unconditional(cfg.truth, x), 3 * std::sqrt(f * (1 - f) / n));
}

TEST(SimulateTrial, GammaRatesAndValidation) {
  auto c = shape08_config();
  c.recruitment.gamma = true;
  c.recruitment.alpha = 4.8577;
  c.recruitment.beta = 516.13;
  const auto t = simulate_trial(c);
  EXPECT_EQ(t.centre_rate.size(), 100u);
  EXPECT_NE(t.centre_rate[0], t.centre_rate[1]);
  c.n_patients = 0;
  EXPECT_THROW(simulate_trial(c), std::invalid_argument);
}

TEST(Quantile, Type7) {
  EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_EQ(quantile({5}, 0.9), 5.0);
}

TEST(ReportParameters, NamesByFamily) {
  const auto w = report_parameters(evpred::testing::shape08_truth());
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[0].first, "a_A");
  EXPECT_DOUBLE_EQ(w[1].second, 182.0);
  EXPECT_EQ(w[4].first, "r");
  const auto e = report_parameters({Exponential{0.1}, Exponential{0.2}, 0.0});
  EXPECT_EQ(e[0].first, "mu_A");
  EXPECT_EQ(e[1].first, "mu_L");
}

TEST(RecoveryStudy, SerialRepsMatchStudy) {
  const auto cfg = shape08_config(12);
  StudyOptions opt;
  opt.calibration = false;
  const auto report = recovery_study(cfg, 3, opt);
  ASSERT_EQ(report.rows.size(), 3u);
  const auto row = run_replication(cfg, 1, opt);
  EXPECT_EQ(report.rows[1].estimates, row.estimates);
  EXPECT_EQ(report.rows[1].mean_day, row.mean_day);
  EXPECT_EQ(report.parameters.size(), 5u);
  EXPECT_EQ(report.n_failed, 0u);
}

TEST(RecoveryStudy, TruthForecastCalibrated) {
  const auto cfg = shape08_config(13);
  StudyOptions opt;
  opt.forecast_with_truth = true;
  const auto report = recovery_study(cfg, 200, opt);
  RecordProperty("coverage", std::to_string(report.coverage));
  EXPECT_GE(report.n_calibrated, 190u);
  EXPECT_GE(report.coverage, 0.80);
  EXPECT_LE(report.coverage, 0.97);
}
