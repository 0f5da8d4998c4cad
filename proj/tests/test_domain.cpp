#include <gtest/gtest.h>

#include <random>

#include "evpred/domain.hpp"

using namespace evpred;

TEST(Classify, FlagTable) {
  EXPECT_EQ(classify_flags(87, 1, 0), Group::AtRiskO);
  EXPECT_EQ(classify_flags(28, 0, 0), Group::EventA);
  EXPECT_EQ(classify_flags(77, 1, 1), Group::DropoutL);
}

TEST(Classify, RowsKeepExposureAndGroup) {
  const std::vector<RawEventRow> rows{{87, 1, 0, "2020-03-01"}, {28, 0, 0, "2020-02-28"}, {77, 1, 1, "2020-03-10"}};
  const auto p = classify(rows);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].group, Group::AtRiskO);
  EXPECT_DOUBLE_EQ(p[0].exposure_days, 87);
  EXPECT_EQ(p[1].group, Group::EventA);
  EXPECT_DOUBLE_EQ(p[1].exposure_days, 28);
  EXPECT_EQ(p[2].group, Group::DropoutL);
  // days relative to the earliest date (2020 is a leap year)
  EXPECT_DOUBLE_EQ(p[1].randomisation_day, 0);
  EXPECT_DOUBLE_EQ(p[0].randomisation_day, 2);
  EXPECT_DOUBLE_EQ(p[2].randomisation_day, 11);
}

TEST(Classify, RejectsBadRowsWithIndex) {
  const auto expect_row = [](std::vector<RawEventRow> rows, long row) {
    try {
      classify(rows);
      FAIL() << "accepted bad rows";
    } catch (const InputError& e) {
      EXPECT_EQ(e.row(), row) << e.what();
    }
  };
  expect_row({{1, 1, 0, "2020-01-01"}, {5, 0, 1, "2020-01-01"}}, 1);
  expect_row({{-1, 1, 0, "2020-01-01"}}, 0);
  expect_row({{1, 1, 0, "2020-01-01"}, {1, 1, 0, "2020-01-01"}, {1, 1, 0, "2020-13-01"}}, 2);
  expect_row({{1, 2, 0, "2020-01-01"}}, 0);
  expect_row({{1, 1, 0, "01/02/2020"}}, 0);
}

TEST(Dates, IsoParsing) {
  EXPECT_EQ(parse_iso_date("1970-01-01"), 0);
  EXPECT_EQ(parse_iso_date("1970-01-02"), 1);
  EXPECT_EQ(parse_iso_date("2000-03-01") - parse_iso_date("2000-02-28"), 2);
  EXPECT_EQ(parse_iso_date(" 2021-01-04 "), parse_iso_date("2021-01-04"));
  EXPECT_THROW(parse_iso_date("2021-02-29"), InputError);
  EXPECT_THROW(parse_iso_date("2021-1-4"), InputError);
}

namespace {
TrialSnapshot make(std::vector<PatientRecord> p, std::vector<CentreRecord> c = {}) {
  return TrialSnapshot(std::move(p), std::move(c), {}, std::nullopt, {10, 100, 0.9});
}
}  // namespace

TEST(Summarize, UnitExposures) {
  std::vector<PatientRecord> p;
  for (int i = 0; i < 10; ++i) p.push_back({1.0, Group::EventA, 0.0});
  for (int i = 0; i < 20; ++i) p.push_back({1.0, Group::AtRiskO, 0.0});
  for (int i = 0; i < 5; ++i) p.push_back({1.0, Group::DropoutL, 0.0});
  const auto s = summarize(make(p));
  EXPECT_EQ(s, (GroupSummary{10, 20, 5, 10.0, 35.0}));
}

TEST(Summarize, Empty) { EXPECT_EQ(summarize(make({})), (GroupSummary{0, 0, 0, 0.0, 0.0})); }

TEST(Summarize, MatchesLoopOracle) {
  std::mt19937_64 g(7);
  std::vector<PatientRecord> p;
  for (int i = 0; i < 50; ++i) {
    const double x = std::uniform_real_distribution<>(0, 300)(g);
    p.push_back({x, static_cast<Group>(g() % 3), 0.0});
  }
  std::size_t na = 0, no = 0, nl = 0;
  double sa = 0, s1 = 0;
  for (const auto& r : p) {
    s1 += r.exposure_days;
    if (r.group == Group::EventA) {
      ++na;
      sa += r.exposure_days;
    } else if (r.group == Group::AtRiskO) {
      ++no;
    } else {
      ++nl;
    }
  }
  const auto s = summarize(make(p));
  EXPECT_EQ(s.n_event, na);
  EXPECT_EQ(s.n_atrisk, no);
  EXPECT_EQ(s.n_dropout, nl);
  EXPECT_NEAR(s.sum_event_exposure, sa, 1e-9);
  EXPECT_NEAR(s.sum_all_exposure, s1, 1e-9);
  EXPECT_EQ(s.total(), p.size());
}

TEST(Snapshot, CutoffDefaultsToLatestFollowUp) {
  const auto s = make({{10, Group::AtRiskO, 5}, {3, Group::EventA, 20}});
  EXPECT_DOUBLE_EQ(s.cutoff_day(), 23);
}

TEST(Snapshot, RejectsFollowUpBeyondCutoff) {
  EXPECT_NO_THROW(TrialSnapshot({{10.5, Group::AtRiskO, 0}}, {}, {}, 10.0, {1, 1, 0.9}));
  EXPECT_THROW(TrialSnapshot({{12, Group::AtRiskO, 0}}, {}, {}, 10.0, {1, 1, 0.9}), InputError);
}

TEST(Snapshot, CentreTotalMismatchWarnsOnly) {
  const auto s = make({{1, Group::AtRiskO, 0}}, {{"c1", 3, 10.0, std::nullopt}});
  ASSERT_EQ(s.warnings().size(), 1u);
  EXPECT_EQ(make({{1, Group::AtRiskO, 0}}, {{"c1", 1, 10.0, std::nullopt}}).warnings().size(), 0u);
}

TEST(Snapshot, ValidatesPlanAndCentres) {
  EXPECT_THROW(TrialSnapshot({}, {}, {}, std::nullopt, {0, 1, 0.9}), InputError);
  EXPECT_THROW(TrialSnapshot({}, {}, {}, std::nullopt, {1, 1, 1.0}), InputError);
  EXPECT_THROW(TrialSnapshot({}, {{"c", 1, 0.0, std::nullopt}}, {}, std::nullopt, {1, 1, 0.9}), InputError);
  EXPECT_THROW(TrialSnapshot({}, {}, {{5.0, 0.1, 4.0}}, std::nullopt, {1, 1, 0.9}), InputError);
  EXPECT_THROW(TrialSnapshot({}, {}, {{5.0, 0.0, std::nullopt}}, std::nullopt, {1, 1, 0.9}), InputError);
}

TEST(Snapshot, TargetAlreadyMetIsAllowed) {
  std::vector<PatientRecord> p(12, {1.0, Group::EventA, 0.0});
  const auto s = make(p);
  EXPECT_EQ(s.count(Group::EventA), 12u);
  EXPECT_EQ(s.count(Group::EventA) + s.count(Group::AtRiskO) + s.count(Group::DropoutL), s.recruited());
}
