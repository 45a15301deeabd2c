#include <gtest/gtest.h>

#include "wmgof/errors.hpp"
#include "wmgof/rng.hpp"
#include "wmgof/simulation.hpp"

namespace {

using wmgof::MixtureParams;

wmgof::StudyOptions quick_options() {
  wmgof::StudyOptions o;
  o.test.kernel.grid_size = 60;
  o.test.fit.n_starts = 4;
  return o;
}

TEST(Table1Populations, Rows) {
  const auto pops = wmgof::table1_populations();
  ASSERT_EQ(pops.size(), 5u);
  EXPECT_EQ(pops[4].theta, MixtureParams(2, 8, 1, 4, 0.5));
  EXPECT_EQ(pops[4].theta.alpha1(), 2.0);
  EXPECT_EQ(pops[4].theta.alpha2(), 8.0);
  EXPECT_EQ(pops[4].theta.beta1(), 1.0);
  EXPECT_EQ(pops[4].theta.beta2(), 4.0);
  EXPECT_EQ(pops[1].theta, MixtureParams(1.5, 3, 2, 4, 0.5));
  EXPECT_EQ(pops[2].theta, MixtureParams(1, 3, 2, 4, 0.5));
  EXPECT_EQ(pops[3].theta, MixtureParams(2, 4, 0.5, 3, 0.5));
  for (const auto& p : pops) EXPECT_EQ(p.theta.p(), 0.5);
}

TEST(Table1Populations, FirstRowCanonicalized) {
  const auto pops = wmgof::table1_populations();
  const auto& t = pops[0].theta;
  EXPECT_TRUE(t.swapped());
  EXPECT_EQ(t.alpha1(), 3.0);
  EXPECT_EQ(t.beta1(), 0.9);
  EXPECT_EQ(t.alpha2(), 2.0);
  EXPECT_EQ(t.beta2(), 3.0);
  EXPECT_EQ(pops[0].label, "population 1");
  EXPECT_EQ(pops[4].label, "population 5");
}

TEST(DeriveSeed, DistinctChildren) {
  EXPECT_NE(wmgof::derive_seed(1, 0), wmgof::derive_seed(1, 1));
  EXPECT_NE(wmgof::derive_seed(1, 0), wmgof::derive_seed(2, 0));
  EXPECT_EQ(wmgof::derive_seed(7, 3), wmgof::derive_seed(7, 3));
}

TEST(RunStudy, SingleReplication) {
  const auto pops = wmgof::table1_populations();
  const auto r = wmgof::run_study(pops[4], 1, 50, 3, quick_options());
  EXPECT_EQ(r.n_reps, 1u);
  EXPECT_EQ(r.p_values.size() + r.n_failed_fits, 1u);
  EXPECT_FALSE(r.ad_statistic.has_value());
  EXPECT_FALSE(r.ad_p_value.has_value());
}

TEST(RunStudy, DeterministicAcrossThreadCounts) {
  const auto pops = wmgof::table1_populations();
  auto one = quick_options();
  one.threads = 1;
  auto three = quick_options();
  three.threads = 3;
  const auto a = wmgof::run_study(pops[1], 8, 40, 77, one);
  const auto b = wmgof::run_study(pops[1], 8, 40, 77, three);
  const auto c = wmgof::run_study(pops[1], 8, 40, 77, one);
  EXPECT_EQ(a.p_values, b.p_values);
  EXPECT_EQ(a.p_values, c.p_values);
  EXPECT_EQ(a.ad_statistic, b.ad_statistic);
  EXPECT_EQ(a.p_values.size(), a.n_reps - a.n_failed_fits);
  for (double p : a.p_values) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  EXPECT_EQ(a.sample_size, 40u);
  EXPECT_EQ(a.grid_size, 60);
  EXPECT_EQ(a.seed, 77u);
}

TEST(RunStudy, Preconditions) {
  const auto pops = wmgof::table1_populations();
  EXPECT_THROW(wmgof::run_study(pops[0], 0, 50, 1), wmgof::DomainError);
  EXPECT_THROW(wmgof::run_study(pops[0], 5, 19, 1), wmgof::DomainError);
}

TEST(RunStudy, AbortsWhenReplicationsFail) {
  const auto pops = wmgof::table1_populations();
  auto o = quick_options();
  // An invalid truncation setting makes every replication fail.
  o.test.kernel.tail_tolerance = 1.0;
  EXPECT_THROW(wmgof::run_study(pops[4], 3, 30, 1, o), wmgof::StudyAborted);
}

TEST(RunStudy, FailedReplicationsAreRecordedWhenTolerated) {
  const auto pops = wmgof::table1_populations();
  auto o = quick_options();
  o.test.kernel.tail_tolerance = 1.0;
  o.max_failure_fraction = 1.0;
  const auto r = wmgof::run_study(pops[4], 3, 30, 1, o);
  EXPECT_EQ(r.n_failed_fits, 3u);
  ASSERT_EQ(r.failures.size(), 3u);
  EXPECT_EQ(r.failures[0].first, 0u);
  EXPECT_NE(r.failures[0].second.find("domain"), std::string::npos);
  EXPECT_TRUE(r.p_values.empty());
}

TEST(RunStudy, TrueParameterCalibration) {
  const auto pops = wmgof::table1_populations();
  wmgof::StudyOptions o;
  o.mode = wmgof::StudyMode::kTrueParameters;
  const auto r = wmgof::run_study(pops[2], 500, 100, 20240611, o);
  EXPECT_EQ(r.n_failed_fits, 0u);
  ASSERT_TRUE(r.ad_p_value.has_value());
  EXPECT_GT(*r.ad_p_value, 0.01);
}

TEST(RunStudy, DeskScalePopulation1) {
  const auto pops = wmgof::table1_populations();
  const auto r = wmgof::run_study(pops[0], 500, 100, 20240611);
  ASSERT_TRUE(r.ad_p_value.has_value());
  EXPECT_GT(*r.ad_p_value, 0.01);
  EXPECT_GE(r.rejection_rate_05, 0.02);
  EXPECT_LE(r.rejection_rate_05, 0.09);
}

TEST(StudyMode, StringRoundTrip) {
  using wmgof::StudyMode;
  for (auto m : {StudyMode::kEstimated, StudyMode::kTrueParameters})
    EXPECT_EQ(wmgof::study_mode_from_string(wmgof::to_string(m)), m);
  EXPECT_THROW(wmgof::study_mode_from_string("x"), wmgof::DomainError);
}

}  // namespace
