#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wmgof/pipeline.hpp"

namespace wmgof {

struct PopulationSpec {
  MixtureParams theta;
  std::string label;
};

// The five mixture populations of the reference simulation study, stored in
// canonical component order.
std::vector<PopulationSpec> table1_populations();

enum class StudyMode {
  // Fit theta per replication and use the estimated kernel.
  kEstimated,
  // Transform with the true theta and use the Brownian bridge spectrum.
  kTrueParameters,
};

const char* to_string(StudyMode mode);
StudyMode study_mode_from_string(const std::string& s);

struct StudyOptions {
  TestOptions test = [] {
    TestOptions t;
    t.kernel.grid_size = 200;
    return t;
  }();
  StudyMode mode = StudyMode::kEstimated;
  // Brownian bridge terms used in kTrueParameters mode.
  int simple_lambdas = 200;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Fraction of failed replications above which the study is aborted.
  double max_failure_fraction = 0.2;
};

struct StudyResult {
  PopulationSpec population{MixtureParams(1.0, 1.0, 1.0, 1.0, 0.5), {}};
  StudyMode mode = StudyMode::kEstimated;
  std::size_t n_reps = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  int grid_size = 0;
  // In replication order, failed replications omitted.
  std::vector<double> p_values;
  std::size_t n_failed_fits = 0;
  // Reason of each failed replication, keyed by replication index.
  std::vector<std::pair<std::size_t, std::string>> failures;
  // Empirical share of p-values below 0.05.
  double rejection_rate_05 = 0.0;
  // Uniformity test of the p-values; empty with fewer than two p-values.
  std::optional<double> ad_statistic;
  std::optional<double> ad_p_value;
};

// Replication r draws its sample with seed derive_seed(seed, 2r) and fits
// with seed derive_seed(seed, 2r + 1), so results do not depend on thread
// scheduling. Throws StudyAborted when the failure fraction exceeds
// options.max_failure_fraction.
StudyResult run_study(const PopulationSpec& spec, std::size_t n_reps,
                      std::size_t sample_size, std::uint64_t seed,
                      const StudyOptions& options = {});

}  // namespace wmgof
