#include "wmgof/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "wmgof/errors.hpp"
#include "wmgof/rng.hpp"

namespace wmgof {

std::vector<PopulationSpec> table1_populations() {
  return {
      {MixtureParams(2.0, 3.0, 3.0, 0.9, 0.5), "population 1"},
      {MixtureParams(1.5, 3.0, 2.0, 4.0, 0.5), "population 2"},
      {MixtureParams(1.0, 3.0, 2.0, 4.0, 0.5), "population 3"},
      {MixtureParams(2.0, 4.0, 0.5, 3.0, 0.5), "population 4"},
      {MixtureParams(2.0, 8.0, 1.0, 4.0, 0.5), "population 5"},
  };
}

const char* to_string(StudyMode mode) {
  return mode == StudyMode::kEstimated ? "estimated" : "true_parameters";
}

StudyMode study_mode_from_string(const std::string& s) {
  if (s == "estimated") return StudyMode::kEstimated;
  if (s == "true_parameters") return StudyMode::kTrueParameters;
  throw DomainError("unknown study mode '" + s + "'");
}

namespace {

struct Replication {
  bool ok = false;
  double p_value = 0.0;
  std::string failure;
};

Replication run_replication(const PopulationSpec& spec, std::size_t rep,
                            std::size_t sample_size, std::uint64_t seed,
                            const StudyOptions& options) {
  Replication out;
  const Sample sample =
      sample_mixture(spec.theta, sample_size, derive_seed(seed, 2 * rep));
  try {
    if (options.mode == StudyMode::kTrueParameters) {
      out.p_value = simple_hypothesis_p_value(sample, spec.theta,
                                              options.simple_lambdas,
                                              options.test.imhof_tolerance);
    } else {
      TestOptions test = options.test;
      test.fit.seed = derive_seed(seed, 2 * rep + 1);
      out.p_value = gof_test(sample, test).p_value;
    }
    out.ok = true;
  } catch (const Error& e) {
    out.failure = e.kind() + ": " + e.what();
  }
  return out;
}

}  // namespace

StudyResult run_study(const PopulationSpec& spec, std::size_t n_reps,
                      std::size_t sample_size, std::uint64_t seed,
                      const StudyOptions& options) {
  if (n_reps < 1) throw DomainError("run_study: n_reps must be >= 1");
  if (sample_size < kMinFitObservations) {
    throw DomainError("run_study: sample_size must be >= 20");
  }

  std::vector<Replication> reps(n_reps);
  unsigned threads = options.threads != 0
                         ? options.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, n_reps));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n_reps; r = next++) {
      reps[r] = run_replication(spec, r, sample_size, seed, options);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  StudyResult result;
  result.population = spec;
  result.mode = options.mode;
  result.n_reps = n_reps;
  result.sample_size = sample_size;
  result.seed = seed;
  result.grid_size = options.test.kernel.grid_size;
  for (std::size_t r = 0; r < n_reps; ++r) {
    if (reps[r].ok) {
      result.p_values.push_back(reps[r].p_value);
    } else {
      ++result.n_failed_fits;
      result.failures.emplace_back(r, reps[r].failure);
    }
  }

  if (static_cast<double>(result.n_failed_fits) >
      options.max_failure_fraction * static_cast<double>(n_reps)) {
    std::ostringstream os;
    os << "run_study: " << result.n_failed_fits << " of " << n_reps
       << " replications failed for " << spec.label;
    if (!result.failures.empty()) {
      os << " (first: " << result.failures.front().second << ")";
    }
    throw StudyAborted(os.str());
  }

  if (!result.p_values.empty()) {
    const auto below = std::count_if(result.p_values.begin(),
                                     result.p_values.end(),
                                     [](double p) { return p < 0.05; });
    result.rejection_rate_05 = static_cast<double>(below) /
                               static_cast<double>(result.p_values.size());
  }
  if (result.p_values.size() >= 2) {
    std::vector<double> sorted = clip_unit_interval(result.p_values);
    std::sort(sorted.begin(), sorted.end());
    const AdTest ad = ad_test_uniform(sorted);
    result.ad_statistic = ad.statistic;
    result.ad_p_value = ad.p_value;
  }
  return result;
}

}  // namespace wmgof
