#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wmgof/errors.hpp"
#include "wmgof/simulation.hpp"

namespace wmgof::cli {

using nlohmann::json;

// Exit codes of the wmgof tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,  // usage, config and input parse errors
  kExitFit = 3,    // estimation failures, aborted studies
  kExitKernel = 4, // kernel, eigensolver and Imhof failures
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("parse", what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

struct RunConfig {
  std::string command;
  std::optional<std::string> input_path;
  std::optional<std::string> output_path;
  std::uint64_t seed = 20240611;
  FitConfig fit;
  KernelOptions kernel;
  double imhof_tolerance = kDefaultImhofTolerance;
  // simulate
  std::size_t n_reps = 500;
  std::size_t sample_size = 100;
  std::optional<int> population;
  std::optional<MixtureParams> theta;
  StudyMode mode = StudyMode::kEstimated;
  int simple_lambdas = 200;
  unsigned threads = 0;
  double max_failure_fraction = 0.2;

  // Throws InputError when a tolerance is not positive or m < 2.
  void validate() const;
};

// Observations, one per line. '#' starts a comment; blank lines are skipped;
// a single non-numeric first line is accepted as a CSV header.
Sample parse_sample(std::istream& in, const std::string& source);
Sample read_sample(const std::string& path);

struct EigenCheckRow {
  int j = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double relative_error = 0.0;
};

std::vector<EigenCheckRow> cmd_eigen_check(const RunConfig& config);
FitResult cmd_fit(const RunConfig& config, Sample* sample_out = nullptr);
GofReport cmd_test(const RunConfig& config, Sample* sample_out = nullptr);
StudyResult cmd_simulate(const RunConfig& config);

// JSON documents. Keys are sorted so identical inputs give identical bytes.
json config_to_json(const RunConfig& config);
void apply_config_json(const json& j, RunConfig& config);
json params_to_json(const MixtureParams& theta);
MixtureParams params_from_json(const json& j);
json fit_to_json(const FitResult& fit);
json gof_report_to_json(const GofReport& report, const Sample& sample);
json study_to_json(const StudyResult& study);
StudyResult study_from_json(const json& j);
json eigen_check_to_json(const std::vector<EigenCheckRow>& rows, int m,
                         NystromWeight weight);

// Full document as written by the tool.
json make_document(const RunConfig& config, json body);

// Maps a library error to the documented exit code.
int exit_code_for(const Error& e);

// Entry point shared by main() and the tests.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace wmgof::cli
