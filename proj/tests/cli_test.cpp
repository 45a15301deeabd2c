#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "wmgof/errors.hpp"
#include "wmgof/version.hpp"

namespace {

namespace fs = std::filesystem;
using wmgof::cli::json;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "wmgof");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = wmgof::cli::run(static_cast<int>(argv.size()), argv.data(),
                                   out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wmgof_cli_" + std::to_string(::testing::UnitTest::GetInstance()
                                              ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    unsetenv("WMGOF_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << content;
    return path;
  }

  std::string write_sample(const std::string& name, const wmgof::Sample& s) {
    std::ostringstream os;
    os << "# generated\nvalue\n";
    os.precision(17);
    for (double v : s.values()) os << v << "\n";
    return write(name, os.str());
  }

  fs::path dir_;
};

TEST(ParseSample, CommentsBlankLinesAndHeader) {
  std::istringstream in("# header comment\nx\n\n1.5  # first\n  2.5\n0.5,\n");
  const auto s = wmgof::cli::parse_sample(in, "mem");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[2], 2.5);
  EXPECT_EQ(s.provenance(), "mem");
}

TEST(ParseSample, NamesOffendingLine) {
  std::istringstream bad("1\n2\n-3\n");
  try {
    wmgof::cli::parse_sample(bad, "data.txt");
    FAIL() << "expected a parse error";
  } catch (const wmgof::Error& e) {
    EXPECT_EQ(e.kind(), "parse");
    EXPECT_NE(std::string(e.what()).find("data.txt:3"), std::string::npos);
  }
  std::istringstream junk("1\nabc\n");
  EXPECT_THROW(wmgof::cli::parse_sample(junk, "j"), wmgof::cli::InputError);
  std::istringstream two("1,2\n");
  EXPECT_THROW(wmgof::cli::parse_sample(two, "j"), wmgof::cli::InputError);
}

TEST(ExitCodes, Mapping) {
  using namespace wmgof;
  EXPECT_EQ(cli::exit_code_for(cli::InputError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(cli::UsageError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(DomainError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(TooFewObservations("x")), 3);
  EXPECT_EQ(cli::exit_code_for(AllStartsFailed("x")), 3);
  EXPECT_EQ(cli::exit_code_for(StudyAborted("x")), 3);
  EXPECT_EQ(cli::exit_code_for(SingularInformation("x")), 4);
  EXPECT_EQ(cli::exit_code_for(EigenSolverFailure("x")), 4);
  EXPECT_EQ(cli::exit_code_for(QuadratureFailure("x")), 4);
}

TEST_F(CliTest, NonPositiveInputExitsTwo) {
  const auto path = write("bad.txt", "1.0\n2.0\n0\n");
  const auto r = run({"test", "--input", path});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("kind=parse"), std::string::npos);
  EXPECT_NE(r.err.find("bad.txt:3"), std::string::npos);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliTest, TooFewObservationsExitsTwo) {
  const auto path = write("few.txt", "1\n2\n3\n");
  EXPECT_EQ(run({"test", "--input", path}).code, 2);
  EXPECT_EQ(run({"fit", "--input", path}).code, 2);
}

TEST_F(CliTest, MissingInputAndUnknownFlag) {
  EXPECT_EQ(run({"test"}).code, 2);
  EXPECT_EQ(run({"test", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"test", "--input", (dir_ / "missing").string()}).code, 2);
}

TEST_F(CliTest, SimulateWithoutPopulationIsUsageError) {
  const auto r = run({"simulate", "--reps", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("kind=usage"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--population", "6"}).code, 2);
}

TEST_F(CliTest, InvalidTolerancesRejected) {
  EXPECT_EQ(run({"eigen-check", "--grid-size", "1"}).code, 2);
  EXPECT_EQ(run({"eigen-check", "--tail-tolerance", "0"}).code, 2);
  EXPECT_EQ(run({"eigen-check", "--grid-size", "5"}).code, 2);
}

TEST_F(CliTest, DegenerateDataExitsThree) {
  std::string tied;
  for (int i = 0; i < 25; ++i) tied += "1.0\n";
  const auto path = write("tied.txt", tied);
  const auto r = run({"fit", "--input", path});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("kind=all_starts_failed"), std::string::npos);
}

TEST_F(CliTest, FitReport) {
  const auto pops = wmgof::table1_populations();
  const auto path =
      write_sample("pop5.txt", wmgof::sample_mixture(pops[4].theta, 400, 1));
  const auto r = run({"fit", "--input", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["tool"], "wmgof");
  EXPECT_EQ(doc["command"], "fit");
  EXPECT_EQ(doc["result"]["input"]["n"], 400);
  EXPECT_NEAR(doc["result"]["fit"]["theta_hat"]["alpha2"].get<double>(), 8.0, 1.5);
  EXPECT_EQ(doc["result"]["fit"]["hessian"].size(), 5u);
}

TEST_F(CliTest, TestReportIsByteIdenticalAcrossRuns) {
  const auto pops = wmgof::table1_populations();
  const auto path =
      write_sample("pop5.txt", wmgof::sample_mixture(pops[4].theta, 1000, 20240611));
  const auto out1 = (dir_ / "r1.json").string();
  const auto out2 = (dir_ / "r2.json").string();
  ASSERT_EQ(run({"test", "--input", path, "--seed", "4", "-o", out1}).code, 0);
  ASSERT_EQ(run({"test", "--input", path, "--seed", "4", "-o", out2}).code, 0);
  std::ifstream a(out1), b(out2);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  const auto doc = json::parse(sa);
  const double p = doc["result"]["p_value"].get<double>();
  EXPECT_GT(p, 0.001);
  EXPECT_LE(p, 1.0);
  EXPECT_TRUE(doc["result"]["spectrum"].contains("n_negative"));
  EXPECT_TRUE(doc["result"]["diagnostics"].contains("quantile_fallbacks"));
  EXPECT_EQ(doc["config"]["seed"], 4);
  EXPECT_EQ(doc["version"], wmgof::kVersion);
}

TEST_F(CliTest, SimulateReportRoundTrips) {
  const auto out = (dir_ / "study.json").string();
  const auto r = run({"simulate", "--population", "2", "--reps", "4",
                      "--sample-size", "40", "--grid-size", "40", "--n-starts",
                      "3", "-o", out});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const auto doc = json::parse(in);
  const auto study = wmgof::cli::study_from_json(doc["result"]);
  EXPECT_EQ(study.population.theta, wmgof::table1_populations()[1].theta);
  EXPECT_EQ(study.population.label, "population 2");
  EXPECT_EQ(study.n_reps, 4u);
  EXPECT_EQ(study.sample_size, 40u);
  EXPECT_EQ(study.grid_size, 40);
  EXPECT_EQ(wmgof::cli::study_to_json(study), doc["result"]);
}

TEST_F(CliTest, SimulateWithExplicitTheta) {
  const auto r = run({"simulate", "--theta", "2,8,1,4,0.5", "--reps", "2",
                      "--sample-size", "30", "--mode", "true_parameters"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["result"]["mode"], "true_parameters");
  EXPECT_EQ(doc["result"]["population"]["theta"]["alpha2"], 8.0);
  EXPECT_EQ(run({"simulate", "--theta", "2,8,1"}).code, 2);
  EXPECT_EQ(run({"simulate", "--theta", "2,8,1,4,1.5"}).code, 2);
}

TEST_F(CliTest, EigenCheck) {
  const auto r500 = run({"eigen-check"});
  ASSERT_EQ(r500.code, 0) << r500.err;
  const auto d500 = json::parse(r500.out);
  ASSERT_EQ(d500["result"]["rows"].size(), 10u);
  EXPECT_EQ(d500["result"]["grid_size"], 500);
  EXPECT_LT(d500["result"]["rows"][0]["relative_error"].get<double>(), 1e-3);
  const auto d50 = json::parse(run({"eigen-check", "-m", "50"}).out);
  for (int j = 0; j < 10; ++j) {
    EXPECT_LT(d500["result"]["rows"][j]["relative_error"].get<double>(),
              d50["result"]["rows"][j]["relative_error"].get<double>());
  }
}

TEST_F(CliTest, ConfigFileEnvironmentAndFlagPrecedence) {
  const auto cfg = write("cfg.json", R"({"seed": 11, "kernel": {"grid_size": 60,
      "nystrom_weight": "one_over_m"}})");
  setenv("WMGOF_SEED", "99", 1);
  auto doc = json::parse(run({"eigen-check"}).out);
  EXPECT_EQ(doc["config"]["seed"], 99);
  doc = json::parse(run({"eigen-check", "--config", cfg}).out);
  EXPECT_EQ(doc["config"]["seed"], 11);
  EXPECT_EQ(doc["result"]["grid_size"], 60);
  EXPECT_EQ(doc["result"]["nystrom_weight"], "one_over_m");
  doc = json::parse(run({"eigen-check", "--config", cfg, "--seed", "5", "-m",
                         "80"}).out);
  EXPECT_EQ(doc["config"]["seed"], 5);
  EXPECT_EQ(doc["result"]["grid_size"], 80);
  unsetenv("WMGOF_SEED");
  const auto broken = write("broken.json", "{not json");
  EXPECT_EQ(run({"eigen-check", "--config", broken}).code, 2);
  setenv("WMGOF_SEED", "abc", 1);
  EXPECT_EQ(run({"eigen-check"}).code, 2);
  unsetenv("WMGOF_SEED");
}

TEST_F(CliTest, ConfigEchoRoundTrips) {
  wmgof::cli::RunConfig c;
  c.command = "simulate";
  c.seed = 123;
  c.kernel.grid_size = 77;
  c.kernel.info_mode = wmgof::InfoMatrixMode::kLiteral;
  c.population = 3;
  c.n_reps = 12;
  wmgof::cli::RunConfig d;
  d.command = "simulate";
  wmgof::cli::apply_config_json(wmgof::cli::config_to_json(c), d);
  EXPECT_EQ(wmgof::cli::config_to_json(c), wmgof::cli::config_to_json(d));
}

}  // namespace
