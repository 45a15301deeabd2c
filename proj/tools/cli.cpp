#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wmgof/version.hpp"

namespace wmgof::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& text, double& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void RunConfig::validate() const {
  if (!(fit.tolerance > 0.0)) throw InputError("fit tolerance must be > 0");
  if (fit.n_starts < 1) throw InputError("n_starts must be >= 1");
  if (fit.max_iterations < 1) throw InputError("max_iterations must be >= 1");
  if (kernel.grid_size < 2) throw InputError("grid size m must be >= 2");
  if (!(kernel.tail_tolerance > 0.0 && kernel.tail_tolerance < 1.0)) {
    throw InputError("tail_tolerance must lie in (0, 1)");
  }
  if (!(imhof_tolerance > 0.0)) throw InputError("imhof tolerance must be > 0");
  if (simple_lambdas < 1) throw InputError("simple_lambdas must be >= 1");
}

Sample parse_sample(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::string field = trim(line);
    if (field.empty()) continue;
    if (const auto comma = field.find(','); comma != std::string::npos) {
      if (!trim(std::string_view(field).substr(comma + 1)).empty()) {
        std::ostringstream os;
        os << source << ":" << line_no << ": expected a single column";
        throw InputError(os.str());
      }
      field = trim(std::string_view(field).substr(0, comma));
    }
    double v = 0.0;
    if (!parse_double(field, v)) {
      if (header_allowed && values.empty()) {
        header_allowed = false;
        continue;
      }
      std::ostringstream os;
      os << source << ":" << line_no << ": cannot parse '" << field
         << "' as a number";
      throw InputError(os.str());
    }
    header_allowed = false;
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << source << ":" << line_no << ": observation must be positive, got "
         << field;
      throw InputError(os.str());
    }
    values.push_back(v);
  }
  return Sample(std::move(values), source);
}

Sample read_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return parse_sample(in, path);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

TestOptions test_options(const RunConfig& config) {
  TestOptions t;
  t.fit = config.fit;
  t.fit.seed = config.seed;
  t.kernel = config.kernel;
  t.imhof_tolerance = config.imhof_tolerance;
  return t;
}

Sample load_input(const RunConfig& config) {
  if (!config.input_path) throw UsageError("--input is required");
  Sample sample = read_sample(*config.input_path);
  if (sample.size() < kMinFitObservations) {
    std::ostringstream os;
    os << *config.input_path << ": need at least " << kMinFitObservations
       << " observations, got " << sample.size();
    throw InputError(os.str());
  }
  return sample;
}

}  // namespace

std::vector<EigenCheckRow> cmd_eigen_check(const RunConfig& config) {
  constexpr int kRows = 10;
  if (config.kernel.grid_size < kRows) {
    throw InputError("eigen-check needs a grid size of at least 10");
  }
  const KernelMatrix q =
      build_simple_q_matrix(config.kernel.grid_size, config.kernel.weight);
  const EigenSpectrum spec = eigen_spectrum(q, config.kernel.tail_tolerance);
  const auto exact = simple_hypothesis_lambdas(kRows);
  std::vector<EigenCheckRow> rows;
  for (int j = 0; j < kRows; ++j) {
    EigenCheckRow r;
    r.j = j + 1;
    r.estimate = spec.lambdas[static_cast<std::size_t>(j)];
    r.exact = exact[static_cast<std::size_t>(j)];
    r.relative_error = std::abs(r.estimate - r.exact) / r.exact;
    rows.push_back(r);
  }
  return rows;
}

FitResult cmd_fit(const RunConfig& config, Sample* sample_out) {
  Sample sample = load_input(config);
  FitConfig fit = config.fit;
  fit.seed = config.seed;
  FitResult result = fit_mle(sample, fit);
  if (sample_out) *sample_out = std::move(sample);
  return result;
}

GofReport cmd_test(const RunConfig& config, Sample* sample_out) {
  Sample sample = load_input(config);
  GofReport report = gof_test(sample, test_options(config));
  if (sample_out) *sample_out = std::move(sample);
  return report;
}

StudyResult cmd_simulate(const RunConfig& config) {
  std::optional<PopulationSpec> spec;
  if (config.population) {
    const auto pops = table1_populations();
    const int idx = *config.population;
    if (idx < 1 || idx > static_cast<int>(pops.size())) {
      throw UsageError("--population must be between 1 and 5");
    }
    spec = pops[static_cast<std::size_t>(idx - 1)];
  } else if (config.theta) {
    spec = PopulationSpec{*config.theta, "explicit theta"};
  } else {
    throw UsageError("simulate needs --population or --theta");
  }
  StudyOptions options;
  options.test = test_options(config);
  options.mode = config.mode;
  options.simple_lambdas = config.simple_lambdas;
  options.threads = config.threads;
  options.max_failure_fraction = config.max_failure_fraction;
  return run_study(*spec, config.n_reps, config.sample_size, config.seed,
                   options);
}

// ---------------------------------------------------------------------------
// JSON

json params_to_json(const MixtureParams& theta) {
  return {{"alpha1", theta.alpha1()}, {"alpha2", theta.alpha2()},
          {"beta1", theta.beta1()},   {"beta2", theta.beta2()},
          {"p", theta.p()}};
}

MixtureParams params_from_json(const json& j) {
  if (j.is_array()) {
    if (j.size() != 5) throw InputError("theta must have 5 entries");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
            j[3].get<double>(), j[4].get<double>()};
  }
  return {j.at("alpha1").get<double>(), j.at("alpha2").get<double>(),
          j.at("beta1").get<double>(), j.at("beta2").get<double>(),
          j.at("p").get<double>()};
}

json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input_path"] = c.input_path ? json(*c.input_path) : json(nullptr);
  j["seed"] = c.seed;
  j["fit"] = {{"n_starts", c.fit.n_starts},
              {"tolerance", c.fit.tolerance},
              {"max_iterations", c.fit.max_iterations}};
  j["kernel"] = {{"grid_size", c.kernel.grid_size},
                 {"tail_tolerance", c.kernel.tail_tolerance},
                 {"info_matrix_mode", to_string(c.kernel.info_mode)},
                 {"nystrom_weight", to_string(c.kernel.weight)},
                 {"negative_eigenvalues", to_string(c.kernel.negatives)}};
  j["imhof_tolerance"] = c.imhof_tolerance;
  if (c.command == "simulate") {
    j["simulation"] = {
        {"n_reps", c.n_reps},
        {"sample_size", c.sample_size},
        {"population", c.population ? json(*c.population) : json(nullptr)},
        {"theta", c.theta ? params_to_json(*c.theta) : json(nullptr)},
        {"mode", to_string(c.mode)},
        {"simple_lambdas", c.simple_lambdas},
        {"threads", c.threads},
        {"max_failure_fraction", c.max_failure_fraction}};
  }
  return j;
}

void apply_config_json(const json& j, RunConfig& c) {
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("input_path") && !j["input_path"].is_null()) {
      c.input_path = j["input_path"].get<std::string>();
    }
    if (j.contains("fit")) {
      const json& f = j["fit"];
      c.fit.n_starts = f.value("n_starts", c.fit.n_starts);
      c.fit.tolerance = f.value("tolerance", c.fit.tolerance);
      c.fit.max_iterations = f.value("max_iterations", c.fit.max_iterations);
    }
    if (j.contains("kernel")) {
      const json& k = j["kernel"];
      c.kernel.grid_size = k.value("grid_size", c.kernel.grid_size);
      c.kernel.tail_tolerance = k.value("tail_tolerance", c.kernel.tail_tolerance);
      if (k.contains("info_matrix_mode")) {
        c.kernel.info_mode =
            info_matrix_mode_from_string(k["info_matrix_mode"].get<std::string>());
      }
      if (k.contains("nystrom_weight")) {
        c.kernel.weight =
            nystrom_weight_from_string(k["nystrom_weight"].get<std::string>());
      }
      if (k.contains("negative_eigenvalues")) {
        c.kernel.negatives = negative_eigenvalues_from_string(
            k["negative_eigenvalues"].get<std::string>());
      }
    }
    c.imhof_tolerance = j.value("imhof_tolerance", c.imhof_tolerance);
    if (j.contains("simulation")) {
      const json& s = j["simulation"];
      c.n_reps = s.value("n_reps", c.n_reps);
      c.sample_size = s.value("sample_size", c.sample_size);
      if (s.contains("population") && !s["population"].is_null()) {
        c.population = s["population"].get<int>();
      }
      if (s.contains("theta") && !s["theta"].is_null()) {
        c.theta = params_from_json(s["theta"]);
      }
      if (s.contains("mode")) {
        c.mode = study_mode_from_string(s["mode"].get<std::string>());
      }
      c.simple_lambdas = s.value("simple_lambdas", c.simple_lambdas);
      c.threads = s.value("threads", c.threads);
      c.max_failure_fraction =
          s.value("max_failure_fraction", c.max_failure_fraction);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

namespace {

json matrix_to_json(const Matrix5d& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json fit_to_json(const FitResult& fit) {
  return {{"theta_hat", params_to_json(fit.theta_hat)},
          {"log_likelihood", fit.log_likelihood},
          {"converged", fit.converged},
          {"gradient_max_norm", fit.gradient_max_norm},
          {"n_starts_used", fit.n_starts_used},
          {"n_disqualified", fit.n_disqualified},
          {"best_of_likelihoods", fit.best_of_likelihoods},
          {"near_boundary", fit.near_boundary},
          {"single_weibull_log_likelihood",
           std::isfinite(fit.single_weibull_log_likelihood)
               ? json(fit.single_weibull_log_likelihood)
               : json(nullptr)},
          {"hessian_negative_definite", fit.hessian_negative_definite},
          {"hessian", matrix_to_json(fit.hessian)}};
}

json gof_report_to_json(const GofReport& r, const Sample& sample) {
  json j;
  j["input"] = {{"provenance", sample.provenance()}, {"n", r.n}};
  j["fit"] = fit_to_json(r.fit);
  j["cvm_statistic"] = r.cvm;
  j["spectrum"] = {{"n_eigenvalues", r.spectrum.lambdas.size()},
                   {"n_retained", r.spectrum.n_retained},
                   {"trace_captured", r.spectrum.trace_captured},
                   {"n_negative", r.spectrum.n_negative},
                   {"most_negative", r.spectrum.most_negative},
                   {"n_negative_retained", r.spectrum.n_negative_retained},
                   {"retained", r.spectrum.retained}};
  j["p_value"] = r.p_value;
  j["diagnostics"] = {{"quantile_fallbacks", r.quantile_fallbacks},
                      {"imhof_upper_limit", r.imhof.upper_limit},
                      {"imhof_quadrature_error", r.imhof.quadrature_error},
                      {"imhof_truncation_bound", r.imhof.truncation_bound},
                      {"imhof_evaluations", r.imhof.evaluations}};
  return j;
}

json study_to_json(const StudyResult& s) {
  json failures = json::array();
  for (const auto& [rep, reason] : s.failures) {
    failures.push_back({{"replication", rep}, {"reason", reason}});
  }
  return {{"population",
           {{"label", s.population.label},
            {"theta", params_to_json(s.population.theta)}}},
          {"mode", to_string(s.mode)},
          {"n_reps", s.n_reps},
          {"sample_size", s.sample_size},
          {"seed", s.seed},
          {"grid_size", s.grid_size},
          {"p_values", s.p_values},
          {"n_failed_fits", s.n_failed_fits},
          {"failures", failures},
          {"rejection_rate_05", s.rejection_rate_05},
          {"ad_statistic", s.ad_statistic ? json(*s.ad_statistic) : json(nullptr)},
          {"ad_p_value", s.ad_p_value ? json(*s.ad_p_value) : json(nullptr)}};
}

StudyResult study_from_json(const json& j) {
  StudyResult s;
  s.population = {params_from_json(j.at("population").at("theta")),
                  j.at("population").at("label").get<std::string>()};
  s.mode = study_mode_from_string(j.at("mode").get<std::string>());
  s.n_reps = j.at("n_reps").get<std::size_t>();
  s.sample_size = j.at("sample_size").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.grid_size = j.at("grid_size").get<int>();
  s.p_values = j.at("p_values").get<std::vector<double>>();
  s.n_failed_fits = j.at("n_failed_fits").get<std::size_t>();
  for (const json& f : j.at("failures")) {
    s.failures.emplace_back(f.at("replication").get<std::size_t>(),
                            f.at("reason").get<std::string>());
  }
  s.rejection_rate_05 = j.at("rejection_rate_05").get<double>();
  if (!j.at("ad_statistic").is_null()) {
    s.ad_statistic = j["ad_statistic"].get<double>();
  }
  if (!j.at("ad_p_value").is_null()) {
    s.ad_p_value = j["ad_p_value"].get<double>();
  }
  return s;
}

json eigen_check_to_json(const std::vector<EigenCheckRow>& rows, int m,
                         NystromWeight weight) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"j", r.j},
                   {"estimate", r.estimate},
                   {"exact", r.exact},
                   {"relative_error", r.relative_error}});
  }
  return {{"grid_size", m}, {"nystrom_weight", to_string(weight)}, {"rows", out}};
}

json make_document(const RunConfig& config, json body) {
  return {{"tool", "wmgof"},
          {"version", kVersion},
          {"command", config.command},
          {"config", config_to_json(config)},
          {"result", std::move(body)}};
}

int exit_code_for(const Error& e) {
  const std::string& k = e.kind();
  if (k == "parse" || k == "usage" || k == "domain" ||
      k == "degenerate_input") {
    return kExitUsage;
  }
  if (k == "too_few_observations" || k == "all_starts_failed" ||
      k == "study_aborted") {
    return kExitFit;
  }
  return kExitKernel;
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

void report_error(std::ostream& err, int code, const std::string& kind,
                  const std::string& reason) {
  err << "wmgof: error exit=" << code << " kind=" << kind
      << " reason=" << json(reason).dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Cramer-von Mises goodness of fit for two-component Weibull "
               "mixtures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // Flag targets; explicit flags override the config file.
  std::string config_path, input_path, output_path, theta_text;
  std::uint64_t seed = 0;
  int n_starts = 0, max_iterations = 0, grid_size = 0, population = 0;
  int simple_lambdas = 0;
  double tolerance = 0.0, tail_tolerance = 0.0, imhof_tolerance = 0.0;
  double max_failure_fraction = 0.0;
  std::string info_mode, nystrom_weight, negatives, mode;
  std::size_t n_reps = 0, sample_size = 0;
  unsigned threads = 0;

  std::vector<CLI::Option*> opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Master seed (default: $WMGOF_SEED)");
    sub->add_option("-o,--output", output_path, "Report path (default stdout)");
    sub->add_option("--grid-size,-m", grid_size, "Kernel grid size m");
    sub->add_option("--tail-tolerance", tail_tolerance,
                    "Untracked share of the eigenvalue trace");
    sub->add_option("--nystrom-weight", nystrom_weight,
                    "grid_spacing | one_over_m")
        ->check(CLI::IsMember({"grid_spacing", "one_over_m"}));
  };
  auto fitting = [&](CLI::App* sub) {
    sub->add_option("-i,--input", input_path, "Observation file");
    sub->add_option("--n-starts", n_starts, "Optimizer starts");
    sub->add_option("--tolerance", tolerance,
                    "Gradient tolerance per observation");
    sub->add_option("--max-iterations", max_iterations, "Iteration cap");
  };
  auto testing = [&](CLI::App* sub) {
    sub->add_option("--info-matrix-mode", info_mode, "inverse | literal")
        ->check(CLI::IsMember({"inverse", "literal"}));
    sub->add_option("--negative-eigenvalues", negatives, "keep | exclude")
        ->check(CLI::IsMember({"keep", "exclude"}));
    sub->add_option("--imhof-tolerance", imhof_tolerance,
                    "Absolute tolerance of the Imhof integral");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit");
  common(fit_cmd);
  fitting(fit_cmd);
  CLI::App* test_cmd = app.add_subcommand("test", "Goodness-of-fit test");
  common(test_cmd);
  fitting(test_cmd);
  testing(test_cmd);
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study");
  common(sim_cmd);
  fitting(sim_cmd);
  testing(sim_cmd);
  sim_cmd->add_option("--population", population, "Reference population 1-5");
  sim_cmd->add_option("--theta", theta_text,
                      "Explicit alpha1,alpha2,beta1,beta2,p");
  sim_cmd->add_option("--reps", n_reps, "Replications");
  sim_cmd->add_option("--sample-size,-n", sample_size, "Observations per rep");
  sim_cmd->add_option("--mode", mode, "estimated | true_parameters")
      ->check(CLI::IsMember({"estimated", "true_parameters"}));
  sim_cmd->add_option("--simple-lambdas", simple_lambdas,
                      "Bridge eigenvalues used in true_parameters mode");
  sim_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--max-failure-fraction", max_failure_fraction,
                      "Abort threshold for failed replications");
  CLI::App* eig_cmd =
      app.add_subcommand("eigen-check", "Bridge spectrum against 1/(pi j)^2");
  common(eig_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    report_error(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const char* name) {
    const CLI::Option* o = sub->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };

  RunConfig config;
  config.command = sub->get_name();
  if (config.command == "eigen-check") config.kernel.grid_size = 500;
  if (config.command == "simulate") config.kernel.grid_size = 200;
  try {
    if (const char* env = std::getenv("WMGOF_SEED"); env && *env) {
      try {
        config.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw InputError(std::string("WMGOF_SEED is not an integer: ") + env);
      }
    }
    if (given("--config")) {
      std::ifstream in(config_path);
      if (!in) throw InputError("cannot open config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw InputError(config_path + ": " + e.what());
      }
      apply_config_json(j, config);
    }
    if (given("--seed")) config.seed = seed;
    if (given("--input")) config.input_path = input_path;
    if (given("--output")) config.output_path = output_path;
    if (given("--n-starts")) config.fit.n_starts = n_starts;
    if (given("--tolerance")) config.fit.tolerance = tolerance;
    if (given("--max-iterations")) config.fit.max_iterations = max_iterations;
    if (given("--grid-size")) config.kernel.grid_size = grid_size;
    if (given("--tail-tolerance")) config.kernel.tail_tolerance = tail_tolerance;
    if (given("--nystrom-weight")) {
      config.kernel.weight = nystrom_weight_from_string(nystrom_weight);
    }
    if (given("--info-matrix-mode")) {
      config.kernel.info_mode = info_matrix_mode_from_string(info_mode);
    }
    if (given("--negative-eigenvalues")) {
      config.kernel.negatives = negative_eigenvalues_from_string(negatives);
    }
    if (given("--imhof-tolerance")) config.imhof_tolerance = imhof_tolerance;
    if (given("--population")) config.population = population;
    if (given("--theta")) {
      std::vector<double> v;
      std::stringstream ss(theta_text);
      for (std::string item; std::getline(ss, item, ',');) {
        double d = 0.0;
        if (!parse_double(trim(item), d)) {
          throw UsageError("--theta: cannot parse '" + item + "'");
        }
        v.push_back(d);
      }
      if (v.size() != 5) throw UsageError("--theta needs 5 comma-separated values");
      config.theta = MixtureParams(v[0], v[1], v[2], v[3], v[4]);
    }
    if (given("--reps")) config.n_reps = n_reps;
    if (given("--sample-size")) config.sample_size = sample_size;
    if (given("--mode")) config.mode = study_mode_from_string(mode);
    if (given("--simple-lambdas")) config.simple_lambdas = simple_lambdas;
    if (given("--threads")) config.threads = threads;
    if (given("--max-failure-fraction")) {
      config.max_failure_fraction = max_failure_fraction;
    }
    config.validate();

    json body;
    if (config.command == "fit") {
      Sample sample({1.0});
      const FitResult fit = cmd_fit(config, &sample);
      body = {{"input", {{"provenance", sample.provenance()}, {"n", sample.size()}}},
              {"fit", fit_to_json(fit)}};
    } else if (config.command == "test") {
      Sample sample({1.0});
      const GofReport report = cmd_test(config, &sample);
      body = gof_report_to_json(report, sample);
    } else if (config.command == "simulate") {
      body = study_to_json(cmd_simulate(config));
    } else {
      body = eigen_check_to_json(cmd_eigen_check(config),
                                 config.kernel.grid_size, config.kernel.weight);
    }

    const std::string text = make_document(config, std::move(body)).dump(2) + "\n";
    if (config.output_path) {
      std::ofstream file(*config.output_path, std::ios::binary);
      if (!file) {
        throw UsageError("cannot write output file '" + *config.output_path + "'");
      }
      file << text;
    } else {
      out << text;
    }
    return kExitOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    report_error(err, code, e.kind(), e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(err, kExitInternal, "internal", e.what());
    return kExitInternal;
  }
}

}  // namespace wmgof::cli
