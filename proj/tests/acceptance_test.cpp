// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "wmgof/estimation.hpp"
#include "wmgof/gof.hpp"
#include "wmgof/imhof.hpp"
#include "wmgof/kernel.hpp"
#include "wmgof/simulation.hpp"

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

wmgof::MixtureParams make(const oracle::Theta& t) {
  return {t[0], t[1], t[2], t[3], t[4]};
}

oracle::Theta to_theta(const wmgof::MixtureParams& t) {
  const auto& v = t.vector();
  return {v[0], v[1], v[2], v[3], v[4]};
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Verdict closed_form_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = wmgof::eigen_spectrum(wmgof::build_simple_q_matrix(500));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (int j = 1; j <= 10; ++j) {
    const double exact = 1.0 / (std::numbers::pi * std::numbers::pi * j * j);
    worst = std::max(worst, std::abs(spec.lambdas[j - 1] - exact) / exact);
  }
  return {worst < 1e-3 && secs < 10.0,
          fmt("max rel err j=1..10 %.3g, %.2f s", worst, secs)};
}

Verdict imhof_vs_monte_carlo() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int set = 0; set < 10; ++set) {
    std::vector<double> w(1 + gen() % 20);
    for (auto& v : w) v = 1.0 - unit(gen);
    const auto draws = oracle::weighted_chi_square_draws(w, 1000000, gen());
    const wmgof::WeightedChiSquare dist(w);
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double x = draws[static_cast<std::size_t>(q * draws.size())];
      worst = std::max(worst, std::abs(wmgof::imhof_tail(dist, x) -
                                       oracle::tail_frequency(draws, x)));
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 0.003 && secs < 60.0,
          fmt("max |imhof - mc| %.4f over 50 points, %.1f s", worst, secs)};
}

Verdict classical_cvm_point() {
  const auto lambdas = wmgof::simple_hypothesis_lambdas(100);
  const double tail = wmgof::imhof_tail(wmgof::WeightedChiSquare(lambdas), 0.461);
  const auto draws = oracle::weighted_chi_square_draws(lambdas, 1000000, 461);
  const double mc = oracle::tail_frequency(draws, 0.461);
  return {std::abs(tail - 0.05) <= 0.005 && std::abs(tail - mc) <= 0.003,
          fmt("imhof %.5f, monte carlo %.5f", tail, mc)};
}

Verdict gradient_and_hessian() {
  double grad_worst = 0.0, hess_worst = 0.0;
  const std::array<oracle::Theta, 3> pops{
      oracle::kPopulation1, oracle::kPopulation2, oracle::kPopulation3};
  for (std::size_t k = 0; k < pops.size(); ++k) {
    const auto s = wmgof::sample_mixture(make(pops[k]), 300, 4000 + k);
    const auto fit = wmgof::fit_mle(s);
    const auto theta = to_theta(fit.theta_hat);
    for (double q = 0.02; q < 1.0; q += 0.04) {
      const double x = oracle::quantile(q, theta);
      const auto g = wmgof::cdf_gradient(x, fit.theta_hat).as_array();
      for (int j = 0; j < 5; ++j) {
        const double fd = oracle::partial(
            [x](const oracle::Theta& t) { return oracle::cdf(x, t); }, theta, j,
            1e-6);
        grad_worst = std::max(grad_worst, std::abs(g[j] - fd));
      }
    }
    const auto h = wmgof::hessian_at(fit.theta_hat, s);
    const auto ref = oracle::second_difference_hessian(
        theta, {s.values().begin(), s.values().end()});
    double scale = 0.0, diff = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        scale = std::max(scale, std::abs(ref[i][j]));
        diff = std::max(diff, std::abs(h(i, j) - ref[i][j]));
      }
    }
    hess_worst = std::max(hess_worst, diff / scale);
  }
  return {grad_worst <= 1e-6 && hess_worst <= 1e-4,
          fmt("gradient max abs err %.3g, hessian max rel err %.3g", grad_worst,
              hess_worst)};
}

Verdict quantile_round_trip() {
  double worst = 0.0;
  for (const auto& raw : oracle::kPopulations) {
    const auto t = make(raw);
    for (int k = 1; k <= 99; ++k) {
      const double s = k / 100.0;
      worst = std::max(worst,
                       std::abs(wmgof::mixture_cdf(wmgof::mixture_quantile(s, t), t) - s));
    }
  }
  return {worst < 1e-5, fmt("max |F(Q(t)) - t| %.3g", worst)};
}

Verdict study(wmgof::StudyMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pops = wmgof::table1_populations();
  wmgof::StudyOptions options;
  options.mode = mode;
  bool pass = true;
  std::string detail;
  for (std::size_t idx : {0u, 4u}) {
    const auto r = wmgof::run_study(pops[idx], 500, 100, 20240611, options);
    const double ad_p = r.ad_p_value.value_or(0.0);
    const bool rate_ok = mode == wmgof::StudyMode::kTrueParameters ||
                         (r.rejection_rate_05 >= 0.02 && r.rejection_rate_05 <= 0.09);
    pass = pass && ad_p > 0.01 && rate_ok;
    detail += pops[idx].label + fmt(": AD %.3f p %.4f, rejection@0.05 %.3f",
                                    r.ad_statistic.value_or(NAN), ad_p,
                                    r.rejection_rate_05);
    detail += ", failed " + std::to_string(r.n_failed_fits) + "; ";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pass = pass && secs < 1800.0;
  detail += fmt("%.1f s", secs);
  return {pass, detail};
}

Verdict cvm_integral_equivalence() {
  std::mt19937_64 gen(8);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto& raw = oracle::kPopulations[rep % 5];
    const auto t = make(raw);
    const std::size_t n = 1 + gen() % 20;
    const auto s = wmgof::sample_mixture(t, n, gen());
    const double formula = wmgof::cvm_statistic(wmgof::pit(s, t));
    const double integral =
        oracle::cvm_by_quadrature({s.values().begin(), s.values().end()}, raw);
    worst = std::max(worst, std::abs(formula - integral));
  }
  return {worst <= 1e-6, fmt("max |formula - quadrature| %.3g over 50 samples", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 closed-form bridge spectrum at m=500", closed_form_spectrum},
      {"2 imhof against monte carlo", imhof_vs_monte_carlo},
      {"3 classical cramer-von mises 5% point", classical_cvm_point},
      {"4 gradient and hessian checks", gradient_and_hessian},
      {"5 quantile round trip", quantile_round_trip},
      {"6 desk-scale uniformity study",
       [] { return study(wmgof::StudyMode::kEstimated); }},
      {"7 true-parameter calibration",
       [] { return study(wmgof::StudyMode::kTrueParameters); }},
      {"8 statistic against integral definition", cvm_integral_equivalence},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
