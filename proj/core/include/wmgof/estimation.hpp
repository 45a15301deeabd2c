#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <vector>

#include "wmgof/mixture.hpp"

namespace wmgof {

using Matrix5d = Eigen::Matrix<double, kNumParams, kNumParams>;
using Vector5d = Eigen::Matrix<double, kNumParams, 1>;

inline constexpr std::size_t kMinFitObservations = 20;

struct FitConfig {
  int n_starts = 10;
  // Convergence requires max |d loglik / d theta| < tolerance * n.
  double tolerance = 1e-6;
  // Iteration cap applied separately to the EM and quasi-Newton phases.
  int max_iterations = 500;
  std::uint64_t seed = 20240611;
};

// Outcome of one start, kept for diagnostics.
struct StartOutcome {
  ParamVector initial{};
  ParamVector final{};
  double log_likelihood = 0.0;
  double gradient_max_norm = 0.0;
  bool converged = false;
  // Boundary p, runaway shape, or a component carrying too little mass.
  bool disqualified = false;
};

struct FitResult {
  MixtureParams theta_hat{1.0, 1.0, 1.0, 1.0, 0.5};
  double log_likelihood = 0.0;
  // Second derivatives of the total log-likelihood at theta_hat, in
  // (alpha1, alpha2, beta1, beta2, p) order.
  Matrix5d hessian = Matrix5d::Zero();
  bool converged = false;
  int n_starts_used = 0;
  // Local-optimum log-likelihoods of every qualified start, in start order.
  std::vector<double> best_of_likelihoods;

  double gradient_max_norm = 0.0;
  int n_disqualified = 0;
  // p_hat outside [0.05, 0.95].
  bool near_boundary = false;
  // Log-likelihood of the best single Weibull. Twice the gap to
  // log_likelihood measures how much the second component buys; a small gap
  // means the data do not support a mixture. -infinity if that fit failed.
  double single_weibull_log_likelihood = -std::numeric_limits<double>::infinity();
  // -hessian positive definite.
  bool hessian_negative_definite = false;
  std::vector<StartOutcome> starts;
};

// Sum of log mixture densities. Returns -infinity when some observation has
// zero density under theta.
double log_likelihood(const MixtureParams& theta, const Sample& sample);

// Same, over a raw parameter vector that need not be in canonical order.
double log_likelihood(const ParamVector& theta, std::span<const double> x);

// Analytic gradient of the total log-likelihood in natural parameters.
Vector5d log_likelihood_gradient(const ParamVector& theta,
                                 std::span<const double> x);

// Central differences of the analytic gradient with per-coordinate step
// max(1e-5, 1e-5 |theta_j|), symmetrized. Requires 0 < p < 1.
Matrix5d hessian_at(const MixtureParams& theta, const Sample& sample);

// Multi-start maximum likelihood. Throws TooFewObservations for n < 20 and
// AllStartsFailed when no start reaches a regular interior optimum.
FitResult fit_mle(const Sample& sample, const FitConfig& config = {});

}  // namespace wmgof
