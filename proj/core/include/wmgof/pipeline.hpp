#pragma once

#include "wmgof/estimation.hpp"
#include "wmgof/gof.hpp"
#include "wmgof/imhof.hpp"
#include "wmgof/kernel.hpp"
#include "wmgof/mixture.hpp"

namespace wmgof {

struct TestOptions {
  FitConfig fit;
  KernelOptions kernel;
  double imhof_tolerance = kDefaultImhofTolerance;
};

struct GofReport {
  FitResult fit;
  std::size_t n = 0;
  double cvm = 0.0;
  EigenSpectrum spectrum;
  double p_value = 0.0;
  int quantile_fallbacks = 0;
  ImhofResult imhof;
};

// Full composite-hypothesis test of a sample:
//   fit theta by maximum likelihood, transform by the fitted CDF, compute W^2,
//   discretize the estimated covariance kernel on an m-point grid, take its
//   eigenvalues and evaluate P(sum lambda_j chi^2_1 > W^2) by Imhof's method.
GofReport gof_test(const Sample& sample, const TestOptions& options = {});

// Same test against a fully specified theta_true: the Brownian bridge
// spectrum truncated to `n_lambdas` terms. No estimation.
double simple_hypothesis_p_value(const Sample& sample,
                                 const MixtureParams& theta_true,
                                 int n_lambdas = 200,
                                 double imhof_tolerance = kDefaultImhofTolerance);

}  // namespace wmgof
