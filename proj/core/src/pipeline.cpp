#include "wmgof/pipeline.hpp"

#include "wmgof/errors.hpp"

namespace wmgof {

GofReport gof_test(const Sample& sample, const TestOptions& options) {
  GofReport report;
  report.n = sample.size();

  report.fit = fit_mle(sample, options.fit);
  const MixtureParams& theta = report.fit.theta_hat;

  report.cvm = cvm_statistic(pit(sample, theta));

  const KernelMatrix q =
      build_q_matrix(theta, report.fit.hessian, sample.size(), options.kernel);
  report.quantile_fallbacks = q.quantile_fallbacks;

  report.spectrum = eigen_spectrum(q, options.kernel.tail_tolerance,
                                   options.kernel.negatives);
  if (report.spectrum.n_retained == 0) {
    throw EigenSolverFailure("gof_test: kernel has no usable eigenvalues");
  }

  const WeightedChiSquare limit(report.spectrum.retained);
  report.imhof = imhof_tail_detailed(limit, report.cvm, options.imhof_tolerance);
  report.p_value = report.imhof.tail;
  return report;
}

double simple_hypothesis_p_value(const Sample& sample,
                                 const MixtureParams& theta_true,
                                 int n_lambdas, double imhof_tolerance) {
  const double w2 = cvm_statistic(pit(sample, theta_true));
  const auto lambdas = simple_hypothesis_lambdas(n_lambdas);
  return imhof_tail(WeightedChiSquare(lambdas), w2, imhof_tolerance);
}

}  // namespace wmgof
