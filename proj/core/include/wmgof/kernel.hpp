#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wmgof/estimation.hpp"
#include "wmgof/mixture.hpp"

namespace wmgof {

// Psi(s) = dF/dtheta evaluated at the s-quantile of the fitted mixture.
struct PsiVector {
  Vector5d components = Vector5d::Zero();
  // Whether the quantile inversion needed the bisection fallback.
  bool used_bisection = false;
};

PsiVector psi_at(double s, const MixtureParams& theta_hat);

// How the parameter-estimation term of the kernel is formed from the
// log-likelihood Hessian H of an n-point sample.
enum class InfoMatrixMode {
  // I^{-1} estimated by (-H/n)^{-1}; -H/n estimates the per-observation
  // information.
  kInverse,
  // -H/n used directly in place of I^{-1}. Kept for comparison runs.
  kLiteral,
};

// Quadrature weight applied to kernel values on the grid i/(m+1).
enum class NystromWeight {
  // 1/(m+1), the grid spacing.
  kGridSpacing,
  // 1/m.
  kOneOverM,
};

const char* to_string(InfoMatrixMode mode);
const char* to_string(NystromWeight weight);
InfoMatrixMode info_matrix_mode_from_string(const std::string& s);
NystromWeight nystrom_weight_from_string(const std::string& s);

// The matrix substituted for I^{-1} in the kernel. Throws
// SingularInformation if -H/n is not positive definite.
Matrix5d inverse_information(const Matrix5d& hessian, std::size_t n,
                             InfoMatrixMode mode = InfoMatrixMode::kInverse);

// rho(s, t) = min(s, t) - s t - Psi(s)^T inv_info Psi(t).
double rho_hat(double s, double t, const MixtureParams& theta_hat,
               const Matrix5d& inv_info);

struct KernelMatrix {
  int m = 0;
  Eigen::MatrixXd entries;
  // Grid points whose Psi needed the bisection fallback.
  int quantile_fallbacks = 0;
};

// What happens to negative eigenvalues of Q, which arise because the
// estimated kernel need not be positive semidefinite.
enum class NegativeEigenvalues {
  // Kept as signed weights of the limiting quadratic form.
  kKeep,
  // Dropped; only the positive part of the spectrum is used.
  kExclude,
};

const char* to_string(NegativeEigenvalues policy);
NegativeEigenvalues negative_eigenvalues_from_string(const std::string& s);

struct KernelOptions {
  int grid_size = 500;
  double tail_tolerance = 1e-4;
  InfoMatrixMode info_mode = InfoMatrixMode::kInverse;
  NystromWeight weight = NystromWeight::kGridSpacing;
  NegativeEigenvalues negatives = NegativeEigenvalues::kKeep;
};

using PsiFunction = std::function<PsiVector(double)>;

// General builder: calls `psi` once per grid point s_i = i/(m+1) and fills
//   Q_ij = w * (min(s_i, s_j) - s_i s_j - Psi(s_i)^T inv_info Psi(s_j)).
KernelMatrix build_q_matrix(const PsiFunction& psi, const Matrix5d& inv_info,
                            int m, NystromWeight weight);

// Composite-hypothesis kernel for a fitted mixture.
KernelMatrix build_q_matrix(const MixtureParams& theta_hat,
                            const Matrix5d& hessian, std::size_t n,
                            const KernelOptions& options);

// Brownian bridge kernel min(s, t) - s t on the same grid.
KernelMatrix build_simple_q_matrix(
    int m, NystromWeight weight = NystromWeight::kGridSpacing);

struct EigenSpectrum {
  // All eigenvalues, descending.
  std::vector<double> lambdas;
  // Weights passed to the p-value computation, descending.
  std::vector<double> retained;
  int n_retained = 0;
  // Sum of |retained| over the sum of |eligible| eigenvalues.
  double trace_captured = 0.0;
  int n_negative = 0;
  double most_negative = 0.0;
  int n_negative_retained = 0;
};

// Eigenvalues of Q. Eligible eigenvalues (all nonzero ones under kKeep, the
// positive ones under kExclude) are taken in order of decreasing magnitude
// until their absolute sum reaches 1 - tail_tolerance of the eligible total.
EigenSpectrum eigen_spectrum(
    const KernelMatrix& q, double tail_tolerance = 1e-4,
    NegativeEigenvalues policy = NegativeEigenvalues::kKeep);

// lambda_j = 1 / (pi^2 j^2), j = 1..k.
std::vector<double> simple_hypothesis_lambdas(int k);

}  // namespace wmgof
