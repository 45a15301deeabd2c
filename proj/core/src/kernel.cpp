#include "wmgof/kernel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wmgof/errors.hpp"

namespace wmgof {

PsiVector psi_at(double s, const MixtureParams& theta_hat) {
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream os;
    os << "psi_at: s must lie in (0, 1), got " << s;
    throw DomainError(os.str());
  }
  const QuantileResult q = mixture_quantile_detailed(s, theta_hat);
  const ParamVector g = cdf_gradient(q.x, theta_hat).as_array();
  PsiVector psi;
  psi.components = Eigen::Map<const Vector5d>(g.data());
  psi.used_bisection = q.used_bisection;
  return psi;
}

const char* to_string(InfoMatrixMode mode) {
  return mode == InfoMatrixMode::kInverse ? "inverse" : "literal";
}

const char* to_string(NystromWeight weight) {
  return weight == NystromWeight::kGridSpacing ? "grid_spacing" : "one_over_m";
}

InfoMatrixMode info_matrix_mode_from_string(const std::string& s) {
  if (s == "inverse") return InfoMatrixMode::kInverse;
  if (s == "literal") return InfoMatrixMode::kLiteral;
  throw DomainError("unknown info matrix mode '" + s + "'");
}

NystromWeight nystrom_weight_from_string(const std::string& s) {
  if (s == "grid_spacing") return NystromWeight::kGridSpacing;
  if (s == "one_over_m") return NystromWeight::kOneOverM;
  throw DomainError("unknown Nystrom weight '" + s + "'");
}

Matrix5d inverse_information(const Matrix5d& hessian, std::size_t n,
                             InfoMatrixMode mode) {
  if (n == 0) throw DomainError("inverse_information: n must be >= 1");
  const Matrix5d info = -hessian / static_cast<double>(n);
  Eigen::LLT<Matrix5d> llt(info);
  if (!info.allFinite() || llt.info() != Eigen::Success) {
    throw SingularInformation(
        "-H/n is not positive definite; the fit is not a regular interior "
        "maximum");
  }
  if (mode == InfoMatrixMode::kLiteral) return info;
  Matrix5d inv = llt.solve(Matrix5d::Identity());
  return 0.5 * (inv + inv.transpose());
}

double rho_hat(double s, double t, const MixtureParams& theta_hat,
               const Matrix5d& inv_info) {
  const double bridge = std::min(s, t) - s * t;
  if (inv_info.isZero(0.0)) return bridge;
  const Vector5d ps = psi_at(s, theta_hat).components;
  const Vector5d pt = psi_at(t, theta_hat).components;
  return bridge - ps.dot(inv_info * pt);
}

KernelMatrix build_q_matrix(const PsiFunction& psi, const Matrix5d& inv_info,
                            int m, NystromWeight weight) {
  if (m < 2) throw DomainError("build_q_matrix: grid size must be >= 2");
  const double h = 1.0 / static_cast<double>(m + 1);
  const double w = weight == NystromWeight::kGridSpacing
                       ? h
                       : 1.0 / static_cast<double>(m);

  KernelMatrix q;
  q.m = m;
  Eigen::Matrix<double, kNumParams, Eigen::Dynamic> grid(kNumParams, m);
  for (int i = 0; i < m; ++i) {
    const PsiVector p = psi(static_cast<double>(i + 1) * h);
    grid.col(i) = p.components;
    if (p.used_bisection) ++q.quantile_fallbacks;
  }
  if (!grid.allFinite()) {
    throw NonFinite("build_q_matrix: non-finite Psi on the grid");
  }

  // Correction term Psi^T M Psi for all grid pairs at once.
  const Eigen::MatrixXd correction = grid.transpose() * inv_info * grid;
  q.entries.resize(m, m);
  for (int j = 0; j < m; ++j) {
    const double t = static_cast<double>(j + 1) * h;
    for (int i = 0; i <= j; ++i) {
      const double s = static_cast<double>(i + 1) * h;
      const double c = 0.5 * (correction(i, j) + correction(j, i));
      const double v = w * (s - s * t - c);
      q.entries(i, j) = v;
      q.entries(j, i) = v;
    }
  }
  return q;
}

KernelMatrix build_q_matrix(const MixtureParams& theta_hat,
                            const Matrix5d& hessian, std::size_t n,
                            const KernelOptions& options) {
  const Matrix5d inv_info = inverse_information(hessian, n, options.info_mode);
  return build_q_matrix(
      [&theta_hat](double s) { return psi_at(s, theta_hat); }, inv_info,
      options.grid_size, options.weight);
}

KernelMatrix build_simple_q_matrix(int m, NystromWeight weight) {
  return build_q_matrix([](double) { return PsiVector{}; }, Matrix5d::Zero(), m,
                        weight);
}

const char* to_string(NegativeEigenvalues policy) {
  return policy == NegativeEigenvalues::kKeep ? "keep" : "exclude";
}

NegativeEigenvalues negative_eigenvalues_from_string(const std::string& s) {
  if (s == "keep") return NegativeEigenvalues::kKeep;
  if (s == "exclude") return NegativeEigenvalues::kExclude;
  throw DomainError("unknown negative eigenvalue policy '" + s + "'");
}

EigenSpectrum eigen_spectrum(const KernelMatrix& q, double tail_tolerance,
                             NegativeEigenvalues policy) {
  if (q.m < 2 || q.entries.rows() != q.m || q.entries.cols() != q.m) {
    throw DomainError("eigen_spectrum: malformed kernel matrix");
  }
  if (!(tail_tolerance >= 0.0 && tail_tolerance < 1.0)) {
    throw DomainError("eigen_spectrum: tail_tolerance must lie in [0, 1)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      q.entries, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw EigenSolverFailure("eigen_spectrum: symmetric eigensolver failed");
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();

  EigenSpectrum spec;
  spec.lambdas.assign(ev.data(), ev.data() + ev.size());
  std::sort(spec.lambdas.begin(), spec.lambdas.end(), std::greater<>());

  double max_abs = 0.0;
  for (double l : spec.lambdas) {
    max_abs = std::max(max_abs, std::abs(l));
    if (l < 0.0) {
      ++spec.n_negative;
      spec.most_negative = std::min(spec.most_negative, l);
    }
  }
  if (!(max_abs > 0.0)) return spec;

  // Rounding-level eigenvalues carry no information about the kernel.
  const double noise = 1e-13 * max_abs;
  std::vector<double> eligible;
  for (double l : spec.lambdas) {
    if (std::abs(l) <= noise) continue;
    if (l < 0.0 && policy == NegativeEigenvalues::kExclude) continue;
    eligible.push_back(l);
  }
  std::stable_sort(eligible.begin(), eligible.end(), [](double a, double b) {
    return std::abs(a) > std::abs(b);
  });
  double total = 0.0;
  for (double l : eligible) total += std::abs(l);
  if (!(total > 0.0)) return spec;

  double captured = 0.0;
  for (double l : eligible) {
    captured += std::abs(l);
    spec.retained.push_back(l);
    if (l < 0.0) ++spec.n_negative_retained;
    if (captured >= (1.0 - tail_tolerance) * total) break;
  }
  std::sort(spec.retained.begin(), spec.retained.end(), std::greater<>());
  spec.n_retained = static_cast<int>(spec.retained.size());
  spec.trace_captured = captured / total;
  return spec;
}

std::vector<double> simple_hypothesis_lambdas(int k) {
  if (k < 1) throw DomainError("simple_hypothesis_lambdas: k must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(k));
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  for (int j = 1; j <= k; ++j) {
    out[static_cast<std::size_t>(j - 1)] =
        1.0 / (pi2 * static_cast<double>(j) * static_cast<double>(j));
  }
  return out;
}

}  // namespace wmgof
