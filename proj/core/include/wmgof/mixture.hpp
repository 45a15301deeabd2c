#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wmgof {

// Parameter index order used everywhere a parameter vector, gradient or
// Hessian appears: (alpha1, alpha2, beta1, beta2, p).
enum ParamIndex : int { kAlpha1 = 0, kAlpha2, kBeta1, kBeta2, kP, kNumParams };

using ParamVector = std::array<double, kNumParams>;

// Parameters of the mixture p * Weibull(alpha1, beta1) + (1 - p) * Weibull(alpha2, beta2).
//
// Always stored in canonical component order (beta1 <= beta2, ties broken by
// alpha1 <= alpha2). Construction swaps the components, and replaces p by
// 1 - p, when the arguments arrive in the other order.
class MixtureParams {
 public:
  // Throws DomainError unless all shapes and scales are finite and positive
  // and p lies in [0, 1].
  MixtureParams(double alpha1, double alpha2, double beta1, double beta2,
                double p);

  static MixtureParams from_vector(const ParamVector& v) {
    return {v[kAlpha1], v[kAlpha2], v[kBeta1], v[kBeta2], v[kP]};
  }

  double alpha1() const noexcept { return v_[kAlpha1]; }
  double alpha2() const noexcept { return v_[kAlpha2]; }
  double beta1() const noexcept { return v_[kBeta1]; }
  double beta2() const noexcept { return v_[kBeta2]; }
  double p() const noexcept { return v_[kP]; }

  const ParamVector& vector() const noexcept { return v_; }

  // True when 0 < p < 1.
  bool interior() const noexcept { return v_[kP] > 0.0 && v_[kP] < 1.0; }

  // True when the constructor had to swap the components.
  bool swapped() const noexcept { return swapped_; }

  friend bool operator==(const MixtureParams& a, const MixtureParams& b) {
    return a.v_ == b.v_;
  }

  std::string to_string() const;

 private:
  ParamVector v_{};
  bool swapped_ = false;
};

// Partial derivatives of the mixture CDF at one point.
struct GradF {
  double d_alpha1 = 0.0;
  double d_alpha2 = 0.0;
  double d_beta1 = 0.0;
  double d_beta2 = 0.0;
  double d_p = 0.0;

  ParamVector as_array() const noexcept {
    return {d_alpha1, d_alpha2, d_beta1, d_beta2, d_p};
  }
};

// Ordered batch of strictly positive observations.
class Sample {
 public:
  // Sorts `values`. Throws DomainError naming the first offending index if a
  // value is not finite or not positive.
  explicit Sample(std::vector<double> values, std::string provenance = {});

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  const std::string& provenance() const noexcept { return provenance_; }

 private:
  std::vector<double> values_;
  std::string provenance_;
};

// Single two-parameter Weibull component helpers.
double weibull_cdf(double x, double alpha, double beta);
double weibull_survival(double x, double alpha, double beta);
double weibull_log_pdf(double x, double alpha, double beta);
double weibull_quantile(double t, double alpha, double beta);

double mixture_pdf(double x, const MixtureParams& theta);
double mixture_cdf(double x, const MixtureParams& theta);

inline constexpr double kDefaultQuantileEps = 5e-6;
inline constexpr int kSecantMaxIterations = 200;

struct QuantileResult {
  double x = 0.0;
  int iterations = 0;
  // Set when the secant iteration failed to settle and bisection finished the
  // job.
  bool used_bisection = false;
};

// Secant inversion of the mixture CDF started from the two single-component
// quantiles, stopping once consecutive iterates differ by less than `eps`.
// Falls back to bisection on a geometrically grown bracket when the secant
// step leaves the support or the iteration cap is hit.
QuantileResult mixture_quantile_detailed(double t, const MixtureParams& theta,
                                         double eps = kDefaultQuantileEps);

inline double mixture_quantile(double t, const MixtureParams& theta,
                               double eps = kDefaultQuantileEps) {
  return mixture_quantile_detailed(t, theta, eps).x;
}

GradF cdf_gradient(double x, const MixtureParams& theta);

// n independent draws, sorted ascending. Deterministic for a fixed seed.
Sample sample_mixture(const MixtureParams& theta, std::size_t n,
                      std::uint64_t rng_seed);

}  // namespace wmgof
