#pragma once

#include <span>
#include <vector>

namespace wmgof {

// Distribution of sum_j lambda_j Z_j^2 with independent standard normal Z_j.
// Weights may be negative (an estimated kernel need not be positive
// semidefinite) but not zero.
class WeightedChiSquare {
 public:
  // Throws DomainError for an empty list or any weight that is zero or not
  // finite. Weights are stored by descending magnitude.
  explicit WeightedChiSquare(std::span<const double> weights);

  std::span<const double> weights() const noexcept { return weights_; }
  // Sum of weights; the mean of the distribution.
  double mean() const noexcept { return mean_; }
  double abs_sum() const noexcept { return abs_sum_; }
  bool all_positive() const noexcept { return all_positive_; }

 private:
  std::vector<double> weights_;
  double mean_ = 0.0;
  double abs_sum_ = 0.0;
  bool all_positive_ = true;
};

inline constexpr double kDefaultImhofTolerance = 1e-6;

struct ImhofResult {
  double tail = 0.0;
  // Integration range [0, upper_limit] after truncation.
  double upper_limit = 0.0;
  // Bound on the neglected integral beyond upper_limit, on the probability
  // scale.
  double truncation_bound = 0.0;
  // Accumulated adaptive Simpson error estimate, on the probability scale.
  double quadrature_error = 0.0;
  long evaluations = 0;
};

// P(sum lambda_j chi^2_1 > x) via Imhof's inversion formula
//   1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du,
//   theta(u) = 1/2 sum atan(lambda_j u) - x u / 2,
//   rho(u) = prod (1 + lambda_j^2 u^2)^{1/4}.
// Throws QuadratureFailure when the error estimate exceeds `tol`.
ImhofResult imhof_tail_detailed(const WeightedChiSquare& dist, double x,
                                double tol = kDefaultImhofTolerance);

inline double imhof_tail(const WeightedChiSquare& dist, double x,
                         double tol = kDefaultImhofTolerance) {
  return imhof_tail_detailed(dist, x, tol).tail;
}

}  // namespace wmgof
