#pragma once

#include <span>
#include <vector>

#include "wmgof/mixture.hpp"

namespace wmgof {

// Probability integral transforms z_i = F(x_i; theta), ascending.
struct TransformedSample {
  std::vector<double> z;

  std::size_t size() const noexcept { return z.size(); }
};

TransformedSample pit(const Sample& sample, const MixtureParams& theta);

// Cramer-von Mises statistic
//   W^2 = sum_i (z_(i) - (2i - 1) / (2n))^2 + 1 / (12n).
// `z` must be sorted ascending with entries in [0, 1].
double cvm_statistic(const TransformedSample& z);
double cvm_statistic(std::span<const double> sorted_z);

// Anderson-Darling statistic against Uniform(0, 1). Input order does not
// matter. Throws DegenerateInput if any value is outside the open interval.
double ad_statistic_uniform(std::span<const double> u);

// Upper tail of the limiting distribution of A^2 for a fully specified null,
// using the Marsaglia & Marsaglia (2004) approximation to its CDF.
double ad_asymptotic_cdf(double a2);
double ad_asymptotic_p_value(double a2);

struct AdTest {
  double statistic = 0.0;
  double p_value = 0.0;
};

AdTest ad_test_uniform(std::span<const double> u);

// Clips values into [lo, 1 - lo] so that AD logs stay finite.
std::vector<double> clip_unit_interval(std::span<const double> u,
                                       double lo = 1e-12);

}  // namespace wmgof
