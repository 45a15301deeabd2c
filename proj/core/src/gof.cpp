#include "wmgof/gof.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmgof/errors.hpp"

namespace wmgof {

TransformedSample pit(const Sample& sample, const MixtureParams& theta) {
  TransformedSample out;
  out.z.reserve(sample.size());
  for (double x : sample.values()) out.z.push_back(mixture_cdf(x, theta));
  // F is monotone, but rounding can still produce ties out of order.
  std::sort(out.z.begin(), out.z.end());
  return out;
}

double cvm_statistic(std::span<const double> z) {
  if (z.empty()) throw DomainError("cvm_statistic: empty input");
  const double n = static_cast<double>(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
    sum += d * d;
  }
  return sum + 1.0 / (12.0 * n);
}

double cvm_statistic(const TransformedSample& z) { return cvm_statistic(z.z); }

double ad_statistic_uniform(std::span<const double> u) {
  if (u.empty()) throw DomainError("ad_statistic_uniform: empty input");
  std::vector<double> s(u.begin(), u.end());
  std::sort(s.begin(), s.end());
  for (double v : s) {
    if (!(v > 0.0 && v < 1.0)) {
      std::ostringstream os;
      os << "ad_statistic_uniform: value " << v << " not inside (0, 1)";
      throw DegenerateInput(os.str());
    }
  }
  const std::size_t n = s.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 2.0 * static_cast<double>(i) + 1.0;
    sum += w * (std::log(s[i]) + std::log1p(-s[n - 1 - i]));
  }
  const double nd = static_cast<double>(n);
  return -nd - sum / nd;
}

double ad_asymptotic_cdf(double z) {
  if (!(z > 0.0)) return 0.0;
  if (z < 2.0) {
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 +
            (0.247105 -
             (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) *
                 z) *
                z);
  }
  return std::exp(
      -std::exp(1.0776 -
                (2.30695 -
                 (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) *
                     z) *
                    z));
}

double ad_asymptotic_p_value(double a2) {
  return std::clamp(1.0 - ad_asymptotic_cdf(a2), 0.0, 1.0);
}

AdTest ad_test_uniform(std::span<const double> u) {
  AdTest t;
  t.statistic = ad_statistic_uniform(u);
  t.p_value = ad_asymptotic_p_value(t.statistic);
  return t;
}

std::vector<double> clip_unit_interval(std::span<const double> u, double lo) {
  std::vector<double> out(u.begin(), u.end());
  for (double& v : out) v = std::clamp(v, lo, 1.0 - lo);
  return out;
}

}  // namespace wmgof
