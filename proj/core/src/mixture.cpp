#include "wmgof/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "wmgof/errors.hpp"
#include "wmgof/rng.hpp"

namespace wmgof {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void require_support(double x, const char* what) {
  if (!(x > 0.0) || std::isnan(x)) {
    std::ostringstream os;
    os << what << ": x must be > 0, got " << x;
    throw DomainError(os.str());
  }
}

// (x / beta)^alpha, evaluated in log space.
double weibull_u(double x, double alpha, double beta) {
  return std::exp(alpha * std::log(x / beta));
}

}  // namespace

MixtureParams::MixtureParams(double alpha1, double alpha2, double beta1,
                             double beta2, double p) {
  if (!positive_finite(alpha1) || !positive_finite(alpha2) ||
      !positive_finite(beta1) || !positive_finite(beta2)) {
    std::ostringstream os;
    os << "MixtureParams: shapes and scales must be finite and > 0, got ("
       << alpha1 << ", " << alpha2 << ", " << beta1 << ", " << beta2 << ")";
    throw DomainError(os.str());
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "MixtureParams: p must lie in [0, 1], got " << p;
    throw DomainError(os.str());
  }
  swapped_ = beta1 > beta2 || (beta1 == beta2 && alpha1 > alpha2);
  if (swapped_) {
    std::swap(alpha1, alpha2);
    std::swap(beta1, beta2);
    p = 1.0 - p;
  }
  v_ = {alpha1, alpha2, beta1, beta2, p};
}

std::string MixtureParams::to_string() const {
  std::ostringstream os;
  os.precision(10);
  os << "(alpha1=" << alpha1() << ", alpha2=" << alpha2()
     << ", beta1=" << beta1() << ", beta2=" << beta2() << ", p=" << p()
     << ")";
  return os.str();
}

Sample::Sample(std::vector<double> values, std::string provenance)
    : values_(std::move(values)), provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!positive_finite(values_[i])) {
      std::ostringstream os;
      os << "Sample: observation " << i << " is not a positive finite value ("
         << values_[i] << ")";
      throw DomainError(os.str());
    }
  }
  std::sort(values_.begin(), values_.end());
}

double weibull_cdf(double x, double alpha, double beta) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-weibull_u(x, alpha, beta));
}

double weibull_survival(double x, double alpha, double beta) {
  if (x <= 0.0) return 1.0;
  return std::exp(-weibull_u(x, alpha, beta));
}

double weibull_log_pdf(double x, double alpha, double beta) {
  const double log_z = std::log(x / beta);
  return std::log(alpha / beta) + (alpha - 1.0) * log_z -
         std::exp(alpha * log_z);
}

double weibull_quantile(double t, double alpha, double beta) {
  return beta * std::pow(-std::log1p(-t), 1.0 / alpha);
}

double mixture_pdf(double x, const MixtureParams& theta) {
  require_support(x, "mixture_pdf");
  const double p = theta.p();
  double f = 0.0;
  if (p > 0.0) f += p * std::exp(weibull_log_pdf(x, theta.alpha1(), theta.beta1()));
  if (p < 1.0) {
    f += (1.0 - p) * std::exp(weibull_log_pdf(x, theta.alpha2(), theta.beta2()));
  }
  return f;
}

double mixture_cdf(double x, const MixtureParams& theta) {
  require_support(x, "mixture_cdf");
  const double p = theta.p();
  return p * weibull_cdf(x, theta.alpha1(), theta.beta1()) +
         (1.0 - p) * weibull_cdf(x, theta.alpha2(), theta.beta2());
}

namespace {

double mixture_survival(double x, const MixtureParams& theta) {
  const double p = theta.p();
  return p * weibull_survival(x, theta.alpha1(), theta.beta1()) +
         (1.0 - p) * weibull_survival(x, theta.alpha2(), theta.beta2());
}

double bisect_quantile(double t, const MixtureParams& theta, double lo,
                       double hi, double eps, int& iterations) {
  auto below = [&](double x) { return mixture_cdf(x, theta) < t; };
  for (int k = 0; !below(lo); ++k) {
    if (k > 2200 || lo == 0.0) {
      throw ConvergenceError("mixture_quantile: failed to bracket lower end");
    }
    lo *= 0.5;
  }
  for (int k = 0; below(hi); ++k) {
    if (k > 2200 || !std::isfinite(hi)) {
      throw ConvergenceError("mixture_quantile: failed to bracket upper end");
    }
    hi *= 2.0;
  }
  const double tol = eps * 1e-3;
  for (int k = 0; k < 400; ++k) {
    ++iterations;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (below(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < tol || hi - lo < 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

QuantileResult mixture_quantile_detailed(double t, const MixtureParams& theta,
                                         double eps) {
  if (!(t > 0.0 && t < 1.0)) {
    std::ostringstream os;
    os << "mixture_quantile: t must lie in (0, 1), got " << t;
    throw DomainError(os.str());
  }
  if (!(eps > 0.0)) throw DomainError("mixture_quantile: eps must be > 0");

  // In the upper half the root is located through the survival function,
  // which keeps precision where F is close to 1.
  const bool upper = t > 0.5;
  auto g = [&](double x) {
    return upper ? (1.0 - t) - mixture_survival(x, theta)
                 : mixture_cdf(x, theta) - t;
  };

  const double x1 = weibull_quantile(t, theta.alpha1(), theta.beta1());
  const double x2 = weibull_quantile(t, theta.alpha2(), theta.beta2());
  QuantileResult result;
  if (x1 == x2) {
    result.x = x1;
    return result;
  }

  double x_prev = x1;
  double x_cur = x2;
  double g_prev = g(x_prev);
  double g_cur = g(x_cur);
  if (g_prev == 0.0) {
    result.x = x_prev;
    return result;
  }
  if (g_cur == 0.0) {
    result.x = x_cur;
    return result;
  }

  for (int it = 1; it <= kSecantMaxIterations; ++it) {
    result.iterations = it;
    if (g_cur == g_prev) break;
    const double x_next =
        (x_cur * g_prev - x_prev * g_cur) / (g_prev - g_cur);
    if (!std::isfinite(x_next) || x_next <= 0.0) break;
    if (std::abs(x_next - x_cur) < eps) {
      result.x = x_next;
      return result;
    }
    x_prev = x_cur;
    g_prev = g_cur;
    x_cur = x_next;
    g_cur = g(x_cur);
    if (g_cur == 0.0) {
      result.x = x_cur;
      return result;
    }
  }

  result.used_bisection = true;
  result.x = bisect_quantile(t, theta, std::min(x1, x2), std::max(x1, x2), eps,
                             result.iterations);
  return result;
}

GradF cdf_gradient(double x, const MixtureParams& theta) {
  require_support(x, "cdf_gradient");
  const double p1 = theta.p();
  const double p2 = 1.0 - p1;
  const double log_z1 = std::log(x / theta.beta1());
  const double log_z2 = std::log(x / theta.beta2());
  const double u1 = std::exp(theta.alpha1() * log_z1);
  const double u2 = std::exp(theta.alpha2() * log_z2);
  const double s1 = std::exp(-u1);
  const double s2 = std::exp(-u2);
  // u * exp(-u) underflows to 0 cleanly for large u, but u alone may be inf.
  const double us1 = std::isfinite(u1) ? u1 * s1 : 0.0;
  const double us2 = std::isfinite(u2) ? u2 * s2 : 0.0;

  GradF g;
  g.d_alpha1 = p1 * us1 * log_z1;
  g.d_alpha2 = p2 * us2 * log_z2;
  g.d_beta1 = -p1 * (theta.alpha1() / theta.beta1()) * us1;
  g.d_beta2 = -p2 * (theta.alpha2() / theta.beta2()) * us2;
  g.d_p = s2 - s1;
  return g;
}

Sample sample_mixture(const MixtureParams& theta, std::size_t n,
                      std::uint64_t rng_seed) {
  if (n == 0) throw DomainError("sample_mixture: n must be >= 1");
  Rng rng(rng_seed);
  std::vector<double> values(n);
  for (auto& v : values) {
    const bool first = rng.uniform() < theta.p();
    const double e = -std::log(rng.uniform_open());
    v = first ? theta.beta1() * std::pow(e, 1.0 / theta.alpha1())
              : theta.beta2() * std::pow(e, 1.0 / theta.alpha2());
  }
  std::ostringstream os;
  os << "simulated theta=" << theta.to_string() << " n=" << n
     << " seed=" << rng_seed;
  return Sample(std::move(values), os.str());
}

}  // namespace wmgof
