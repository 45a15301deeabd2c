#include "wmgof/imhof.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "wmgof/errors.hpp"

namespace wmgof {

WeightedChiSquare::WeightedChiSquare(std::span<const double> weights)
    : weights_(weights.begin(), weights.end()) {
  if (weights_.empty()) {
    throw DomainError("WeightedChiSquare: at least one weight is required");
  }
  for (double w : weights_) {
    if (!std::isfinite(w) || w == 0.0) {
      std::ostringstream os;
      os << "WeightedChiSquare: weights must be finite and nonzero, got " << w;
      throw DomainError(os.str());
    }
    mean_ += w;
    abs_sum_ += std::abs(w);
    all_positive_ = all_positive_ && w > 0.0;
  }
  std::stable_sort(weights_.begin(), weights_.end(), [](double a, double b) {
    return std::abs(a) > std::abs(b);
  });
}

namespace {

constexpr long kEvaluationBudget = 50'000'000;
constexpr int kMaxDepth = 40;
constexpr int kMinDepth = 2;

class Integrand {
 public:
  Integrand(std::span<const double> w, double x, double mean)
      : w_(w), x_(x), limit_(0.5 * (mean - x)) {}

  double operator()(double u) {
    ++evaluations;
    // sin(theta(u)) / (u rho(u)) -> theta'(0) = (sum lambda - x) / 2.
    if (u < 1e-8) return limit_;
    double angle = 0.0;
    double log_rho = 0.0;
    for (double l : w_) {
      const double lu = l * u;
      angle += std::atan(lu);
      log_rho += std::log1p(lu * lu);
    }
    angle = 0.5 * angle - 0.5 * x_ * u;
    return std::sin(angle) / (u * std::exp(0.25 * log_rho));
  }

  long evaluations = 0;

 private:
  std::span<const double> w_;
  double x_;
  double limit_;
};

struct Simpson {
  Integrand& f;
  double error = 0.0;

  double segment(double a, double fa, double m, double fm, double b,
                 double fb, double whole, double eps, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth >= kMinDepth && std::abs(diff) <= 15.0 * eps) {
      error += std::abs(diff) / 15.0;
      return left + right + diff / 15.0;
    }
    if (depth >= kMaxDepth || f.evaluations > kEvaluationBudget) {
      error += std::abs(diff) / 15.0;
      return left + right + diff / 15.0;
    }
    return segment(a, fa, lm, flm, m, fm, left, 0.5 * eps, depth + 1) +
           segment(m, fm, rm, frm, b, fb, right, 0.5 * eps, depth + 1);
  }

  double integrate(double a, double b, double eps) {
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return segment(a, fa, m, fm, b, fb, whole, eps, 0);
  }
};

// Smallest U such that (1/pi) int_U^inf du / (u rho(u)) <= bound, using
// rho(u) >= prod_{j <= r} (|lambda_j| u)^{1/2} for the best r. Weights arrive
// by descending magnitude.
double truncation_point(std::span<const double> w, double bound) {
  double best = std::numeric_limits<double>::infinity();
  double sum_log = 0.0;
  const std::size_t r_max = std::min<std::size_t>(w.size(), 400);
  for (std::size_t r = 1; r <= r_max; ++r) {
    sum_log += std::log(std::abs(w[r - 1]));
    const double rd = static_cast<double>(r);
    // (1/pi) (2/r) U^{-r/2} prod lambda^{-1/2} = bound.
    const double log_u = (2.0 / rd) * (std::log(2.0 / (std::numbers::pi * rd)) -
                                       0.5 * sum_log - std::log(bound));
    best = std::min(best, std::exp(log_u));
  }
  return best;
}

// For positive weights theta'(u) is negative and increasing in magnitude past
// its zero while 1/(u rho(u)) decreases, so integrating by parts bounds the
// tail beyond U by 2 / (pi U rho(U) |theta'(U)|). This is far tighter than the
// magnitude bound when only a few weights are present. Returns infinity when
// there is no such U below `limit`.
double oscillation_truncation_point(std::span<const double> w, double x,
                                    double bound, double limit) {
  for (double l : w) {
    if (l <= 0.0) return std::numeric_limits<double>::infinity();
  }
  const double start = 1.0 / std::abs(w.front());
  for (double u = start; u < limit; u *= 1.05) {
    double slope = -0.5 * x;
    double log_rho = 0.0;
    for (double l : w) {
      const double lu2 = (l * u) * (l * u);
      slope += 0.5 * l / (1.0 + lu2);
      log_rho += 0.25 * std::log1p(lu2);
    }
    if (slope >= 0.0) continue;
    const double tail = 2.0 / (std::numbers::pi * u * std::exp(log_rho) * -slope);
    if (tail <= bound) return u;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

ImhofResult imhof_tail_detailed(const WeightedChiSquare& dist, double x,
                                double tol) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << "imhof_tail: x must be finite and > 0, got " << x;
    throw DomainError(os.str());
  }
  if (!(tol > 0.0)) throw DomainError("imhof_tail: tol must be > 0");

  const auto w = dist.weights();
  ImhofResult result;
  result.truncation_bound = 0.5 * tol;
  result.upper_limit = truncation_point(w, result.truncation_bound);
  result.upper_limit =
      std::min(result.upper_limit,
               oscillation_truncation_point(w, x, result.truncation_bound,
                                            result.upper_limit));
  if (!std::isfinite(result.upper_limit)) {
    throw QuadratureFailure("imhof_tail: no finite truncation point");
  }

  // Panels of half a period of the fastest possible oscillation of theta(u).
  const double omega = 0.5 * (dist.abs_sum() + x);
  double width = std::numbers::pi / omega;
  double panels = std::ceil(result.upper_limit / width);
  constexpr double kMaxPanels = 2e6;
  if (panels > kMaxPanels) panels = kMaxPanels;
  const auto n_panels = static_cast<long>(std::max(1.0, panels));
  width = result.upper_limit / static_cast<double>(n_panels);

  // Absolute error budget on the integral; the probability is integral / pi.
  const double budget = 0.5 * tol * std::numbers::pi;
  const double eps_panel = budget / static_cast<double>(n_panels);

  Integrand f(w, x, dist.mean());
  Simpson simpson{f};
  double integral = 0.0;
  for (long k = 0; k < n_panels; ++k) {
    const double a = static_cast<double>(k) * width;
    const double b = k + 1 == n_panels ? result.upper_limit : a + width;
    integral += simpson.integrate(a, b, eps_panel);
  }
  result.evaluations = f.evaluations;
  result.quadrature_error = simpson.error / std::numbers::pi;
  if (result.quadrature_error > tol || f.evaluations > kEvaluationBudget ||
      !std::isfinite(integral)) {
    std::ostringstream os;
    os << "imhof_tail: quadrature error estimate " << result.quadrature_error
       << " exceeds tolerance " << tol;
    throw QuadratureFailure(os.str());
  }
  result.tail = std::clamp(0.5 + integral / std::numbers::pi, 0.0, 1.0);
  return result;
}

}  // namespace wmgof
