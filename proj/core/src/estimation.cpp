#include "wmgof/estimation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "wmgof/errors.hpp"
#include "wmgof/rng.hpp"

namespace wmgof {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Starts whose optimum lands outside these limits are recorded but never
// reported as the fit.
constexpr double kMinInteriorP = 0.001;
constexpr double kMaxInteriorP = 0.999;
// The mixture likelihood is unbounded as one shape grows and its component
// collapses onto a single observation.
constexpr double kMinShape = 0.02;
constexpr double kMaxShape = 100.0;

struct ObsTerms {
  double log_f = 0.0;
  double log_f1 = 0.0;
  double log_f2 = 0.0;
};

ObsTerms observation_terms(const ParamVector& th, double x) {
  ObsTerms t;
  t.log_f1 = weibull_log_pdf(x, th[kAlpha1], th[kBeta1]);
  t.log_f2 = weibull_log_pdf(x, th[kAlpha2], th[kBeta2]);
  const double p = th[kP];
  const double l1 = p > 0.0 ? std::log(p) + t.log_f1 : kNegInf;
  const double l2 = p < 1.0 ? std::log1p(-p) + t.log_f2 : kNegInf;
  const double m = std::max(l1, l2);
  if (m == kNegInf || std::isnan(m)) {
    t.log_f = kNegInf;
    return t;
  }
  t.log_f = m + std::log(std::exp(l1 - m) + std::exp(l2 - m));
  return t;
}

double max_abs(const Vector5d& g) { return g.cwiseAbs().maxCoeff(); }

// Internal unconstrained coordinates: log shapes, log scales, logit p.
using Eta = Vector5d;

Eta to_eta(const ParamVector& th) {
  Eta e;
  e << std::log(th[kAlpha1]), std::log(th[kAlpha2]), std::log(th[kBeta1]),
      std::log(th[kBeta2]), std::log(th[kP] / (1.0 - th[kP]));
  return e;
}

ParamVector from_eta(const Eta& e) {
  const double p = 1.0 / (1.0 + std::exp(-e[kP]));
  return {std::exp(e[kAlpha1]), std::exp(e[kAlpha2]), std::exp(e[kBeta1]),
          std::exp(e[kBeta2]), p};
}

Vector5d eta_gradient(const ParamVector& th, const Vector5d& g_theta) {
  Vector5d g = g_theta;
  g[kAlpha1] *= th[kAlpha1];
  g[kAlpha2] *= th[kAlpha2];
  g[kBeta1] *= th[kBeta1];
  g[kBeta2] *= th[kBeta2];
  g[kP] *= th[kP] * (1.0 - th[kP]);
  return g;
}

bool finite_params(const ParamVector& th) {
  return std::all_of(th.begin(), th.end(),
                     [](double v) { return std::isfinite(v); }) &&
         th[kP] > 0.0 && th[kP] < 1.0 && th[kAlpha1] > 0.0 &&
         th[kAlpha2] > 0.0 && th[kBeta1] > 0.0 && th[kBeta2] > 0.0;
}

double safe_loglik(const ParamVector& th, std::span<const double> x) {
  if (!finite_params(th)) return kNegInf;
  const double l = log_likelihood(th, x);
  return std::isnan(l) ? kNegInf : l;
}

// ---------------------------------------------------------------------------
// EM phase

// Weighted single-Weibull MLE. Solves the shape profile equation
//   sum w x^a ln x / sum w x^a - 1/a - sum w ln x / sum w = 0,
// which is increasing in a, by safeguarded Newton in log a.
bool weighted_weibull_mle(std::span<const double> log_x,
                          std::span<const double> w, double& alpha,
                          double& beta) {
  double w_sum = 0.0;
  double wy_sum = 0.0;
  double y_max = kNegInf;
  for (std::size_t i = 0; i < log_x.size(); ++i) {
    w_sum += w[i];
    wy_sum += w[i] * log_x[i];
    if (w[i] > 0.0) y_max = std::max(y_max, log_x[i]);
  }
  if (!(w_sum > 0.0)) return false;
  const double y_bar = wy_sum / w_sum;

  // Returns h(a) and h'(a); also the log of sum w x^a.
  auto profile = [&](double a, double& dh, double& log_s) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < log_x.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const double e = w[i] * std::exp(a * (log_x[i] - y_max));
      s0 += e;
      s1 += e * log_x[i];
      s2 += e * log_x[i] * log_x[i];
    }
    const double mean = s1 / s0;
    const double var = std::max(0.0, s2 / s0 - mean * mean);
    dh = var + 1.0 / (a * a);
    log_s = a * y_max + std::log(s0);
    return mean - 1.0 / a - y_bar;
  };

  double lo = kMinShape;
  double hi = kMaxShape;
  double dh = 0.0, log_s = 0.0;
  if (profile(lo, dh, log_s) > 0.0) return false;
  if (profile(hi, dh, log_s) < 0.0) return false;

  double a = std::clamp(alpha, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double h = profile(a, dh, log_s);
    if (h < 0.0) {
      lo = a;
    } else {
      hi = a;
    }
    if (std::abs(h) < 1e-12 || (hi - lo) < 1e-12 * a) break;
    // Newton step in a; fall back to bisection when it leaves the bracket.
    double next = a - h / dh;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    a = next;
  }
  profile(a, dh, log_s);
  alpha = a;
  beta = std::exp((log_s - std::log(w_sum)) / a);
  return std::isfinite(beta) && beta > 0.0;
}

ParamVector run_em(std::span<const double> x, ParamVector th,
                   int max_iterations) {
  const std::size_t n = x.size();
  std::vector<double> log_x(n), w1(n), w2(n);
  for (std::size_t i = 0; i < n; ++i) log_x[i] = std::log(x[i]);

  double prev = safe_loglik(th, x);
  for (int it = 0; it < max_iterations; ++it) {
    double sum_w1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const ObsTerms t = observation_terms(th, x[i]);
      w1[i] = th[kP] * std::exp(t.log_f1 - t.log_f);
      if (!std::isfinite(w1[i])) w1[i] = 0.5;
      w1[i] = std::clamp(w1[i], 0.0, 1.0);
      w2[i] = 1.0 - w1[i];
      sum_w1 += w1[i];
    }
    ParamVector next = th;
    next[kP] = sum_w1 / static_cast<double>(n);
    if (!(next[kP] > 1e-6 && next[kP] < 1.0 - 1e-6)) {
      return next;
    }
    if (!weighted_weibull_mle(log_x, w1, next[kAlpha1], next[kBeta1]) ||
        !weighted_weibull_mle(log_x, w2, next[kAlpha2], next[kBeta2])) {
      return th;
    }
    const double cur = safe_loglik(next, x);
    th = next;
    if (!std::isfinite(cur)) break;
    if (std::abs(cur - prev) < 1e-10 * std::max(1.0, std::abs(cur))) break;
    prev = cur;
  }
  return th;
}

// ---------------------------------------------------------------------------
// Quasi-Newton and Newton phases, both maximizing over eta.

struct Point {
  Eta eta;
  ParamVector theta{};
  double loglik = kNegInf;
  Vector5d grad_theta = Vector5d::Zero();
  Vector5d grad_eta = Vector5d::Zero();
};

Point evaluate(const Eta& eta, std::span<const double> x) {
  Point pt;
  pt.eta = eta;
  pt.theta = from_eta(eta);
  pt.loglik = safe_loglik(pt.theta, x);
  if (std::isfinite(pt.loglik)) {
    pt.grad_theta = log_likelihood_gradient(pt.theta, x);
    pt.grad_eta = eta_gradient(pt.theta, pt.grad_theta);
    if (!pt.grad_eta.allFinite()) pt.loglik = kNegInf;
  }
  return pt;
}

// Backtracking line search along an ascent direction. Steps are capped at
// unit length in eta.
bool line_search(const Point& from, Vector5d dir, std::span<const double> x,
                 Point& out) {
  const double norm = dir.cwiseAbs().maxCoeff();
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  if (norm > 1.0) dir /= norm;
  const double slope = from.grad_eta.dot(dir);
  if (!(slope > 0.0)) return false;
  double step = 1.0;
  for (int k = 0; k < 50; ++k) {
    Point cand = evaluate(from.eta + step * dir, x);
    if (std::isfinite(cand.loglik) &&
        cand.loglik >= from.loglik + 1e-4 * step * slope) {
      out = std::move(cand);
      return true;
    }
    step *= 0.5;
  }
  return false;
}

Point run_bfgs(Point pt, std::span<const double> x, double grad_tol,
               int max_iterations) {
  Matrix5d inv_h = Matrix5d::Identity() / static_cast<double>(x.size());
  bool scaled = false;
  for (int it = 0; it < max_iterations; ++it) {
    if (max_abs(pt.grad_theta) < grad_tol) break;
    Vector5d dir = inv_h * pt.grad_eta;
    if (!(pt.grad_eta.dot(dir) > 0.0)) {
      inv_h = Matrix5d::Identity() / static_cast<double>(x.size());
      dir = inv_h * pt.grad_eta;
    }
    Point next;
    if (!line_search(pt, dir, x, next)) break;
    // Minimizing -loglik: s = step, y = -(g_next - g).
    const Vector5d s = next.eta - pt.eta;
    const Vector5d y = pt.grad_eta - next.grad_eta;
    const double sy = s.dot(y);
    if (sy > 1e-14) {
      if (!scaled) {
        inv_h = Matrix5d::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix5d v = Matrix5d::Identity() - rho * s * y.transpose();
      inv_h = v * inv_h * v.transpose() + rho * s * s.transpose();
    }
    pt = std::move(next);
  }
  return pt;
}

Matrix5d eta_hessian(const Point& pt, std::span<const double> x) {
  Matrix5d h;
  for (int j = 0; j < kNumParams; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(pt.eta[j]));
    Eta up = pt.eta, dn = pt.eta;
    up[j] += step;
    dn[j] -= step;
    const Point pu = evaluate(up, x);
    const Point pd = evaluate(dn, x);
    h.col(j) = (pu.grad_eta - pd.grad_eta) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Point run_newton(Point pt, std::span<const double> x, double grad_tol) {
  for (int it = 0; it < 50; ++it) {
    if (max_abs(pt.grad_theta) < grad_tol) break;
    const Matrix5d neg_h = -eta_hessian(pt, x);
    if (!neg_h.allFinite()) break;
    // Levenberg damping until the system is positive definite.
    double mu = 0.0;
    Vector5d dir;
    bool ok = false;
    for (int k = 0; k < 30; ++k) {
      Eigen::LLT<Matrix5d> llt(neg_h + mu * Matrix5d::Identity());
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(pt.grad_eta);
        ok = dir.allFinite();
        if (ok) break;
      }
      mu = mu == 0.0 ? 1e-6 * std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff())
                     : mu * 10.0;
    }
    if (!ok) break;
    Point next;
    if (!line_search(pt, dir, x, next)) break;
    pt = std::move(next);
  }
  return pt;
}

// ---------------------------------------------------------------------------
// Starting points

// Method-of-moments single Weibull: CV^2 + 1 = G(1+2/a) / G(1+1/a)^2.
void weibull_moments(std::span<const double> x, double& alpha, double& beta) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  const double target = std::log1p(var / (mean * mean));
  auto ratio = [](double a) {
    return std::lgamma(1.0 + 2.0 / a) - 2.0 * std::lgamma(1.0 + 1.0 / a);
  };
  double lo = std::log(0.1), hi = std::log(50.0);
  if (!(target > ratio(std::exp(hi)))) {
    alpha = std::exp(hi);
  } else if (target > ratio(std::exp(lo))) {
    alpha = std::exp(lo);
  } else {
    for (int k = 0; k < 100; ++k) {
      const double mid = 0.5 * (lo + hi);
      // ratio decreases in a.
      if (ratio(std::exp(mid)) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    alpha = std::exp(0.5 * (lo + hi));
  }
  beta = mean / std::exp(std::lgamma(1.0 + 1.0 / alpha));
}

std::vector<ParamVector> starting_points(std::span<const double> x,
                                         const FitConfig& config) {
  const std::size_t n = x.size();
  std::vector<ParamVector> base;
  for (double q : {0.3, 0.5, 0.7}) {
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(q * static_cast<double>(n))), 2,
        n - 2);
    ParamVector th{};
    weibull_moments(x.subspan(0, k), th[kAlpha1], th[kBeta1]);
    weibull_moments(x.subspan(k), th[kAlpha2], th[kBeta2]);
    th[kP] = static_cast<double>(k) / static_cast<double>(n);
    base.push_back(th);
  }

  std::vector<ParamVector> starts;
  const auto total = static_cast<std::size_t>(std::max(config.n_starts, 1));
  for (std::size_t s = 0; s < total; ++s) {
    if (s < base.size()) {
      starts.push_back(base[s]);
      continue;
    }
    Rng rng(derive_seed(config.seed, s));
    auto normal = [&rng] {
      const double u1 = rng.uniform_open();
      const double u2 = rng.uniform_open();
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    ParamVector th = base[s % base.size()];
    th[kAlpha1] *= std::exp(0.3 * normal());
    th[kAlpha2] *= std::exp(0.3 * normal());
    th[kBeta1] *= std::exp(0.2 * normal());
    th[kBeta2] *= std::exp(0.2 * normal());
    const double logit = std::log(th[kP] / (1.0 - th[kP])) + 0.5 * normal();
    th[kP] = 1.0 / (1.0 + std::exp(-logit));
    starts.push_back(th);
  }
  return starts;
}

bool qualified(const ParamVector& th) {
  return finite_params(th) && th[kP] >= kMinInteriorP &&
         th[kP] <= kMaxInteriorP && th[kAlpha1] <= kMaxShape &&
         th[kAlpha2] <= kMaxShape && th[kAlpha1] >= kMinShape &&
         th[kAlpha2] >= kMinShape;
}

StartOutcome optimize_start(std::span<const double> x, const ParamVector& init,
                            const FitConfig& config) {
  StartOutcome out;
  out.initial = init;
  const double grad_tol = config.tolerance * static_cast<double>(x.size());

  ParamVector th = run_em(x, init, config.max_iterations);
  if (!finite_params(th)) {
    out.final = th;
    out.log_likelihood = kNegInf;
    out.disqualified = true;
    return out;
  }
  // Keep the logistic coordinate away from saturation before the
  // unconstrained phases start.
  th[kP] = std::clamp(th[kP], 1e-6, 1.0 - 1e-6);
  Point pt = evaluate(to_eta(th), x);
  if (std::isfinite(pt.loglik)) {
    pt = run_bfgs(std::move(pt), x, grad_tol, config.max_iterations);
    pt = run_newton(std::move(pt), x, grad_tol);
  }
  out.final = pt.theta;
  out.log_likelihood = pt.loglik;
  out.gradient_max_norm =
      std::isfinite(pt.loglik) ? max_abs(pt.grad_theta)
                               : std::numeric_limits<double>::infinity();
  out.converged = out.gradient_max_norm < grad_tol;
  out.disqualified = !std::isfinite(pt.loglik) || !qualified(pt.theta);
  return out;
}

}  // namespace

double log_likelihood(const ParamVector& theta, std::span<const double> x) {
  double total = 0.0;
  for (double v : x) {
    const double l = observation_terms(theta, v).log_f;
    if (l == kNegInf) return kNegInf;
    total += l;
  }
  return total;
}

double log_likelihood(const MixtureParams& theta, const Sample& sample) {
  if (sample.size() == 0) throw DomainError("log_likelihood: empty sample");
  return log_likelihood(theta.vector(), sample.values());
}

Vector5d log_likelihood_gradient(const ParamVector& th,
                                 std::span<const double> x) {
  Vector5d g = Vector5d::Zero();
  const double p = th[kP];
  for (double v : x) {
    const ObsTerms t = observation_terms(th, v);
    // f_k / f for each component.
    const double r1 = std::exp(t.log_f1 - t.log_f);
    const double r2 = std::exp(t.log_f2 - t.log_f);
    const double w1 = p * r1;
    const double w2 = (1.0 - p) * r2;
    const double z1 = std::log(v / th[kBeta1]);
    const double z2 = std::log(v / th[kBeta2]);
    const double u1 = std::exp(th[kAlpha1] * z1);
    const double u2 = std::exp(th[kAlpha2] * z2);
    if (w1 > 0.0) {
      g[kAlpha1] += w1 * (1.0 / th[kAlpha1] + z1 * (1.0 - u1));
      g[kBeta1] += w1 * (th[kAlpha1] / th[kBeta1]) * (u1 - 1.0);
    }
    if (w2 > 0.0) {
      g[kAlpha2] += w2 * (1.0 / th[kAlpha2] + z2 * (1.0 - u2));
      g[kBeta2] += w2 * (th[kAlpha2] / th[kBeta2]) * (u2 - 1.0);
    }
    g[kP] += r1 - r2;
  }
  return g;
}

Matrix5d hessian_at(const MixtureParams& theta, const Sample& sample) {
  if (!theta.interior()) {
    throw DomainError("hessian_at: theta must satisfy 0 < p < 1");
  }
  const ParamVector& th = theta.vector();
  Matrix5d h;
  for (int j = 0; j < kNumParams; ++j) {
    double step = std::max(1e-5, 1e-5 * std::abs(th[j]));
    if (j == kP) step = std::min({step, 0.5 * th[kP], 0.5 * (1.0 - th[kP])});
    ParamVector up = th, dn = th;
    up[j] += step;
    dn[j] -= step;
    h.col(j) = (log_likelihood_gradient(up, sample.values()) -
                log_likelihood_gradient(dn, sample.values())) /
               (2.0 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
  if (!h.allFinite()) {
    throw NonFinite("hessian_at: non-finite Hessian entry at " +
                    theta.to_string());
  }
  return h;
}

FitResult fit_mle(const Sample& sample, const FitConfig& config) {
  if (sample.size() < kMinFitObservations) {
    std::ostringstream os;
    os << "fit_mle: need at least " << kMinFitObservations
       << " observations, got " << sample.size();
    throw TooFewObservations(os.str());
  }
  if (!(config.tolerance > 0.0) || config.max_iterations < 1 ||
      config.n_starts < 1) {
    throw DomainError("fit_mle: invalid FitConfig");
  }
  const auto x = sample.values();

  FitResult result;
  int best = -1;
  const auto starts = starting_points(x, config);
  for (const auto& init : starts) {
    StartOutcome out = optimize_start(x, init, config);
    if (out.disqualified) {
      ++result.n_disqualified;
    } else {
      result.best_of_likelihoods.push_back(out.log_likelihood);
      if (best < 0 ||
          out.log_likelihood > result.starts[best].log_likelihood) {
        best = static_cast<int>(result.starts.size());
      }
    }
    result.starts.push_back(out);
  }
  result.n_starts_used = static_cast<int>(starts.size());
  if (best < 0) {
    std::ostringstream os;
    os << "fit_mle: all " << starts.size()
       << " starts diverged or reached the parameter boundary";
    throw AllStartsFailed(os.str());
  }

  const StartOutcome& chosen = result.starts[best];
  result.theta_hat = MixtureParams::from_vector(chosen.final);
  result.log_likelihood = chosen.log_likelihood;
  result.gradient_max_norm = max_abs(
      log_likelihood_gradient(result.theta_hat.vector(), x));
  result.converged =
      result.gradient_max_norm < config.tolerance * static_cast<double>(x.size());
  result.near_boundary =
      result.theta_hat.p() < 0.05 || result.theta_hat.p() > 0.95;
  {
    std::vector<double> log_x(x.size());
    std::transform(x.begin(), x.end(), log_x.begin(),
                   [](double v) { return std::log(v); });
    const std::vector<double> ones(x.size(), 1.0);
    double alpha = 1.0, beta = 1.0;
    if (weighted_weibull_mle(log_x, ones, alpha, beta)) {
      double ll = 0.0;
      for (double v : x) ll += weibull_log_pdf(v, alpha, beta);
      result.single_weibull_log_likelihood = ll;
    }
  }
  result.hessian = hessian_at(result.theta_hat, sample);
  Eigen::LLT<Matrix5d> llt(-result.hessian);
  result.hessian_negative_definite = llt.info() == Eigen::Success;
  return result;
}

}  // namespace wmgof
