#include <hdvar/theory_bounds.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hdvar {

namespace {

void check_weibull_sum_domain(double a, double b, int n) {
  require(a > 0.0 && a <= 1.0, "Weibull tail sums: need 0 < a <= 1");
  require(b > 0.0, "Weibull tail sums: need b > 0");
  require(n >= 1, "Weibull tail sums: need n >= 1");
}

// Integral bound on sum_{i > K} exp(-b i^a): int_K^inf exp(-b x^a) dx.
double integral_tail(double a, double b, double K) {
  return boost::math::tgamma(1.0 / a, b * std::pow(K, a)) / (a * std::pow(b, 1.0 / a));
}

// Terms exp(-b k^a) for k = n..K, with K large enough that the remaining tail
// is below 1e-17 of the retained mass.
std::vector<double> weibull_terms(double a, double b, int n) {
  std::vector<double> terms;
  double sum = 0.0;
  constexpr long kMaxTerms = 50'000'000;
  for (long k = n;; ++k) {
    const double t = std::exp(-b * std::pow(static_cast<double>(k), a));
    terms.push_back(t);
    sum += t;
    if (((k - n) & 1023) == 1023 || t < 1e-300) {
      if (t == 0.0 || integral_tail(a, b, static_cast<double>(k)) < 1e-17 * sum) break;
    }
    if (k - n > kMaxTerms) throw NumericalError("Weibull tail sum did not converge");
  }
  return terms;
}

}  // namespace

double l2_error_bound(double lambda, double r_q, double q, double sigma_sq) {
  require(lambda >= 0.0 && r_q >= 0.0 && sigma_sq > 0.0, "l2_error_bound: need lambda, R_q >= 0 and sigma^2 > 0");
  require(q >= 0.0 && q < 1.0, "l2_error_bound: q must be in [0, 1)");
  return (44.0 + 2.0 * lambda) * r_q * std::pow(lambda / sigma_sq, 2.0 - q);
}

double prediction_error_bound(double lambda, double beta_star_l1) {
  require(lambda >= 0.0 && beta_star_l1 >= 0.0, "prediction_error_bound: inputs must be nonnegative");
  return 12.0 * beta_star_l1 * lambda;
}

double martingale_tail_bound(int n, int T, double x, double M, double alpha, double tau) {
  require(n >= 1 && T >= 1 && x > 0.0 && M > 0.0 && alpha > 0.0 && tau > 0.0,
          "martingale_tail_bound: inputs must be positive");
  const double tt = T;
  return 2.0 * n * std::exp(-tt * x * x / (2.0 * M * M + x * M)) +
         8.0 * n * tt * std::exp(-std::pow(M / tau, alpha));
}

MartingaleBound martingale_tail_bound_best(int n, int T, double x, double alpha, double tau) {
  auto f = [&](double logm) { return martingale_tail_bound(n, T, x, std::exp(logm), alpha, tau); };
  const double lo0 = std::log(tau) - 10.0;
  const double hi0 = std::log(tau) + 10.0;
  constexpr int kGrid = 400;
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= kGrid; ++g) {
    const double v = f(lo0 + (hi0 - lo0) * g / kGrid);
    if (v < best_v) {
      best_v = v;
      best = g;
    }
  }
  const double step = (hi0 - lo0) / kGrid;
  double lo = lo0 + step * std::max(0, best - 1);
  double hi = lo0 + step * std::min(kGrid, best + 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (f(m1) < f(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double logm = 0.5 * (lo + hi);
  MartingaleBound out{f(logm), std::exp(logm)};
  if (best_v < out.value) out = {best_v, std::exp(lo0 + step * best)};
  return out;
}

MartingaleCorollary martingale_corollary(int n, int T, double x, double epsilon, double alpha, double tau) {
  require(n >= 1 && T >= 1 && x > 0.0 && epsilon > 0.0 && alpha > 0.0 && tau > 0.0,
          "martingale_corollary: inputs must be positive");
  MartingaleCorollary c;
  const double log_n = std::log(static_cast<double>(n));
  c.x_threshold = tau * std::pow(epsilon + log_n + std::log(static_cast<double>(T)), 1.0 / alpha) *
                  std::sqrt(epsilon + log_n) / std::sqrt(static_cast<double>(T));
  c.bound = 10.0 * std::exp(-epsilon);
  std::ostringstream why;
  const bool t_ok = T > epsilon + log_n;
  const bool x_ok = x > c.x_threshold;
  if (!t_ok) why << "T = " << T << " is not > eps + log n = " << epsilon + log_n << ". ";
  if (!x_ok) why << "x = " << x << " is not > " << c.x_threshold << ".";
  c.premises_hold = t_ok && x_ok;
  c.violation = why.str();
  return c;
}

double weibull_double_sum_bound(double a, double b, int n) {
  check_weibull_sum_domain(a, b, n);
  const double nn = n;
  return (2.0 + 1.0 / a) * nn * nn * std::exp(-2.0 * b * std::pow(nn, a));
}

double weibull_single_sum_bound(double a, double b, int n) {
  check_weibull_sum_domain(a, b, n);
  const double nn = n;
  return 2.0 * nn * std::exp(-b * std::pow(nn, a));
}

double weibull_single_sum_exact(double a, double b, int n) {
  check_weibull_sum_domain(a, b, n);
  const auto terms = weibull_terms(a, b, n);
  double sum = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) sum += *it;  // smallest first
  return sum;
}

double weibull_double_sum_exact(double a, double b, int n) {
  check_weibull_sum_domain(a, b, n);
  // sum_{i>=n} e_i * S_i with S_i = sum_{k>=i} e_k (inner index k = i + j).
  const auto terms = weibull_terms(a, b, n);
  double suffix = 0.0;
  double total = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    suffix += *it;
    total += *it * suffix;
  }
  return total;
}

TruncatedMoment truncated_moment(double p, double alpha, double c, double M) {
  require(p >= 1.0, "truncated_moment: p must be >= 1");
  require(alpha > 0.0 && c > 0.0 && M > 0.0, "truncated_moment: alpha, c and M must be positive");
  TruncatedMoment t;
  const double head = std::pow(M, p) * std::exp(-c * std::pow(M, alpha));
  t.lower = head;
  t.upper = (1.0 + p / alpha) * head;
  // E[X^p 1{X >= M}] = int_M^inf x^p f(x) dx with density f(x) = c alpha x^{alpha-1} e^{-c x^alpha}.
  boost::math::quadrature::exp_sinh<double> integrator;
  auto integrand = [&](double s) {
    const double x = M + s;
    // Log space: x^p alone overflows before the exponential underflows.
    return std::exp((p + alpha - 1.0) * std::log(x) + std::log(c * alpha) - c * std::pow(x, alpha));
  };
  double err = 0.0;
  t.exact = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-14, &err);
  return t;
}

}  // namespace hdvar
