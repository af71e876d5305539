#pragma once

/**
 * @file special_math.hpp
 * @brief Gamma-family special functions and adaptive Gauss-Kronrod quadrature.
 *
 * Only what the outage/capacity formulas need: the complete gamma function,
 * the regularized lower incomplete gamma for positive order, the upper
 * incomplete gamma for any real order, and quadrature on finite and
 * semi-infinite intervals.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace txcap {

struct QuadratureSpec {
  double relative_tolerance = 1e-10;
  double absolute_tolerance = 1e-14;
  std::size_t max_subdivisions = 2000;

  void validate() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0))
      throw std::invalid_argument("quadrature tolerances must be strictly positive");
    if (max_subdivisions < 1)
      throw std::invalid_argument("quadrature needs at least one subdivision");
  }
};

/// Quadrature or iteration that ran out of budget before meeting its tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double best_estimate, double achieved_error)
      : std::runtime_error(what + " (estimate " + std::to_string(best_estimate) + ", error " +
                           std::to_string(achieved_error) + ")"),
        best_estimate_(best_estimate),
        achieved_error_(achieved_error) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double best_estimate_;
  double achieved_error_;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067465620, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod21(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> f1{}, f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double pair = f1[j] + f2[j];
    kronrod += kKronrodWeights[j] * pair;
    abs_sum += kKronrodWeights[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(f_center - mean);
  for (int j = 0; j < 10; ++j)
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

  const double width = std::abs(half);
  const double result = kronrod * half;
  double err = std::abs((kronrod - gauss) * half);
  asc *= width;
  abs_sum *= width;
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kTiny = std::numeric_limits<double>::min();
  if (abs_sum > kTiny / (50.0 * kEps)) err = std::max(50.0 * kEps * abs_sum, err);
  return {a, b, result, err};
}

}  // namespace detail

/// Globally adaptive G10/K21 quadrature of f over [a, b].
template <class F>
QuadratureResult integrate_finite(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (a == b) return {};
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gauss_kronrod21(f, a, b));
  double total = heap.top().value;
  double total_err = heap.top().error;
  std::size_t subdivisions = 1;

  auto converged = [&] {
    return total_err <= std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total));
  };
  while (!converged()) {
    if (subdivisions >= spec.max_subdivisions)
      throw NonConvergenceError("adaptive quadrature exhausted its subdivision budget", total,
                                total_err);
    const detail::Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= std::min(worst.a, worst.b) || mid >= std::max(worst.a, worst.b))
      throw NonConvergenceError("adaptive quadrature hit roundoff on a tiny interval", total,
                                total_err);
    heap.pop();
    const auto left = detail::gauss_kronrod21(f, worst.a, mid);
    const auto right = detail::gauss_kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    // Re-sum occasionally so the running totals don't drift.
    if (subdivisions % 64 == 0) {
      auto copy = heap;
      total = 0.0;
      total_err = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_err += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, total_err, subdivisions};
}

/**
 * Integrates f over [lower, inf) with the substitution t = lower - ln(u),
 * u in (0, 1]. Integrands with an exp(-t) weight become bounded on (0, 1].
 */
template <class F>
QuadratureResult integrate_semi_infinite(const F& f, double lower, const QuadratureSpec& spec = {}) {
  auto mapped = [&](double u) {
    const double t = lower - std::log(u);
    const double value = f(t);
    return value == 0.0 ? 0.0 : value / u;
  };
  return integrate_finite(mapped, 0.0, 1.0, spec);
}

/// Gamma(a) for a > 0.
inline double gamma_fn(double a) {
  if (!(a > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
  return std::tgamma(a);
}

namespace detail {

inline bool is_integer(double a) { return std::isfinite(a) && a == std::floor(a); }

// P(a, x) by the power series, suited to x < a + 1.
inline double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// Gamma(a, x) by Legendre's continued fraction (modified Lentz). Any real a, x > 0.
inline double upper_gamma_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return std::exp(a * std::log(x) - x) * h;
  }
  throw NonConvergenceError("incomplete gamma continued fraction did not converge", 0.0, 0.0);
}

// (Gamma(1 + b) - 1) / b, accurate through b = 0.
inline double gamma1pm1_over(double b) {
  if (std::abs(b) > 1e-3) return (std::tgamma(1.0 + b) - 1.0) / b;
  constexpr double kZeta3 = 1.2020569031595942854;
  constexpr double kZeta4 = std::numbers::pi * std::numbers::pi * std::numbers::pi *
                            std::numbers::pi / 90.0;
  constexpr double kZeta2 = std::numbers::pi * std::numbers::pi / 6.0;
  const double log_gamma =
      b * (-std::numbers::egamma + b * (kZeta2 / 2.0 + b * (-kZeta3 / 3.0 + b * kZeta4 / 4.0)));
  if (b == 0.0) return -std::numbers::egamma;
  return std::expm1(log_gamma) / b;
}

// Gamma(b, x) for |b| <= 1/2 and 0 < x < 1, written so nothing blows up as b -> 0:
// Gamma(b, x) = (Gamma(1+b) - 1)/b - (x^b - 1)/b - x^b sum_{n>=1} (-x)^n / (n! (b+n)).
inline double upper_gamma_small_order(double b, double x) {
  const double log_x = std::log(x);
  const double power_term = (b == 0.0) ? log_x : std::expm1(b * log_x) / b;
  double term = 1.0;
  double tail = 0.0;
  for (int n = 1; n < 200; ++n) {
    term *= -x / n;
    const double add = term / (b + n);
    tail += add;
    if (std::abs(add) < 1e-17 * std::abs(tail)) break;
  }
  return gamma1pm1_over(b) - power_term - std::exp(b * log_x) * tail;
}

}  // namespace detail

/**
 * Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
 * Integer orders use the finite Poisson sum for x >= a and the series below it.
 */
inline double reg_lower_gamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("reg_lower_gamma: order must be positive");
  if (!(x >= 0.0)) throw std::domain_error("reg_lower_gamma: argument must be non-negative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a || (!detail::is_integer(a) && x < a + 1.0))
    return std::min(1.0, detail::lower_gamma_series(a, x));
  if (detail::is_integer(a) && a <= 170.0) {
    // Q(n, x) = e^{-x} sum_{k<n} x^k / k!
    double term = std::exp(-x);
    double sum = term;
    const int n = static_cast<int>(a);
    for (int k = 1; k < n; ++k) {
      term *= x / k;
      sum += term;
    }
    return std::clamp(1.0 - sum, 0.0, 1.0);
  }
  return std::clamp(1.0 - detail::upper_gamma_cf(a, x) / std::tgamma(a), 0.0, 1.0);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without the subtraction
/// when Q is the small side.
inline double reg_upper_gamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("reg_upper_gamma: order must be positive");
  if (!(x >= 0.0)) throw std::domain_error("reg_upper_gamma: argument must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - reg_lower_gamma(a, x);
  return detail::upper_gamma_cf(a, x) / std::tgamma(a);
}

/**
 * Upper incomplete gamma Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt for any real a.
 *
 * x >= 1 (or a > 1/2 with x >= a + 1) goes through the continued fraction.
 * Otherwise for a <= 1/2 the value is anchored at an order b in (-1/2, 1/2]
 * and carried down with Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a,
 * every division being by a number of magnitude >= 1/2.
 */
inline double upper_gamma_general(double a, double x) {
  if (std::isnan(a) || std::isnan(x)) throw std::domain_error("upper_gamma_general: NaN input");
  if (x < 0.0) throw std::domain_error("upper_gamma_general: argument must be non-negative");
  if (x == 0.0) {
    if (a > 0.0) return std::tgamma(a);
    throw std::domain_error("upper_gamma_general: integral diverges for a <= 0 at x = 0");
  }
  if (std::isinf(x)) return 0.0;
  if (a > 0.5) {
    if (x < a + 1.0) return std::tgamma(a) * (1.0 - detail::lower_gamma_series(a, x));
    return detail::upper_gamma_cf(a, x);
  }
  if (x >= 1.0) return detail::upper_gamma_cf(a, x);

  const int steps = std::max(0, static_cast<int>(std::ceil(-a - 0.5)));
  const double anchor = a + steps;
  double value = detail::upper_gamma_small_order(anchor, x);
  const double log_x = std::log(x);
  for (int k = 1; k <= steps; ++k) {
    const double order = anchor - k;
    value = (value - std::exp(order * log_x - x)) / order;
  }
  return value;
}

}  // namespace txcap
