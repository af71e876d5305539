#pragma once

// Small statistics helpers shared by the simulator, experiments and checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace txcap {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval for k successes in n trials.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.low = 0.0;
  if (successes == trials) ci.high = 1.0;
  ci.low = std::min(ci.low, p);
  ci.high = std::max(ci.high, p);
  return ci;
}

/// Two-sided one-sample Kolmogorov-Smirnov distance.
template <class Cdf>
double ks_statistic(std::vector<double> samples, const Cdf& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return worst;
}

/// Asymptotic KS rejection threshold at significance level `level`.
inline double ks_critical_value(std::size_t n, double level = 0.01) {
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Weighted pool-adjacent-violators fit: the nondecreasing sequence closest in weighted L2.
inline std::vector<double> isotonic_regression(std::span<const double> values,
                                               std::span<const double> weights) {
  if (values.size() != weights.size())
    throw std::invalid_argument("isotonic_regression: size mismatch");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = w > 0.0 ? (prev.mean * prev.weight + top.mean * top.weight) / w
                          : 0.5 * (prev.mean + top.mean);
      prev.weight = w;
      prev.count += top.count;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(values.size());
  for (const auto& b : blocks) fitted.insert(fitted.end(), b.count, b.mean);
  return fitted;
}

/// Running mean / variance with the fourth central moment for a variance standard error.
struct MomentAccumulator {
  std::vector<double> values;

  void add(double x) { values.push_back(x); }

  struct Summary {
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;
  };

  Summary summary() const {
    Summary s;
    const double n = static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
      const double dv = v - s.mean;
      const double sq = dv * dv;
      m2 += sq;
      m4 += sq * sq;
    }
    s.variance = m2 / (n - 1.0);
    const double pop_m2 = m2 / n;
    const double pop_m4 = m4 / n;
    s.mean_se = std::sqrt(s.variance / n);
    s.variance_se = std::sqrt(std::max(0.0, pop_m4 - pop_m2 * pop_m2) / n);
    return s;
  }
};

}  // namespace txcap
