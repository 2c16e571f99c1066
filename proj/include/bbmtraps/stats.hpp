#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace bbmtraps {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need >= 2 samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stderr_of_mean(const std::vector<double>& xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

/// Binomial standard error sqrt(p(1-p)/n) for an empirical frequency.
inline double binomial_stderr(double p_hat, std::size_t n) {
  if (n == 0) throw std::invalid_argument("binomial_stderr: n == 0");
  return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(n));
}

inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

/// Kolmogorov limit distribution tail Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
inline double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

struct KsResult {
  double statistic;  // sup |F1 - F2|
  double p_value;    // asymptotic; conservative under discrete ties
};

/// One-sample KS against a reference CDF.
inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return {d, kolmogorov_tail(d * std::sqrt(n))};
}

/// Two-sample KS (ties handled by stepping both CDFs at equal values).
inline KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double en = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_tail(d * en)};
}

struct LineFit {
  double slope;
  double intercept;
  double slope_stderr;
};

/// Weighted least squares of y on x with weights 1/sigma_i^2.
inline LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& sigma) {
  if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
    throw std::invalid_argument("weighted_line_fit: bad input sizes");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = sigma[i] > 0 ? sigma[i] : 1e-12;
    const double w = 1.0 / (s * s);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const double denom = sw * swxx - swx * swx;
  if (denom <= 0) throw std::runtime_error("weighted_line_fit: degenerate abscissae");
  LineFit fit;
  fit.slope = (sw * swxy - swx * swy) / denom;
  fit.intercept = (swxx * swy - swx * swxy) / denom;
  fit.slope_stderr = std::sqrt(sw / denom);
  return fit;
}

}  // namespace bbmtraps
