#ifndef FHN_STATS_HPP
#define FHN_STATS_HPP

// Small statistics toolkit for the Monte Carlo diagnostics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fhn/errors.hpp"

namespace fhn {

struct MeanSe {
  double mean = 0;
  double se = 0;
  double sd = 0;
  std::size_t n = 0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  r.n = v.size();
  if (v.empty()) return r;
  double sum = 0;
  for (double x : v) sum += x;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
    r.se = r.sd / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_se = 0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "ols: need at least two matching points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "ols: x values are all equal");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) f.slope_se = std::sqrt(sse / (n - 2) / sxx);
  return f;
}

/// Empirical quantile with linear interpolation (type 7).
inline double quantile(std::vector<double> v, double q) {
  require(!v.empty(), "quantile: empty sample");
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Asymptotic Kolmogorov tail P(sqrt(n) D > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;
  double critical = 0;  // 5% level
  double p_value = 1;
  bool reject = false;
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = na * nb / (na + nb);
  r.critical = 1.358 / std::sqrt(ne);
  r.p_value = kolmogorov_tail((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d);
  r.reject = d > r.critical;
  return r;
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

/// One-sample test against N(mean, sd^2).
inline KsResult ks_normal(std::vector<double> a, double mean, double sd) {
  require(!a.empty() && sd > 0, "ks_normal: empty sample or nonpositive sd");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double F = normal_cdf(a[i], mean, sd);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  KsResult r;
  r.statistic = d;
  r.critical = 1.358 / std::sqrt(n);
  r.p_value = kolmogorov_tail((std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d);
  r.reject = d > r.critical;
  return r;
}

struct Histogram {
  double lo = 0;
  double width = 0;
  std::vector<double> mass;  // sums to 1

  double edge(std::size_t i) const { return lo + width * static_cast<double>(i); }
};

/// Histogram with Freedman-Diaconis bin width 2 IQR n^{-1/3}; a degenerate sample
/// gives a single bin.
inline Histogram histogram_fd(const std::vector<double>& v, std::size_t max_bins = 200) {
  require(!v.empty(), "histogram: empty sample");
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  Histogram h;
  h.lo = *mn;
  double span = *mx - *mn;
  double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double w = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(v.size()));
  std::size_t bins = 1;
  if (span > 0 && w > 0) bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(span / w)), 1, max_bins);
  h.width = span > 0 ? span / static_cast<double>(bins) : 1.0;
  if (span == 0) h.lo -= 0.5;
  h.mass.assign(bins, 0.0);
  for (double x : v) {
    auto i = static_cast<std::size_t>((x - h.lo) / h.width);
    h.mass[std::min(i, bins - 1)] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(v.size());
  return h;
}

}  // namespace fhn

#endif  // FHN_STATS_HPP
