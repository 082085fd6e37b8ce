#pragma once

// Shared test utilities: finite differences, chi-square tail, simple stats.

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace testsupport {

// Central finite difference of a scalar function along one coordinate.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h) {
  x[i] += h;
  const double fp = f(x);
  x[i] -= 2.0 * h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline double rel_error(double got, double want, double scale_floor = 1e-8) {
  return std::abs(got - want) / std::max(std::abs(want), scale_floor);
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Regularized upper incomplete gamma Q(s, x) by series/continued fraction;
// chi-square upper tail p-value = Q(k/2, x/2).
inline double gamma_q(double s, double x) {
  if (x < 0.0 || s <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  const double log_gamma = std::lgamma(s);
  if (x < s + 1.0) {
    // lower series
    double sum = 1.0 / s;
    double term = sum;
    for (int n = 1; n < 500; ++n) {
      term *= x / (s + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + s * std::log(x) - log_gamma);
    return 1.0 - p;
  }
  // continued fraction for Q
  double b = x + 1.0 - s;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + s * std::log(x) - log_gamma);
}

inline double chi2_pvalue(double stat, int dof) {
  return gamma_q(0.5 * dof, 0.5 * stat);
}

}  // namespace testsupport
