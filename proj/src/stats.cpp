#include "rbsh/stats.hpp"

#include <cmath>
#include <limits>

#include "rbsh/types.hpp"

namespace rbsh::stats {

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  const double eps = 3e-12, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < eps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  check_numeric(a > 0 && b > 0, "incomplete_beta: parameters must be positive");
  check_numeric(x >= 0 && x <= 1, "incomplete_beta: x outside [0,1]");
  if (x == 0) return 0;
  if (x == 1) return 1;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
  return 1 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      b * std::log1p(-x) + a * std::log(x)) *
                 betacf(b, a, 1 - x) / b;
}

PairedTTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  check_numeric(a.size() == b.size(), "paired_ttest: unequal sample sizes");
  check_numeric(a.size() >= 2, "paired_ttest: need at least 2 pairs");
  const std::size_t n = a.size();

  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= double(n);
  double var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= double(n - 1);

  PairedTTest r;
  r.n = n;
  r.mean_diff = mean;
  if (var == 0) {
    r.t = mean == 0 ? 0 : std::numeric_limits<double>::infinity();
    r.p = mean == 0 ? 1 : 0;
    return r;
  }
  r.t = mean / std::sqrt(var / double(n));
  const double dof = double(n - 1);
  r.p = incomplete_beta(dof / 2, 0.5, dof / (dof + r.t * r.t));
  return r;
}

}  // namespace rbsh::stats
