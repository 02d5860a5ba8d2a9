#include "geobandit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "geobandit/common.hpp"

namespace geobandit {

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  r.n = static_cast<int>(xs.size());
  if (r.n == 0) {
    r.mean = std::numeric_limits<double>::quiet_NaN();
    r.se = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / r.n;
  if (r.n < 2) {
    r.se = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double ss = 0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / (r.n - 1)) / std::sqrt(static_cast<double>(r.n));
  return r;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;
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
    if (std::abs(del - 1.0) < 10 * eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw ContractError("incomplete_beta: a, b must be positive");
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1) / (a + b + 2)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1 - x) / b;
}

double student_cdf(double t, int df) {
  if (df <= 0) throw ContractError("student_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0 ? 1.0 - tail : tail;
}

PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("paired_t: length mismatch");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw ContractError("paired_t: need at least two pairs");
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const MeanSe ms = mean_se(d);
  PairedT r;
  r.mean_diff = ms.mean;
  r.df = n - 1;
  if (ms.se == 0) {
    r.t = ms.mean == 0 ? 0 : std::copysign(std::numeric_limits<double>::infinity(), ms.mean);
    r.p = ms.mean == 0 ? 1 : 0;
    return r;
  }
  r.t = ms.mean / ms.se;
  // Two-sided: twice the upper tail of |t|.
  r.p = 2.0 * (1.0 - student_cdf(std::abs(r.t), r.df));
  return r;
}

std::vector<bool> holm_reject(const std::vector<double>& pvals, double alpha) {
  const int m = static_cast<int>(pvals.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return pvals[x] < pvals[y]; });
  std::vector<bool> reject(m, false);
  for (int k = 0; k < m; ++k) {
    const double threshold = alpha / (m - k);
    if (pvals[order[k]] <= threshold)
      reject[order[k]] = true;
    else
      break;  // step-down: the first failure blocks all larger p-values
  }
  return reject;
}

}  // namespace geobandit
