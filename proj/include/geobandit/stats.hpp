#pragma once

#include <vector>

namespace geobandit {

struct MeanSe {
  double mean = 0;
  double se = 0;  // NaN when n < 2
  int n = 0;
};

MeanSe mean_se(const std::vector<double>& xs);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// CDF of Student's t with df degrees of freedom.
double student_cdf(double t, int df);

struct PairedT {
  double mean_diff = 0;
  double t = 0;
  int df = 0;
  double p = 1;  // two-sided
};

// Paired two-sided t-test on matched samples (a[i] - b[i]).
PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b);

// Holm step-down correction at level alpha; returns the rejection mask in
// the original order.
std::vector<bool> holm_reject(const std::vector<double>& pvals, double alpha);

}  // namespace geobandit
