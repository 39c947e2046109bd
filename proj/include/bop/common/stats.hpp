#pragma once

#include <cstdint>
#include <vector>

namespace bop::stats {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper-tail p-value of a chi-square statistic with `df` degrees of freedom.
double chi_square_pvalue(double stat, int df);

// Goodness-of-fit p-value for observed counts against a uniform expectation.
double chi_square_uniform_gof(const std::vector<std::uint64_t>& counts);

double normal_cdf(double z);

struct MannWhitneyResult {
  double u1 = 0.0;      // U statistic of sample a
  double z = 0.0;       // normal approximation with tie correction
  double p_less = 1.0;  // one-sided p for H1: a stochastically smaller than b
};

MannWhitneyResult mann_whitney_one_sided(const std::vector<double>& a,
                                         const std::vector<double>& b);

double median(std::vector<double> values);

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

AffineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bop::stats
