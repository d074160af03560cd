#pragma once

#include <cstddef>
#include <vector>

namespace survkit::stats {

// Regularized lower incomplete gamma P(a, x), series for x < a+1 and
// continued fraction (modified Lentz) otherwise. Relative accuracy ~1e-14.
double gamma_p(double a, double x);

// Upper tail Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

// Standard normal upper tail; routed through gamma_q(1/2, z^2/2) so the
// whole p-value stack rests on one incomplete-gamma implementation.
double normal_sf(double z);
double normal_cdf(double z);

// Two-sided normal p-value for a z statistic.
double normal_two_sided_p(double z);

struct TestResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Kruskal-Wallis rank test across k groups (midranks for ties, tie
// correction applied); p from chi-square with k-1 df.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Pearson chi-square test of independence on an r x c count table.
TestResult chi_square_independence(const std::vector<std::vector<double>>& table);

// Type-7 quantile (linear interpolation between order statistics).
// q in [0,1]; input need not be sorted.
double quantile_type7(std::vector<double> values, double q);

double median(std::vector<double> values);

}  // namespace survkit::stats
