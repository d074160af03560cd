#include "survkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace survkit::stats {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Series expansion of P(a, x), valid/fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) by modified Lentz, valid/fast for x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::domain_error("gamma_p: a must be positive");
    if (x < 0.0) throw std::domain_error("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0) throw std::domain_error("gamma_q: a must be positive");
    if (x < 0.0) throw std::domain_error("gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, double df) {
    if (df <= 0.0) throw std::domain_error("chi_square_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    return gamma_q(df / 2.0, x / 2.0);
}

double normal_sf(double z) {
    // erfc(|z|/sqrt(2)) = Q(1/2, z^2/2)
    double tail = 0.5 * gamma_q(0.5, z * z / 2.0);
    return z >= 0.0 ? tail : 1.0 - tail;
}

double normal_cdf(double z) { return 1.0 - normal_sf(z); }

double normal_two_sided_p(double z) {
    if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
    return gamma_q(0.5, z * z / 2.0);
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    std::size_t k = groups.size();
    if (k < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");

    std::vector<std::pair<double, std::size_t>> pooled;  // (value, group)
    for (std::size_t g = 0; g < k; ++g) {
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    std::size_t n = pooled.size();
    if (n < 2) throw std::invalid_argument("kruskal_wallis: too few observations");
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Midranks; accumulate the tie correction sum(t^3 - t) on the fly.
    std::vector<double> rank_sum(k, 0.0);
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        double t = static_cast<double>(j - i);
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t m = i; m < j; ++m) rank_sum[pooled[m].second] += midrank;
        if (t > 1.0) tie_sum += t * t * t - t;
        i = j;
    }

    double nn = static_cast<double>(n);
    double h = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        double ng = static_cast<double>(groups[g].size());
        if (ng == 0.0) throw std::invalid_argument("kruskal_wallis: empty group");
        h += rank_sum[g] * rank_sum[g] / ng;
    }
    h = 12.0 / (nn * (nn + 1.0)) * h - 3.0 * (nn + 1.0);

    double correction = 1.0 - tie_sum / (nn * nn * nn - nn);
    if (correction <= 0.0) {
        // every pooled value identical: no evidence against the null
        return {0.0, static_cast<double>(k - 1), 1.0};
    }
    h /= correction;
    if (h < 0.0) h = 0.0;

    TestResult r;
    r.statistic = h;
    r.df = static_cast<double>(k - 1);
    r.p_value = chi_square_sf(h, r.df);
    return r;
}

TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
    std::size_t rows = table.size();
    if (rows < 2) throw std::invalid_argument("chi_square_independence: need >= 2 rows");
    std::size_t cols = table[0].size();
    if (cols < 2) throw std::invalid_argument("chi_square_independence: need >= 2 cols");

    std::vector<double> row_tot(rows, 0.0), col_tot(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (table[r].size() != cols)
            throw std::invalid_argument("chi_square_independence: ragged table");
        for (std::size_t c = 0; c < cols; ++c) {
            row_tot[r] += table[r][c];
            col_tot[c] += table[r][c];
            total += table[r][c];
        }
    }
    if (total <= 0.0) throw std::invalid_argument("chi_square_independence: empty table");

    double stat = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double expected = row_tot[r] * col_tot[c] / total;
            if (expected > 0.0) {
                double d = table[r][c] - expected;
                stat += d * d / expected;
            }
        }
    }
    TestResult res;
    res.statistic = stat;
    res.df = static_cast<double>((rows - 1) * (cols - 1));
    res.p_value = chi_square_sf(stat, res.df);
    return res;
}

double quantile_type7(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile_type7: empty input");
    if (q < 0.0 || q > 1.0) throw std::domain_error("quantile_type7: q outside [0,1]");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = static_cast<std::size_t>(std::ceil(h));
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile_type7(std::move(values), 0.5); }

}  // namespace survkit::stats
