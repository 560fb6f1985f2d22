#ifndef NESPRINDT_STATS_HPP
#define NESPRINDT_STATS_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace nesprindt {

// Upper tail of the chi-squared distribution, P(X >= x) with df degrees of freedom.
double chi_squared_tail(double x, double df);

double normal_cdf(double z);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// One row per level: {class-large count, class-small count}. Rows with zero
// total must be dropped by the caller.
using ContingencyTable = std::vector<std::array<std::int64_t, 2>>;

struct Chi2Stat {
  double statistic = 0.0;
  double df = 0.0;
};
Chi2Stat pearson_chi2(const ContingencyTable& table);

// Exact permutation p-value of the Pearson statistic under fixed margins,
// P(chi2 >= observed), computed by enumerating all reachable tables weighted
// multivariate-hypergeometrically. Intended for small n (the pipeline uses it
// for nodes with n <= 16).
double chi2_permutation_p(const ContingencyTable& table);

struct RankSumStat {
  double statistic = 0.0;  // |W - mu| / sigma, tie-corrected
  double p = 1.0;          // two-sided
  bool exact = false;
  bool constant = false;   // all values tied; p forced to 1
};

// Two-sample rank-sum test on values[i] grouped by in_first[i]. Exact null
// distribution (tie-free, n <= exact_limit) or normal approximation with tie
// and continuity correction.
RankSumStat rank_sum_test(const std::vector<double>& values, const std::vector<bool>& in_first,
                          std::size_t exact_limit = 24);

// Exact two-sided p for a tie-free rank sum w of n1 ranks out of {1..n1+n2}.
double rank_sum_exact_two_sided(std::int64_t w, std::size_t n1, std::size_t n2);

}  // namespace nesprindt

#endif
