#include "nesprindt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nesprindt {

namespace {

// Regularized lower incomplete gamma P(a, x) by power series; valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by modified Lentz continued fraction; valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_squared_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Chi2Stat pearson_chi2(const ContingencyTable& table) {
  const std::size_t r = table.size();
  std::array<std::int64_t, 2> col_sum{0, 0};
  std::int64_t n = 0;
  for (const auto& row : table) {
    col_sum[0] += row[0];
    col_sum[1] += row[1];
    n += row[0] + row[1];
  }
  const std::size_t c = (col_sum[0] > 0 ? 1 : 0) + (col_sum[1] > 0 ? 1 : 0);
  if (r < 2 || c < 2 || n == 0) return {0.0, 0.0};

  double stat = 0.0;
  for (const auto& row : table) {
    const double row_sum = static_cast<double>(row[0] + row[1]);
    for (int j = 0; j < 2; ++j) {
      const double expected = row_sum * static_cast<double>(col_sum[j]) / static_cast<double>(n);
      const double diff = static_cast<double>(row[j]) - expected;
      stat += diff * diff / expected;
    }
  }
  return {stat, static_cast<double>((r - 1) * (c - 1))};
}

namespace {

double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (std::int64_t i = 1; i <= k; ++i)
    result *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return result;
}

struct TableEnumerator {
  const std::vector<std::int64_t>& row_sums;
  double observed;
  double hit_weight = 0.0;
  double total_weight = 0.0;
  std::vector<std::int64_t> k;  // class-small count per level

  void recurse(std::size_t level, std::int64_t remaining, double weight) {
    if (level + 1 == row_sums.size()) {
      if (remaining < 0 || remaining > row_sums[level]) return;
      k[level] = remaining;
      finish(weight * binomial(row_sums[level], remaining));
      return;
    }
    std::int64_t tail_capacity = 0;
    for (std::size_t l = level + 1; l < row_sums.size(); ++l) tail_capacity += row_sums[l];
    const std::int64_t lo = std::max<std::int64_t>(0, remaining - tail_capacity);
    const std::int64_t hi = std::min(row_sums[level], remaining);
    for (std::int64_t v = lo; v <= hi; ++v) {
      k[level] = v;
      recurse(level + 1, remaining - v, weight * binomial(row_sums[level], v));
    }
  }

  void finish(double weight) {
    ContingencyTable t(row_sums.size());
    for (std::size_t l = 0; l < row_sums.size(); ++l) t[l] = {row_sums[l] - k[l], k[l]};
    total_weight += weight;
    if (pearson_chi2(t).statistic >= observed - 1e-9) hit_weight += weight;
  }
};

}  // namespace

double chi2_permutation_p(const ContingencyTable& table) {
  std::vector<std::int64_t> row_sums;
  std::int64_t col1 = 0;
  for (const auto& row : table) {
    row_sums.push_back(row[0] + row[1]);
    col1 += row[1];
  }
  const double observed = pearson_chi2(table).statistic;

  TableEnumerator e{row_sums, observed, 0.0, 0.0, {}};
  e.k.resize(row_sums.size());
  e.recurse(0, col1, 1.0);
  if (e.total_weight <= 0.0) return 1.0;
  return e.hit_weight / e.total_weight;
}

double rank_sum_exact_two_sided(std::int64_t w, std::size_t n1, std::size_t n2) {
  const std::size_t n = n1 + n2;
  const std::size_t max_sum = n1 * n;
  // dist[k][s] = number of k-subsets of {1..n} with rank sum s. Counts stay
  // well inside double precision for n <= ~40.
  std::vector<std::vector<double>> dist(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
  dist[0][0] = 1.0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    for (std::size_t k = std::min(rank, n1); k >= 1; --k) {
      auto& row = dist[k];
      const auto& prev = dist[k - 1];
      for (std::size_t s = max_sum; s >= rank; --s) row[s] += prev[s - rank];
    }
  }

  // Work with 2*(W - mu) to stay integral: mu = n1 (n+1) / 2.
  const std::int64_t two_mu = static_cast<std::int64_t>(n1) * static_cast<std::int64_t>(n + 1);
  const std::int64_t observed_dev = std::llabs(2 * w - two_mu);
  double hits = 0.0, total = 0.0;
  for (std::size_t s = 0; s <= max_sum; ++s) {
    const double count = dist[n1][s];
    if (count == 0.0) continue;
    total += count;
    if (std::llabs(2 * static_cast<std::int64_t>(s) - two_mu) >= observed_dev) hits += count;
  }
  return hits / total;
}

RankSumStat rank_sum_test(const std::vector<double>& values, const std::vector<bool>& in_first,
                          std::size_t exact_limit) {
  const std::size_t n = values.size();
  std::size_t n1 = 0;
  for (bool b : in_first) n1 += b;
  const std::size_t n2 = n - n1;
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("rank_sum_test: a group is empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Midranks; collect tie-group sizes for the variance correction.
  std::vector<double> rank(n);
  double tie_term = 0.0;
  bool any_ties = false;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
    const double ties = static_cast<double>(j - i + 1);
    if (ties > 1.0) {
      any_ties = true;
      tie_term += ties * ties * ties - ties;
    }
    i = j + 1;
  }

  double w = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx)
    if (in_first[idx]) w += rank[idx];

  RankSumStat result;
  const double dn = static_cast<double>(n);
  const double mu = static_cast<double>(n1) * (dn + 1.0) / 2.0;
  double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
               ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    // every value identical
    result.constant = true;
    result.statistic = 0.0;
    result.p = 1.0;
    return result;
  }
  const double sigma = std::sqrt(var);
  result.statistic = std::fabs(w - mu) / sigma;

  if (!any_ties && n <= exact_limit) {
    result.exact = true;
    result.p = rank_sum_exact_two_sided(static_cast<std::int64_t>(std::llround(w)), n1, n2);
  } else {
    const double z = std::max(0.0, std::fabs(w - mu) - 0.5) / sigma;
    result.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
  }
  return result;
}

}  // namespace nesprindt
