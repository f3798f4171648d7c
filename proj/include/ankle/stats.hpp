#pragma once

// Divergence-exponent differences and the Wilcoxon rank-sum test.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ankle/error.hpp"

namespace ankle {

/// Change relative to the tibia controller; negative means more stable.
inline double delta_lambda(double lambda, double lambda_tc) { return lambda - lambda_tc; }

struct RankSumResult {
  double p_value = 1.0;
  bool significant = false;
  bool exact = false;
  double statistic = 0.0;  // rank sum of the first sample
};

/// Mid-ranks (1-based) of the pooled samples, first sample first.
inline std::vector<double> pooled_ranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });
  std::vector<double> rank(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  return rank;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Two-sided test. Exact null distribution of the rank sum (mid-ranks kept,
/// so ties are handled) when both samples have at most `exact_limit` values;
/// otherwise the normal approximation with tie and continuity corrections.
inline RankSumResult wilcoxon_ranksum(std::span<const double> a, std::span<const double> b,
                                      double alpha = 0.01, std::size_t exact_limit = 20) {
  require(!a.empty() && !b.empty(), ErrorKind::InvalidParameter, "both samples must be non-empty");
  for (double v : a) require(std::isfinite(v), ErrorKind::InvalidParameter, "non-finite sample");
  for (double v : b) require(std::isfinite(v), ErrorKind::InvalidParameter, "non-finite sample");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  const auto rank = pooled_ranks(a, b);

  RankSumResult r;
  for (std::size_t i = 0; i < na; ++i) r.statistic += rank[i];
  if (std::all_of(rank.begin(), rank.end(), [&](double x) { return x == rank.front(); })) {
    r.p_value = 1.0;
    return r;
  }

  if (na <= exact_limit && nb <= exact_limit) {
    // Doubled mid-ranks are integers; count subsets of size na by sum.
    std::vector<std::size_t> twice(n);
    std::size_t total_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      twice[i] = static_cast<std::size_t>(std::lround(2.0 * rank[i]));
      total_sum += twice[i];
    }
    std::vector<std::vector<double>> count(na + 1, std::vector<double>(total_sum + 1, 0.0));
    count[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = std::min(i + 1, na); k >= 1; --k)
        for (std::size_t s = total_sum; s >= twice[i]; --s) {
          count[k][s] += count[k - 1][s - twice[i]];
          if (s == twice[i]) break;
        }
    const auto observed = static_cast<std::size_t>(std::lround(2.0 * r.statistic));
    double le = 0.0, ge = 0.0, all = 0.0;
    for (std::size_t s = 0; s <= total_sum; ++s) {
      all += count[na][s];
      if (s <= observed) le += count[na][s];
      if (s >= observed) ge += count[na][s];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / all);
    r.exact = true;
  } else {
    double tie_term = 0.0;
    std::vector<double> sorted(rank);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
    const double dn = static_cast<double>(n);
    const double mu = static_cast<double>(na) * (dn + 1.0) / 2.0;
    const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                       ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    const double dev = std::max(0.0, std::abs(r.statistic - mu) - 0.5);
    r.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(dev / std::sqrt(var))));
  }
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace ankle
