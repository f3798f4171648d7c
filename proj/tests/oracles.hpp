#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance run: exhaustive searches and enumerations, no shared code with
// the library beyond rank assignment.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ankle/stats.hpp"

namespace oracle {

using namespace ankle;

std::vector<double> henon_points(std::size_t n) {
  std::vector<double> pts;
  double x = 0.1, y = 0.3;
  for (std::size_t i = 0; i < 100 + n; ++i) {
    const double nx = 1.0 - 1.4 * x * x + y;
    y = 0.3 * x;
    x = nx;
    if (i >= 100) {
      pts.push_back(x);
      pts.push_back(y);
    }
  }
  return pts;
}

// Exhaustive Rosenstein curve: every admissible pair, direct averaging.
std::vector<double> divergence_oracle(const std::vector<double>& pts, std::size_t dim,
                                      std::size_t horizon, std::size_t theiler) {
  const std::size_t m = pts.size() / dim;
  const std::size_t usable = m - horizon + 1;
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += std::pow(pts[a * dim + k] - pts[b * dim + k], 2);
    return std::sqrt(s);
  };
  double centroid[8] = {};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i * dim + k] / static_cast<double>(m);
  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) spread += std::pow(pts[i * dim + k] - centroid[k], 2);
  const double floor = 1e-10 * std::sqrt(spread / static_cast<double>(m));

  std::vector<double> curve(horizon, 0.0);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < usable; ++i) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < usable; ++j) {
      if ((i > j ? i - j : j - i) <= theiler) continue;
      const double d = dist(i, j);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    if (!std::isfinite(best)) continue;
    ++pairs;
    for (std::size_t k = 0; k < horizon; ++k) curve[k] += std::log(std::max(dist(i + k, arg + k), floor));
  }
  for (auto& c : curve) c /= static_cast<double>(pairs);
  return curve;
}

// Two-sided p by listing every split of the pooled mid-ranks.
double exhaustive_p(const std::vector<double>& a, const std::vector<double>& b) {
  const auto rank = pooled_ranks(a, b);
  const std::size_t n = rank.size(), na = a.size();
  double observed = 0.0;
  for (std::size_t i = 0; i < na; ++i) observed += rank[i];
  std::size_t le = 0, ge = 0, all = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += rank[i];
    ++all;
    if (s <= observed + 1e-9) ++le;
    if (s >= observed - 1e-9) ++ge;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(all));
}

double shuffled_p(const std::vector<double>& a, const std::vector<double>& b, std::size_t rounds) {
  auto rank = pooled_ranks(a, b);
  const std::size_t na = a.size();
  const double expected = static_cast<double>(na) * static_cast<double>(rank.size() + 1) / 2.0;
  double observed = 0.0;
  for (std::size_t i = 0; i < na; ++i) observed += rank[i];
  const double dev = std::abs(observed - expected);
  std::mt19937_64 rng(7);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    std::shuffle(rank.begin(), rank.end(), rng);
    double s = 0.0;
    for (std::size_t i = 0; i < na; ++i) s += rank[i];
    if (std::abs(s - expected) >= dev - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(rounds);
}

// Brute-force margin: every frame of the cycle, no shared code with the scan.
double margin_oracle(const std::vector<double>& xc, const std::vector<double>& cop,
                     const std::vector<char>& stance, std::size_t lo, std::size_t hi, bool smallest) {
  double best = smallest ? INFINITY : -INFINITY;
  for (std::size_t i = lo; i < hi; ++i)
    if (stance[i]) best = smallest ? std::min(best, std::abs(cop[i] - xc[i])) : std::max(best, std::abs(cop[i] - xc[i]));
  return best;
}

}  // namespace oracle
