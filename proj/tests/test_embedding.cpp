#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "ankle/embedding.hpp"
#include "ankle/neighbors.hpp"

using namespace ankle;

namespace {

std::vector<double> sine(std::size_t n, double period, double phase = 0.1) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period + phase);
  return x;
}

std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

// Independent AMI: bins from an explicit value sort, joint counts in
// a map, information in nats converted to bits.
std::vector<double> ami_oracle(const std::vector<double>& x, std::size_t max_lag, std::size_t bins) {
  const std::size_t n = x.size();
  std::vector<std::pair<double, std::size_t>> sorted;
  for (std::size_t i = 0; i < n; ++i) sorted.emplace_back(x[i], i);
  std::sort(sorted.begin(), sorted.end());
  // Equal values take the bin of their mid-rank.
  std::map<double, std::pair<double, double>> rank_span;
  for (std::size_t r = 0; r < n; ++r) {
    auto [it, fresh] = rank_span.try_emplace(sorted[r].first, r, r);
    it->second.second = static_cast<double>(r);
  }
  std::vector<std::size_t> bin(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = rank_span[x[i]];
    const double mid = 0.5 * (lo + hi);
    bin[i] = std::min(bins - 1, static_cast<std::size_t>(std::floor((mid + 0.5) * bins / static_cast<double>(n))));
  }
  std::vector<double> out;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> pa, pb;
    const std::size_t m = n - lag;
    for (std::size_t t = 0; t < m; ++t) {
      joint[{bin[t], bin[t + lag]}] += 1.0;
      pa[bin[t]] += 1.0;
      pb[bin[t + lag]] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [k, c] : joint)
      mi += c / m * std::log(c * m / (pa[k.first] * pb[k.second]));
    out.push_back(mi / std::log(2.0));
  }
  return out;
}

// Exhaustive FNN fraction with the same Kennel criteria.
double fnn_oracle(const std::vector<double>& x, std::size_t tau, std::size_t d, double r_tol,
                  double a_tol, std::size_t exclusion) {
  const std::size_t count = x.size() - d * tau;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double r_a = std::sqrt(var / static_cast<double>(x.size() - 1));
  std::size_t tested = 0, bad = 0;
  for (std::size_t i = 0; i < count; ++i) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < count; ++j) {
      if ((i > j ? i - j : j - i) <= exclusion) continue;
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) r2 += std::pow(x[i + k * tau] - x[j + k * tau], 2);
      if (r2 < best) {
        best = r2;
        arg = j;
      }
    }
    if (!std::isfinite(best)) continue;
    ++tested;
    const double extra = std::abs(x[i + d * tau] - x[arg + d * tau]);
    const double r = std::max(std::sqrt(best), 1e-10 * r_a);
    if (extra / r > r_tol || std::sqrt(best + extra * extra) / r_a > a_tol) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(tested);
}

}  // namespace

// ---------------------------------------------------------------------------
// Delay embedding
// ---------------------------------------------------------------------------

TEST(DelayEmbed, DimensionOneIsTheSeries) {
  const std::vector<double> x{3.0, -1.0, 4.0, 1.5};
  const auto att = delay_embed(x, {1, 1});
  ASSERT_EQ(att.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(att.point(i)[0], x[i]);
}

TEST(DelayEmbed, SmallExample) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const auto att = delay_embed(x, {2, 2});
  ASSERT_EQ(att.size(), 4u);
  const double expect[4][2] = {{1, 3}, {2, 4}, {3, 5}, {4, 6}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(att.point(i)[0], expect[i][0]);
    EXPECT_EQ(att.point(i)[1], expect[i][1]);
  }
}

TEST(DelayEmbed, CountFormula) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng() % 300;
    const std::size_t tau = 1 + rng() % 8;
    const std::size_t dim = 1 + rng() % 6;
    const std::vector<double> x(n, 1.0);
    if (n <= (dim - 1) * tau) {
      EXPECT_THROW(delay_embed(x, {tau, dim}), Error);
      continue;
    }
    const auto att = delay_embed(x, {tau, dim});
    EXPECT_EQ(att.size(), n - (dim - 1) * tau);
    EXPECT_EQ(att.dim(), dim);
  }
}

TEST(DelayEmbed, TooShortAndInvalid) {
  const std::vector<double> x{1, 2, 3};
  try {
    delay_embed(x, {2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooShort);
  }
  EXPECT_THROW(delay_embed(x, {0, 2}), Error);
}

// ---------------------------------------------------------------------------
// Nearest neighbours
// ---------------------------------------------------------------------------

TEST(Neighbors, MatchExhaustiveSearch) {
  const auto flat = uniform_noise(3 * 400, 8);
  for (std::size_t exclusion : {0u, 5u, 40u}) {
    const auto nn = nearest_neighbors(flat, 3, 400, 400, exclusion);
    for (std::size_t i = 0; i < 400; ++i) {
      double best = INFINITY;
      std::ptrdiff_t arg = -1;
      for (std::size_t j = 0; j < 400; ++j) {
        if ((i > j ? i - j : j - i) <= exclusion) continue;
        double d2 = 0.0;
        for (std::size_t k = 0; k < 3; ++k) d2 += std::pow(flat[i * 3 + k] - flat[j * 3 + k], 2);
        if (d2 < best) {
          best = d2;
          arg = static_cast<std::ptrdiff_t>(j);
        }
      }
      EXPECT_EQ(nn[i], arg) << "point " << i << " exclusion " << exclusion;
    }
  }
}

TEST(Neighbors, NoCandidateGivesMinusOne) {
  const std::vector<double> pts{0.0, 1.0, 2.0};
  const auto nn = nearest_neighbors(pts, 1, 3, 3, 5);
  for (auto v : nn) EXPECT_EQ(v, -1);
  EXPECT_THROW(nearest_neighbors(pts, kMaxEmbeddingDim + 1, 0, 0, 0), Error);
}

// ---------------------------------------------------------------------------
// Average mutual information
// ---------------------------------------------------------------------------

TEST(Ami, IndependentNoiseCarriesNoInformation) {
  const auto x = uniform_noise(100000, 1);
  const auto curve = ami_curve(x, 10);
  EXPECT_NEAR(curve[0], 5.0, 1e-9);  // log2 of 32 equiprobable bins
  for (std::size_t lag = 1; lag <= 10; ++lag) EXPECT_LT(curve[lag], 0.05) << lag;
  EXPECT_EQ(ami_delay(x, 10), 1u);
}

TEST(Ami, SineInformationIsLowestAtQuarterPeriod) {
  // Equiprobable bins cut a sine into equal phase arcs, so a noiseless sine
  // aliases against them; measurement noise smooths that out.
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    auto x = sine(15000, 100.0, 0.1 * static_cast<double>(seed));
    for (auto& v : x) v += 0.1 * n01(rng);
    const auto curve = ami_curve(x, 50);
    const auto deepest = std::min_element(curve.begin() + 1, curve.end()) - curve.begin();
    EXPECT_NEAR(static_cast<double>(deepest), 25.0, 2.0) << "seed " << seed;
    // The first minimum never lies past the deepest one.
    EXPECT_LE(ami_delay(x, 49), static_cast<std::size_t>(deepest));
  }
}

TEST(Ami, CurveMatchesBruteForceOracle) {
  for (const auto& x : {sine(6000, 100.0), sine(3000, 37.3, 0.7), uniform_noise(4000, 4)}) {
    const auto fast = ami_curve(x, 61);
    const auto slow = ami_oracle(x, 61, 32);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t lag = 0; lag < fast.size(); ++lag) EXPECT_NEAR(fast[lag], slow[lag], 1e-12) << lag;
  }
  // First local minimum on the dense grid.
  const auto x = sine(6000, 100.0);
  const auto slow = ami_oracle(x, 61, 32);
  std::size_t first = 0;
  for (std::size_t lag = 1; lag + 1 < slow.size(); ++lag)
    if (slow[lag] <= slow[lag + 1] + 1e-3 * slow[0]) {
      first = lag;
      break;
    }
  EXPECT_EQ(ami_delay(x, 60), first);
}

TEST(Ami, NoMinimumReported) {
  // A slowly decorrelating AR(1) process keeps losing information with lag.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> x(20000);
  double v = 0.0;
  for (auto& s : x) s = v = 0.99 * v + n01(rng);
  try {
    ami_delay(x, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoMinimum);
  }
}

TEST(Ami, RequiresTenTimesTheLag) {
  EXPECT_THROW(ami_curve(std::vector<double>(99, 0.0), 10), Error);
}

// ---------------------------------------------------------------------------
// False nearest neighbours
// ---------------------------------------------------------------------------

TEST(Fnn, SineEmbedsInTwoDimensions) {
  // An incommensurate period samples the whole orbit; with an integer period
  // the series only ever revisits the same finite set of points.
  const auto x = sine(4000, 100.0 + 1.0 / std::numbers::pi);
  const auto r = fnn_dimension(x, 25);
  EXPECT_EQ(r.dim, 2u);
  EXPECT_FALSE(r.saturated);
  EXPECT_GT(r.fractions[0], 0.1);  // a single coordinate folds the orbit
}

TEST(Fnn, FractionsMatchExhaustiveOracle) {
  const auto x = sine(1500, 97.3, 0.2);
  FnnParams p;
  for (std::size_t exclusion : {0u, 50u}) {
    p.exclusion = exclusion;
    for (std::size_t d = 1; d <= 3; ++d)
      EXPECT_DOUBLE_EQ(fnn_fraction(x, 24, d, p), fnn_oracle(x, 24, d, 15.0, 2.0, exclusion))
          << "d " << d << " exclusion " << exclusion;
  }
  const auto noise = uniform_noise(800, 6);
  for (std::size_t d = 1; d <= 4; ++d)
    EXPECT_DOUBLE_EQ(fnn_fraction(noise, 3, d, {}), fnn_oracle(noise, 3, d, 15.0, 2.0, 0)) << d;
}

TEST(Fnn, NoiseSaturates) {
  const auto x = uniform_noise(3000, 9);
  FnnParams p;
  p.max_dim = 6;
  const auto r = fnn_dimension(x, 1, p);
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.dim, 6u);
  for (double f : r.fractions) EXPECT_GE(f, p.threshold);
}

TEST(Embedding, AffineRescalingLeavesDelayAndDimensionUnchanged) {
  std::vector<double> x(8000);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / 100.0;
    x[i] = std::sin(t) + 0.4 * std::sin(2.0 * t + 0.5) + 0.02 * n01(rng);
  }
  const auto tau = ami_delay(x, 60);
  FnnParams p;
  p.exclusion = 100;
  const auto dim = fnn_dimension(x, tau, p).dim;
  for (auto [a, b] : {std::pair{3.7, -12.0}, {-2.0, 5.0}, {1e-3, 1e3}}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    EXPECT_EQ(ami_delay(y, 60), tau) << a;
    EXPECT_EQ(fnn_dimension(y, tau, p).dim, dim) << a;
  }
}
