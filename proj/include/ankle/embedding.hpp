#pragma once

// Delay embedding and the two criteria used to choose its parameters:
// average mutual information for the lag, false nearest neighbours for the
// dimension.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ankle/error.hpp"
#include "ankle/neighbors.hpp"
#include "ankle/signal.hpp"

namespace ankle {

struct EmbeddingParams {
  std::size_t tau = 1;  // samples
  std::size_t dim = 2;
};

class Attractor {
 public:
  Attractor(std::vector<double> data, std::size_t dim, double samples_per_stride)
      : data_(std::move(data)), dim_(dim), sps_(samples_per_stride) {
    require(dim_ >= 1 && data_.size() % dim_ == 0, ErrorKind::InvalidParameter,
            "attractor data must hold whole points");
  }

  std::size_t size() const noexcept { return data_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double samples_per_stride() const noexcept { return sps_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> point(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

 private:
  std::vector<double> data_;
  std::size_t dim_;
  double sps_;
};

/// Point i is [s(i), s(i + tau), ..., s(i + (dim - 1) tau)].
inline Attractor delay_embed(std::span<const double> series, EmbeddingParams p,
                             double samples_per_stride = 100.0) {
  require(p.tau >= 1 && p.dim >= 1, ErrorKind::InvalidParameter, "tau and dim must be >= 1");
  const std::size_t span = (p.dim - 1) * p.tau;
  require(series.size() > span, ErrorKind::TooShort,
          "series too short for the requested embedding");
  const std::size_t count = series.size() - span;
  std::vector<double> data;
  data.reserve(count * p.dim);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < p.dim; ++k) data.push_back(series[i + k * p.tau]);
  return Attractor(std::move(data), p.dim, samples_per_stride);
}

// ---------------------------------------------------------------------------
// Average mutual information
// ---------------------------------------------------------------------------

namespace detail {

// Equiprobable bin of every sample: rank-based, so any increasing affine map
// of the series leaves the bins untouched. Equal values share the bin of
// their mid-rank; splitting them by time index would alias exactly periodic
// signals.
inline std::vector<std::size_t> quantile_bins(std::span<const double> x, std::size_t bins) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<std::size_t> bin(x.size());
  const double n = static_cast<double>(x.size());
  for (std::size_t r = 0; r < order.size();) {
    std::size_t e = r;
    while (e + 1 < order.size() && x[order[e + 1]] == x[order[r]]) ++e;
    const double mid = 0.5 * static_cast<double>(r + e);
    const auto b = std::min(bins - 1, static_cast<std::size_t>((mid + 0.5) * bins / n));
    for (std::size_t k = r; k <= e; ++k) bin[order[k]] = b;
    r = e + 1;
  }
  return bin;
}

inline double mutual_information(const std::vector<std::size_t>& bin, std::size_t lag,
                                 std::size_t bins) {
  const std::size_t n = bin.size() - lag;
  std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    joint[bin[t] * bins + bin[t + lag]] += 1.0;
    pa[bin[t]] += 1.0;
    pb[bin[t + lag]] += 1.0;
  }
  double mi = 0.0;
  const double total = static_cast<double>(n);
  for (std::size_t a = 0; a < bins; ++a)
    for (std::size_t b = 0; b < bins; ++b) {
      const double c = joint[a * bins + b];
      if (c > 0.0) mi += c / total * std::log2(c * total / (pa[a] * pb[b]));
    }
  return mi;
}

}  // namespace detail

/// AMI in bits for lags 0..max_lag.
inline std::vector<double> ami_curve(std::span<const double> x, std::size_t max_lag,
                                     std::size_t bins = 32) {
  require(bins >= 2, ErrorKind::InvalidParameter, "need at least two bins");
  require(max_lag >= 1 && x.size() >= 10 * max_lag, ErrorKind::TooShort,
          "series must be at least 10x the largest lag");
  const auto bin = detail::quantile_bins(x, bins);
  std::vector<double> curve(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag)
    curve[lag] = detail::mutual_information(bin, lag, bins);
  return curve;
}

/// First lag whose AMI is not exceeded by the next lag's by more than
/// `flat_tol` of the lag-0 information, i.e. the first local minimum with
/// estimation noise on an already-flat curve ignored.
inline std::size_t ami_delay(std::span<const double> x, std::size_t max_lag,
                             std::size_t bins = 32, double flat_tol = 1e-3) {
  const auto curve = ami_curve(x, max_lag + 1, bins);
  const double tol = flat_tol * curve[0];
  for (std::size_t lag = 1; lag <= max_lag; ++lag)
    if (curve[lag] <= curve[lag + 1] + tol) return lag;
  throw Error(ErrorKind::NoMinimum,
              "no AMI minimum within " + std::to_string(max_lag) + " lags");
}

// ---------------------------------------------------------------------------
// False nearest neighbours
// ---------------------------------------------------------------------------

// Neighbour distances below this fraction of the series' spread count as
// coincident.
inline constexpr double kFnnDistanceFloor = 1e-10;

struct FnnParams {
  std::size_t max_dim = 10;
  double r_tol = 15.0;
  double a_tol = 2.0;
  double threshold = 0.01;
  std::size_t exclusion = 0;  // temporal neighbours skipped, samples
};

struct FnnResult {
  std::size_t dim = 0;
  bool saturated = false;
  std::vector<double> fractions;  // index d-1 holds the fraction for dimension d
};

/// Fraction of nearest neighbours in d dimensions that separate when the
/// (d+1)-th coordinate is added (relative jump above r_tol, or the new
/// distance above a_tol attractor sizes).
inline double fnn_fraction(std::span<const double> x, std::size_t tau, std::size_t d,
                           const FnnParams& p) {
  require(x.size() > d * tau + 1, ErrorKind::TooShort, "series too short for FNN at this dimension");
  const std::size_t count = x.size() - d * tau;
  std::vector<double> pts;
  pts.reserve(count * d);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < d; ++k) pts.push_back(x[i + k * tau]);
  const auto nn = nearest_neighbors(pts, d, count, count, p.exclusion);

  const double r_a = stddev(x);
  const double floor = r_a > 0.0 ? kFnnDistanceFloor * r_a : kFnnDistanceFloor;
  std::size_t tested = 0, false_nn = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (nn[i] < 0) continue;
    const auto j = static_cast<std::size_t>(nn[i]);
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = pts[i * d + k] - pts[j * d + k];
      r2 += diff * diff;
    }
    const double extra = std::abs(x[i + d * tau] - x[j + d * tau]);
    // Exact repeats (a periodic signal revisiting a point) differ only by
    // rounding; the floor keeps their ratio from being noise over noise.
    const double r = std::max(std::sqrt(r2), floor);
    ++tested;
    if (extra / r > p.r_tol || (r_a > 0.0 && std::sqrt(r2 + extra * extra) / r_a > p.a_tol))
      ++false_nn;
  }
  require(tested > 0, ErrorKind::InsufficientData, "no neighbour pairs for FNN");
  return static_cast<double>(false_nn) / static_cast<double>(tested);
}

inline FnnResult fnn_dimension(std::span<const double> x, std::size_t tau, const FnnParams& p = {}) {
  require(tau >= 1, ErrorKind::InvalidParameter, "tau must be >= 1");
  require(p.max_dim >= 1 && p.max_dim < kMaxEmbeddingDim, ErrorKind::InvalidParameter,
          "max_dim must lie in [1, " + std::to_string(kMaxEmbeddingDim - 1) + "]");
  FnnResult out;
  for (std::size_t d = 1; d <= p.max_dim; ++d) {
    const double f = fnn_fraction(x, tau, d, p);
    out.fractions.push_back(f);
    if (f < p.threshold) {
      out.dim = d;
      return out;
    }
  }
  out.dim = p.max_dim;
  out.saturated = true;
  return out;
}

}  // namespace ankle
