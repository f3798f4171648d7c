#pragma once

// Rosenstein's largest-Lyapunov estimate: mean log separation of initially
// nearest trajectories, with short- and long-term per-stride slopes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ankle/embedding.hpp"
#include "ankle/error.hpp"
#include "ankle/neighbors.hpp"
#include "ankle/signal.hpp"

namespace ankle {

struct DivergenceResult {
  std::vector<double> curve;  // mean ln distance, one entry per sample step
  double samples_per_stride = 100.0;
  double lambda_S = 0.0;      // per stride, fitted over strides [0, 1]
  double lambda_L = 0.0;      // per stride, fitted over strides [4, 10]
  std::size_t pairs = 0;
};

/// Least-squares slope of curve against stride index over [lo, hi] strides
/// (both ends included, clipped to the curve).
inline double divergence_slope(std::span<const double> curve, double sps, double lo, double hi) {
  const auto a = static_cast<std::size_t>(std::ceil(lo * sps - 1e-9));
  const auto b = std::min(curve.size() - 1, static_cast<std::size_t>(std::floor(hi * sps + 1e-9)));
  require(b > a, ErrorKind::InsufficientData, "fit interval holds fewer than two samples");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(b - a + 1);
  for (std::size_t k = a; k <= b; ++k) {
    mx += static_cast<double>(k) / sps;
    my += curve[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = a; k <= b; ++k) {
    const double dx = static_cast<double>(k) / sps - mx;
    sxx += dx * dx;
    sxy += dx * (curve[k] - my);
  }
  return sxy / sxx;
}

// Separations are floored at this fraction of the attractor's RMS spread, so
// trajectories that coincide to rounding error give a flat curve, not -inf.
inline constexpr double kDistanceFloor = 1e-10;

/// Divergence over `horizon_strides` strides (curve length horizon x sps).
/// Each reference point is paired with its nearest neighbour more than
/// `theiler` samples away in time; theiler defaults to one stride.
inline DivergenceResult rosenstein_divergence(const Attractor& att, double samples_per_stride,
                                              std::size_t horizon_strides = 10,
                                              std::optional<std::size_t> theiler = std::nullopt) {
  require(samples_per_stride >= 1.0, ErrorKind::InvalidParameter,
          "samples per stride must be >= 1");
  require(horizon_strides >= 1, ErrorKind::InvalidParameter, "horizon must be >= 1 stride");
  const auto horizon = static_cast<std::size_t>(std::lround(horizon_strides * samples_per_stride));
  const std::size_t window = theiler.value_or(static_cast<std::size_t>(std::lround(samples_per_stride)));
  const std::size_t m = att.size();
  require(m > horizon + window, ErrorKind::InsufficientData,
          "attractor shorter than the horizon plus the exclusion window");
  const std::size_t usable = m - horizon + 1;
  const std::size_t dim = att.dim();
  const auto pts = att.data();

  // RMS distance from the centroid sets the floor's scale.
  std::vector<double> centroid(dim, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i * dim + k];
  for (double& c : centroid) c /= static_cast<double>(m);
  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = pts[i * dim + k] - centroid[k];
      spread += d * d;
    }
  spread = std::sqrt(spread / static_cast<double>(m));
  const double floor = spread > 0.0 ? kDistanceFloor * spread : kDistanceFloor;

  const auto nn = nearest_neighbors(pts, dim, usable, usable, window);

  DivergenceResult r;
  r.samples_per_stride = samples_per_stride;
  r.curve.assign(horizon, 0.0);
  for (std::size_t i = 0; i < usable; ++i) {
    if (nn[i] < 0) continue;
    const auto j = static_cast<std::size_t>(nn[i]);
    ++r.pairs;
    for (std::size_t k = 0; k < horizon; ++k) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = pts[(i + k) * dim + c] - pts[(j + k) * dim + c];
        d2 += diff * diff;
      }
      r.curve[k] += std::log(std::max(std::sqrt(d2), floor));
    }
  }
  require(r.pairs >= 10, ErrorKind::InsufficientData, "fewer than 10 neighbour pairs");
  for (double& v : r.curve) v /= static_cast<double>(r.pairs);
  r.lambda_S = divergence_slope(r.curve, samples_per_stride, 0.0, 1.0);
  r.lambda_L = divergence_slope(r.curve, samples_per_stride, 4.0, 10.0);
  return r;
}

struct LyapunovConfig {
  std::size_t window_strides = 150;
  std::size_t n_windows = 25;
  std::size_t points = 15000;  // per window after time normalization
  std::size_t horizon_strides = 10;
  std::optional<std::size_t> theiler;
};

struct WindowedLyapunov {
  std::vector<double> lambda_S, lambda_L;  // per window
  double mean_S = 0.0, sd_S = 0.0, mean_L = 0.0, sd_L = 0.0;
  std::vector<double> mean_curve;  // divergence curve averaged over windows
  std::size_t points_per_window = 0;
};

/// Window w covers strides w .. w + window_strides - 1 of `events`; each is
/// time-normalized, embedded with `params` and analysed independently.
inline WindowedLyapunov windowed_lyapunov(const TimeSeries& series,
                                          std::span<const std::size_t> events,
                                          EmbeddingParams params, const LyapunovConfig& cfg = {}) {
  require(cfg.window_strides >= 1 && cfg.n_windows >= 1, ErrorKind::InvalidParameter,
          "window and window count must be >= 1");
  const std::size_t strides = events.size() > 0 ? events.size() - 1 : 0;
  require(strides >= cfg.window_strides + cfg.n_windows - 1, ErrorKind::InsufficientStrides,
          "need " + std::to_string(cfg.window_strides + cfg.n_windows - 1) + " strides, got " +
              std::to_string(strides));
  const double sps = static_cast<double>(cfg.points) / static_cast<double>(cfg.window_strides);

  WindowedLyapunov out;
  for (std::size_t w = 0; w < cfg.n_windows; ++w) {
    const auto [norm, grid] =
        time_normalize(series, events.subspan(w, cfg.window_strides + 1), cfg.window_strides, cfg.points);
    out.points_per_window = norm.size();
    const auto att = delay_embed(norm.view(), params, sps);
    const auto div = rosenstein_divergence(att, sps, cfg.horizon_strides, cfg.theiler);
    out.lambda_S.push_back(div.lambda_S);
    out.lambda_L.push_back(div.lambda_L);
    if (out.mean_curve.empty()) out.mean_curve.assign(div.curve.size(), 0.0);
    for (std::size_t k = 0; k < div.curve.size(); ++k)
      out.mean_curve[k] += div.curve[k] / static_cast<double>(cfg.n_windows);
  }
  out.mean_S = mean(out.lambda_S);
  out.sd_S = stddev(out.lambda_S);
  out.mean_L = mean(out.lambda_L);
  out.sd_L = stddev(out.lambda_L);
  return out;
}

}  // namespace ankle
