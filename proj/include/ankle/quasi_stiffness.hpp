#pragma once

// Moment-angle slope over mid and terminal stance of an averaged gait cycle.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ankle/error.hpp"
#include "ankle/signal.hpp"

namespace ankle {

struct GaitPhaseConfig {
  double stance_fraction = 0.60;   // of the gait cycle, from foot-strike
  double window_start = 0.20;      // of stance
  double window_end = 0.85;        // of stance
  std::size_t points_per_cycle = 1001;  // both foot-strikes included
  double regression_width = 0.05;  // of stance
  double plateau = 1e-3;           // deg; narrower angle spans are masked

  void validate() const {
    require(stance_fraction > 0.0 && stance_fraction <= 1.0, ErrorKind::InvalidParameter,
            "stance fraction must lie in (0, 1]");
    require(0.0 < window_start && window_start < window_end && window_end < 1.0,
            ErrorKind::InvalidParameter, "need 0 < window start < window end < 1");
    require(points_per_cycle >= 11, ErrorKind::InvalidParameter,
            "need at least 11 points per cycle");
    require(regression_width > 0.0 && regression_width < 1.0, ErrorKind::InvalidParameter,
            "regression width must lie in (0, 1)");
  }
};

struct Cycle {
  std::vector<double> moment;
  std::vector<double> angle;
};

/// Cycle k spans strike k to strike k+1 (both ends sampled) and is resampled
/// to `points` samples.
inline std::vector<Cycle> segment_cycles(std::span<const double> moment,
                                         std::span<const double> angle,
                                         std::span<const std::size_t> strikes, std::size_t points) {
  require(moment.size() == angle.size(), ErrorKind::InvalidParameter,
          "moment and angle differ in length");
  require(strikes.size() >= 2, ErrorKind::InsufficientStrides, "need at least two foot-strikes");
  require(points >= 2, ErrorKind::InvalidParameter, "need at least two points per cycle");
  std::vector<Cycle> cycles;
  cycles.reserve(strikes.size() - 1);
  for (std::size_t k = 0; k + 1 < strikes.size(); ++k) {
    const auto a = strikes[k], b = strikes[k + 1];
    require(a < b && b < moment.size(), ErrorKind::InvalidParameter,
            "foot-strikes must be increasing and inside the signals");
    Cycle c;
    c.moment.resize(points);
    c.angle.resize(points);
    const double len = static_cast<double>(b - a);
    for (std::size_t j = 0; j < points; ++j) {
      const double pos = static_cast<double>(a) + len * static_cast<double>(j) / (points - 1);
      c.moment[j] = sample_at(moment, pos);
      c.angle[j] = sample_at(angle, pos);
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

struct CycleAverage {
  std::vector<double> mean_moment;
  std::vector<double> mean_angle;
  std::size_t n_cycles = 0;
};

inline CycleAverage average_cycle(std::span<const Cycle> cycles) {
  require(!cycles.empty(), ErrorKind::InsufficientData, "no cycles to average");
  const std::size_t n = cycles.front().moment.size();
  CycleAverage avg{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), cycles.size()};
  for (const auto& c : cycles) {
    require(c.moment.size() == n && c.angle.size() == n, ErrorKind::InvalidParameter,
            "cycles differ in length");
    for (std::size_t j = 0; j < n; ++j) {
      avg.mean_moment[j] += c.moment[j];
      avg.mean_angle[j] += c.angle[j];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    avg.mean_moment[j] /= static_cast<double>(cycles.size());
    avg.mean_angle[j] /= static_cast<double>(cycles.size());
  }
  return avg;
}

struct StiffnessProfile {
  std::vector<double> stance_percent;  // 0..100
  std::vector<double> stiffness;       // Nm/deg, NaN where masked
  std::vector<bool> masked;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), false));
  }

  /// Mean of the unmasked values with stance percent in [lo, hi].
  double mean_between(double lo, double hi) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < stiffness.size(); ++i) {
      if (masked[i] || stance_percent[i] < lo || stance_percent[i] > hi) continue;
      sum += stiffness[i];
      ++n;
    }
    require(n > 0, ErrorKind::InsufficientData, "no stiffness values in the requested range");
    return sum / static_cast<double>(n);
  }
};

/// Slope dM/dq from a least-squares line fitted in a window centred on each
/// stance sample between window_start and window_end.
inline StiffnessProfile quasi_stiffness(const CycleAverage& avg, const GaitPhaseConfig& cfg) {
  cfg.validate();
  const auto& M = avg.mean_moment;
  const auto& q = avg.mean_angle;
  require(M.size() == q.size() && M.size() >= 11, ErrorKind::InvalidParameter,
          "averaged profiles must share a length of at least 11");
  const std::size_t last = M.size() - 1;
  const auto stance_last =
      static_cast<std::size_t>(std::floor(cfg.stance_fraction * static_cast<double>(last) + 1e-9));
  require(stance_last >= 4, ErrorKind::InsufficientData, "stance has too few samples");
  const auto half = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::lround(0.5 * cfg.regression_width * static_cast<double>(stance_last))));

  StiffnessProfile out;
  for (std::size_t i = 0; i <= stance_last; ++i) {
    const double pct = 100.0 * static_cast<double>(i) / static_cast<double>(stance_last);
    if (pct < 100.0 * cfg.window_start - 1e-9 || pct > 100.0 * cfg.window_end + 1e-9) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(i + half, last);
    double mq = 0.0, mm = 0.0;
    double qmin = q[lo], qmax = q[lo];
    for (std::size_t j = lo; j <= hi; ++j) {
      mq += q[j];
      mm += M[j];
      qmin = std::min(qmin, q[j]);
      qmax = std::max(qmax, q[j]);
    }
    const double cnt = static_cast<double>(hi - lo + 1);
    mq /= cnt;
    mm /= cnt;
    double sqq = 0.0, sqm = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      sqq += (q[j] - mq) * (q[j] - mq);
      sqm += (q[j] - mq) * (M[j] - mm);
    }
    out.stance_percent.push_back(pct);
    if (qmax - qmin < cfg.plateau || sqq == 0.0) {
      out.stiffness.push_back(std::nan(""));
      out.masked.push_back(true);
    } else {
      out.stiffness.push_back(sqm / sqq);
      out.masked.push_back(false);
    }
  }
  return out;
}

}  // namespace ankle
