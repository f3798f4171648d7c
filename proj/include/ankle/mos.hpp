#pragma once

// Centre of mass from pelvis markers, foot-strike detection from the heel
// marker, extrapolated centre of mass, and per-cycle margins of stability.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ankle/error.hpp"
#include "ankle/signal.hpp"
#include "ankle/trial.hpp"

namespace ankle {

struct Com3 {
  TimeSeries ml, ap, vt;
};

/// Per-axis mean of LASI, RASI, LPSI and RPSI. A non-finite coordinate is a
/// gap; nothing is interpolated.
inline Com3 estimate_com(std::span<const MarkerFrame> frames, double rate) {
  require(!frames.empty(), ErrorKind::TooShort, "no marker frames");
  std::vector<double> ml(frames.size()), ap(frames.size()), vt(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    for (const Vec3* m : {&f.lasi, &f.rasi, &f.lpsi, &f.rpsi})
      if (!std::isfinite(m->ml) || !std::isfinite(m->ap) || !std::isfinite(m->vt))
        throw Error(ErrorKind::GapError, "pelvis marker missing at frame " + std::to_string(i));
    ml[i] = (f.lasi.ml + f.rasi.ml + f.lpsi.ml + f.rpsi.ml) / 4.0;
    ap[i] = (f.lasi.ap + f.rasi.ap + f.lpsi.ap + f.rpsi.ap) / 4.0;
    vt[i] = (f.lasi.vt + f.rasi.vt + f.lpsi.vt + f.rpsi.vt) / 4.0;
  }
  return {TimeSeries(std::move(ml), rate, 0.0, Axis::ML), TimeSeries(std::move(ap), rate, 0.0, Axis::AP),
          TimeSeries(std::move(vt), rate, 0.0, Axis::VT)};
}

// ---------------------------------------------------------------------------
// Foot-strike detection
// ---------------------------------------------------------------------------

struct FootStrikeConfig {
  double nominal_stride = 1.47;  // s
  double prominence = 20.0;      // mm
  double cutoff = 5.0;           // Hz, heel height filter
  double search_before = 0.45;   // strides before the height minimum
  double search_after = 0.10;    // strides after it
};

/// Height minima of the filtered heel marker that stand out by `prominence`
/// against the highest point within one nominal stride on either side and
/// are at least half a stride apart. Each is then moved to the most anterior
/// heel position nearby: the heel is furthest forward at touchdown, while
/// the height minimum can sit anywhere in the flat, loaded part of stance.
inline std::vector<std::size_t> detect_foot_strikes(const TimeSeries& heel_vt,
                                                    const TimeSeries& heel_ap,
                                                    const FootStrikeConfig& cfg = {}) {
  require(heel_vt.size() == heel_ap.size(), ErrorKind::InvalidParameter,
          "heel channels differ in length");
  require(cfg.nominal_stride > 0.0 && cfg.prominence > 0.0, ErrorKind::InvalidParameter,
          "stride and prominence must be positive");
  const double rate = heel_vt.sample_rate();
  const auto stride = static_cast<std::size_t>(std::lround(cfg.nominal_stride * rate));
  require(heel_vt.size() >= stride, ErrorKind::TooShort, "less than one stride of heel data");

  const auto h = butterworth_lowpass(heel_vt, 4, std::min(cfg.cutoff, 0.45 * rate)).samples();
  const std::size_t n = h.size();

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(h[i] < h[i - 1] && h[i] <= h[i + 1])) continue;
    const std::size_t lo = i >= stride ? i - stride : 0;
    const std::size_t hi = std::min(n - 1, i + stride);
    const double left = *std::max_element(h.begin() + lo, h.begin() + i + 1);
    const double right = *std::max_element(h.begin() + i, h.begin() + hi + 1);
    if (std::min(left, right) - h[i] >= cfg.prominence) candidates.push_back(i);
  }

  // Deepest first, then enforce the spacing.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](auto a, auto b) { return h[a] < h[b]; });
  const std::size_t spacing = stride / 2;
  std::vector<std::size_t> kept;
  for (auto c : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](auto k) {
      return (c > k ? c - k : k - c) >= spacing;
    });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) throw Error(ErrorKind::NoEvents, "no foot-strikes found in heel trajectory");

  const auto& ap = heel_ap.samples();
  const auto before = static_cast<std::size_t>(std::lround(cfg.search_before * stride));
  const auto after = static_cast<std::size_t>(std::lround(cfg.search_after * stride));
  std::vector<std::size_t> events;
  for (auto m : kept) {
    const std::size_t lo = m >= before ? m - before : 0;
    const std::size_t hi = std::min(n - 1, m + after);
    const auto e = static_cast<std::size_t>(
        std::max_element(ap.begin() + lo, ap.begin() + hi + 1) - ap.begin());
    if (events.empty() || e > events.back()) events.push_back(e);
  }
  return events;
}

// ---------------------------------------------------------------------------
// Extrapolated centre of mass and margins of stability
// ---------------------------------------------------------------------------

inline double pendulum_frequency(double length_m) {
  require(length_m > 0.0, ErrorKind::InvalidParameter, "pendulum length must be positive");
  return std::sqrt(kGravity / length_m);
}

/// Mean CoM-to-heel distance at the given frames, in metres.
inline double pendulum_length(const Com3& com, std::span<const MarkerFrame> frames,
                              std::span<const std::size_t> strikes) {
  require(!strikes.empty(), ErrorKind::NoEvents, "no foot-strikes for pendulum length");
  double sum = 0.0;
  for (auto i : strikes) {
    require(i < frames.size() && i < com.ml.size(), ErrorKind::InvalidParameter,
            "foot-strike outside the recording");
    const auto& h = frames[i].lheel;
    sum += std::sqrt(std::pow(com.ml[i] - h.ml, 2) + std::pow(com.ap[i] - h.ap, 2) +
                     std::pow(com.vt[i] - h.vt, 2));
  }
  return sum / static_cast<double>(strikes.size()) / 1000.0;
}

/// XcoM = p + v / omega0 (p in mm, v in mm/s, l in m).
inline TimeSeries xcom(const TimeSeries& position, const TimeSeries& velocity, double length_m) {
  require(position.size() == velocity.size(), ErrorKind::InvalidParameter,
          "position and velocity differ in length");
  const double w0 = pendulum_frequency(length_m);
  std::vector<double> out(position.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = position[i] + velocity[i] / w0;
  return position.with_samples(std::move(out));
}

struct MosCycle {
  double value = 0.0;      // mm
  std::size_t frame = 0;   // where the extreme occurred
  bool valid = false;      // false when the cycle had no stance frames
};

namespace detail {

template <class Better>
std::vector<MosCycle> mos_scan(std::span<const double> xc, std::span<const double> cop,
                               std::span<const bool> stance, std::span<const std::size_t> strikes,
                               Better better) {
  require(xc.size() == cop.size() && cop.size() == stance.size(), ErrorKind::InvalidParameter,
          "XcoM, CoP and stance mask differ in length");
  require(strikes.size() >= 2, ErrorKind::InsufficientStrides, "need at least two foot-strikes");
  std::vector<MosCycle> out;
  for (std::size_t k = 0; k + 1 < strikes.size(); ++k) {
    require(strikes[k] < strikes[k + 1] && strikes[k + 1] <= xc.size(), ErrorKind::InvalidParameter,
            "foot-strikes must increase and lie inside the signals");
    MosCycle c;
    for (std::size_t i = strikes[k]; i < strikes[k + 1]; ++i) {
      if (!stance[i]) continue;
      const double d = std::abs(cop[i] - xc[i]);
      if (!c.valid || better(d, c.value)) c = {d, i, true};
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Per cycle [strike k, strike k+1): smallest |CoP - XcoM| over stance frames.
inline std::vector<MosCycle> mos_ml(std::span<const double> xcom_ml, std::span<const double> cop_ml,
                                    std::span<const bool> stance,
                                    std::span<const std::size_t> strikes) {
  return detail::mos_scan(xcom_ml, cop_ml, stance, strikes, [](double a, double b) { return a < b; });
}

/// Per cycle: largest |CoP - XcoM| over stance frames.
inline std::vector<MosCycle> mos_ap(std::span<const double> xcom_ap, std::span<const double> cop_ap,
                                    std::span<const bool> stance,
                                    std::span<const std::size_t> strikes) {
  return detail::mos_scan(xcom_ap, cop_ap, stance, strikes, [](double a, double b) { return a > b; });
}

struct MosSummary {
  std::vector<double> values;  // valid cycles only
  double mean = 0.0;
  double sd = 0.0;
  std::size_t skipped = 0;
};

inline MosSummary summarize(std::span<const MosCycle> cycles) {
  MosSummary s;
  for (const auto& c : cycles) {
    if (c.valid) s.values.push_back(c.value);
    else ++s.skipped;
  }
  s.mean = mean(s.values);
  s.sd = stddev(s.values);
  return s;
}

}  // namespace ankle
