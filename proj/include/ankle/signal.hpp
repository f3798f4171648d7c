#pragma once

// Filtering, differentiation, resampling and stride time-normalization.
// All functions are pure; every TimeSeries they return is freshly built.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ankle/error.hpp"

namespace ankle {

enum class Axis { ML, AP, VT, Scalar };

inline const char* axis_name(Axis axis) {
  switch (axis) {
    case Axis::ML: return "ML";
    case Axis::AP: return "AP";
    case Axis::VT: return "VT";
    case Axis::Scalar: return "scalar";
  }
  return "scalar";
}

class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, double sample_rate, double start_time = 0.0,
             Axis label = Axis::Scalar)
      : samples_(std::move(samples)), rate_(sample_rate), start_(start_time), label_(label) {
    require(std::isfinite(rate_) && rate_ > 0.0, ErrorKind::InvalidParameter,
            "sample rate must be positive");
    require(std::isfinite(start_), ErrorKind::InvalidParameter, "start time must be finite");
    for (std::size_t i = 0; i < samples_.size(); ++i)
      require(std::isfinite(samples_[i]), ErrorKind::InvalidParameter,
              "non-finite sample at index " + std::to_string(i));
  }

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::span<const double> view() const noexcept { return samples_; }
  double sample_rate() const noexcept { return rate_; }
  double dt() const noexcept { return 1.0 / rate_; }
  double start_time() const noexcept { return start_; }
  Axis label() const noexcept { return label_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  double time_at(std::size_t i) const { return start_ + static_cast<double>(i) / rate_; }

  TimeSeries with_samples(std::vector<double> samples) const {
    return TimeSeries(std::move(samples), rate_, start_, label_);
  }

 private:
  std::vector<double> samples_;
  double rate_;
  double start_;
  Axis label_;
};

struct StrideGrid {
  std::vector<std::size_t> stride_boundaries;  // first sample of every stride, plus the end
  std::size_t n_strides = 0;
  std::size_t points_per_stride = 0;
};

// Linear interpolation at a fractional sample position, clamped to the ends.
inline double sample_at(std::span<const double> x, double pos) {
  if (x.empty()) throw Error(ErrorKind::TooShort, "sample_at on empty series");
  if (pos <= 0.0) return x.front();
  const double last = static_cast<double>(x.size() - 1);
  if (pos >= last) return x.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return x[i];
  return x[i] + frac * (x[i + 1] - x[i]);
}

namespace detail {

// Second-order section in transposed direct form II, normalized so a0 = 1.
struct Biquad {
  double b0, b1, b2, a1, a2;

  // State that makes a constant input `value` pass through with no transient.
  std::array<double, 2> steady_state(double value) const {
    const double z2 = (b2 - a2) * value;
    const double z1 = (b1 - a1) * value + z2;
    return {z1, z2};
  }

  void run(std::vector<double>& x) const {
    if (x.empty()) return;
    auto [z1, z2] = steady_state(x.front());
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
};

inline std::vector<Biquad> butterworth_sections(int order, double cutoff, double rate) {
  const double k = std::tan(std::numbers::pi * cutoff / rate);  // prewarped analog corner
  std::vector<Biquad> sections;
  for (int s = 0; s < order / 2; ++s) {
    const double theta = std::numbers::pi * (2.0 * s + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::cos(theta));
    const double norm = 1.0 / (1.0 + k / q + k * k);
    const double b0 = k * k * norm;
    sections.push_back(
        {b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm});
  }
  return sections;
}

}  // namespace detail

/// Low-pass Butterworth of even order designed by the bilinear transform with
/// the corner prewarped, so the digital response is exactly -3 dB at `cutoff`.
/// With `zero_phase` the cascade runs forward then backward over an
/// odd-reflected extension of the signal.
inline TimeSeries butterworth_lowpass(const TimeSeries& series, int order, double cutoff,
                                      bool zero_phase = true) {
  require(order >= 2 && order % 2 == 0, ErrorKind::InvalidParameter,
          "butterworth order must be a positive even number");
  const double nyquist = series.sample_rate() / 2.0;
  require(cutoff > 0.0 && cutoff < nyquist, ErrorKind::InvalidParameter,
          "cutoff must lie in (0, Nyquist)");
  const std::size_t n = series.size();
  require(n >= static_cast<std::size_t>(3 * order), ErrorKind::TooShort,
          "series shorter than 3x filter order");

  const auto sections = detail::butterworth_sections(order, cutoff, series.sample_rate());
  std::vector<double> y = series.samples();

  if (!zero_phase) {
    for (const auto& s : sections) s.run(y);
    return series.with_samples(std::move(y));
  }

  const std::size_t pad = std::min<std::size_t>(3 * (order + 1) * 4, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  const double first = y.front();
  const double last = y.back();
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * first - y[i]);
  ext.insert(ext.end(), y.begin(), y.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * last - y[n - 1 - i]);

  for (const auto& s : sections) s.run(ext);
  std::reverse(ext.begin(), ext.end());
  for (const auto& s : sections) s.run(ext);
  std::reverse(ext.begin(), ext.end());

  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n), y.begin());
  return series.with_samples(std::move(y));
}

// Trailing-window mean; the first window-1 outputs average what is available.
inline TimeSeries moving_average(const TimeSeries& series, std::size_t window) {
  require(window >= 1, ErrorKind::InvalidParameter, "moving-average window must be >= 1");
  require(window <= series.size(), ErrorKind::InvalidParameter,
          "moving-average window longer than series");
  const auto& x = series.samples();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += x[k];
    out[i] = sum / static_cast<double>(i - lo + 1);
  }
  return series.with_samples(std::move(out));
}

/// Central differences in the interior and second-order one-sided
/// differences at the ends (first-order when only two samples exist).
inline TimeSeries finite_difference(const TimeSeries& series, double dt) {
  require(series.size() >= 2, ErrorKind::TooShort, "finite difference needs >= 2 samples");
  require(dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  const auto& x = series.samples();
  const std::size_t n = x.size();
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (x[1] - x[0]) / dt;
    return series.with_samples(std::move(d));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
  d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt);
  return series.with_samples(std::move(d));
}

inline TimeSeries resample_linear(const TimeSeries& series, double target_rate) {
  require(target_rate > 0.0 && std::isfinite(target_rate), ErrorKind::InvalidParameter,
          "target rate must be positive");
  require(series.size() >= 1, ErrorKind::TooShort, "cannot resample an empty series");
  if (target_rate == series.sample_rate()) return series;

  const double span = static_cast<double>(series.size() - 1) / series.sample_rate();
  const auto count = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;
  std::vector<double> out(count);
  const double ratio = series.sample_rate() / target_rate;
  for (std::size_t k = 0; k < count; ++k)
    out[k] = sample_at(series.view(), static_cast<double>(k) * ratio);
  return TimeSeries(std::move(out), target_rate, series.start_time(), series.label());
}

/// Maps the first `n_strides` strides delimited by `events` onto
/// n_points / n_strides samples each. A stride's samples start at its own
/// foot-strike and stop one step short of the next one.
inline std::pair<TimeSeries, StrideGrid> time_normalize(const TimeSeries& series,
                                                        std::span<const std::size_t> events,
                                                        std::size_t n_strides,
                                                        std::size_t n_points) {
  require(n_strides >= 1, ErrorKind::InvalidParameter, "n_strides must be >= 1");
  require(n_points >= n_strides && n_points % n_strides == 0, ErrorKind::InvalidParameter,
          "n_points must be a positive multiple of n_strides");
  require(events.size() >= n_strides + 1, ErrorKind::InsufficientStrides,
          "need " + std::to_string(n_strides + 1) + " foot-strikes, got " +
              std::to_string(events.size()));
  for (std::size_t k = 0; k + 1 < events.size(); ++k)
    require(events[k] < events[k + 1], ErrorKind::InvalidParameter,
            "foot-strike events must be strictly increasing");
  require(events[n_strides] < series.size(), ErrorKind::InsufficientStrides,
          "foot-strike events run past the end of the series");

  const std::size_t per = n_points / n_strides;
  std::vector<double> out;
  out.reserve(n_points);
  StrideGrid grid{{}, n_strides, per};
  for (std::size_t k = 0; k < n_strides; ++k) {
    grid.stride_boundaries.push_back(k * per);
    const double a = static_cast<double>(events[k]);
    const double len = static_cast<double>(events[k + 1] - events[k]);
    for (std::size_t j = 0; j < per; ++j)
      out.push_back(sample_at(series.view(), a + len * static_cast<double>(j) / per));
  }
  grid.stride_boundaries.push_back(n_points);

  const double duration =
      static_cast<double>(events[n_strides] - events[0]) / series.sample_rate();
  const double rate = static_cast<double>(n_points) / duration;
  return {TimeSeries(std::move(out), rate, series.time_at(events[0]), series.label()),
          std::move(grid)};
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace ankle
