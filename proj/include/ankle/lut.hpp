#pragma once

// Two-argument lookup tables: bilinear evaluation and exact inversion of the
// piecewise-linear slice along a declared monotone axis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ankle/error.hpp"

namespace ankle {

enum class LutAxis { A, B };

// Axes along which every slice of a table is strictly monotone.
struct LutMonotone {
  bool a = false;
  bool b = false;
};

class Lut2D {
 public:
  using Monotone = LutMonotone;

  /// `values` is row-major: values[i * axis_b.size() + j] is the output at
  /// (axis_a[i], axis_b[j]). Every declared monotone axis is validated.
  Lut2D(std::vector<double> axis_a, std::vector<double> axis_b, std::vector<double> values,
        Monotone monotone = Monotone{}, std::string units_a = "", std::string units_b = "")
      : a_(std::move(axis_a)),
        b_(std::move(axis_b)),
        v_(std::move(values)),
        mono_(monotone),
        units_a_(std::move(units_a)),
        units_b_(std::move(units_b)) {
    require(a_.size() >= 2 && b_.size() >= 2, ErrorKind::InvalidLut,
            "each LUT axis needs at least two nodes");
    check_increasing(a_, "axis_a");
    check_increasing(b_, "axis_b");
    require(v_.size() == a_.size() * b_.size(), ErrorKind::InvalidLut,
            "values size does not match axes");
    for (double v : v_) require(std::isfinite(v), ErrorKind::InvalidLut, "non-finite LUT value");
    if (mono_.a) validate_monotone(LutAxis::A);
    if (mono_.b) validate_monotone(LutAxis::B);
  }

  const std::vector<double>& axis_a() const noexcept { return a_; }
  const std::vector<double>& axis_b() const noexcept { return b_; }
  const std::vector<double>& values() const noexcept { return v_; }
  Monotone monotone() const noexcept { return mono_; }
  const std::string& units_a() const noexcept { return units_a_; }
  const std::string& units_b() const noexcept { return units_b_; }

  double node(std::size_t i, std::size_t j) const { return v_[i * b_.size() + j]; }

  double min_a() const { return a_.front(); }
  double max_a() const { return a_.back(); }
  double min_b() const { return b_.front(); }
  double max_b() const { return b_.back(); }

  double eval(double a, double b) const {
    const auto [i, ta] = locate(a_, a, "axis_a");
    const auto [j, tb] = locate(b_, b, "axis_b");
    const double v00 = node(i, j);
    const double v01 = node(i, j + 1);
    const double v10 = node(i + 1, j);
    const double v11 = node(i + 1, j + 1);
    return (1.0 - ta) * ((1.0 - tb) * v00 + tb * v01) + ta * ((1.0 - tb) * v10 + tb * v11);
  }

  /// Solves eval(c, fixed) = target (free axis A) or eval(fixed, c) = target
  /// (free axis B) on the piecewise-linear slice through `fixed`.
  double invert(double target, LutAxis free_axis, double fixed) const {
    const bool declared = free_axis == LutAxis::A ? mono_.a : mono_.b;
    require(declared, ErrorKind::InvalidLut, "free axis is not declared monotone");
    const auto& free = free_axis == LutAxis::A ? a_ : b_;
    const auto& other = free_axis == LutAxis::A ? b_ : a_;
    const auto [k, t] = locate(other, fixed, free_axis == LutAxis::A ? "axis_b" : "axis_a");

    std::vector<double> slice(free.size());
    for (std::size_t n = 0; n < free.size(); ++n) {
      const double lo = free_axis == LutAxis::A ? node(n, k) : node(k, n);
      const double hi = free_axis == LutAxis::A ? node(n, k + 1) : node(k + 1, n);
      slice[n] = (1.0 - t) * lo + t * hi;
    }

    const bool increasing = slice.back() > slice.front();
    const double lo = increasing ? slice.front() : slice.back();
    const double hi = increasing ? slice.back() : slice.front();
    require(target >= lo && target <= hi, ErrorKind::UnreachableTarget,
            "target " + std::to_string(target) + " outside slice range [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");

    for (std::size_t n = 0; n + 1 < slice.size(); ++n) {
      const double s0 = slice[n];
      const double s1 = slice[n + 1];
      const bool inside = increasing ? (target >= s0 && target <= s1) : (target <= s0 && target >= s1);
      if (!inside) continue;
      if (target == s0) return free[n];
      if (target == s1) return free[n + 1];
      const double frac = (target - s0) / (s1 - s0);
      return free[n] + frac * (free[n + 1] - free[n]);
    }
    throw Error(ErrorKind::InvalidLut, "slice is not monotone");
  }

  bool contains(double a, double b) const {
    return a >= a_.front() && a <= a_.back() && b >= b_.front() && b <= b_.back();
  }

 private:
  static void check_increasing(const std::vector<double>& axis, const char* name) {
    for (std::size_t i = 0; i < axis.size(); ++i)
      require(std::isfinite(axis[i]), ErrorKind::InvalidLut, std::string(name) + " not finite");
    for (std::size_t i = 0; i + 1 < axis.size(); ++i)
      require(axis[i] < axis[i + 1], ErrorKind::InvalidLut,
              std::string(name) + " must be strictly increasing");
  }

  // Every slice along `axis` must be strictly monotone, all in one direction,
  // so that interpolated slices between nodes stay strictly monotone too.
  void validate_monotone(LutAxis axis) const {
    const std::size_t n_slices = axis == LutAxis::A ? b_.size() : a_.size();
    const std::size_t n_free = axis == LutAxis::A ? a_.size() : b_.size();
    int direction = 0;
    for (std::size_t s = 0; s < n_slices; ++s) {
      for (std::size_t n = 0; n + 1 < n_free; ++n) {
        const double v0 = axis == LutAxis::A ? node(n, s) : node(s, n);
        const double v1 = axis == LutAxis::A ? node(n + 1, s) : node(s, n + 1);
        const int d = v1 > v0 ? 1 : (v1 < v0 ? -1 : 0);
        require(d != 0, ErrorKind::InvalidLut, "repeated value in a monotone slice");
        if (direction == 0) direction = d;
        require(d == direction, ErrorKind::InvalidLut, "reversed value pair in a monotone slice");
      }
    }
  }

  struct Cell {
    std::size_t index;
    double frac;
  };

  static Cell locate(const std::vector<double>& axis, double x, const char* name) {
    require(std::isfinite(x) && x >= axis.front() && x <= axis.back(), ErrorKind::DomainError,
            std::string(name) + " coordinate " + std::to_string(x) + " outside [" +
                std::to_string(axis.front()) + ", " + std::to_string(axis.back()) + "]");
    if (x == axis.back()) return {axis.size() - 2, 1.0};
    const auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const auto i = static_cast<std::size_t>(it - axis.begin()) - 1;
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
  }

  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> v_;
  Monotone mono_;
  std::string units_a_;
  std::string units_b_;
};

inline double lut_eval(const Lut2D& lut, double a, double b) { return lut.eval(a, b); }

inline double lut_invert(const Lut2D& lut, double target, LutAxis free_axis, double fixed) {
  return lut.invert(target, free_axis, fixed);
}

// Affine stand-in for a device moment table: M = sigma * (x - rho * q).
struct SyntheticMomentMap {
  double sigma = 10.3675;  // Nm per mm of motor travel
  double rho = 0.47997;    // mm of motor travel per deg of ankle rotation

  double moment(double x_mm, double q_deg) const { return sigma * (x_mm - rho * q_deg); }
};

/// Map derived from a series spring of `stiffness_kn_per_m` acting on a lever
/// arm of `lever_arm_m`.
inline SyntheticMomentMap moment_map_from_spring(double stiffness_kn_per_m, double lever_arm_m) {
  require(stiffness_kn_per_m > 0.0 && lever_arm_m > 0.0, ErrorKind::InvalidParameter,
          "spring stiffness and lever arm must be positive");
  // kN/m == N/mm, so N/mm * m = Nm/mm; 1 deg of rotation moves the lever by r * pi/180 m.
  return {stiffness_kn_per_m * lever_arm_m, lever_arm_m * 1000.0 * std::numbers::pi / 180.0};
}

inline std::vector<double> linspace_step(double lo, double hi, double step) {
  require(step > 0.0 && hi > lo, ErrorKind::InvalidParameter, "bad grid range");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

inline Lut2D build_lut_from_map(const SyntheticMomentMap& map, std::vector<double> a_grid,
                                std::vector<double> b_grid) {
  require(map.sigma > 0.0, ErrorKind::InvalidParameter, "sigma must be positive");
  require(map.rho >= 0.0, ErrorKind::InvalidParameter, "rho must be non-negative");
  std::vector<double> values;
  values.reserve(a_grid.size() * b_grid.size());
  for (double a : a_grid)
    for (double b : b_grid) values.push_back(map.sigma * (a - map.rho * b));
  return Lut2D(std::move(a_grid), std::move(b_grid), std::move(values),
               {true, map.rho > 0.0}, "mm", "deg");
}

struct LutRange {
  double x_min = -40.0, x_max = 40.0, x_step = 1.0;  // motor position, mm
  double q_min = -30.0, q_max = 30.0, q_step = 1.0;  // ankle angle, deg
};

inline Lut2D build_moment_lut(const SyntheticMomentMap& map, const LutRange& range = {}) {
  return build_lut_from_map(map, linspace_step(range.x_min, range.x_max, range.x_step),
                            linspace_step(range.q_min, range.q_max, range.q_step));
}

// ---------------------------------------------------------------------------
// CSV persistence
//
//   # axis_a: <units>
//   # axis_b: <units>
//   ,b0,b1,...          <- first row: axis_b grid (corner cell ignored)
//   a0,v00,v01,...      <- first column: axis_a grid, then the row of values
// ---------------------------------------------------------------------------

inline void write_lut_csv(const Lut2D& lut, std::ostream& out) {
  out.precision(17);
  out << "# axis_a: " << lut.units_a() << "\n# axis_b: " << lut.units_b() << "\n";
  for (double b : lut.axis_b()) out << ',' << b;
  out << '\n';
  for (std::size_t i = 0; i < lut.axis_a().size(); ++i) {
    out << lut.axis_a()[i];
    for (std::size_t j = 0; j < lut.axis_b().size(); ++j) out << ',' << lut.node(i, j);
    out << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, where + ": not a number '" + text + "'");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) throw Error(ErrorKind::Parse, where + ": trailing text in '" + text + "'");
  return v;
}

}  // namespace detail

inline Lut2D read_lut_csv(std::istream& in, const std::string& name, Lut2D::Monotone monotone) {
  std::string line;
  std::string units_a;
  std::string units_b;
  std::vector<double> axis_b;
  std::vector<double> axis_a;
  std::vector<double> values;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (line.rfind("# axis_a:", 0) == 0) {
      units_a = line.substr(9);
      units_a.erase(0, units_a.find_first_not_of(' '));
      continue;
    }
    if (line.rfind("# axis_b:", 0) == 0) {
      units_b = line.substr(9);
      units_b.erase(0, units_b.find_first_not_of(' '));
      continue;
    }
    if (line[0] == '#') continue;
    const auto cells = detail::split_csv(line);
    if (!have_header) {
      for (std::size_t j = 1; j < cells.size(); ++j)
        axis_b.push_back(detail::parse_number(cells[j], where));
      have_header = true;
      continue;
    }
    if (cells.size() != axis_b.size() + 1)
      throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(axis_b.size() + 1) +
                                        " cells, got " + std::to_string(cells.size()));
    axis_a.push_back(detail::parse_number(cells[0], where));
    for (std::size_t j = 1; j < cells.size(); ++j)
      values.push_back(detail::parse_number(cells[j], where));
  }
  return Lut2D(std::move(axis_a), std::move(axis_b), std::move(values), monotone,
               std::move(units_a), std::move(units_b));
}

inline Lut2D load_lut_csv(const std::string& path, Lut2D::Monotone monotone) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_lut_csv(in, path, monotone);
}

}  // namespace ankle
