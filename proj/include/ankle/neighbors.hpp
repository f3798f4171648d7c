#pragma once

// Nearest-neighbour queries over embedded points with a temporal exclusion
// window, backed by a bulk-loaded Boost.Geometry R-tree.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "ankle/error.hpp"

namespace ankle {

inline constexpr std::size_t kMaxEmbeddingDim = 12;

namespace detail {

template <std::size_t D>
std::vector<std::ptrdiff_t> nearest_fixed(std::span<const double> pts, std::size_t n_candidates,
                                          std::size_t n_queries, std::size_t exclusion) {
  namespace bg = boost::geometry;
  namespace bgi = boost::geometry::index;
  using Point = bg::model::point<double, D, bg::cs::cartesian>;
  using Value = std::pair<Point, std::size_t>;

  auto make = [&](std::size_t i) {
    Point p;
    [&]<std::size_t... K>(std::index_sequence<K...>) {
      (bg::set<K>(p, pts[i * D + K]), ...);
    }(std::make_index_sequence<D>{});
    return p;
  };

  std::vector<Value> values;
  values.reserve(n_candidates);
  for (std::size_t j = 0; j < n_candidates; ++j) values.emplace_back(make(j), j);
  const bgi::rtree<Value, bgi::rstar<16>> tree(values.begin(), values.end());

  std::vector<std::ptrdiff_t> out(n_queries, -1);
  std::vector<Value> hit;
  for (std::size_t i = 0; i < n_queries; ++i) {
    hit.clear();
    const auto far_in_time = [i, exclusion](const Value& v) {
      const std::size_t j = v.second;
      return (j > i ? j - i : i - j) > exclusion;
    };
    tree.query(bgi::nearest(make(i), 1) && bgi::satisfies(far_in_time), std::back_inserter(hit));
    if (!hit.empty()) out[i] = static_cast<std::ptrdiff_t>(hit.front().second);
  }
  return out;
}

template <std::size_t... D>
std::vector<std::ptrdiff_t> nearest_dispatch(std::size_t dim, std::span<const double> pts,
                                             std::size_t n_candidates, std::size_t n_queries,
                                             std::size_t exclusion, std::index_sequence<D...>) {
  std::vector<std::ptrdiff_t> out;
  const bool found = ((dim == D + 1 &&
                       (out = nearest_fixed<D + 1>(pts, n_candidates, n_queries, exclusion), true)) ||
                      ...);
  require(found, ErrorKind::InvalidParameter,
          "embedding dimension must lie in [1, " + std::to_string(kMaxEmbeddingDim) + "]");
  return out;
}

}  // namespace detail

/// For each of the first `n_queries` points, the index of its Euclidean
/// nearest neighbour among the first `n_candidates` points, skipping any j
/// with |i - j| <= exclusion (so the point itself is always skipped).
/// -1 where no candidate qualifies. `pts` is row-major with `dim` columns.
inline std::vector<std::ptrdiff_t> nearest_neighbors(std::span<const double> pts, std::size_t dim,
                                                     std::size_t n_candidates,
                                                     std::size_t n_queries,
                                                     std::size_t exclusion) {
  require(dim >= 1, ErrorKind::InvalidParameter, "dimension must be >= 1");
  require(n_candidates * dim <= pts.size() && n_queries * dim <= pts.size(),
          ErrorKind::InvalidParameter, "neighbour query exceeds the point set");
  return detail::nearest_dispatch(dim, pts, n_candidates, n_queries, exclusion,
                                  std::make_index_sequence<kMaxEmbeddingDim>{});
}

}  // namespace ankle
