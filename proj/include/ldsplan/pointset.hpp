#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ldsplan {

/// N points in the closed unit cube [0,1]^d, stored row-major.
///
/// Construction validates the invariants (n >= 1, d >= 1, n*d coordinates,
/// every coordinate finite and in [0,1]); a PointSet is immutable afterwards.
class PointSet {
 public:
  PointSet(std::size_t n, std::size_t d, std::vector<double> coords,
           std::string provenance = {});

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

  std::span<const double> row(std::size_t i) const {
    return {coords_.data() + i * d_, d_};
  }
  double operator()(std::size_t i, std::size_t k) const { return coords_[i * d_ + k]; }

  std::span<const double> coords() const { return coords_; }
  const std::string& provenance() const { return provenance_; }

  PointSet with_provenance(std::string provenance) const;

  friend bool operator==(const PointSet& a, const PointSet& b) {
    return a.n_ == b.n_ && a.d_ == b.d_ && a.coords_ == b.coords_;
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> coords_;
  std::string provenance_;
};

/// Axis-aligned box used to map unit-cube samples to environment coordinates.
struct BoundsBox {
  std::vector<double> lower;
  std::vector<double> upper;

  BoundsBox(std::vector<double> lower, std::vector<double> upper);

  static BoundsBox unit(std::size_t d);
  static BoundsBox uniform(std::size_t d, double lo, double hi);

  std::size_t dim() const { return lower.size(); }
  /// Length of the box diagonal.
  double diagonal() const;
};

/// n i.i.d. points drawn from xoshiro256** (see rng.hpp), row by row.
PointSet sample_uniform(std::size_t n, std::size_t d, std::uint64_t seed);

/// Cell-centred grid with k intervals per axis; k^d points in lexicographic
/// order, last axis fastest.
PointSet sukharev_grid(std::size_t k, std::size_t d);

/// Output coordinate j is input coordinate dims[j].
PointSet project(const PointSet& ps, std::span<const std::size_t> dims);

/// Reorders the points so every prefix greedily minimizes Warnock L2.
PointSet greedy_reorder(const PointSet& ps);

/// Affine map x -> lower + x * (upper - lower); returns n*d row-major values.
std::vector<double> scale_to_bounds(const PointSet& ps, const BoundsBox& box);

/// Inverse of scale_to_bounds for a single configuration.
std::vector<double> unscale_from_bounds(std::span<const double> q, const BoundsBox& box);

void save_points(const PointSet& ps, const std::filesystem::path& path);
PointSet load_points(const std::filesystem::path& path);

/// Text serialization used by save_points/load_points.
std::string format_points(const PointSet& ps);
PointSet parse_points(const std::string& text, const std::string& origin = "<memory>");

}  // namespace ldsplan
