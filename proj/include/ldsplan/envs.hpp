#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ldsplan/pointset.hpp"

namespace ldsplan {

using Config = std::vector<double>;

/// A planning problem in environment coordinates.
///
/// Edges are checked at 2^m + 1 evenly spaced points (endpoints included)
/// with the smallest m whose spacing is <= edge_resolution(). Halving the
/// resolution therefore checks a superset of the original points.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t dim() const = 0;
  virtual const BoundsBox& bounds() const = 0;
  virtual const Config& start() const = 0;
  virtual const Config& goal() const = 0;
  virtual bool is_valid(std::span<const double> q) const = 0;
  virtual std::string kind() const = 0;

  /// Maximum spacing between checked points along an edge, in environment
  /// units.
  virtual double edge_resolution() const = 0;

  /// resolution_scale < 1 refines the check (0.5 = half step).
  bool segment_valid(std::span<const double> a, std::span<const double> b,
                     double resolution_scale = 1.0) const;
  /// Number of intervals segment_valid uses for a segment of this length.
  std::size_t segment_steps(double length, double resolution_scale = 1.0) const;
};

/// Occupancy-grid maze with a disk robot. Configurations are pixel
/// coordinates (x right, y down), bounds [0,width] x [0,height].
class MazeEnv final : public Environment {
 public:
  /// free[y * width + x] is true for free pixels. Throws if start or goal
  /// is invalid.
  MazeEnv(std::size_t width, std::size_t height, std::vector<bool> free, double radius, Config start,
          Config goal);

  std::size_t dim() const override { return 2; }
  const BoundsBox& bounds() const override { return bounds_; }
  const Config& start() const override { return start_; }
  const Config& goal() const override { return goal_; }
  bool is_valid(std::span<const double> q) const override;
  std::string kind() const override { return "maze"; }
  /// One pixel.
  double edge_resolution() const override { return 1.0; }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double radius() const { return radius_; }
  bool pixel_free(long x, long y) const;

  /// Reference check: true iff every pixel square within distance <= radius
  /// of the centre is free and inside the image.
  bool is_valid_exhaustive(std::span<const double> q) const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<bool> free_;
  double radius_;
  BoundsBox bounds_;
  Config start_;
  Config goal_;
  // Distance from each pixel centre to the nearest blocked pixel centre
  // (outside the image counts as blocked), capped at radius + 2.
  std::vector<float> clearance_;
};

/// Reads a PGM image (P2 or P5); pixels with gray value >= half of maxval
/// (128 for 8-bit images) are free.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<bool> free;
};
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

std::unique_ptr<MazeEnv> maze_load(const std::filesystem::path& grid, double radius, Config start,
                                   Config goal);

/// True iff some k in 1..d has q_i <= lambda for all i < k and
/// q_i >= 1 - lambda for all i > k.
bool corridor_is_valid(std::span<const double> q, double lambda);

/// Hypercube corridor on the unit cube from (lambda/2, ...) to (1 - lambda/2, ...).
class CorridorEnv final : public Environment {
 public:
  CorridorEnv(std::size_t d, double lambda);

  std::size_t dim() const override { return d_; }
  const BoundsBox& bounds() const override { return bounds_; }
  const Config& start() const override { return start_; }
  const Config& goal() const override { return goal_; }
  bool is_valid(std::span<const double> q) const override { return corridor_is_valid(q, lambda_); }
  std::string kind() const override { return "corridor"; }
  /// 0.01 of the unit-cube diagonal.
  double edge_resolution() const override;

  double lambda() const { return lambda_; }

 private:
  std::size_t d_;
  double lambda_;
  BoundsBox bounds_;
  Config start_;
  Config goal_;
};

std::unique_ptr<CorridorEnv> corridor_env(std::size_t d, double lambda);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};
struct Segment2 {
  Point2 a;
  Point2 b;
};

/// Closed-segment intersection by orientation tests with collinear overlap.
bool segment_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2);

/// Planar chain of equal links; joints in [-pi, pi].
struct ChainSpec {
  std::size_t links = 10;
  double link_length = 0.1;
  Point2 base{};
  std::vector<Segment2> obstacles;
};

/// Link j runs from joint j to joint j+1 with heading theta_1 + ... + theta_j.
std::vector<Segment2> chain_fk(std::span<const double> theta, const ChainSpec& spec);

/// No link touches an obstacle and no two non-adjacent links intersect.
bool chain_is_valid(std::span<const double> theta, const ChainSpec& spec);

class ChainEnv final : public Environment {
 public:
  ChainEnv(ChainSpec spec, Config start, Config goal);

  std::size_t dim() const override { return spec_.links; }
  const BoundsBox& bounds() const override { return bounds_; }
  const Config& start() const override { return start_; }
  const Config& goal() const override { return goal_; }
  bool is_valid(std::span<const double> q) const override { return chain_is_valid(q, spec_); }
  std::string kind() const override { return "chain"; }
  /// 0.01 of the diagonal of the joint box.
  double edge_resolution() const override;

  const ChainSpec& spec() const { return spec_; }

 private:
  ChainSpec spec_;
  BoundsBox bounds_;
  Config start_;
  Config goal_;
};

/// Loads an environment descriptor (JSON). Relative grid paths resolve
/// against the descriptor's directory. Schema in README.
std::unique_ptr<Environment> load_environment(const std::filesystem::path& path);
std::unique_ptr<Environment> parse_environment(const std::string& json_text,
                                               const std::filesystem::path& base_dir);

}  // namespace ldsplan
