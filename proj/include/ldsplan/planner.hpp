#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldsplan/envs.hpp"
#include "ldsplan/pointset.hpp"

namespace ldsplan {

/// How roadmap vertices pick neighbours.
struct ConnectionRule {
  enum class Mode { Radius, KNearest, Theory };
  Mode mode = Mode::Radius;
  double radius = 0.0;   // Radius mode, environment units
  std::size_t k = 0;     // KNearest mode
  double alpha = 2.0;    // Theory mode

  static ConnectionRule with_radius(double r);
  static ConnectionRule k_nearest(std::size_t k);
  static ConnectionRule theory(double alpha);

  /// "radius:R", "knn:K" or "theory:ALPHA".
  static ConnectionRule parse(const std::string& text);
  std::string str() const;
  void validate() const;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Radius mode: indices within Euclidean radius (inclusive), ascending.
/// k-nearest mode: the k closest by (distance, index). `exclude` removes one
/// vertex (the query itself when it is a vertex). Brute-force reference.
std::vector<std::size_t> near(std::span<const Config> vertices, std::span<const double> query,
                              const ConnectionRule& rule,
                              std::optional<std::size_t> exclude = std::nullopt);

/// Static k-d tree answering the same queries as near() with identical results.
class KdTree {
 public:
  explicit KdTree(std::span<const Config> points, std::size_t leaf_size = 8);

  std::vector<std::size_t> radius(std::span<const double> query, double r,
                                  std::optional<std::size_t> exclude = std::nullopt) const;
  std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k,
                                   std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range into order_
    std::size_t left = 0, right = 0;  // child node ids (0 = none)
    std::vector<double> lo, hi;       // bounding box
  };
  std::size_t build(std::size_t begin, std::size_t end);
  static double box_distance(const Node& node, std::span<const double> q);

  std::span<const Config> points_;
  std::size_t dim_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

enum class NeighborSearch { BruteForce, KdTree, Auto };

struct Roadmap {
  /// 0 = start, 1 = goal, then valid samples in input order.
  std::vector<Config> vertices;
  /// Sorted by neighbour index; weights are Euclidean lengths.
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
  ConnectionRule rule;
  /// Radius actually applied (radius and theory modes).
  double radius_used = 0.0;
  std::size_t valid_milestones = 0;  // |V| = valid samples + 2
  std::size_t validity_checks = 0;   // samples pruned or kept
  std::size_t edge_checks = 0;       // unique vertex pairs tested
  double edge_resolution = 0.0;

  std::size_t edge_count() const;
};

/// Scales unit-cube samples to the environment box, prunes invalid ones,
/// connects every vertex to its neighbours under `rule` when the segment is
/// collision-free. Zero-length pairs are skipped.
Roadmap build_roadmap(const Environment& env, const PointSet& points, const ConnectionRule& rule,
                      NeighborSearch search = NeighborSearch::Auto, unsigned threads = 1);

struct PlanResult {
  bool success = false;
  std::vector<std::size_t> path;  // vertex ids start -> goal
  std::vector<Config> waypoints;
  double cost = 0.0;
  std::size_t valid_milestones = 0;
  std::size_t validity_checks = 0;
  std::size_t edge_checks = 0;
  double radius_used = 0.0;
  double edge_resolution = 0.0;
  /// Every path edge passed segment_valid at half the build resolution.
  bool revalidated = false;
  /// Path edges dropped because the finer check failed (search was rerun).
  std::size_t revalidation_rejects = 0;
  double wall_ms = 0.0;
};

/// A* from vertex 0 to vertex 1 with the Euclidean heuristic.
PlanResult shortest_path(const Roadmap& roadmap);

/// Where the N samples come from.
struct SamplerSpec {
  enum class Kind { Uniform, Halton, Sobol, Grid, File };
  Kind kind = Kind::Uniform;
  std::uint64_t start = 1;             // Halton / Sobol cursor
  std::filesystem::path file;          // File
  std::optional<PointSet> points;      // preloaded File contents

  /// "uniform", "halton", "sobol", "grid" or "file:PATH".
  static SamplerSpec parse(const std::string& text);
  std::string str() const;

  /// N points of dimension d. Uniform uses `seed`; Grid uses the largest k
  /// with k^d <= N; File takes the first N rows.
  PointSet sample(std::size_t n, std::size_t d, std::uint64_t seed) const;
};

/// Sample, build, search. A success is only reported for a path whose edges
/// all pass segment_valid at half the build resolution.
PlanResult plan(const Environment& env, const SamplerSpec& sampler, std::size_t n,
                const ConnectionRule& rule, std::uint64_t seed, unsigned threads = 1);
/// Same on an explicit sample set.
PlanResult plan_with_points(const Environment& env, const PointSet& samples, const ConnectionRule& rule,
                            unsigned threads = 1);

}  // namespace ldsplan
