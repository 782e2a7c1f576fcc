#include "ldsplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "ldsplan/discrepancy.hpp"
#include "ldsplan/error.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/qmc.hpp"

namespace ldsplan {

// ---------------------------------------------------------------------------
// ConnectionRule

ConnectionRule ConnectionRule::with_radius(double r) {
  ConnectionRule c;
  c.mode = Mode::Radius;
  c.radius = r;
  c.validate();
  return c;
}

ConnectionRule ConnectionRule::k_nearest(std::size_t k) {
  ConnectionRule c;
  c.mode = Mode::KNearest;
  c.k = k;
  c.validate();
  return c;
}

ConnectionRule ConnectionRule::theory(double alpha) {
  ConnectionRule c;
  c.mode = Mode::Theory;
  c.alpha = alpha;
  c.validate();
  return c;
}

void ConnectionRule::validate() const {
  switch (mode) {
    case Mode::Radius:
      if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("connection radius must be > 0");
      break;
    case Mode::KNearest:
      if (k < 1) throw InvalidArgument("k-nearest rule needs k >= 1");
      break;
    case Mode::Theory:
      if (!(alpha > 1.0)) throw InvalidArgument("theory rule needs alpha > 1");
      break;
  }
}

ConnectionRule ConnectionRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("connection rule must be radius:R, knn:K or theory:ALPHA");
  const std::string mode = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    if (mode == "radius") {
      const double r = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return with_radius(r);
    }
    if (mode == "knn") {
      const long long k = std::stoll(value, &used);
      if (used != value.size() || k < 1) throw std::invalid_argument(value);
      return k_nearest(static_cast<std::size_t>(k));
    }
    if (mode == "theory") {
      const double a = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return theory(a);
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidArgument("bad connection rule value '" + value + "'");
  }
  throw InvalidArgument("unknown connection rule '" + mode + "'");
}

std::string ConnectionRule::str() const {
  std::ostringstream out;
  out.precision(17);
  switch (mode) {
    case Mode::Radius: out << "radius:" << radius; break;
    case Mode::KNearest: out << "knn:" << k; break;
    case Mode::Theory: out << "theory:" << alpha; break;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Neighbour search

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

namespace {

using Ranked = std::pair<double, std::size_t>;

}  // namespace

std::vector<std::size_t> near(std::span<const Config> vertices, std::span<const double> query,
                              const ConnectionRule& rule, std::optional<std::size_t> exclude) {
  std::vector<std::size_t> out;
  if (rule.mode == ConnectionRule::Mode::KNearest) {
    std::vector<Ranked> ranked;
    ranked.reserve(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (exclude && *exclude == i) continue;
      ranked.emplace_back(squared_distance(vertices[i], query), i);
    }
    const std::size_t k = std::min(rule.k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    for (std::size_t t = 0; t < k; ++t) out.push_back(ranked[t].second);
    return out;
  }
  const double r2 = rule.radius * rule.radius;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (exclude && *exclude == i) continue;
    if (squared_distance(vertices[i], query) <= r2) out.push_back(i);
  }
  return out;
}

KdTree::KdTree(std::span<const Config> points, std::size_t leaf_size)
    : points_(points), dim_(points.empty() ? 0 : points[0].size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.emplace_back();  // id 0 is the "no child" sentinel
  if (!points.empty()) build(0, points.size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.emplace_back();
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo.assign(dim_, std::numeric_limits<double>::infinity());
  node.hi.assign(dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t t = begin; t < end; ++t) {
    const auto& p = points_[order_[t]];
    for (std::size_t k = 0; k < dim_; ++k) {
      node.lo[k] = std::min(node.lo[k], p[k]);
      node.hi[k] = std::max(node.hi[k], p[k]);
    }
  }
  if (end - begin > leaf_size_) {
    std::size_t axis = 0;
    for (std::size_t k = 1; k < dim_; ++k) {
      if (node.hi[k] - node.lo[k] > node.hi[axis] - node.lo[axis]) axis = k;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                       const double pa = points_[a][axis];
                       const double pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    node.left = build(begin, mid);
    node.right = build(mid, end);
  }
  nodes_[id] = std::move(node);
  return id;
}

double KdTree::box_distance(const Node& node, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    double diff = 0.0;
    if (q[k] < node.lo[k]) {
      diff = node.lo[k] - q[k];
    } else if (q[k] > node.hi[k]) {
      diff = q[k] - node.hi[k];
    }
    s += diff * diff;
  }
  return s;
}

std::vector<std::size_t> KdTree::radius(std::span<const double> query, double r,
                                        std::optional<std::size_t> exclude) const {
  std::vector<std::size_t> out;
  if (points_.empty()) return out;
  const double r2 = r * r;
  std::vector<std::size_t> stack{1};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance(node, query) > r2) continue;
    if (node.left == 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t i = order_[t];
        if (exclude && *exclude == i) continue;
        if (squared_distance(points_[i], query) <= r2) out.push_back(i);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> KdTree::nearest(std::span<const double> query, std::size_t k,
                                         std::optional<std::size_t> exclude) const {
  std::vector<std::size_t> out;
  if (points_.empty() || k == 0) return out;
  // Max-heap on (distance, index): top is the current worst of the best k.
  std::priority_queue<Ranked> best;
  auto visit = [&](auto&& self, std::size_t id) -> void {
    const Node& node = nodes_[id];
    if (best.size() == k && box_distance(node, query) > best.top().first) return;
    if (node.left == 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t i = order_[t];
        if (exclude && *exclude == i) continue;
        const Ranked cand{squared_distance(points_[i], query), i};
        if (best.size() < k) {
          best.push(cand);
        } else if (cand < best.top()) {
          best.pop();
          best.push(cand);
        }
      }
      return;
    }
    const double dl = box_distance(nodes_[node.left], query);
    const double dr = box_distance(nodes_[node.right], query);
    if (dl <= dr) {
      self(self, node.left);
      self(self, node.right);
    } else {
      self(self, node.right);
      self(self, node.left);
    }
  };
  visit(visit, 1);
  std::vector<Ranked> ranked;
  while (!best.empty()) {
    ranked.push_back(best.top());
    best.pop();
  }
  std::sort(ranked.begin(), ranked.end());
  for (const auto& r : ranked) out.push_back(r.second);
  return out;
}

// ---------------------------------------------------------------------------
// Roadmap

std::size_t Roadmap::edge_count() const {
  std::size_t e = 0;
  for (const auto& nb : adjacency) e += nb.size();
  return e / 2;
}

Roadmap build_roadmap(const Environment& env, const PointSet& points, const ConnectionRule& rule,
                      NeighborSearch search, unsigned threads) {
  rule.validate();
  if (points.dim() != env.dim()) {
    throw InvalidArgument("build_roadmap: sample dimension " + std::to_string(points.dim()) +
                          " != environment dimension " + std::to_string(env.dim()));
  }
  const std::size_t d = env.dim();
  Roadmap rm;
  rm.rule = rule;
  rm.edge_resolution = env.edge_resolution();

  const auto scaled = scale_to_bounds(points, env.bounds());
  rm.vertices.push_back(env.start());
  rm.vertices.push_back(env.goal());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::span<const double> q(scaled.data() + i * d, d);
    ++rm.validity_checks;
    if (env.is_valid(q)) rm.vertices.emplace_back(q.begin(), q.end());
  }
  rm.valid_milestones = rm.vertices.size();

  ConnectionRule effective = rule;
  if (rule.mode == ConnectionRule::Mode::Theory) {
    // r_N is defined on the unit cube; scale by the longest box side.
    const double linf = star_discrepancy_exact(points).value;
    const RadiusRule rr = theory_radius(std::clamp(linf, std::numeric_limits<double>::min(), 1.0), rule.alpha, d);
    double side = 0.0;
    for (std::size_t k = 0; k < d; ++k) side = std::max(side, env.bounds().upper[k] - env.bounds().lower[k]);
    effective = ConnectionRule::with_radius(rr.radius * side);
  }
  if (effective.mode == ConnectionRule::Mode::Radius) rm.radius_used = effective.radius;

  const std::size_t nv = rm.vertices.size();
  const bool use_tree = search == NeighborSearch::KdTree || (search == NeighborSearch::Auto && d <= 8 && nv > 64);
  std::optional<KdTree> tree;
  if (use_tree) tree.emplace(rm.vertices);

  // Candidate pairs per vertex, merged into a sorted unique list so each
  // undirected pair is checked once regardless of scheduling.
  std::vector<std::vector<std::size_t>> nbrs(nv);
  parallel_for(nv, threads, [&](std::size_t v) {
    const auto& q = rm.vertices[v];
    if (!tree) {
      nbrs[v] = near(rm.vertices, q, effective, v);
    } else if (effective.mode == ConnectionRule::Mode::KNearest) {
      nbrs[v] = tree->nearest(q, effective.k, v);
    } else {
      nbrs[v] = tree->radius(q, effective.radius, v);
    }
  });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t p : nbrs[v]) pairs.emplace_back(std::min(v, p), std::max(v, p));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<double> weight(pairs.size(), -1.0);
  std::vector<char> checked(pairs.size(), 0);
  parallel_for(pairs.size(), threads, [&](std::size_t e) {
    const auto& a = rm.vertices[pairs[e].first];
    const auto& b = rm.vertices[pairs[e].second];
    const double len = std::sqrt(squared_distance(a, b));
    if (len == 0.0) return;
    checked[e] = 1;
    if (env.segment_valid(a, b)) weight[e] = len;
  });

  rm.adjacency.assign(nv, {});
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    rm.edge_checks += static_cast<std::size_t>(checked[e]);
    if (weight[e] < 0.0) continue;
    rm.adjacency[pairs[e].first].emplace_back(pairs[e].second, weight[e]);
    rm.adjacency[pairs[e].second].emplace_back(pairs[e].first, weight[e]);
  }
  for (auto& nb : rm.adjacency) std::sort(nb.begin(), nb.end());
  return rm;
}

PlanResult shortest_path(const Roadmap& rm) {
  PlanResult res;
  res.valid_milestones = rm.valid_milestones;
  res.validity_checks = rm.validity_checks;
  res.edge_checks = rm.edge_checks;
  res.radius_used = rm.radius_used;
  res.edge_resolution = rm.edge_resolution;
  const std::size_t nv = rm.vertices.size();
  if (nv < 2) return res;
  constexpr std::size_t kStart = 0;
  constexpr std::size_t kGoal = 1;

  auto heuristic = [&](std::size_t v) { return std::sqrt(squared_distance(rm.vertices[v], rm.vertices[kGoal])); };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(nv, inf);
  std::vector<std::size_t> parent(nv, nv);
  std::vector<char> closed(nv, 0);
  using Entry = std::pair<double, std::size_t>;  // (f, vertex)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[kStart] = 0.0;
  open.emplace(heuristic(kStart), kStart);
  while (!open.empty()) {
    const auto [f, v] = open.top();
    open.pop();
    if (closed[v]) continue;
    closed[v] = 1;
    if (v == kGoal) break;
    for (const auto& [u, w] : rm.adjacency[v]) {
      if (closed[u]) continue;
      const double cand = g[v] + w;
      if (cand < g[u]) {
        g[u] = cand;
        parent[u] = v;
        open.emplace(cand + heuristic(u), u);
      }
    }
  }
  if (!closed[kGoal]) return res;
  res.success = true;
  res.cost = g[kGoal];
  for (std::size_t v = kGoal; v != nv; v = parent[v]) {
    res.path.push_back(v);
    if (v == kStart) break;
  }
  std::reverse(res.path.begin(), res.path.end());
  for (std::size_t v : res.path) res.waypoints.push_back(rm.vertices[v]);
  return res;
}

// ---------------------------------------------------------------------------
// Samplers and plan()

SamplerSpec SamplerSpec::parse(const std::string& text) {
  SamplerSpec s;
  if (text == "uniform") {
    s.kind = Kind::Uniform;
  } else if (text == "halton") {
    s.kind = Kind::Halton;
  } else if (text == "sobol") {
    s.kind = Kind::Sobol;
  } else if (text == "grid") {
    s.kind = Kind::Grid;
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    s.kind = Kind::File;
    s.file = text.substr(5);
  } else {
    throw InvalidArgument("unknown sampler '" + text + "' (expected uniform|halton|sobol|grid|file:PATH)");
  }
  return s;
}

std::string SamplerSpec::str() const {
  switch (kind) {
    case Kind::Uniform: return "uniform";
    case Kind::Halton: return "halton";
    case Kind::Sobol: return "sobol";
    case Kind::Grid: return "grid";
    case Kind::File: return "file:" + file.string();
  }
  return "?";
}

PointSet SamplerSpec::sample(std::size_t n, std::size_t d, std::uint64_t seed) const {
  switch (kind) {
    case Kind::Uniform: return sample_uniform(n, d, seed);
    case Kind::Halton: return halton(n, d, start);
    case Kind::Sobol: return sobol(n, d, start);
    case Kind::Grid: {
      std::size_t k = 1;
      while (true) {
        std::size_t count = 1;
        bool over = false;
        for (std::size_t j = 0; j < d && !over; ++j) {
          count *= k + 1;
          over = count > n;
        }
        if (over) break;
        ++k;
      }
      return sukharev_grid(k, d);
    }
    case Kind::File: {
      const PointSet ps = points ? *points : load_points(file);
      if (ps.dim() != d) {
        throw InvalidArgument("sampler file " + file.string() + " has dimension " + std::to_string(ps.dim()) +
                              ", environment needs " + std::to_string(d));
      }
      if (ps.size() < n) {
        throw InvalidArgument("sampler file " + file.string() + " has " + std::to_string(ps.size()) +
                              " points, need " + std::to_string(n));
      }
      if (ps.size() == n) return ps;
      const auto c = ps.coords();
      return PointSet(n, d, std::vector<double>(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n * d)),
                      ps.provenance());
    }
  }
  throw InvalidArgument("unknown sampler kind");
}

PlanResult plan_with_points(const Environment& env, const PointSet& samples, const ConnectionRule& rule,
                            unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  Roadmap rm = build_roadmap(env, samples, rule, NeighborSearch::Auto, threads);
  // A path edge that fails the finer check is dropped and the search rerun,
  // so a reported success always passes it.
  std::size_t rejected = 0;
  PlanResult res = shortest_path(rm);
  while (res.success) {
    std::size_t bad = res.path.size();
    for (std::size_t t = 0; t + 1 < res.path.size(); ++t) {
      if (!env.segment_valid(res.waypoints[t], res.waypoints[t + 1], 0.5)) {
        bad = t;
        break;
      }
    }
    if (bad == res.path.size()) {
      res.revalidated = true;
      break;
    }
    const std::size_t a = res.path[bad], b = res.path[bad + 1];
    std::erase_if(rm.adjacency[a], [&](const auto& e) { return e.first == b; });
    std::erase_if(rm.adjacency[b], [&](const auto& e) { return e.first == a; });
    ++rejected;
    res = shortest_path(rm);
  }
  res.revalidation_rejects = rejected;
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

PlanResult plan(const Environment& env, const SamplerSpec& sampler, std::size_t n, const ConnectionRule& rule,
                std::uint64_t seed, unsigned threads) {
  if (n == 0) throw InvalidArgument("plan: N must be >= 1");
  return plan_with_points(env, sampler.sample(n, env.dim(), seed), rule, threads);
}

}  // namespace ldsplan
