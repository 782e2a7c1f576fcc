#include "ldsplan/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ldsplan/error.hpp"

namespace ldsplan {

// ---------------------------------------------------------------------------
// Environment

std::size_t Environment::segment_steps(double length, double resolution_scale) const {
  const double step = edge_resolution() * resolution_scale;
  if (!(step > 0.0)) throw InvalidArgument("segment check resolution must be positive");
  std::size_t steps = 1;
  while (length / static_cast<double>(steps) > step) steps *= 2;
  return steps;
}

bool Environment::segment_valid(std::span<const double> a, std::span<const double> b,
                                double resolution_scale) const {
  const std::size_t d = dim();
  if (a.size() != d || b.size() != d) throw InvalidArgument("segment_valid: dimension mismatch");
  double len2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) len2 += (b[k] - a[k]) * (b[k] - a[k]);
  if (!is_valid(a)) return false;
  if (len2 == 0.0) return true;
  if (!is_valid(b)) return false;
  const std::size_t steps = segment_steps(std::sqrt(len2), resolution_scale);
  Config q(d);
  // Coarse-to-fine: midpoints of each dyadic level, so obvious collisions
  // are found early. The checked set is every k/steps.
  for (std::size_t stride = steps / 2; stride >= 1; stride /= 2) {
    for (std::size_t k = stride; k < steps; k += 2 * stride) {
      const double t = static_cast<double>(k) / static_cast<double>(steps);
      for (std::size_t c = 0; c < d; ++c) q[c] = a[c] + t * (b[c] - a[c]);
      if (!is_valid(q)) return false;
    }
    if (stride == 1) break;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Maze

namespace {

constexpr double kHalfDiag = std::numbers::sqrt2 / 2.0;

}  // namespace

MazeEnv::MazeEnv(std::size_t width, std::size_t height, std::vector<bool> free, double radius,
                 Config start, Config goal)
    : width_(width),
      height_(height),
      free_(std::move(free)),
      radius_(radius),
      bounds_({0.0, 0.0}, {static_cast<double>(width), static_cast<double>(height)}),
      start_(std::move(start)),
      goal_(std::move(goal)) {
  if (width_ == 0 || height_ == 0 || free_.size() != width_ * height_) {
    throw InvalidArgument("MazeEnv: grid must be nonempty with width*height cells");
  }
  if (!(radius_ >= 0.0) || !std::isfinite(radius_)) throw InvalidArgument("MazeEnv: radius must be >= 0");
  if (start_.size() != 2 || goal_.size() != 2) throw InvalidArgument("MazeEnv: start/goal must be 2-D");

  // Vertical distance to the nearest blocked pixel per column (rows -1 and
  // height are blocked), then a windowed horizontal pass.
  const long w = static_cast<long>(width_);
  const long h = static_cast<long>(height_);
  const long window = static_cast<long>(std::ceil(radius_)) + 3;
  const double cap = static_cast<double>(window) + 1.0;
  std::vector<long> vert(width_ * height_);
  for (long x = 0; x < w; ++x) {
    long last = -1;
    for (long y = 0; y < h; ++y) {
      if (!pixel_free(x, y)) last = y;
      vert[y * w + x] = y - last;
    }
    long next = h;
    for (long y = h - 1; y >= 0; --y) {
      if (!pixel_free(x, y)) next = y;
      vert[y * w + x] = std::min(vert[y * w + x], next - y);
    }
  }
  clearance_.assign(width_ * height_, static_cast<float>(cap));
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double best2 = cap * cap;
      // Columns -1 and width are blocked everywhere.
      best2 = std::min(best2, static_cast<double>((x + 1) * (x + 1)));
      best2 = std::min(best2, static_cast<double>((w - x) * (w - x)));
      for (long xx = std::max(0L, x - window); xx <= std::min(w - 1, x + window); ++xx) {
        const double dx = static_cast<double>(xx - x);
        const double dy = static_cast<double>(vert[y * w + xx]);
        best2 = std::min(best2, dx * dx + dy * dy);
      }
      clearance_[y * w + x] = static_cast<float>(std::min(cap, std::sqrt(best2)));
    }
  }

  if (!is_valid(start_)) throw InvalidArgument("MazeEnv: start configuration is in collision");
  if (!is_valid(goal_)) throw InvalidArgument("MazeEnv: goal configuration is in collision");
}

bool MazeEnv::pixel_free(long x, long y) const {
  if (x < 0 || y < 0 || x >= static_cast<long>(width_) || y >= static_cast<long>(height_)) return false;
  return free_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)];
}

bool MazeEnv::is_valid_exhaustive(std::span<const double> q) const {
  const double cx = q[0];
  const double cy = q[1];
  if (!(cx >= 0.0 && cy >= 0.0 && cx <= static_cast<double>(width_) && cy <= static_cast<double>(height_))) {
    return false;
  }
  const long x0 = static_cast<long>(std::floor(cx - radius_)) - 1;
  const long x1 = static_cast<long>(std::floor(cx + radius_)) + 1;
  const long y0 = static_cast<long>(std::floor(cy - radius_)) - 1;
  const long y1 = static_cast<long>(std::floor(cy + radius_)) + 1;
  const double r2 = radius_ * radius_;
  for (long py = y0; py <= y1; ++py) {
    for (long px = x0; px <= x1; ++px) {
      if (pixel_free(px, py)) continue;
      const double nx = std::clamp(cx, static_cast<double>(px), static_cast<double>(px + 1));
      const double ny = std::clamp(cy, static_cast<double>(py), static_cast<double>(py + 1));
      const double dx = cx - nx;
      const double dy = cy - ny;
      if (dx * dx + dy * dy <= r2) return false;
    }
  }
  return true;
}

bool MazeEnv::is_valid(std::span<const double> q) const {
  if (q.size() != 2) throw InvalidArgument("MazeEnv::is_valid: expected a 2-D configuration");
  const double cx = q[0];
  const double cy = q[1];
  if (!(cx >= 0.0 && cy >= 0.0 && cx <= static_cast<double>(width_) && cy <= static_cast<double>(height_))) {
    return false;
  }
  const auto px = std::min(static_cast<std::size_t>(cx), width_ - 1);
  const auto py = std::min(static_cast<std::size_t>(cy), height_ - 1);
  const double c = clearance_[py * width_ + px];
  // Nearest blocked square is at least c - sqrt(2) and at most c + sqrt(2)/2
  // away from any point of this pixel.
  if (c - 2.0 * kHalfDiag > radius_) return true;
  if (c + kHalfDiag <= radius_) return false;
  return is_valid_exhaustive(q);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  auto fail = [&](const std::string& what) { throw FormatError(path.string() + ": " + what); };

  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };
  auto next_number = [&](const char* what) -> long {
    const std::string tok = next_token();
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad ") + what);
    }
    return 0;
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") fail("not a PGM file (expected P2 or P5)");
  const long w = next_number("width");
  const long h = next_number("height");
  const long maxval = next_number("maxval");
  if (w <= 0 || h <= 0) fail("image must be nonempty");
  if (maxval <= 0 || maxval > 65535) fail("maxval out of range");
  const long threshold = (maxval + 1) / 2;

  GrayImage img;
  img.width = static_cast<std::size_t>(w);
  img.height = static_cast<std::size_t>(h);
  img.free.resize(img.width * img.height);
  if (magic == "P2") {
    for (std::size_t i = 0; i < img.free.size(); ++i) {
      const long v = next_number("pixel");
      if (v < 0 || v > maxval) fail("pixel value out of range");
      img.free[i] = v >= threshold;
    }
  } else {
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(img.free.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail("truncated pixel data");
    for (std::size_t i = 0; i < img.free.size(); ++i) {
      const long v = bytes == 1 ? raw[i] : (raw[2 * i] << 8 | raw[2 * i + 1]);
      img.free[i] = v >= threshold;
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (bool f : img.free) out.put(static_cast<char>(f ? 255 : 0));
  if (!out) throw IoError("write failed: " + path.string());
}

std::unique_ptr<MazeEnv> maze_load(const std::filesystem::path& grid, double radius, Config start,
                                   Config goal) {
  GrayImage img = read_pgm(grid);
  return std::make_unique<MazeEnv>(img.width, img.height, std::move(img.free), radius, std::move(start),
                                   std::move(goal));
}

// ---------------------------------------------------------------------------
// Corridor

bool corridor_is_valid(std::span<const double> q, double lambda) {
  const std::size_t d = q.size();
  if (d == 0) return false;
  // Witness k (0-based) needs k <= prefix and k >= suffix_start - 1.
  std::size_t prefix = 0;
  while (prefix < d && q[prefix] <= lambda) ++prefix;
  std::size_t suffix_start = d;
  while (suffix_start > 0 && q[suffix_start - 1] >= 1.0 - lambda) --suffix_start;
  const std::size_t lo = suffix_start == 0 ? 0 : suffix_start - 1;
  return lo <= std::min(prefix, d - 1);
}

CorridorEnv::CorridorEnv(std::size_t d, double lambda)
    : d_(d),
      lambda_(lambda),
      bounds_(BoundsBox::unit(d == 0 ? 1 : d)),
      start_(d, lambda / 2.0),
      goal_(d, 1.0 - lambda / 2.0) {
  if (d == 0) throw InvalidArgument("CorridorEnv: d must be >= 1");
  if (!(lambda > 0.0 && lambda < 0.5)) throw InvalidArgument("CorridorEnv: lambda must lie in (0, 0.5)");
}

double CorridorEnv::edge_resolution() const { return 0.01 * std::sqrt(static_cast<double>(d_)); }

std::unique_ptr<CorridorEnv> corridor_env(std::size_t d, double lambda) {
  return std::make_unique<CorridorEnv>(d, lambda);
}

// ---------------------------------------------------------------------------
// Kinematic chain

namespace {

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int orientation(Point2 o, Point2 a, Point2 b) {
  const double v = cross(o, a, b);
  return (v > 0) - (v < 0);
}

bool on_segment(Point2 p, Point2 q, Point2 r) {
  // r collinear with pq: inside the bounding box?
  return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
         r.y <= std::max(p.y, q.y);
}

}  // namespace

bool segment_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

std::vector<Segment2> chain_fk(std::span<const double> theta, const ChainSpec& spec) {
  if (theta.size() != spec.links) throw InvalidArgument("chain_fk: expected one angle per link");
  std::vector<Segment2> out;
  out.reserve(spec.links);
  Point2 joint = spec.base;
  double heading = 0.0;
  for (double t : theta) {
    heading += t;
    const Point2 next{joint.x + spec.link_length * std::cos(heading),
                      joint.y + spec.link_length * std::sin(heading)};
    out.push_back({joint, next});
    joint = next;
  }
  return out;
}

bool chain_is_valid(std::span<const double> theta, const ChainSpec& spec) {
  const auto links = chain_fk(theta, spec);
  for (const auto& l : links) {
    for (const auto& o : spec.obstacles) {
      if (segment_intersect(l.a, l.b, o.a, o.b)) return false;
    }
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    for (std::size_t j = i + 2; j < links.size(); ++j) {
      if (segment_intersect(links[i].a, links[i].b, links[j].a, links[j].b)) return false;
    }
  }
  return true;
}

ChainEnv::ChainEnv(ChainSpec spec, Config start, Config goal)
    : spec_(std::move(spec)),
      bounds_(BoundsBox::uniform(spec_.links == 0 ? 1 : spec_.links, -std::numbers::pi, std::numbers::pi)),
      start_(std::move(start)),
      goal_(std::move(goal)) {
  if (spec_.links < 2) throw InvalidArgument("ChainEnv: need at least two links");
  if (!(spec_.link_length > 0.0)) throw InvalidArgument("ChainEnv: link length must be positive");
  for (const auto& o : spec_.obstacles) {
    if (!std::isfinite(o.a.x) || !std::isfinite(o.a.y) || !std::isfinite(o.b.x) || !std::isfinite(o.b.y)) {
      throw InvalidArgument("ChainEnv: obstacle coordinates must be finite");
    }
  }
  if (start_.size() != spec_.links || goal_.size() != spec_.links) {
    throw InvalidArgument("ChainEnv: start/goal need one angle per link");
  }
  for (const Config* q : {&start_, &goal_}) {
    for (double t : *q) {
      if (!(t >= -std::numbers::pi && t <= std::numbers::pi)) {
        throw InvalidArgument("ChainEnv: start/goal angles must lie in [-pi, pi]");
      }
    }
  }
  if (!is_valid(start_)) throw InvalidArgument("ChainEnv: start configuration is in collision");
  if (!is_valid(goal_)) throw InvalidArgument("ChainEnv: goal configuration is in collision");
}

double ChainEnv::edge_resolution() const { return 0.01 * bounds_.diagonal(); }

// ---------------------------------------------------------------------------
// Descriptor files

namespace {

Config read_config(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("environment: missing '") + key + "'");
  return j.at(key).get<Config>();
}

}  // namespace

std::unique_ptr<Environment> parse_environment(const std::string& json_text,
                                               const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("environment: ") + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "maze") {
      std::filesystem::path grid = j.at("grid").get<std::string>();
      if (grid.is_relative()) grid = base_dir / grid;
      return maze_load(grid, j.value("radius", 6.0), read_config(j, "start"), read_config(j, "goal"));
    }
    if (kind == "corridor") {
      return corridor_env(j.at("dim").get<std::size_t>(), j.at("lambda").get<double>());
    }
    if (kind == "chain") {
      ChainSpec spec;
      spec.links = j.value("links", std::size_t{10});
      spec.link_length = j.value("link_length", 1.0 / static_cast<double>(spec.links));
      if (j.contains("base")) {
        const auto b = j.at("base").get<std::vector<double>>();
        if (b.size() != 2) throw FormatError("environment: base must be [x, y]");
        spec.base = {b[0], b[1]};
      }
      for (const auto& o : j.value("obstacles", nlohmann::json::array())) {
        const auto v = o.get<std::vector<double>>();
        if (v.size() != 4) throw FormatError("environment: obstacle must be [x1, y1, x2, y2]");
        spec.obstacles.push_back({{v[0], v[1]}, {v[2], v[3]}});
      }
      return std::make_unique<ChainEnv>(std::move(spec), read_config(j, "start"), read_config(j, "goal"));
    }
    throw FormatError("environment: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("environment: ") + e.what());
  }
}

std::unique_ptr<Environment> load_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_environment(buf.str(), path.parent_path());
}

}  // namespace ldsplan
