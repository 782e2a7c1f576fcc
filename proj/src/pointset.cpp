#include "ldsplan/pointset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ldsplan/error.hpp"
#include "ldsplan/rng.hpp"

namespace ldsplan {

PointSet::PointSet(std::size_t n, std::size_t d, std::vector<double> coords,
                   std::string provenance)
    : n_(n), d_(d), coords_(std::move(coords)), provenance_(std::move(provenance)) {
  if (n_ == 0 || d_ == 0) throw InvalidArgument("PointSet needs n >= 1 and d >= 1");
  if (coords_.size() != n_ * d_) {
    throw InvalidArgument("PointSet expects " + std::to_string(n_ * d_) + " coordinates, got " +
                          std::to_string(coords_.size()));
  }
  for (std::size_t idx = 0; idx < coords_.size(); ++idx) {
    const double x = coords_[idx];
    if (!(x >= 0.0 && x <= 1.0)) {
      throw InvalidArgument("PointSet coordinate out of [0,1] at row " + std::to_string(idx / d_) +
                            ", column " + std::to_string(idx % d_));
    }
  }
}

PointSet PointSet::with_provenance(std::string provenance) const {
  PointSet copy = *this;
  copy.provenance_ = std::move(provenance);
  return copy;
}

BoundsBox::BoundsBox(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.empty() || lower.size() != upper.size()) {
    throw InvalidArgument("BoundsBox lower/upper must be nonempty and of equal length");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] < upper[k])) throw InvalidArgument("BoundsBox requires lower < upper on every axis");
  }
}

BoundsBox BoundsBox::unit(std::size_t d) { return uniform(d, 0.0, 1.0); }

BoundsBox BoundsBox::uniform(std::size_t d, double lo, double hi) {
  return BoundsBox(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

double BoundsBox::diagonal() const {
  double s = 0.0;
  for (std::size_t k = 0; k < lower.size(); ++k) s += (upper[k] - lower[k]) * (upper[k] - lower[k]);
  return std::sqrt(s);
}

PointSet sample_uniform(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidArgument("sample_uniform needs n >= 1 and d >= 1");
  Xoshiro256 rng(seed);
  std::vector<double> coords(n * d);
  for (double& x : coords) x = rng.uniform();
  return PointSet(n, d, std::move(coords), "uniform seed=" + std::to_string(seed));
}

PointSet sukharev_grid(std::size_t k, std::size_t d) {
  if (k == 0 || d == 0) throw InvalidArgument("sukharev_grid needs k >= 1 and d >= 1");
  std::size_t count = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (count > std::numeric_limits<std::size_t>::max() / k / d) {
      throw InvalidArgument("sukharev_grid: k^d overflows");
    }
    count *= k;
  }
  std::vector<double> coords(count * d);
  std::vector<std::size_t> digit(d, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      coords[i * d + j] = (static_cast<double>(digit[j]) + 0.5) / static_cast<double>(k);
    }
    for (std::size_t j = d; j-- > 0;) {
      if (++digit[j] < k) break;
      digit[j] = 0;
    }
  }
  return PointSet(count, d, std::move(coords),
                  "sukharev k=" + std::to_string(k) + " d=" + std::to_string(d));
}

PointSet project(const PointSet& ps, std::span<const std::size_t> dims) {
  if (dims.empty()) throw InvalidArgument("project: empty dimension list");
  std::vector<bool> seen(ps.dim(), false);
  for (std::size_t k : dims) {
    if (k >= ps.dim()) throw InvalidArgument("project: index " + std::to_string(k) + " out of range");
    if (seen[k]) throw InvalidArgument("project: duplicate index " + std::to_string(k));
    seen[k] = true;
  }
  const std::size_t m = dims.size();
  std::vector<double> coords(ps.size() * m);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) coords[i * m + j] = ps(i, dims[j]);
  }
  return PointSet(ps.size(), m, std::move(coords), ps.provenance());
}

// Greedy prefix construction. For a prefix P of size m, Warnock's squared L2
// is 3^-d - (2/m) S1 + (1/m^2) S2 with S1 = sum_i prod_k (1 - x_ik^2)/2 and
// S2 = sum_{i,j} prod_k (1 - max(x_ik, x_jk)). Appending a candidate c adds
// its own S1 term, 2 * cross(P, c) and its diagonal term to S2, so each
// candidate costs O(m d).
PointSet greedy_reorder(const PointSet& ps) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  const double base = std::pow(3.0, -static_cast<double>(d));

  std::vector<double> self_term(n);
  std::vector<double> diag_term(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = 1.0;
    double g = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      a *= (1.0 - ps(i, k) * ps(i, k)) / 2.0;
      g *= 1.0 - ps(i, k);
    }
    self_term[i] = a;
    diag_term[i] = g;
  }

  // cross[c] accumulates sum over chosen points p of prod_k (1 - max(x_p, x_c)).
  std::vector<double> cross(n, 0.0);
  std::vector<bool> used(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  double s1 = 0.0;
  double s2 = 0.0;

  for (std::size_t m = 1; m <= n; ++m) {
    const double inv_m = 1.0 / static_cast<double>(m);
    std::size_t best = n;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c]) continue;
      const double t1 = s1 + self_term[c];
      const double t2 = s2 + 2.0 * cross[c] + diag_term[c];
      const double value = base - 2.0 * inv_m * t1 + inv_m * inv_m * t2;
      if (value < best_value) {
        best_value = value;
        best = c;
      }
    }
    used[best] = true;
    order.push_back(best);
    s1 += self_term[best];
    s2 += 2.0 * cross[best] + diag_term[best];
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c]) continue;
      double g = 1.0;
      for (std::size_t k = 0; k < d; ++k) g *= 1.0 - std::max(ps(best, k), ps(c, k));
      cross[c] += g;
    }
  }

  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(ps.row(order[i]).begin(), d, coords.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return PointSet(n, d, std::move(coords), ps.provenance() + " greedy");
}

std::vector<double> scale_to_bounds(const PointSet& ps, const BoundsBox& box) {
  if (box.dim() != ps.dim()) {
    throw InvalidArgument("scale_to_bounds: box dimension " + std::to_string(box.dim()) +
                          " != point dimension " + std::to_string(ps.dim()));
  }
  const std::size_t d = ps.dim();
  std::vector<double> out(ps.size() * d);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out[i * d + k] = box.lower[k] + ps(i, k) * (box.upper[k] - box.lower[k]);
    }
  }
  return out;
}

std::vector<double> unscale_from_bounds(std::span<const double> q, const BoundsBox& box) {
  if (box.dim() != q.size()) throw InvalidArgument("unscale_from_bounds: dimension mismatch");
  std::vector<double> out(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    out[k] = (q[k] - box.lower[k]) / (box.upper[k] - box.lower[k]);
  }
  return out;
}

std::string format_points(const PointSet& ps) {
  std::string out;
  out += std::to_string(ps.size()) + " " + std::to_string(ps.dim()) + "\n";
  if (!ps.provenance().empty()) {
    std::istringstream lines(ps.provenance());
    std::string line;
    while (std::getline(lines, line)) out += "# " + line + "\n";
  }
  char buf[32];
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < ps.dim(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", ps(i, k));
      if (k) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

bool parse_double(std::string_view token, double& value) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

PointSet parse_points(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string provenance;
  std::size_t n = 0;
  std::size_t d = 0;
  bool have_header = false;
  std::vector<double> coords;
  std::size_t line_no = 0;
  std::size_t rows = 0;

  auto fail = [&](const std::string& what) {
    throw FormatError(origin + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      if (!body.empty() && body[0] == ' ') body.remove_prefix(1);
      if (!provenance.empty()) provenance += '\n';
      provenance += body;
      continue;
    }
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (!have_header) {
      if (tokens.size() != 2) fail("expected header 'n d'");
      unsigned long long nn = 0, dd = 0;
      auto r1 = std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), nn);
      auto r2 = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), dd);
      if (r1.ec != std::errc() || r2.ec != std::errc() ||
          r1.ptr != tokens[0].data() + tokens[0].size() ||
          r2.ptr != tokens[1].data() + tokens[1].size() || nn == 0 || dd == 0) {
        fail("malformed header");
      }
      n = nn;
      d = dd;
      have_header = true;
      coords.reserve(n * d);
      continue;
    }
    if (tokens.size() != d) fail("expected " + std::to_string(d) + " coordinates");
    if (rows == n) fail("more rows than the header declares");
    for (auto tok : tokens) {
      double x = 0.0;
      if (!parse_double(tok, x)) fail("not a number: '" + std::string(tok) + "'");
      if (!(x >= 0.0 && x <= 1.0)) fail("coordinate " + std::string(tok) + " outside [0,1]");
      coords.push_back(x);
    }
    ++rows;
  }
  if (!have_header) throw FormatError(origin + ": missing header");
  if (rows != n) {
    throw FormatError(origin + ": header declares " + std::to_string(n) + " rows, found " +
                      std::to_string(rows));
  }
  return PointSet(n, d, std::move(coords), provenance);
}

void save_points(const PointSet& ps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_points(ps);
  if (!out) throw IoError("write failed: " + path.string());
}

PointSet load_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_points(buf.str(), path.string());
}

}  // namespace ldsplan
