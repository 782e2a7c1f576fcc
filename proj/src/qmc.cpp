#include "ldsplan/qmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <bit>
#include <fstream>
#include <sstream>

#include "ldsplan/error.hpp"

namespace ldsplan {

namespace {

constexpr std::size_t kPrimeCount = 1000;

const std::vector<std::uint32_t>& primes() {
  static const std::vector<std::uint32_t> table = [] {
    std::vector<std::uint32_t> out;
    out.reserve(kPrimeCount);
    for (std::uint32_t c = 2; out.size() < kPrimeCount; ++c) {
      bool is_prime = true;
      for (std::uint32_t p : out) {
        if (p * p > c) break;
        if (c % p == 0) {
          is_prime = false;
          break;
        }
      }
      if (is_prime) out.push_back(c);
    }
    return out;
  }();
  return table;
}

constexpr unsigned kSobolBits = 32;

std::array<std::uint32_t, kSobolBits> direction_vector(const SobolDirectionTable& table,
                                                       std::size_t dim) {
  std::array<std::uint32_t, kSobolBits> v{};
  if (dim == 1) {
    for (unsigned k = 0; k < kSobolBits; ++k) v[k] = 1u << (kSobolBits - 1 - k);
    return v;
  }
  const auto& e = table.entry(dim);
  const unsigned s = e.degree;
  for (unsigned k = 0; k < s && k < kSobolBits; ++k) v[k] = e.m[k] << (kSobolBits - 1 - k);
  for (unsigned k = s; k < kSobolBits; ++k) {
    v[k] = v[k - s] ^ (v[k - s] >> s);
    for (unsigned l = 1; l < s; ++l) {
      if ((e.coefficients >> (s - 1 - l)) & 1u) v[k] ^= v[k - l];
    }
  }
  return v;
}

}  // namespace

double radical_inverse(std::uint64_t i, std::uint32_t base) {
  if (base < 2) throw InvalidArgument("radical_inverse: base must be >= 2");
  unsigned __int128 reversed = 0;
  unsigned __int128 denom = 1;
  while (i > 0) {
    reversed = reversed * base + i % base;
    denom *= base;
    i /= base;
  }
  // Long digit strings can round up to 1.0; keep the result in [0, 1).
  return std::min(static_cast<double>(reversed) / static_cast<double>(denom), std::nextafter(1.0, 0.0));
}

std::uint32_t nth_prime(std::size_t k) {
  if (k >= kPrimeCount) throw InvalidArgument("nth_prime: index beyond prime table");
  return primes()[k];
}

std::size_t max_halton_dim() { return kPrimeCount; }

PointSet halton(std::size_t n, std::size_t d, std::uint64_t start) {
  if (n == 0 || d == 0) throw InvalidArgument("halton needs n >= 1 and d >= 1");
  if (d > max_halton_dim()) {
    throw InvalidArgument("halton: dimension " + std::to_string(d) + " exceeds prime table (" +
                          std::to_string(max_halton_dim()) + ")");
  }
  if (start < 1) throw InvalidArgument("halton: start index must be >= 1");
  std::vector<double> coords(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < d; ++k) coords[j * d + k] = radical_inverse(start + j, primes()[k]);
  }
  return PointSet(n, d, std::move(coords),
                  "halton d=" + std::to_string(d) + " start=" + std::to_string(start));
}

SobolDirectionTable SobolDirectionTable::parse(const std::string& text, const std::string& origin) {
  SobolDirectionTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fail = [&](const std::string& what) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": " + what);
    };
    std::istringstream fields(line);
    long long dim = 0, s = 0, a = 0;
    if (!(fields >> dim >> s >> a)) fail("expected 'd s a m_1 ... m_s'");
    if (dim != static_cast<long long>(table.entries_.size()) + 2) fail("dimensions must be consecutive from 2");
    if (s < 1 || s > 31) fail("degree out of range");
    if (a < 0 || a >= (1LL << (s - 1))) fail("polynomial coefficients out of range");
    Entry e;
    e.degree = static_cast<std::uint32_t>(s);
    e.coefficients = static_cast<std::uint32_t>(a);
    for (long long j = 1; j <= s; ++j) {
      long long m = 0;
      if (!(fields >> m)) fail("missing direction integer m_" + std::to_string(j));
      if (m <= 0 || m % 2 == 0 || m >= (1LL << j)) {
        fail("direction integer m_" + std::to_string(j) + " must be odd and < 2^" + std::to_string(j));
      }
      e.m.push_back(static_cast<std::uint32_t>(m));
    }
    table.entries_.push_back(std::move(e));
  }
  if (!header_seen) throw FormatError(origin + ": empty direction-number file");
  return table;
}

SobolDirectionTable SobolDirectionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

PointSet sobol(std::size_t n, std::size_t d, std::uint64_t start, const SobolDirectionTable& table) {
  if (n == 0 || d == 0) throw InvalidArgument("sobol needs n >= 1 and d >= 1");
  if (d > table.max_dim()) {
    throw InvalidArgument("sobol: dimension " + std::to_string(d) + " exceeds direction table (" +
                          std::to_string(table.max_dim()) + ")");
  }
  if (start < 1) throw InvalidArgument("sobol: start index must be >= 1");
  if (start + n > (std::uint64_t{1} << kSobolBits)) throw InvalidArgument("sobol: index beyond 2^32");

  std::vector<std::array<std::uint32_t, kSobolBits>> v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = direction_vector(table, k + 1);

  // State for index `start` from its Gray code, then one XOR per step.
  std::vector<std::uint32_t> x(d, 0);
  const std::uint64_t gray = start ^ (start >> 1);
  for (unsigned b = 0; b < kSobolBits; ++b) {
    if ((gray >> b) & 1u) {
      for (std::size_t k = 0; k < d; ++k) x[k] ^= v[k][b];
    }
  }

  constexpr double scale = 0x1.0p-32;
  std::vector<double> coords(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) {
      const auto bit = static_cast<unsigned>(std::countr_zero(start + j));
      for (std::size_t k = 0; k < d; ++k) x[k] ^= v[k][bit];
    }
    for (std::size_t k = 0; k < d; ++k) coords[j * d + k] = static_cast<double>(x[k]) * scale;
  }
  return PointSet(n, d, std::move(coords),
                  "sobol d=" + std::to_string(d) + " start=" + std::to_string(start));
}

SequenceCursor SequenceCursor::for_run(SequenceKind kind, std::size_t dim, std::size_t n,
                                       std::uint64_t run) {
  if (run < 1) throw InvalidArgument("run index is 1-based");
  return SequenceCursor{kind, dim, (run - 1) * n + 1};
}

PointSet SequenceCursor::take(std::size_t n) {
  if (next < 1) throw InvalidArgument("cursor index must be >= 1");
  PointSet out = kind == SequenceKind::Halton ? halton(n, dim, next) : sobol(n, dim, next);
  next += n;
  return out;
}

}  // namespace ldsplan
