#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldsplan/pointset.hpp"

namespace ldsplan {

/// Reflects the base-b digits of i about the radix point. Digits are
/// accumulated in integer arithmetic and divided once.
double radical_inverse(std::uint64_t i, std::uint32_t base);

/// The k-th prime, 0-based (2, 3, 5, ...). Supports k < max_halton_dim().
std::uint32_t nth_prime(std::size_t k);
std::size_t max_halton_dim();

/// Halton points for indices start, start+1, ..., start+n-1 (start >= 1).
PointSet halton(std::size_t n, std::size_t d, std::uint64_t start);

/// Primitive-polynomial data for Sobol dimensions 2.. in the Joe-Kuo layout.
class SobolDirectionTable {
 public:
  struct Entry {
    std::uint32_t degree = 0;        // s
    std::uint32_t coefficients = 0;  // a: interior polynomial bits
    std::vector<std::uint32_t> m;    // initial direction integers, size s
  };

  /// Parses `d s a m_1 ... m_s` lines after a header line. Entries must start
  /// at dimension 2 and be consecutive.
  static SobolDirectionTable parse(const std::string& text, const std::string& origin = "<memory>");
  static SobolDirectionTable load(const std::filesystem::path& path);
  /// The table bundled with the library (Joe-Kuo new-joe-kuo-6 entries).
  static const SobolDirectionTable& bundled();

  /// Highest supported dimension (entries + 1 for the van der Corput axis).
  std::size_t max_dim() const { return entries_.size() + 1; }
  const Entry& entry(std::size_t dim) const { return entries_.at(dim - 2); }

 private:
  std::vector<Entry> entries_;
};

/// Sobol points for indices start .. start+n-1 (start >= 1), 32-bit
/// Gray-code construction.
PointSet sobol(std::size_t n, std::size_t d, std::uint64_t start,
               const SobolDirectionTable& table = SobolDirectionTable::bundled());

enum class SequenceKind { Halton, Sobol };

/// Position in an infinite sequence. Run i of size N reads indices
/// (i-1)N+1 .. iN.
struct SequenceCursor {
  SequenceKind kind = SequenceKind::Halton;
  std::size_t dim = 1;
  std::uint64_t next = 1;

  static SequenceCursor for_run(SequenceKind kind, std::size_t dim, std::size_t n,
                                std::uint64_t run);

  /// Emits n points and advances the cursor.
  PointSet take(std::size_t n);
};

}  // namespace ldsplan
