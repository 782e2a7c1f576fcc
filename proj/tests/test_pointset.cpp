#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ldsplan/discrepancy.hpp"
#include "ldsplan/error.hpp"
#include "ldsplan/pointset.hpp"
#include "ldsplan/qmc.hpp"

using namespace ldsplan;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ldsplan_test_pointset";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Naive Warnock L2^2 straight from the formula, long double.
long double warnock_sq(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size(), d = x[0].size();
  long double a = 1.0L, b = 0.0L, c = 0.0L;
  for (std::size_t k = 0; k < d; ++k) a /= 3.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double p = 1.0L;
    for (std::size_t k = 0; k < d; ++k) p *= (1.0L - (long double)x[i][k] * x[i][k]) / 2.0L;
    b += p;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double p = 1.0L;
      for (std::size_t k = 0; k < d; ++k) p *= 1.0L - std::max(x[i][k], x[j][k]);
      c += p;
    }
  return a - 2.0L * b / n + c / ((long double)n * n);
}

std::vector<std::vector<double>> rows_of(const PointSet& ps) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.emplace_back(ps.row(i).begin(), ps.row(i).end());
  return out;
}

}  // namespace

TEST(PointSet, RejectsBadInvariants) {
  EXPECT_THROW(PointSet(0, 1, {}), InvalidArgument);
  EXPECT_THROW(PointSet(1, 0, {}), InvalidArgument);
  EXPECT_THROW(PointSet(2, 1, {0.5}), InvalidArgument);
  EXPECT_THROW(PointSet(1, 1, {1.5}), InvalidArgument);
  EXPECT_THROW(PointSet(1, 1, {-0.1}), InvalidArgument);
  EXPECT_NO_THROW(PointSet(2, 1, {0.0, 1.0}));
}

TEST(SampleUniform, SinglePointInRange) {
  const auto ps = sample_uniform(1, 1, 42);
  EXPECT_GE(ps(0, 0), 0.0);
  EXPECT_LT(ps(0, 0), 1.0);
}

TEST(SampleUniform, MeanNearHalf) {
  const auto ps = sample_uniform(1000, 2, 7);
  for (std::size_t k = 0; k < 2; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) s += ps(i, k);
    EXPECT_GE(s / 1000.0, 0.45);
    EXPECT_LE(s / 1000.0, 0.55);
  }
}

TEST(SampleUniform, Deterministic) {
  EXPECT_EQ(sample_uniform(50, 3, 9), sample_uniform(50, 3, 9));
  EXPECT_FALSE(sample_uniform(50, 3, 9) == sample_uniform(50, 3, 10));
}

TEST(Sukharev, Basics) {
  const auto one = sukharev_grid(1, 3);
  ASSERT_EQ(one.size(), 1u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(one(0, k), 0.5);

  const auto two = sukharev_grid(2, 1);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two(0, 0), 0.25);
  EXPECT_EQ(two(1, 0), 0.75);
}

TEST(Sukharev, PairwiseSeparation) {
  for (auto [k, d] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 2}, {4, 3}, {5, 1}}) {
    const auto g = sukharev_grid(k, d);
    std::size_t expect = 1;
    for (std::size_t j = 0; j < d; ++j) expect *= k;
    ASSERT_EQ(g.size(), expect);
    double min_sep = 1e9;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        double m = 0.0;
        for (std::size_t a = 0; a < d; ++a) m = std::max(m, std::abs(g(i, a) - g(j, a)));
        min_sep = std::min(min_sep, m);
      }
    EXPECT_NEAR(min_sep, 1.0 / static_cast<double>(k), 1e-15) << "k=" << k << " d=" << d;
  }
}

TEST(Sukharev, Overflow) {
  EXPECT_THROW(sukharev_grid(1u << 20, 4), InvalidArgument);
  EXPECT_THROW(sukharev_grid(0, 2), InvalidArgument);
}

TEST(Project, IdentityAndColumn) {
  const PointSet ps(2, 2, {0.1, 0.9, 0.3, 0.7});
  const std::vector<std::size_t> all{0, 1};
  EXPECT_EQ(project(ps, all), ps);
  const std::vector<std::size_t> one{1};
  const auto p = project(ps, one);
  ASSERT_EQ(p.dim(), 1u);
  EXPECT_EQ(p(0, 0), 0.9);
  EXPECT_EQ(p(1, 0), 0.7);
}

TEST(Project, Errors) {
  const PointSet ps(1, 2, {0.1, 0.9});
  const std::vector<std::size_t> bad{2};
  const std::vector<std::size_t> dup{0, 0};
  EXPECT_THROW(project(ps, bad), InvalidArgument);
  EXPECT_THROW(project(ps, dup), InvalidArgument);
}

TEST(Project, Composes) {
  const auto ps = sample_uniform(10, 5, 3);
  const std::vector<std::size_t> a{4, 1, 3, 0};
  const std::vector<std::size_t> b{2, 0};
  const std::vector<std::size_t> ab{a[2], a[0]};
  EXPECT_EQ(project(project(ps, a), b), project(ps, ab));
}

TEST(Project, ProjectionIsHickernellSummand) {
  // Sum of Warnock^2 over every nonempty subset == Hickernell^2; a single
  // projection is one term of that sum.
  const auto ps = sample_uniform(12, 3, 5);
  double total = 0.0;
  for (unsigned mask = 1; mask < 8; ++mask) {
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < 3; ++k)
      if (mask & (1u << k)) dims.push_back(k);
    total += l2_warnock(project(ps, dims)).squared;
  }
  EXPECT_NEAR(total, hickernell_l2(ps).squared, 1e-14);
  const std::vector<std::size_t> one{1};
  EXPECT_LT(l2_warnock(project(ps, one)).squared, hickernell_l2(ps).squared);
}

TEST(GreedyReorder, SinglePoint) {
  const PointSet ps(1, 2, {0.3, 0.4});
  EXPECT_EQ(greedy_reorder(ps), ps);
}

TEST(GreedyReorder, MatchesExhaustiveOracle) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const std::size_t n = 6 + seed;  // up to 12
    const auto ps = sample_uniform(n, 2, seed);
    const auto out = greedy_reorder(ps);
    ASSERT_EQ(out.size(), n);

    // Oracle: at every step try every remaining candidate with the naive formula.
    auto rows = rows_of(ps);
    std::vector<bool> used(n, false);
    std::vector<std::vector<double>> prefix;
    for (std::size_t m = 0; m < n; ++m) {
      long double best = 1e9L;
      std::size_t pick = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (used[c]) continue;
        auto trial = prefix;
        trial.push_back(rows[c]);
        const long double v = warnock_sq(trial);
        if (v < best - 1e-15L) {
          best = v;
          pick = c;
        }
      }
      used[pick] = true;
      prefix.push_back(rows[pick]);
      for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(out(m, k), rows[pick][k]) << "seed " << seed << " step " << m;

      // Greedy prefix is no worse than any alternative extension.
      auto got = rows_of(out);
      got.resize(m + 1);
      const long double mine = warnock_sq(got);
      for (std::size_t c = 0; c < n; ++c) {
        if (used[c]) continue;
        auto alt = got;
        alt.back() = rows[c];
        EXPECT_LE(mine, warnock_sq(alt) + 1e-15L);
      }
    }
  }
}

TEST(GreedyReorder, Permutation) {
  const auto ps = halton(20, 3, 1);
  const auto out = greedy_reorder(ps);
  auto a = rows_of(ps), b = rows_of(out);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(GreedyReorder, TieBreakLowestIndex) {
  const PointSet ps(3, 1, {0.5, 0.5, 0.5});
  const auto out = greedy_reorder(ps);
  EXPECT_EQ(out, ps);
}

TEST(Scale, Examples) {
  EXPECT_EQ(scale_to_bounds(PointSet(1, 2, {0.25, 0.75}), BoundsBox::unit(2)), (std::vector<double>{0.25, 0.75}));
  const auto mid = scale_to_bounds(PointSet(1, 1, {0.5}), BoundsBox({-std::numbers::pi}, {std::numbers::pi}));
  EXPECT_NEAR(mid[0], 0.0, 1e-15);
  EXPECT_EQ(scale_to_bounds(PointSet(1, 1, {0.25}), BoundsBox({0.0}, {640.0}))[0], 160.0);
  EXPECT_THROW(scale_to_bounds(PointSet(1, 1, {0.25}), BoundsBox::unit(2)), InvalidArgument);
  EXPECT_THROW(BoundsBox({1.0}, {1.0}), InvalidArgument);
}

TEST(PointsFile, RoundTripBitIdentical) {
  const auto ps = sample_uniform(37, 4, 11).with_provenance("uniform seed=11\nsecond line");
  const auto path = temp_file("rt.pts");
  save_points(ps, path);
  const auto back = load_points(path);
  EXPECT_EQ(back, ps);
  EXPECT_EQ(back.provenance(), ps.provenance());
}

TEST(PointsFile, Rejections) {
  EXPECT_THROW(parse_points("1 1\n1.5\n"), FormatError);
  EXPECT_THROW(parse_points("4 1\n0.1\n0.2\n0.3\n"), FormatError);
  EXPECT_THROW(parse_points("2 2\n0.1 0.2\n0.3\n"), FormatError);
  EXPECT_THROW(parse_points("1 1\nabc\n"), FormatError);
  EXPECT_THROW(parse_points(""), FormatError);
  EXPECT_THROW(load_points(temp_file("does_not_exist.pts")), IoError);
}

TEST(PointsFile, CommentsAnywhere) {
  const auto ps = parse_points("# head\n2 1\n# mid\n0.25\n0.75\n");
  EXPECT_EQ(ps, PointSet(2, 1, {0.25, 0.75}));
}
