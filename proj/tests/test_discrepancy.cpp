#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldsplan/discrepancy.hpp"
#include "ldsplan/error.hpp"
#include "ldsplan/qmc.hpp"
#include "ldsplan/rng.hpp"

using namespace ldsplan;

namespace {

PointSet permuted(const PointSet& ps, std::uint64_t seed) {
  std::vector<std::size_t> idx(ps.size());
  std::iota(idx.begin(), idx.end(), 0);
  Xoshiro256 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  std::vector<double> c;
  for (auto i : idx) c.insert(c.end(), ps.row(i).begin(), ps.row(i).end());
  return PointSet(ps.size(), ps.dim(), c);
}

// Brute-force star discrepancy: every corner from the coordinate
// grid plus 1, counts by direct scan, both closed and open boxes.
double star_oracle(const PointSet& ps) {
  const std::size_t n = ps.size(), d = ps.dim();
  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) axes[k].push_back(ps(i, k));
    axes[k].push_back(1.0);
  }
  double best = 0.0;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    double vol = 1.0;
    for (std::size_t k = 0; k < d; ++k) vol *= axes[k][idx[k]];
    std::size_t closed = 0, open = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool c = true, o = true;
      for (std::size_t k = 0; k < d; ++k) {
        c = c && ps(i, k) <= axes[k][idx[k]];
        o = o && ps(i, k) < axes[k][idx[k]];
      }
      closed += c;
      open += o;
    }
    best = std::max({best, closed / double(n) - vol, vol - open / double(n)});
    std::size_t k = 0;
    while (k < d && ++idx[k] == axes[k].size()) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

}  // namespace

TEST(Warnock, HandDerivedValues) {
  EXPECT_NEAR(l2_warnock(PointSet(1, 1, {0.5})).squared, 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(l2_warnock(PointSet(1, 1, {0.0})).squared, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(l2_warnock(PointSet(1, 2, {0.5, 0.5})).squared, 23.0 / 288.0, 1e-15);
  EXPECT_NEAR(l2_warnock(PointSet(1, 1, {0.5})).value, std::sqrt(1.0 / 12.0), 1e-15);
  EXPECT_EQ(l2_warnock(PointSet(1, 1, {0.5})).exactness, Exactness::ClosedForm);
}

TEST(Warnock, McAgreesOnSinglePoint) {
  const PointSet ps(1, 1, {0.5});
  const auto mc = l2_bruteforce_mc(ps, 1000000, 3);
  ASSERT_TRUE(mc.std_error_defined);
  EXPECT_LE(std::abs(mc.mean - 1.0 / 12.0), 3.0 * mc.std_error);
}

TEST(Warnock, McAgreesOnUniformSet) {
  const auto ps = sample_uniform(16, 3, 21);
  const auto mc = l2_bruteforce_mc(ps, 400000, 5);
  EXPECT_LE(std::abs(mc.mean - l2_warnock(ps).squared), 3.0 * mc.std_error);
}

TEST(Warnock, McHandTwoDimValue) {
  const auto mc = l2_bruteforce_mc(PointSet(1, 2, {0.5, 0.5}), 1000000, 8);
  EXPECT_LE(std::abs(mc.mean - 23.0 / 288.0), 3.0 * mc.std_error);
}

TEST(Warnock, McSingleSampleFlagged) {
  const auto mc = l2_bruteforce_mc(PointSet(1, 1, {0.5}), 1, 1);
  EXPECT_FALSE(mc.std_error_defined);
  EXPECT_TRUE(std::isfinite(mc.mean));
  EXPECT_THROW(l2_bruteforce_mc(PointSet(1, 1, {0.5}), 0, 1), InvalidArgument);
}

TEST(Warnock, McThreadIndependent) {
  const auto ps = sample_uniform(8, 2, 2);
  const auto a = l2_bruteforce_mc(ps, 100000, 4, 1);
  const auto b = l2_bruteforce_mc(ps, 100000, 4, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Hickernell, HandDerivedValue) {
  EXPECT_NEAR(hickernell_l2(PointSet(1, 2, {0.5, 0.5})).squared, 71.0 / 288.0, 1e-15);
  EXPECT_NEAR(hickernell_bruteforce(PointSet(1, 2, {0.5, 0.5})).squared, 71.0 / 288.0, 1e-15);
}

TEST(Hickernell, EqualsWarnockInOneDim) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto ps = sample_uniform(9, 1, s);
    EXPECT_NEAR(hickernell_l2(ps).squared, l2_warnock(ps).squared, 1e-15);
    EXPECT_NEAR(hickernell_bruteforce(ps).value, l2_warnock(ps).value, 1e-15);
  }
}

TEST(Hickernell, ClosedFormMatchesProjectionSum) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t d = 2 + s % 5;
    const std::size_t n = 3 + (s * 7) % 30;
    const auto ps = sample_uniform(n, d, 100 + s);
    const double a = hickernell_l2(ps).squared, b = hickernell_bruteforce(ps).squared;
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(b)) << "n=" << n << " d=" << d;
  }
  const auto ps = sample_uniform(32, 5, 77);
  EXPECT_LE(std::abs(hickernell_l2(ps).squared - hickernell_bruteforce(ps).squared),
            1e-10 * hickernell_bruteforce(ps).squared);
}

TEST(Hickernell, BruteForceGuard) {
  EXPECT_THROW(hickernell_bruteforce(sample_uniform(4, 13, 1)), Infeasible);
  EXPECT_NO_THROW(hickernell_bruteforce(sample_uniform(4, 12, 1)));
}

TEST(ClosedForm, CompensatedSumAtLargeN) {
  // N >= 4096 takes the compensated path; compare with a long double reference.
  const auto ps = sample_uniform(4096, 2, 99);
  const std::size_t n = ps.size();
  long double b = 0.0L, c = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    b += (1.0L - (long double)ps(i, 0) * ps(i, 0)) / 2.0L * (1.0L - (long double)ps(i, 1) * ps(i, 1)) / 2.0L;
    for (std::size_t j = 0; j < n; ++j)
      c += (1.0L - std::max(ps(i, 0), ps(j, 0))) * (long double)(1.0 - std::max(ps(i, 1), ps(j, 1)));
  }
  const long double ref = 1.0L / 9.0L - 2.0L * b / n + c / ((long double)n * n);
  EXPECT_NEAR(l2_warnock(ps).squared, static_cast<double>(ref), 1e-15);
}

TEST(ClosedForm, GradientMatchesFiniteDifferences) {
  for (auto kernel : {Kernel::Warnock, Kernel::Hickernell}) {
    const auto ps = sample_uniform(7, 3, 5);
    std::vector<double> x(ps.coords().begin(), ps.coords().end());
    std::vector<double> g(x.size(), 0.0);
    closed_form_squared(x, 7, 3, kernel, g);
    for (std::size_t p = 0; p < x.size(); ++p) {
      auto xp = x, xm = x;
      xp[p] += 1e-6;
      xm[p] -= 1e-6;
      const double fd = (closed_form_squared(xp, 7, 3, kernel) - closed_form_squared(xm, 7, 3, kernel)) / 2e-6;
      EXPECT_NEAR(g[p], fd, 1e-7 + 1e-5 * std::abs(fd)) << p;
    }
  }
}

TEST(ClosedForm, TieSplitsSubgradient) {
  // Two identical points in 1-D: d/dx of the pairwise max term is split.
  const std::vector<double> x{0.4, 0.4};
  std::vector<double> g(2, 0.0);
  closed_form_squared(x, 2, 1, Kernel::Warnock, g);
  EXPECT_DOUBLE_EQ(g[0], g[1]);
  // Analytic: 2/N * x - (1/N^2)(1 + 2 * 0.5) per coordinate.
  EXPECT_NEAR(g[0], 2.0 / 2.0 * 0.4 - (1.0 + 1.0) / 4.0, 1e-15);
}

TEST(ClosedForm, ThreadIndependent) {
  const auto ps = sample_uniform(300, 4, 6);
  EXPECT_EQ(l2_warnock(ps, 1).squared, l2_warnock(ps, 4).squared);
  EXPECT_EQ(hickernell_l2(ps, 1).squared, hickernell_l2(ps, 3).squared);
}

TEST(Metrics, PermutationInvariant) {
  const auto ps = sample_uniform(40, 2, 12);
  const auto q = permuted(ps, 5);
  EXPECT_NEAR(l2_warnock(ps).squared, l2_warnock(q).squared, 1e-16);
  EXPECT_NEAR(hickernell_l2(ps).squared, hickernell_l2(q).squared, 1e-15);
  EXPECT_EQ(star_discrepancy_exact(ps).value, star_discrepancy_exact(q).value);
  EXPECT_EQ(dispersion_linf(ps, 64).value, dispersion_linf(q, 64).value);
}

TEST(Star, HandValues) {
  EXPECT_DOUBLE_EQ(star_discrepancy_exact(PointSet(1, 1, {0.5})).value, 0.5);
  EXPECT_DOUBLE_EQ(star_discrepancy_exact(PointSet(2, 1, {0.25, 0.75})).value, 0.25);
  EXPECT_EQ(star_discrepancy_exact(PointSet(1, 1, {0.5})).exactness, Exactness::Exact);
}

TEST(Star, MatchesBruteForceOracle) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const std::size_t d = 1 + s % 2;
    const auto ps = sample_uniform(5 + s, d, s);
    EXPECT_NEAR(star_discrepancy_exact(ps).value, star_oracle(ps), 1e-15) << s;
  }
  EXPECT_NEAR(star_discrepancy_exact(halton(30, 2, 1)).value, star_oracle(halton(30, 2, 1)), 1e-15);
  // Duplicates and coordinates at 0 or 1.
  const PointSet dup(4, 2, {0.5, 0.5, 0.5, 0.5, 0.0, 1.0, 1.0, 0.25});
  EXPECT_NEAR(star_discrepancy_exact(dup).value, star_oracle(dup), 1e-15);
}

TEST(Star, ThreeDimAgainstScan) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto p3 = sample_uniform(6 + s, 3, 40 + s);
    const double v = star_discrepancy_exact(p3).value;
    EXPECT_NEAR(v, star_oracle(p3), 1e-15) << s;
    // Boxes spanning the full last axis are 2-D boxes of the projection.
    const std::vector<std::size_t> dims{0, 1};
    EXPECT_GE(v, star_oracle(project(p3, dims)) - 1e-15);
  }
  // A point on the upper face is outside every half-open box.
  EXPECT_EQ(star_discrepancy_exact(PointSet(1, 3, {0.5, 0.5, 1.0})).value, 1.0);
}

TEST(Star, Refusals) {
  EXPECT_THROW(star_discrepancy_exact(sample_uniform(4, 4, 1)), Infeasible);
  EXPECT_THROW(star_discrepancy_exact(sample_uniform(513, 2, 1)), Infeasible);
}

TEST(Dispersion, SukharevValues) {
  EXPECT_DOUBLE_EQ(dispersion_linf(sukharev_grid(2, 1), 64).value, 0.25);
  for (auto [k, d] : {std::pair<std::size_t, std::size_t>{2, 2}, {4, 2}, {3, 3}}) {
    const auto g = dispersion_grid_lower_bound(sukharev_grid(k, d), 96);
    EXPECT_LE(g.value, 0.5 / k + 1e-15);
    EXPECT_GE(g.value, 0.5 / k - g.slack);
    EXPECT_EQ(g.exactness, Exactness::LowerBound);
    EXPECT_DOUBLE_EQ(dispersion_linf(sukharev_grid(k, d), 96).value, 0.5 / k);
  }
}

TEST(Dispersion, CentrePointConverges) {
  // Off-grid variant of the centre point so the estimator path is used.
  const PointSet ps(2, 2, {0.5, 0.5, 0.5, 0.5});
  double prev = 0.0;
  for (std::size_t res : {8u, 32u, 128u, 512u}) {
    const auto v = dispersion_linf(ps, res);
    EXPECT_EQ(v.exactness, Exactness::LowerBound);
    EXPECT_LE(v.value, 0.5);
    EXPECT_GE(v.value, 0.5 - v.slack);
    EXPECT_GE(v.value, prev);
    prev = v.value;
  }
}

TEST(Dispersion, OneDimExact) {
  const auto v = dispersion_linf(PointSet(3, 1, {0.1, 0.2, 0.9}), 2);
  EXPECT_DOUBLE_EQ(v.value, 0.35);
  EXPECT_EQ(v.exactness, Exactness::Exact);
}

TEST(Dispersion, AddingPointNeverIncreases) {
  const auto base = sample_uniform(20, 2, 3);
  const auto more = sample_uniform(21, 2, 3);  // same first 20 rows
  for (std::size_t i = 0; i < 20; ++i) ASSERT_EQ(base(i, 0), more(i, 0));
  EXPECT_LE(dispersion_linf(more, 128).value, dispersion_linf(base, 128).value);
}

TEST(Dispersion, ReflectionInvariant) {
  const auto ps = sample_uniform(25, 3, 8);
  std::vector<double> r;
  for (double v : ps.coords()) r.push_back(1.0 - v);
  const PointSet refl(25, 3, r);
  EXPECT_NEAR(dispersion_linf(ps, 64).value, dispersion_linf(refl, 64).value, 1e-12);
}

TEST(Dispersion, Refusals) {
  EXPECT_THROW(dispersion_linf(sample_uniform(3, 7, 1), 4), Infeasible);
  EXPECT_THROW(dispersion_linf(sample_uniform(3, 5, 1), 64), Infeasible);
  EXPECT_THROW(dispersion_linf(sample_uniform(3, 2, 1), 1), InvalidArgument);
}

TEST(Dispersion, BoundedByStarDiscrepancyRoot) {
  for (std::size_t d = 1; d <= 3; ++d)
    for (std::size_t n : {8u, 64u, 200u}) {
      for (const auto& ps : {sample_uniform(n, d, n + d), halton(n, d, 1), sobol(n, d, 1)}) {
        const auto disp = dispersion_linf(ps, d == 3 ? 48 : 256);
        const double star = star_discrepancy_exact(ps).value;
        EXPECT_LE(disp.value, std::pow(star, 1.0 / d) + disp.slack) << "n=" << n << " d=" << d;
      }
    }
}

TEST(TheoryRadius, Examples) {
  EXPECT_DOUBLE_EQ(theory_radius(1.0, 2.0, 4).radius, 8.0);
  EXPECT_NEAR(theory_radius(0.25, 2.0, 2).radius, 2.0 * std::sqrt(2.0), 1e-15);
  EXPECT_LT(theory_radius(0.1, 2.0, 3).radius, theory_radius(0.2, 2.0, 3).radius);
  EXPECT_LT(theory_radius(0.1, 2.0, 3).radius, theory_radius(0.1, 3.0, 3).radius);
  EXPECT_NE(theory_radius(0.1, 2.0, 3).note.find("1/(alpha-1)"), std::string::npos);
  EXPECT_THROW(theory_radius(0.5, 1.0, 2), InvalidArgument);
  EXPECT_THROW(theory_radius(0.0, 2.0, 2), InvalidArgument);
  EXPECT_THROW(theory_radius(1.5, 2.0, 2), InvalidArgument);
}
