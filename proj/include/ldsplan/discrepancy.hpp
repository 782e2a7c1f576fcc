#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "ldsplan/pointset.hpp"

namespace ldsplan {

enum class Metric { L2, HickernellL2, StarLinf, DispersionLinf };
enum class Exactness { ClosedForm, Exact, LowerBound };

std::string_view to_string(Metric m);
std::string_view to_string(Exactness e);

struct DiscrepancyValue {
  Metric metric = Metric::L2;
  double value = 0.0;
  /// value^2; the natural quantity for the L2-type metrics.
  double squared = 0.0;
  Exactness exactness = Exactness::ClosedForm;
  /// Dispersion only: evaluation grid cells per axis and the bound
  /// true_value <= value + slack.
  std::size_t resolution = 0;
  double slack = 0.0;
};

/// Warnock's formula for the squared L2 star discrepancy with half-open
/// anchored boxes, O(N^2 d). Row sums are reduced in a fixed order, so the
/// result is identical for every thread count.
DiscrepancyValue l2_warnock(const PointSet& ps, unsigned threads = 1);

/// Monte Carlo estimate of the squared L2 integral, sampling box corners
/// uniformly and counting points in [0,x).
struct McEstimate {
  double mean = 0.0;
  /// Standard error of the mean; NaN when samples == 1.
  double std_error = 0.0;
  bool std_error_defined = false;
  std::size_t samples = 0;
};
McEstimate l2_bruteforce_mc(const PointSet& ps, std::size_t samples, std::uint64_t seed,
                            unsigned threads = 1);

/// Closed-form Hickernell L2 discrepancy (sum over all nonempty coordinate
/// projections), O(N^2 d).
DiscrepancyValue hickernell_l2(const PointSet& ps, unsigned threads = 1);

/// Explicit projection sum of Warnock values; refuses d > 12.
DiscrepancyValue hickernell_bruteforce(const PointSet& ps);
inline constexpr std::size_t kHickernellBruteforceMaxDim = 12;

/// Exact L-infinity star discrepancy by critical-box enumeration.
/// Refuses d > 3 or N > 512 with Infeasible.
DiscrepancyValue star_discrepancy_exact(const PointSet& ps);
inline constexpr std::size_t kStarMaxDim = 3;
inline constexpr std::size_t kStarMaxPoints = 512;

/// Grid-centre estimate only: max over the resolution^d cell centres of the
/// l-inf distance to the nearest point. A lower bound on the dispersion with
/// slack 0.5 / resolution. Refuses d > 6 or more than 2^24 evaluation points.
DiscrepancyValue dispersion_grid_lower_bound(const PointSet& ps, std::size_t resolution);

/// l-infinity dispersion. d == 1 and exact Sukharev grids are computed
/// analytically; everything else goes through the grid lower bound.
DiscrepancyValue dispersion_linf(const PointSet& ps, std::size_t resolution);
inline constexpr std::size_t kDispersionMaxDim = 6;
inline constexpr std::size_t kDispersionMaxCells = std::size_t{1} << 24;

/// Connection radius r_N = 2 alpha sqrt(d) L_inf^(1/d).
struct RadiusRule {
  double alpha = 2.0;
  std::size_t dim = 1;
  double linf = 1.0;
  double radius = 0.0;
  std::string note;
};
RadiusRule theory_radius(double linf_disc, double alpha, std::size_t d);

/// Closed-form kernels shared by the discrepancy values and the training loss:
///   c^d - (2/N) sum_i prod_k f(x_ik) + (1/N^2) sum_ij prod_k g(max(x_ik, x_jk))
/// Warnock:    c = 1/3, f(x) = (1 - x^2)/2, g(m) = 1 - m
/// Hickernell: c = 4/3, f(x) = (3 - x^2)/2, g(m) = 2 - m
enum class Kernel { Warnock, Hickernell };

/// Squared discrepancy of n rows of d coordinates (row-major). When `grad`
/// is nonempty it receives d(value)/dx. At ties max(a, b) with a == b the
/// subgradient is split 1/2 to each argument.
double closed_form_squared(std::span<const double> x, std::size_t n, std::size_t d,
                           Kernel kernel, std::span<double> grad = {}, unsigned threads = 1);

}  // namespace ldsplan
