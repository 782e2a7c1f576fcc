#include "ldsplan/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ldsplan/error.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/rng.hpp"

namespace ldsplan {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::L2: return "l2";
    case Metric::HickernellL2: return "hickernell";
    case Metric::StarLinf: return "star";
    case Metric::DispersionLinf: return "dispersion";
  }
  return "?";
}

std::string_view to_string(Exactness e) {
  switch (e) {
    case Exactness::ClosedForm: return "closed-form";
    case Exactness::Exact: return "exact";
    case Exactness::LowerBound: return "lower-bound";
  }
  return "?";
}

namespace {

// Plain summation is adequate up to a few thousand rows; beyond that the
// row sums are combined with Kahan compensation.
constexpr std::size_t kCompensatedRows = 4096;

double ordered_sum(std::span<const double> v) {
  if (v.size() < kCompensatedRows) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  double s = 0.0;
  double c = 0.0;
  for (double x : v) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

struct KernelSpec {
  double base;    // c
  double f_off;   // f(x) = (f_off - x^2)/2
  double g_off;   // g(m) = g_off - m
};

KernelSpec spec_of(Kernel k) {
  return k == Kernel::Warnock ? KernelSpec{1.0 / 3.0, 1.0, 1.0} : KernelSpec{4.0 / 3.0, 3.0, 2.0};
}

}  // namespace

double closed_form_squared(std::span<const double> x, std::size_t n, std::size_t d, Kernel kernel,
                           std::span<double> grad, unsigned threads) {
  if (x.size() != n * d) throw InvalidArgument("closed_form_squared: size mismatch");
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != n * d) throw InvalidArgument("closed_form_squared: gradient size mismatch");
  const KernelSpec ks = spec_of(kernel);
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> single(n);
  std::vector<double> pair(n);

  parallel_for(n, threads, [&](std::size_t i) {
    const double* xi = x.data() + i * d;
    // Scratch buffers for leave-one-out products.
    std::vector<double> factors(want_grad ? d : 0);
    std::vector<double> prefix(want_grad ? d + 1 : 0);
    std::vector<double> suffix(want_grad ? d + 1 : 0);
    double* gi = want_grad ? grad.data() + i * d : nullptr;
    if (want_grad) std::fill_n(gi, d, 0.0);

    auto leave_one_out = [&](std::size_t k) { return prefix[k] * suffix[k + 1]; };
    auto fill_products = [&] {
      prefix[0] = 1.0;
      for (std::size_t k = 0; k < d; ++k) prefix[k + 1] = prefix[k] * factors[k];
      suffix[d] = 1.0;
      for (std::size_t k = d; k-- > 0;) suffix[k] = suffix[k + 1] * factors[k];
    };

    double f_prod = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double fk = (ks.f_off - xi[k] * xi[k]) / 2.0;
      f_prod *= fk;
      if (want_grad) factors[k] = fk;
    }
    single[i] = f_prod;
    if (want_grad) {
      fill_products();
      // -(2/N) * d/dx_ik prod_k f = -(2/N) * (-x_ik) * prod_{l != k} f
      for (std::size_t k = 0; k < d; ++k) gi[k] += 2.0 * inv_n * xi[k] * leave_one_out(k);
    }

    double row = 0.0;
    const double pair_scale = inv_n * inv_n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* xj = x.data() + j * d;
      double g_prod = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double gk = ks.g_off - std::max(xi[k], xj[k]);
        g_prod *= gk;
        if (want_grad) factors[k] = gk;
      }
      row += g_prod;
      if (!want_grad) continue;
      fill_products();
      if (j == i) {
        // Diagonal term prod_k g(x_ik): g' = -1, counted once.
        for (std::size_t k = 0; k < d; ++k) gi[k] -= pair_scale * leave_one_out(k);
        continue;
      }
      // Off-diagonal G_ij appears as (i,j) and (j,i); only the max argument
      // depends on x_ik, with weight 1/2 at ties.
      for (std::size_t k = 0; k < d; ++k) {
        double w;
        if (xi[k] > xj[k]) {
          w = 1.0;
        } else if (xi[k] == xj[k]) {
          w = 0.5;
        } else {
          continue;
        }
        gi[k] -= 2.0 * pair_scale * w * leave_one_out(k);
      }
    }
    pair[i] = row;
  });

  const double base = std::pow(ks.base, static_cast<double>(d));
  return base - 2.0 * inv_n * ordered_sum(single) + inv_n * inv_n * ordered_sum(pair);
}

namespace {

DiscrepancyValue l2_like(Metric metric, double squared, Exactness exactness) {
  DiscrepancyValue v;
  v.metric = metric;
  // Cancellation can leave tiny negative values for near-optimal sets.
  v.squared = std::max(squared, 0.0);
  v.value = std::sqrt(v.squared);
  v.exactness = exactness;
  return v;
}

}  // namespace

DiscrepancyValue l2_warnock(const PointSet& ps, unsigned threads) {
  return l2_like(Metric::L2,
                 closed_form_squared(ps.coords(), ps.size(), ps.dim(), Kernel::Warnock, {}, threads),
                 Exactness::ClosedForm);
}

DiscrepancyValue hickernell_l2(const PointSet& ps, unsigned threads) {
  return l2_like(Metric::HickernellL2,
                 closed_form_squared(ps.coords(), ps.size(), ps.dim(), Kernel::Hickernell, {}, threads),
                 Exactness::ClosedForm);
}

DiscrepancyValue hickernell_bruteforce(const PointSet& ps) {
  const std::size_t d = ps.dim();
  if (d > kHickernellBruteforceMaxDim) {
    throw Infeasible("hickernell_bruteforce: d=" + std::to_string(d) + " exceeds " +
                     std::to_string(kHickernellBruteforceMaxDim) + " (2^d - 1 projections)");
  }
  double total = 0.0;
  std::vector<std::size_t> dims;
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    dims.clear();
    for (std::size_t k = 0; k < d; ++k) {
      if (mask & (1u << k)) dims.push_back(k);
    }
    total += l2_warnock(project(ps, dims)).squared;
  }
  return l2_like(Metric::HickernellL2, total, Exactness::Exact);
}

McEstimate l2_bruteforce_mc(const PointSet& ps, std::size_t samples, std::uint64_t seed,
                            unsigned threads) {
  if (samples == 0) throw InvalidArgument("l2_bruteforce_mc: need at least one sample");
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  // Fixed-size chunks with independent streams keep the estimate identical
  // for every thread count.
  constexpr std::size_t kChunk = 1 << 14;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks);
  std::vector<double> sums_sq(chunks);
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto coords = ps.coords();

  parallel_for(chunks, threads, [&](std::size_t c) {
    Xoshiro256 rng(mix64(seed ^ mix64(c + 1)));
    std::vector<double> corner(d);
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(samples, lo + kChunk);
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
      double vol = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        corner[k] = rng.uniform();
        vol *= corner[k];
      }
      std::size_t inside = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = coords.data() + i * d;
        std::size_t k = 0;
        while (k < d && xi[k] < corner[k]) ++k;
        inside += (k == d);
      }
      const double local = static_cast<double>(inside) * inv_n - vol;
      const double sq = local * local;
      s += sq;
      s2 += sq * sq;
    }
    sums[c] = s;
    sums_sq[c] = s2;
  });

  McEstimate est;
  est.samples = samples;
  const double m = static_cast<double>(samples);
  const double total = ordered_sum(sums);
  const double total_sq = ordered_sum(sums_sq);
  est.mean = total / m;
  if (samples > 1) {
    const double var = std::max(0.0, (total_sq - m * est.mean * est.mean) / (m - 1.0));
    est.std_error = std::sqrt(var / m);
    est.std_error_defined = true;
  } else {
    est.std_error = std::numeric_limits<double>::quiet_NaN();
    est.std_error_defined = false;
  }
  return est;
}

namespace {

// Per-axis critical values (sorted unique coordinates plus 1.0) and, for each
// point, the first grid index whose value admits it into a closed box
// (x <= u) and into an open box (x < u). Missing axes (d < 3) are padded with
// the single value 1.0 and an interior dummy coordinate.
struct CriticalGrid {
  std::array<std::vector<double>, 3> values;
  std::vector<std::array<std::size_t, 3>> closed_rank;
  std::vector<std::array<std::size_t, 3>> open_rank;
};

CriticalGrid make_grid(const PointSet& ps) {
  CriticalGrid g;
  const std::size_t n = ps.size();
  for (std::size_t k = 0; k < 3; ++k) {
    auto& u = g.values[k];
    if (k < ps.dim()) {
      for (std::size_t i = 0; i < n; ++i) u.push_back(ps(i, k));
    }
    u.push_back(1.0);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
  }
  g.closed_rank.resize(n);
  g.open_rank.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& u = g.values[k];
      const double x = k < ps.dim() ? ps(i, k) : 0.5;
      g.closed_rank[i][k] = static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), x) - u.begin());
      g.open_rank[i][k] = static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), x) - u.begin());
    }
  }
  return g;
}

}  // namespace

DiscrepancyValue star_discrepancy_exact(const PointSet& ps) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  if (d > kStarMaxDim || n > kStarMaxPoints) {
    throw Infeasible("star_discrepancy_exact: limited to d <= 3 and N <= 512 (got d=" +
                     std::to_string(d) + ", N=" + std::to_string(n) + ")");
  }
  const CriticalGrid g = make_grid(ps);
  const std::size_t u0 = g.values[0].size();
  const std::size_t u1 = g.values[1].size();
  const std::size_t u2 = g.values[2].size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Sweep axis 0; histograms over (axis 1, axis 2) of points admitted so far,
  // turned into 2-D cumulative counts for each axis-0 value.
  std::vector<std::vector<std::size_t>> by_closed(u0 + 1), by_open(u0 + 1);
  for (std::size_t i = 0; i < n; ++i) {
    by_closed[g.closed_rank[i][0]].push_back(i);
    by_open[g.open_rank[i][0]].push_back(i);
  }
  std::vector<std::uint32_t> hist_closed(u1 * u2, 0), hist_open(u1 * u2, 0);
  std::vector<std::uint32_t> cum_closed(u1 * u2), cum_open(u1 * u2);

  auto cumulate = [&](const std::vector<std::uint32_t>& h, std::vector<std::uint32_t>& c) {
    for (std::size_t a = 0; a < u1; ++a) {
      std::uint32_t run = 0;
      for (std::size_t b = 0; b < u2; ++b) {
        run += h[a * u2 + b];
        c[a * u2 + b] = run + (a > 0 ? c[(a - 1) * u2 + b] : 0);
      }
    }
  };

  double best = 0.0;
  for (std::size_t t0 = 0; t0 < u0; ++t0) {
    for (std::size_t i : by_closed[t0]) {
      const auto& r = g.closed_rank[i];
      ++hist_closed[r[1] * u2 + r[2]];
    }
    for (std::size_t i : by_open[t0]) {
      const auto& r = g.open_rank[i];
      if (r[1] < u1 && r[2] < u2) ++hist_open[r[1] * u2 + r[2]];
    }
    cumulate(hist_closed, cum_closed);
    cumulate(hist_open, cum_open);
    const double x0 = g.values[0][t0];
    for (std::size_t a = 0; a < u1; ++a) {
      const double x01 = x0 * g.values[1][a];
      for (std::size_t b = 0; b < u2; ++b) {
        const double vol = x01 * g.values[2][b];
        const double over = static_cast<double>(cum_closed[a * u2 + b]) * inv_n - vol;
        const double under = vol - static_cast<double>(cum_open[a * u2 + b]) * inv_n;
        best = std::max({best, over, under});
      }
    }
  }

  DiscrepancyValue v;
  v.metric = Metric::StarLinf;
  v.value = best;
  v.squared = best * best;
  v.exactness = Exactness::Exact;
  return v;
}

namespace {

// Returns k when ps is exactly sukharev_grid(k, d) up to row order.
std::size_t detect_sukharev(const PointSet& ps) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  const auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
  if (k == 0) return 0;
  std::size_t count = 1;
  for (std::size_t j = 0; j < d; ++j) count *= k;
  if (count != n) return 0;
  const PointSet grid = sukharev_grid(k, d);
  std::vector<std::vector<double>> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i].assign(ps.row(i).begin(), ps.row(i).end());
    b[i].assign(grid.row(i).begin(), grid.row(i).end());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b ? k : 0;
}

}  // namespace

DiscrepancyValue dispersion_grid_lower_bound(const PointSet& ps, std::size_t resolution) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  DiscrepancyValue v;
  v.metric = Metric::DispersionLinf;
  v.resolution = resolution;
  if (resolution < 2) throw InvalidArgument("dispersion grid: resolution must be >= 2");
  if (d > kDispersionMaxDim) {
    throw Infeasible("dispersion grid: d=" + std::to_string(d) + " exceeds " +
                     std::to_string(kDispersionMaxDim));
  }
  std::size_t cells = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (cells > kDispersionMaxCells / resolution) {
      throw Infeasible("dispersion grid: resolution^d exceeds 2^24 evaluation points");
    }
    cells *= resolution;
  }

  const double inv_res = 1.0 / static_cast<double>(resolution);
  std::vector<std::size_t> digit(d, 0);
  std::vector<double> s(d);
  const auto coords = ps.coords();
  double best = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t k = 0; k < d; ++k) s[k] = (static_cast<double>(digit[k]) + 0.5) * inv_res;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n && nearest > best; ++i) {
      const double* xi = coords.data() + i * d;
      double dist = 0.0;
      for (std::size_t k = 0; k < d && dist < nearest; ++k) dist = std::max(dist, std::abs(s[k] - xi[k]));
      nearest = std::min(nearest, dist);
    }
    best = std::max(best, nearest);
    for (std::size_t k = d; k-- > 0;) {
      if (++digit[k] < resolution) break;
      digit[k] = 0;
    }
  }
  v.value = best;
  v.squared = best * best;
  v.exactness = Exactness::LowerBound;
  v.slack = 0.5 * inv_res;
  return v;
}

DiscrepancyValue dispersion_linf(const PointSet& ps, std::size_t resolution) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dim();
  DiscrepancyValue v;
  v.metric = Metric::DispersionLinf;
  v.resolution = resolution;

  if (d == 1) {
    std::vector<double> x(ps.coords().begin(), ps.coords().end());
    std::sort(x.begin(), x.end());
    double best = std::max(x.front(), 1.0 - x.back());
    for (std::size_t i = 1; i < n; ++i) best = std::max(best, (x[i] - x[i - 1]) / 2.0);
    v.value = best;
    v.squared = best * best;
    v.exactness = Exactness::Exact;
    return v;
  }
  if (const std::size_t k = detect_sukharev(ps); k > 0) {
    v.value = 1.0 / (2.0 * static_cast<double>(k));
    v.squared = v.value * v.value;
    v.exactness = Exactness::Exact;
    return v;
  }

  return dispersion_grid_lower_bound(ps, resolution);
}

RadiusRule theory_radius(double linf_disc, double alpha, std::size_t d) {
  if (!(alpha > 1.0)) throw InvalidArgument("theory_radius: alpha must exceed 1");
  if (!(linf_disc > 0.0 && linf_disc <= 1.0)) throw InvalidArgument("theory_radius: L_inf must lie in (0,1]");
  if (d == 0) throw InvalidArgument("theory_radius: d must be >= 1");
  RadiusRule r;
  r.alpha = alpha;
  r.dim = d;
  r.linf = linf_disc;
  r.radius = 2.0 * alpha * std::sqrt(static_cast<double>(d)) *
             std::pow(linf_disc, 1.0 / static_cast<double>(d));
  r.note = "assumes a delta-clear feasible path; returned cost within a factor 1/(alpha-1) = " +
           std::to_string(1.0 / (alpha - 1.0)) + " of the optimal delta-clear path";
  return r;
}

}  // namespace ldsplan
