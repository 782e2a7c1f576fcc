// Acceptance run: one PASS/FAIL line per criterion, thresholds pinned below.
// Exit status is the number of failed criteria (0 = all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "ldsplan/bench.hpp"
#include "ldsplan/cli.hpp"
#include "ldsplan/discrepancy.hpp"
#include "ldsplan/envs.hpp"
#include "ldsplan/mpmc.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/planner.hpp"
#include "ldsplan/pointset.hpp"
#include "ldsplan/qmc.hpp"
#include "ldsplan/rng.hpp"

using namespace ldsplan;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kC1RelTol = 1e-10;
constexpr double kC1Sigmas = 3.0;
constexpr std::size_t kC1McSamples = 1'000'000;
constexpr double kC1Seconds = 60.0;
constexpr double kC2Tol = 1e-12;
constexpr double kC3Seconds = 2.0;
constexpr double kC4UniformFactor = 0.6;
constexpr double kC4Seconds = 600.0;
constexpr double kC5MaxRel = 1e-4;
constexpr double kC7MinGap = 10.0;
constexpr double kC7Noise = 8.0;
constexpr double kC8Threshold = 75.0;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;
void report(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

fs::path data_dir() {
  if (const char* e = std::getenv("LDSPLAN_DATA_DIR")) return e;
  return LDSPLAN_DATA_DIR;
}

void c1() {
  const auto t0 = Clock::now();
  const std::size_t ns[] = {4, 16, 64};
  double worst_rel = 0.0, worst_sigma = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t n = ns[s % 3], d = 1 + (s / 3) % 6;
    const auto ps = sample_uniform(n, d, 5000 + s);
    const double cf = hickernell_l2(ps).squared, bf = hickernell_bruteforce(ps).squared;
    worst_rel = std::max(worst_rel, std::abs(cf - bf) / bf);
    const double w = l2_warnock(ps).squared;
    const auto mc = l2_bruteforce_mc(ps, kC1McSamples, 9000 + s);
    worst_sigma = std::max(worst_sigma, std::abs(mc.mean - w) / mc.std_error);
  }
  const double t = seconds_since(t0);
  report(1, worst_rel <= kC1RelTol && worst_sigma <= kC1Sigmas && t < kC1Seconds,
         "closed form vs projection sum max rel " + fmt("%.2e", worst_rel) + ", Warnock vs MC max " +
             fmt("%.2f", worst_sigma) + " SE, " + fmt("%.1f", t) + " s");
}

void c2() {
  const double a = l2_warnock(PointSet(1, 1, {0.5})).squared;
  const double b = hickernell_l2(PointSet(1, 2, {0.5, 0.5})).squared;
  const bool ok = std::abs(a - 1.0 / 12.0) <= kC2Tol && std::abs(b - 71.0 / 288.0) <= kC2Tol;
  report(2, ok, "Warnock^2({0.5}) = " + fmt("%.15f", a) + ", Hickernell^2({(0.5,0.5)}) = " + fmt("%.15f", b));
}

void c3() {
  const auto ps = sample_uniform(1024, 10, 3);
  const auto t0 = Clock::now();
  const double v = hickernell_l2(ps, 1).value;
  const double t = seconds_since(t0);
  report(3, t < kC3Seconds && std::isfinite(v), "Hickernell N=1024 d=10 single-threaded " + fmt("%.3f", t) + " s");
}

void c4() {
  struct Case {
    std::size_t n, d;
  };
  bool ok = true;
  std::string detail;
  for (Case c : {Case{16, 2}, Case{64, 2}, Case{64, 3}}) {
    const auto t0 = Clock::now();
    mpmc::TrainConfig cfg;
    cfg.n = c.n;
    cfg.d = c.d;
    cfg.epochs = 3000;
    cfg.learning_rate = 1e-2;
    cfg.loss = mpmc::LossKind::Hickernell;
    cfg.seed = 1;
    const auto r = mpmc::optimize_direct(cfg);
    const double t = seconds_since(t0);
    const double opt = hickernell_l2(r.best).value;
    const double hal = hickernell_l2(halton(c.n, c.d, 1)).value;
    double uni = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) uni += hickernell_l2(sample_uniform(c.n, c.d, 1000 + s)).value / 20.0;
    const bool pass = opt <= hal && opt <= kC4UniformFactor * uni && t <= kC4Seconds;
    ok = ok && pass;
    detail += "(" + std::to_string(c.n) + "," + std::to_string(c.d) + ") opt " + fmt("%.4f", opt) + " halton " +
              fmt("%.4f", hal) + " uniform mean " + fmt("%.4f", uni) + " " + fmt("%.1f", t) + " s; ";
  }
  detail.resize(detail.size() - 2);
  report(4, ok, detail);
}

void c5() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto model = mpmc::MpmcModel::random(2, 16, 2, seed);
    const auto in = sample_uniform(16, 2, 100 + seed);
    const auto g = mpmc::build_knn_graph(in, 4);
    for (auto kind : {mpmc::LossKind::L2, mpmc::LossKind::Hickernell}) {
      const auto r = mpmc::grad_check(model, in, g, kind, 64, seed);
      worst = std::max(worst, r.max_relative_error);
      checked += r.checked;
    }
  }
  report(5, worst < kC5MaxRel && checked > 0,
         "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " parameters, 5 seeds");
}

// Independent uniform-cost search for criterion 6.
double ucs_cost(const Roadmap& rm) {
  std::vector<double> dist(rm.vertices.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[0] = 0.0;
  pq.push({0.0, 0});
  while (!pq.empty()) {
    const auto [c, v] = pq.top();
    pq.pop();
    if (c > dist[v]) continue;
    for (const auto& [u, w] : rm.adjacency[v]) {
      if (c + w < dist[u]) {
        dist[u] = c + w;
        pq.push({dist[u], u});
      }
    }
  }
  return dist[1];
}

std::map<std::string, std::vector<bench::RunRecord>> all_records;

void c6() {
  std::size_t successes = 0, revalidated = 0, records = 0;
  for (const auto& e : fs::directory_iterator(data_dir() / "experiments")) {
    if (e.path().extension() != ".json") continue;
    const auto cfg = bench::load_config(e.path());
    auto recs = bench::run_experiment(cfg, default_thread_count());
    for (const auto& r : recs) {
      ++records;
      if (r.success) {
        ++successes;
        revalidated += r.revalidated;
      }
    }
    all_records[cfg.name] = std::move(recs);
  }

  std::size_t agree = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    Xoshiro256 rng(s);
    Roadmap rm;
    const std::size_t n = 5 + rng.below(46);
    for (std::size_t i = 0; i < n; ++i) rm.vertices.push_back({rng.uniform(), rng.uniform()});
    rm.adjacency.resize(n);
    const double p = 0.05 + 0.25 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < p) {
          const double w = std::sqrt(squared_distance(rm.vertices[i], rm.vertices[j]));
          rm.adjacency[i].push_back({j, w});
          rm.adjacency[j].push_back({i, w});
        }
    for (auto& a : rm.adjacency) std::sort(a.begin(), a.end());
    const auto res = shortest_path(rm);
    const double oracle = ucs_cost(rm);
    const bool same = res.success ? std::abs(res.cost - oracle) <= 1e-12 : !std::isfinite(oracle);
    agree += same;
  }
  report(6, successes == revalidated && agree == 100,
         std::to_string(revalidated) + "/" + std::to_string(successes) + " successes revalidated over " +
             std::to_string(records) + " runs in " + std::to_string(all_records.size()) +
             " experiments; A* = UCS on " + std::to_string(agree) + "/100 roadmaps");
}

// SR per (sampler, n) in percent.
std::map<std::pair<std::string, std::size_t>, double> rates(const std::string& exp) {
  std::map<std::pair<std::string, std::size_t>, double> out;
  const auto it = all_records.find(exp);
  if (it == all_records.end()) return out;
  for (const auto& c : bench::summarize(it->second)) out[{c.sampler, c.n}] = c.success_rate;
  return out;
}

void c7() {
  auto sr = rates("corridor2");
  if (sr.empty()) return report(7, false, "corridor2 results missing");
  const double gap = sr[{"mpmc", 128}] - sr[{"uniform", 128}];
  bool mono = true;
  std::string detail;
  for (const std::string s : {"uniform", "mpmc"}) {
    const double a = sr[{s, 128}], b = sr[{s, 256}], c = sr[{s, 512}];
    mono = mono && b >= a - kC7Noise && c >= b - kC7Noise;
    detail += s + " " + fmt("%.0f", a) + "/" + fmt("%.0f", b) + "/" + fmt("%.0f", c) + "% ";
  }
  report(7, gap >= kC7MinGap && mono,
         detail + "at N=128/256/512, gap at 128 = " + fmt("%.0f", gap) + " points");
}

void c8() {
  auto sr = rates("maze3");
  if (sr.empty()) return report(8, false, "maze3 results missing");
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  auto first = [&](const std::string& s) {
    for (std::size_t n : {64u, 128u, 256u, 512u})
      if (sr[{s, n}] >= kC8Threshold) return n;
    return none;
  };
  const std::size_t u = first("uniform");
  bool ok = true;
  std::string detail = "first N with SR >= " + fmt("%.0f", kC8Threshold) + "%:";
  for (const std::string s : {"uniform", "halton", "sobol", "mpmc"}) {
    const std::size_t f = first(s);
    if (s != "uniform") ok = ok && f != none && f <= u;
    detail += " " + s + " " + (f == none ? std::string("never") : std::to_string(f));
  }
  report(8, ok, detail);
}

void c9() {
  bool ok = true;
  std::string detail;
  for (auto [k, d] : {std::pair<std::size_t, std::size_t>{2, 1}, {2, 2}, {4, 2}}) {
    const auto g = sukharev_grid(k, d);
    const auto est = dispersion_grid_lower_bound(g, 96);
    const double target = 1.0 / (2.0 * double(k));
    ok = ok && std::abs(est.value - target) <= est.slack && dispersion_linf(g, 96).value == target;
    detail += "k=" + std::to_string(k) + " d=" + std::to_string(d) + " est " + fmt("%.4f", est.value) + "; ";
  }
  std::size_t sets = 0;
  double worst = -1.0;  // largest disp - (star^{1/d} + slack)
  for (std::size_t d = 1; d <= 3; ++d) {
    const std::size_t res = d == 1 ? 4096 : d == 2 ? 512 : 64;
    for (std::size_t n : {16u, 64u, 256u}) {
      std::vector<PointSet> gen;
      for (std::uint64_t s = 1; s <= 3; ++s) gen.push_back(sample_uniform(n, d, 700 + s));
      gen.push_back(halton(n, d, 1));
      gen.push_back(sobol(n, d, 1));
      gen.push_back(sukharev_grid(static_cast<std::size_t>(std::floor(std::pow(double(n), 1.0 / double(d)) + 1e-9)), d));
      if (d == 2 && n >= 64) gen.push_back(load_points(data_dir() / "pools" / "d2" / ("n" + std::to_string(n)) / "set_001.pts"));
      for (const auto& ps : gen) {
        const auto disp = dispersion_grid_lower_bound(ps, res);
        const double star = star_discrepancy_exact(ps).value;
        worst = std::max(worst, disp.value - (std::pow(star, 1.0 / double(d)) + disp.slack));
        ++sets;
      }
    }
  }
  ok = ok && worst <= 0.0;
  report(9, ok, detail + "inequality on " + std::to_string(sets) + " sets, worst margin " + fmt("%.4f", worst));
}

void c10() {
  const auto base = fs::temp_directory_path() / "ldsplan_acceptance_determinism";
  fs::remove_all(base);
  const auto cfg = (data_dir() / "experiments" / "corridor2.json").string();
  std::string bytes[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = base / ("run" + std::to_string(i));
    std::ostringstream o, e;
    const int code = cli::dispatch({"--threads", i == 0 ? "1" : "3", "bench", "--config", cfg, "--out", out.string()}, o, e);
    if (code != 0) return report(10, false, "bench exited " + std::to_string(code) + ": " + e.str());
    std::ifstream in(out / "results.csv", std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    bytes[i] = buf.str();
  }
  fs::remove_all(base);
  report(10, !bytes[0].empty() && bytes[0] == bytes[1],
         "corridor2 results.csv from two executions (1 and 3 threads): " + std::to_string(bytes[0].size()) +
             " bytes, " + (bytes[0] == bytes[1] ? "identical" : "different"));
}

}  // namespace

int main() {
  c1();
  c2();
  c3();
  c4();
  c5();
  c6();
  c7();
  c8();
  c9();
  c10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
