#include "ldsplan/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "ldsplan/bench.hpp"
#include "ldsplan/discrepancy.hpp"
#include "ldsplan/error.hpp"
#include "ldsplan/mpmc.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/planner.hpp"
#include "ldsplan/pointset.hpp"
#include "ldsplan/qmc.hpp"

namespace ldsplan::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// "-" or empty means the output stream.
void emit_points(const PointSet& ps, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << format_points(ps);
  } else {
    save_points(ps, path);
  }
}

std::size_t default_resolution(std::size_t d) {
  // Keeps the grid near 2^20 cells; d=2 gets 256 per axis.
  const auto r = static_cast<std::size_t>(std::floor(std::pow(2.0, 20.0 / static_cast<double>(d)) + 1e-9));
  return std::clamp<std::size_t>(r, 2, 256);
}

struct GenArgs {
  std::string sampler = "uniform";
  std::size_t n = 0, d = 0, k = 0;
  std::uint64_t start = 1, seed = 0;
  std::string out;
};

struct TrainArgs {
  mpmc::TrainConfig cfg;
  std::string loss = "l2", clamp = "sigmoid", out;
  bool direct = false;
};

struct DiscArgs {
  std::string metric, in;
  bool root = false;
  std::size_t resolution = 0;
};

struct PlanArgs {
  std::string env, sampler = "uniform", rule, path_out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

int run_gen(const GenArgs& a, std::ostream& out) {
  PointSet ps = [&] {
    if (a.sampler == "grid" && a.k > 0) return sukharev_grid(a.k, a.d);
    SamplerSpec spec = SamplerSpec::parse(a.sampler);
    if (spec.kind == SamplerSpec::Kind::File) throw InvalidArgument("points gen: file sampler is not a generator");
    spec.start = a.start;
    return spec.sample(a.n, a.d, a.seed);
  }();
  emit_points(ps, a.out, out);
  return kOk;
}

int run_train(TrainArgs a, unsigned threads, std::ostream& out, std::ostream& err) {
  a.cfg.loss = mpmc::parse_loss_kind(a.loss);
  if (a.clamp == "sigmoid") {
    a.cfg.clamp = mpmc::ClampMode::Sigmoid;
  } else if (a.clamp == "hard") {
    a.cfg.clamp = mpmc::ClampMode::Hard;
  } else {
    throw InvalidArgument("unknown clamp mode '" + a.clamp + "'");
  }
  a.cfg.threads = threads;
  const fs::path dir = a.out;
  make_dir(dir);

  if (a.direct) {
    const auto res = mpmc::optimize_direct(a.cfg);
    save_points(res.best, dir / "set_000.pts");
    std::string csv = "epoch,loss,best\n";
    double best = res.loss_trace.empty() ? 0.0 : res.loss_trace.front();
    for (std::size_t e = 0; e < res.loss_trace.size(); ++e) {
      best = std::min(best, res.loss_trace[e]);
      csv += std::to_string(e) + "," + num(res.loss_trace[e]) + "," + num(best) + "\n";
    }
    write_text(dir / "report.csv", csv);
    out << "direct initial_loss=" << num(res.initial_loss) << " best_loss=" << num(res.best_loss) << "\n";
    return kOk;
  }

  const auto checkpoint = [&](std::size_t epoch, const std::vector<PointSet>& sets) {
    const fs::path cp = dir / ("checkpoint_" + std::to_string(epoch));
    make_dir(cp);
    for (std::size_t b = 0; b < sets.size(); ++b) {
      char name[32];
      std::snprintf(name, sizeof(name), "set_%03zu.pts", b);
      save_points(sets[b], cp / name);
    }
  };
  const auto res = mpmc::train(a.cfg, a.cfg.checkpoint_every > 0 ? mpmc::CheckpointFn(checkpoint) : nullptr);
  for (std::size_t b = 0; b < res.best_sets.size(); ++b) {
    char name[32];
    std::snprintf(name, sizeof(name), "set_%03zu.pts", b);
    save_points(res.best_sets[b], dir / name);
  }
  write_text(dir / "report.csv", mpmc::report_csv(res.report));
  if (threads > 1) {
    err << "note: trained with " << threads << " threads; member gradients are summed in fixed order\n";
  }
  out << "train best_loss=" << num(res.report.best_loss) << " best_epoch=" << res.report.best_epoch;
  if (res.report.grad_check_ran) out << " grad_check=" << num(res.report.grad_check.max_relative_error);
  out << " wall_s=" << num(res.report.wall_seconds) << "\n";
  return kOk;
}

int run_disc(const DiscArgs& a, unsigned threads, std::ostream& out) {
  const PointSet ps = load_points(a.in);
  DiscrepancyValue v;
  bool squared_metric = false;
  if (a.metric == "l2") {
    v = l2_warnock(ps, threads);
    squared_metric = true;
  } else if (a.metric == "hickernell") {
    v = hickernell_l2(ps, threads);
    squared_metric = true;
  } else if (a.metric == "star") {
    v = star_discrepancy_exact(ps);
  } else if (a.metric == "dispersion") {
    v = dispersion_linf(ps, a.resolution ? a.resolution : default_resolution(ps.dim()));
  } else {
    throw InvalidArgument("unknown metric '" + a.metric + "'");
  }
  const double shown = squared_metric && !a.root ? v.squared : v.value;
  out << a.metric << " " << num(shown) << " " << to_string(v.exactness);
  if (v.exactness == Exactness::LowerBound) out << " resolution=" << v.resolution << " slack=" << num(v.slack);
  out << "\n";
  return kOk;
}

int run_plan(const PlanArgs& a, unsigned threads, std::ostream& out) {
  const auto env = load_environment(a.env);
  const SamplerSpec spec = SamplerSpec::parse(a.sampler);
  const ConnectionRule rule = ConnectionRule::parse(a.rule);
  const PlanResult r = plan(*env, spec, a.n, rule, a.seed, threads);
  out << "success=" << (r.success ? 1 : 0) << " cost=" << (r.success ? num(r.cost) : std::string("nan"))
      << " valid_milestones=" << r.valid_milestones << " validity_checks=" << r.validity_checks
      << " edge_checks=" << r.edge_checks << " radius=" << num(r.radius_used)
      << " edge_resolution=" << num(r.edge_resolution) << " revalidated=" << (r.revalidated ? 1 : 0)
      << " rejected_edges=" << r.revalidation_rejects
      << " wall_ms=" << num(r.wall_ms) << "\n";
  if (!a.path_out.empty()) {
    if (!r.success) throw InvalidArgument("no path to write: planning failed");
    std::vector<double> coords;
    for (const auto& q : r.waypoints) {
      const auto u = unscale_from_bounds(q, env->bounds());
      coords.insert(coords.end(), u.begin(), u.end());
    }
    save_points(PointSet(r.waypoints.size(), env->dim(), std::move(coords), "path " + a.env + " " + spec.str()),
                a.path_out);
  }
  return kOk;
}

int run_bench(const std::string& config, const std::string& out_dir, bool record_time, unsigned threads,
              std::ostream& out) {
  auto cfg = bench::load_config(config);
  if (record_time) cfg.record_time = true;
  const auto records = bench::run_experiment(cfg, threads);
  make_dir(out_dir);
  const fs::path csv = fs::path(out_dir) / "results.csv";
  bench::append_csv(csv, records);
  // The report covers everything in results.csv, including earlier appends.
  bench::render_report(bench::load_csv(csv), out_dir);
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.success ? 1 : 0;
  out << "bench " << cfg.name << " records=" << records.size() << " successes=" << ok << "\n";
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ldsplan: low-discrepancy point sets and pre-sampled roadmap planning", "ldsplan"};
  app.require_subcommand(1);
  unsigned threads = default_thread_count();
  app.add_option("--threads", threads, "worker threads (default: LDSPLAN_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  auto* points = app.add_subcommand("points", "generate, train or reorder point sets");
  points->require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = points->add_subcommand("gen", "write a point set from a sampler");
  gen_cmd->add_option("--sampler", gen.sampler, "uniform | halton | sobol | grid")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of points");
  gen_cmd->add_option("--d", gen.d, "dimension")->required();
  gen_cmd->add_option("--k", gen.k, "grid: intervals per axis (overrides --n)");
  gen_cmd->add_option("--start", gen.start, "first sequence index (halton, sobol)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "uniform seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output file (default stdout)");

  TrainArgs tr;
  auto* train_cmd = points->add_subcommand("train", "train a message-passing generator");
  train_cmd->add_option("--n", tr.cfg.n, "points per set")->capture_default_str();
  train_cmd->add_option("--d", tr.cfg.d, "dimension")->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch, "point sets trained jointly (8, 16, 32)")->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed)->capture_default_str();
  train_cmd->add_option("--loss", tr.loss, "l2 | hickernell")->capture_default_str();
  train_cmd->add_option("--k", tr.cfg.k, "graph neighbours")->capture_default_str();
  train_cmd->add_option("--hidden", tr.cfg.hidden)->capture_default_str();
  train_cmd->add_option("--layers", tr.cfg.layers)->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--clamp", tr.clamp, "sigmoid | hard")->capture_default_str();
  train_cmd->add_option("--checkpoint-every", tr.cfg.checkpoint_every, "epochs between checkpoints, 0 = off");
  train_cmd->add_flag("--any-batch", tr.cfg.allow_any_batch, "allow batch sizes outside 8/16/32");
  train_cmd->add_flag("--direct", tr.direct, "optimize coordinates directly, no network");
  train_cmd->add_option("--out", tr.out, "output directory")->required();

  std::string reorder_in, reorder_out;
  auto* reorder_cmd = points->add_subcommand("reorder", "greedy low-discrepancy ordering");
  reorder_cmd->add_option("--in", reorder_in)->required();
  reorder_cmd->add_option("--out", reorder_out, "output file (default stdout)");

  DiscArgs disc;
  auto* disc_cmd = app.add_subcommand("disc", "evaluate a discrepancy metric");
  disc_cmd->add_option("--metric", disc.metric, "l2 | hickernell | star | dispersion")
      ->required()
      ->check(CLI::IsMember({"l2", "hickernell", "star", "dispersion"}));
  disc_cmd->add_option("--in", disc.in, "point-set file")->required();
  disc_cmd->add_flag("--root", disc.root, "print the root instead of the squared value (l2, hickernell)");
  disc_cmd->add_option("--resolution", disc.resolution, "dispersion grid cells per axis");

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "run one ps-PRM query");
  plan_cmd->add_option("--env", pl.env, "environment file")->required();
  plan_cmd->add_option("--sampler", pl.sampler, "uniform | halton | sobol | grid | file:PATH")
      ->capture_default_str();
  plan_cmd->add_option("--n", pl.n, "number of samples")->required();
  plan_cmd->add_option("--rule", pl.rule, "radius:R | knn:K | theory:ALPHA")->required();
  plan_cmd->add_option("--seed", pl.seed)->capture_default_str();
  plan_cmd->add_option("--path-out", pl.path_out, "write the path (unit-cube coordinates)");

  std::string bench_config, bench_out;
  bool record_time = false;
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment config");
  bench_cmd->add_option("--config", bench_config)->required();
  bench_cmd->add_option("--out", bench_out)->required();
  bench_cmd->add_flag("--record-time", record_time, "store wall time (results then differ run to run)");

  std::string report_in, report_out;
  auto* report_cmd = app.add_subcommand("report", "render table.md and chart.svg from results.csv");
  report_cmd->add_option("--in", report_in)->required();
  report_cmd->add_option("--out", report_out)->required();

  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--threads") {
      ++i;
      continue;
    }
    if (a.empty() || a[0] == '-') continue;
    if (a != "points" && a != "disc" && a != "plan" && a != "bench" && a != "report") {
      err << "error: unknown subcommand '" << a << "'\n" << app.help();
      return kUsage;
    }
    break;
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    // Help for the deepest subcommand that was named.
    const CLI::App* target = &app;
    while (true) {
      const auto subs = target->get_subcommands();
      if (subs.empty()) break;
      target = subs.front();
    }
    out << target->help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*gen_cmd) {
      if (gen.n == 0 && !(gen.sampler == "grid" && gen.k > 0)) throw InvalidArgument("points gen: --n is required");
      return run_gen(gen, out);
    }
    if (*train_cmd) return run_train(tr, threads, out, err);
    if (*reorder_cmd) {
      emit_points(greedy_reorder(load_points(reorder_in)), reorder_out, out);
      return kOk;
    }
    if (*disc_cmd) return run_disc(disc, threads, out);
    if (*plan_cmd) return run_plan(pl, threads, out);
    if (*bench_cmd) return run_bench(bench_config, bench_out, record_time, threads, out);
    if (*report_cmd) {
      bench::render_report(bench::load_csv(report_in), report_out);
      return kOk;
    }
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kData;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kData;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const Divergence& e) {
    err << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  err << "error: no command\n" << app.help();
  return kUsage;
}

}  // namespace ldsplan::cli
