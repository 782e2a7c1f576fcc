#include "ldsplan/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ldsplan/error.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/qmc.hpp"
#include "ldsplan/rng.hpp"

namespace ldsplan::bench {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

const ConnectionRule& ExperimentConfig::rule_for(std::size_t n) const {
  const auto it = rule_by_n.find(n);
  return it == rule_by_n.end() ? rule : it->second;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw InvalidArgument("experiment '" + name + "': runs must be >= 1");
  if (n_values.empty()) throw InvalidArgument("experiment '" + name + "': N list is empty");
  if (samplers.empty()) throw InvalidArgument("experiment '" + name + "': no samplers");
  std::set<std::string> names;
  for (const auto& s : samplers) {
    if (!names.insert(s.name).second) throw InvalidArgument("duplicate sampler name '" + s.name + "'");
  }
  for (std::size_t n : n_values) {
    if (n < 1) throw InvalidArgument("N values must be >= 1");
    rule_for(n).validate();
  }
}

namespace {

SamplerEntry parse_sampler(const nlohmann::json& j, const fs::path& base_dir) {
  SamplerEntry s;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
    s.name = kind;
  } else {
    kind = j.at("kind").get<std::string>();
    s.name = j.value("name", kind);
  }
  if (kind == "uniform") {
    s.kind = SamplerEntry::Kind::Uniform;
  } else if (kind == "halton") {
    s.kind = SamplerEntry::Kind::Halton;
  } else if (kind == "sobol") {
    s.kind = SamplerEntry::Kind::Sobol;
  } else if (kind == "grid") {
    s.kind = SamplerEntry::Kind::Grid;
  } else if (kind == "pool") {
    s.kind = SamplerEntry::Kind::Pool;
    fs::path pattern = j.at("pool").get<std::string>();
    if (pattern.is_relative()) pattern = base_dir / pattern;
    s.pool_pattern = pattern.string();
  } else {
    throw FormatError("experiment config: unknown sampler kind '" + kind + "'");
  }
  return s;
}

std::string pool_dir(const std::string& pattern, std::size_t n) {
  std::string out = pattern;
  const std::string key = "{n}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key)) {
    out.replace(pos, key.size(), std::to_string(n));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.name = j.at("name").get<std::string>();
    fs::path env = j.at("environment").get<std::string>();
    cfg.environment = env.is_relative() ? base_dir / env : env;
    for (const auto& s : j.at("samplers")) cfg.samplers.push_back(parse_sampler(s, base_dir));
    cfg.n_values = j.at("n").get<std::vector<std::size_t>>();
    cfg.runs = j.value("runs", std::size_t{50});
    cfg.rule = ConnectionRule::parse(j.at("rule").get<std::string>());
    if (j.contains("rule_by_n")) {
      for (const auto& [key, value] : j.at("rule_by_n").items()) {
        cfg.rule_by_n[std::stoull(key)] = ConnectionRule::parse(value.get<std::string>());
      }
    }
    cfg.base_seed = j.value("base_seed", std::uint64_t{0});
    cfg.record_time = j.value("record_time", false);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Running

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& sampler, std::size_t n, std::size_t run) {
  std::uint64_t h = fnv1a(sampler);
  h = mix64(h ^ mix64(static_cast<std::uint64_t>(n)));
  h = mix64(h ^ static_cast<std::uint64_t>(run));
  return base_seed ^ h;
}

std::size_t pool_pick(std::uint64_t base_seed, const std::string& sampler, std::size_t n, std::size_t run,
                      std::size_t pool_size) {
  if (pool_size == 0) throw InvalidArgument("pool_pick: empty pool");
  return static_cast<std::size_t>(mix64(cell_seed(base_seed, sampler, n, run) ^ 0x706f6f6cULL) % pool_size);
}

namespace {

struct Pool {
  std::vector<fs::path> files;
  std::vector<PointSet> sets;
};

Pool load_pool(const SamplerEntry& s, std::size_t n, std::size_t d) {
  const fs::path dir = pool_dir(s.pool_pattern, n);
  if (!fs::is_directory(dir)) throw IoError("pool directory not found: " + dir.string());
  Pool pool;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pts") pool.files.push_back(entry.path());
  }
  std::sort(pool.files.begin(), pool.files.end());
  if (pool.files.empty()) throw IoError("no .pts files in pool directory: " + dir.string());
  for (const auto& f : pool.files) {
    PointSet ps = load_points(f);
    if (ps.dim() != d) {
      throw InvalidArgument("pool file " + f.string() + " has dimension " + std::to_string(ps.dim()) +
                            ", environment needs " + std::to_string(d));
    }
    if (ps.size() != n) {
      throw InvalidArgument("pool file " + f.string() + " has " + std::to_string(ps.size()) + " points, cell needs " +
                            std::to_string(n));
    }
    pool.sets.push_back(std::move(ps));
  }
  return pool;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  const auto env = load_environment(cfg.environment);
  const std::size_t d = env->dim();

  // Pools are resolved up front so missing files fail before any planning.
  std::map<std::pair<std::size_t, std::size_t>, Pool> pools;
  for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
    if (cfg.samplers[s].kind != SamplerEntry::Kind::Pool) continue;
    for (std::size_t n : cfg.n_values) pools[{s, n}] = load_pool(cfg.samplers[s], n, d);
  }

  struct Task {
    std::size_t sampler, n, run;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
    for (std::size_t n : cfg.n_values) {
      for (std::size_t r = 1; r <= cfg.runs; ++r) tasks.push_back({s, n, r});
    }
  }

  std::vector<RunRecord> records(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const SamplerEntry& s = cfg.samplers[task.sampler];
    RunRecord rec;
    rec.experiment = cfg.name;
    rec.sampler = s.name;
    rec.n = task.n;
    rec.run = task.run;

    std::optional<PointSet> samples;
    switch (s.kind) {
      case SamplerEntry::Kind::Uniform: {
        const std::uint64_t seed = cell_seed(cfg.base_seed, s.name, task.n, task.run);
        samples = sample_uniform(task.n, d, seed);
        rec.seed = "seed:" + std::to_string(seed);
        break;
      }
      case SamplerEntry::Kind::Halton:
      case SamplerEntry::Kind::Sobol: {
        auto cursor = SequenceCursor::for_run(
            s.kind == SamplerEntry::Kind::Halton ? SequenceKind::Halton : SequenceKind::Sobol, d, task.n, task.run);
        rec.seed = "cursor:" + std::to_string(cursor.next);
        samples = cursor.take(task.n);
        break;
      }
      case SamplerEntry::Kind::Grid: {
        SamplerSpec spec;
        spec.kind = SamplerSpec::Kind::Grid;
        samples = spec.sample(task.n, d, 0);
        rec.seed = "grid";
        break;
      }
      case SamplerEntry::Kind::Pool: {
        const Pool& pool = pools.at({task.sampler, task.n});
        const std::size_t pick = pool_pick(cfg.base_seed, s.name, task.n, task.run, pool.sets.size());
        samples = pool.sets[pick];
        rec.seed = "pool:" + pool.files[pick].filename().string();
        break;
      }
    }

    // Threads are spent across cells; each plan runs single-threaded.
    const PlanResult res = plan_with_points(*env, *samples, cfg.rule_for(task.n), 1);
    rec.success = res.success;
    rec.valid_milestones = res.valid_milestones;
    if (res.success) rec.cost = res.cost;
    rec.validity_checks = res.validity_checks;
    rec.edge_checks = res.edge_checks;
    rec.wall_ms = cfg.record_time ? res.wall_ms : 0.0;
    rec.edge_resolution = res.edge_resolution;
    rec.revalidated = res.revalidated;
    records[t] = std::move(rec);
  });
  return records;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string render_csv(const std::vector<RunRecord>& records, bool with_header) {
  std::string out;
  if (with_header) {
    out += kCsvVersionLine;
    out += '\n';
    out += kCsvHeader;
    out += '\n';
  }
  for (const auto& r : records) {
    out += csv_field(r.experiment) + ',' + csv_field(r.sampler) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.run) + ',' + (r.success ? "1" : "0") + ',' + std::to_string(r.valid_milestones) + ',' +
           (r.cost ? fmt_double(*r.cost) : std::string()) + ',' + std::to_string(r.validity_checks) + ',' +
           std::to_string(r.edge_checks) + ',' + fmt_double(r.wall_ms) + ',' + csv_field(r.seed) + ',' +
           fmt_double(r.edge_resolution) + ',' + (r.revalidated ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<RunRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RunRecord> out;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw FormatError("results.csv: unexpected header on line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw FormatError("results.csv: expected 13 fields on line " + std::to_string(line_no));
    try {
      RunRecord r;
      r.experiment = f[0];
      r.sampler = f[1];
      r.n = std::stoull(f[2]);
      r.run = std::stoull(f[3]);
      r.success = f[4] == "1";
      r.valid_milestones = std::stoull(f[5]);
      if (!f[6].empty()) r.cost = std::stod(f[6]);
      r.validity_checks = std::stoull(f[7]);
      r.edge_checks = std::stoull(f[8]);
      r.wall_ms = std::stod(f[9]);
      r.seed = f[10];
      r.edge_resolution = std::stod(f[11]);
      r.revalidated = f[12] == "1";
      if (r.success && !r.cost) throw FormatError("success without cost");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError("results.csv: bad record on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw FormatError("results.csv: missing header");
  return out;
}

std::vector<RunRecord> load_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

void append_csv(const fs::path& path, const std::vector<RunRecord>& records) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (!fresh) load_csv(path);  // refuses to append to a foreign file
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_csv(records, fresh);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Summaries and rendering

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvalidArgument("summarize: no records");
  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.experiment, r.sampler, r.n}].push_back(&r);

  // Order cells by experiment, sampler and N of first appearance; values do
  // not depend on record order.
  std::vector<std::string> exp_order, sampler_order;
  std::vector<std::size_t> n_order;
  auto note = [](auto& order, const auto& v) {
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  };
  for (const auto& r : records) {
    note(exp_order, r.experiment);
    note(sampler_order, r.sampler);
    note(n_order, r.n);
  }
  auto rank = [](const auto& order, const auto& v) {
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin());
  };

  std::vector<CellSummary> cells;
  for (const auto& [key, group] : groups) {
    CellSummary c;
    std::tie(c.experiment, c.sampler, c.n) = key;
    c.runs = group.size();
    std::vector<double> v;
    for (const RunRecord* r : group) {
      c.successes += r->success ? 1 : 0;
      v.push_back(static_cast<double>(r->valid_milestones));
    }
    std::sort(v.begin(), v.end());  // order-independent sums
    c.success_rate = 100.0 * static_cast<double>(c.successes) / static_cast<double>(c.runs);
    double sum = 0.0;
    for (double x : v) sum += x;
    c.v_mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - c.v_mean) * (x - c.v_mean);
      c.v_std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    cells.push_back(std::move(c));
  }
  std::sort(cells.begin(), cells.end(), [&](const CellSummary& a, const CellSummary& b) {
    const auto ka = std::make_tuple(rank(exp_order, a.experiment), rank(sampler_order, a.sampler), rank(n_order, a.n));
    const auto kb = std::make_tuple(rank(exp_order, b.experiment), rank(sampler_order, b.sampler), rank(n_order, b.n));
    return ka < kb;
  });
  return cells;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

template <typename T, typename F>
std::vector<T> unique_in_order(const std::vector<CellSummary>& cells, F&& get) {
  std::vector<T> out;
  for (const auto& c : cells) {
    const T v = get(c);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace

std::string render_table(const std::vector<CellSummary>& cells) {
  const auto ns = unique_in_order<std::size_t>(cells, [](const CellSummary& c) { return c.n; });
  const auto rows = unique_in_order<std::pair<std::string, std::string>>(
      cells, [](const CellSummary& c) { return std::make_pair(c.experiment, c.sampler); });

  std::string out = "| Experiment | Sampler |";
  for (std::size_t n : ns) out += " SR (%) N=" + std::to_string(n) + " | |V| N=" + std::to_string(n) + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < ns.size(); ++i) out += "---:|---:|";
  out += '\n';
  for (const auto& [exp, sampler] : rows) {
    out += "| " + exp + " | " + sampler + " |";
    for (std::size_t n : ns) {
      const auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
        return c.experiment == exp && c.sampler == sampler && c.n == n;
      });
      if (it == cells.end()) {
        out += " - | - |";
      } else {
        out += " " + fixed(it->success_rate, 0) + " | " + fixed(it->v_mean, 1) + " ± " + fixed(it->v_std, 1) + " |";
      }
    }
    out += '\n';
  }
  return out;
}

std::string render_svg(const std::vector<CellSummary>& cells) {
  constexpr double kLeft = 80.0, kRight = 760.0, kTop = 40.0, kBottom = 440.0;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  static const char* kDashes[] = {"", "8 4", "2 4", "12 4 2 4", "6 2", "1 2"};

  auto ns = unique_in_order<std::size_t>(cells, [](const CellSummary& c) { return c.n; });
  std::sort(ns.begin(), ns.end());
  const auto exps = unique_in_order<std::string>(cells, [](const CellSummary& c) { return c.experiment; });
  const auto samplers = unique_in_order<std::string>(cells, [](const CellSummary& c) { return c.sampler; });

  const double lo = std::log2(static_cast<double>(ns.front()));
  const double hi = std::log2(static_cast<double>(ns.back()));
  auto x_of = [&](std::size_t n) {
    if (hi == lo) return (kLeft + kRight) / 2.0;
    return kLeft + (std::log2(static_cast<double>(n)) - lo) / (hi - lo) * (kRight - kLeft);
  };
  auto y_of = [&](double sr) { return kBottom - (kBottom - kTop) * sr / 100.0; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"80\" y1=\"440\" x2=\"760\" y2=\"440\"/>\n";
  s += "<line x1=\"80\" y1=\"40\" x2=\"80\" y2=\"440\"/>\n";
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int sr = 0; sr <= 100; sr += 20) {
    const std::string y = fixed(y_of(sr), 2);
    s += "<line x1=\"76\" y1=\"" + y + "\" x2=\"80\" y2=\"" + y + "\" stroke=\"black\"/>\n";
    s += "<text x=\"70\" y=\"" + fixed(y_of(sr) + 4.0, 2) + "\" text-anchor=\"end\">" + std::to_string(sr) + "</text>\n";
  }
  for (std::size_t n : ns) {
    const std::string x = fixed(x_of(n), 2);
    s += "<line x1=\"" + x + "\" y1=\"440\" x2=\"" + x + "\" y2=\"444\" stroke=\"black\"/>\n";
    s += "<text x=\"" + x + "\" y=\"458\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";
  }
  s += "<text x=\"420\" y=\"485\" text-anchor=\"middle\">N (log2 scale)</text>\n";
  s += "<text x=\"20\" y=\"240\" text-anchor=\"middle\" transform=\"rotate(-90 20 240)\">success rate (%)</text>\n";
  s += "</g>\n";

  std::size_t legend_row = 0;
  for (std::size_t e = 0; e < exps.size(); ++e) {
    for (std::size_t k = 0; k < samplers.size(); ++k) {
      std::vector<const CellSummary*> pts;
      for (const auto& c : cells) {
        if (c.experiment == exps[e] && c.sampler == samplers[k]) pts.push_back(&c);
      }
      if (pts.empty()) continue;
      std::sort(pts.begin(), pts.end(), [](const CellSummary* a, const CellSummary* b) { return a->n < b->n; });
      const std::string color = kColors[e % std::size(kColors)];
      const std::string dash = kDashes[k % std::size(kDashes)];
      std::string points;
      for (const auto* c : pts) {
        if (!points.empty()) points += ' ';
        points += fixed(x_of(c->n), 2) + "," + fixed(y_of(c->success_rate), 2);
      }
      s += "<polyline data-experiment=\"" + exps[e] + "\" data-sampler=\"" + samplers[k] +
           "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"" +
           (dash.empty() ? std::string() : " stroke-dasharray=\"" + dash + "\"") + " points=\"" + points + "\"/>\n";
      for (const auto* c : pts) {
        s += "<circle cx=\"" + fixed(x_of(c->n), 2) + "\" cy=\"" + fixed(y_of(c->success_rate), 2) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
      const std::string ly = fixed(60.0 + 16.0 * static_cast<double>(legend_row), 2);
      s += "<line x1=\"600\" y1=\"" + ly + "\" x2=\"630\" y2=\"" + ly + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"" + (dash.empty() ? std::string() : " stroke-dasharray=\"" + dash + "\"") + "/>\n";
      s += "<text x=\"636\" y=\"" + fixed(60.0 + 16.0 * static_cast<double>(legend_row) + 4.0, 2) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + exps[e] + " / " + samplers[k] + "</text>\n";
      ++legend_row;
    }
  }
  s += "</svg>\n";
  return s;
}

void render_report(const std::vector<RunRecord>& records, const fs::path& out_dir) {
  const auto cells = summarize(records);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
  };
  write(out_dir / "table.md", render_table(cells));
  write(out_dir / "chart.svg", render_svg(cells));
}

}  // namespace ldsplan::bench
