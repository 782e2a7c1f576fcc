#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldsplan/planner.hpp"

namespace ldsplan::bench {

/// One sampler column of an experiment.
struct SamplerEntry {
  enum class Kind { Uniform, Halton, Sobol, Grid, Pool };
  std::string name;
  Kind kind = Kind::Uniform;
  /// Pool: directory per N. "{n}" in the pattern is replaced by N; every
  /// *.pts file in the directory (sorted by name) is a pool member.
  std::string pool_pattern;
};

struct ExperimentConfig {
  std::string name;
  std::filesystem::path environment;
  std::vector<SamplerEntry> samplers;
  std::vector<std::size_t> n_values;
  std::size_t runs = 50;
  ConnectionRule rule;
  /// Overrides `rule` for specific N.
  std::map<std::size_t, ConnectionRule> rule_by_n;
  std::uint64_t base_seed = 0;
  /// Off by default so results.csv is byte-reproducible; wall_ms is then 0.
  bool record_time = false;

  const ConnectionRule& rule_for(std::size_t n) const;
  void validate() const;
};

/// Parses the JSON config; relative paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunRecord {
  std::string experiment;
  std::string sampler;
  std::size_t n = 0;
  std::size_t run = 0;  // 1-based
  bool success = false;
  std::size_t valid_milestones = 0;
  std::optional<double> cost;
  std::size_t validity_checks = 0;
  std::size_t edge_checks = 0;
  double wall_ms = 0.0;
  std::string seed;  // "seed:<u64>", "cursor:<index>" or "pool:<file>"
  double edge_resolution = 0.0;
  bool revalidated = false;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Seed used by uniform run `run` of (sampler, N): base_seed xor a SplitMix
/// hash of the cell.
std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& sampler, std::size_t n, std::size_t run);

/// Pool member index for a run: seeded, reproducible pseudorandom choice.
std::size_t pool_pick(std::uint64_t base_seed, const std::string& sampler, std::size_t n, std::size_t run,
                      std::size_t pool_size);

/// Executes every (sampler, N, run) cell. Records are ordered by sampler
/// (config order), N (config order), run.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, unsigned threads = 1);

inline constexpr const char* kCsvVersionLine = "# ldsplan-results v1";
inline constexpr const char* kCsvHeader =
    "experiment,sampler,n,run,success,valid_milestones,cost,validity_checks,edge_checks,wall_ms,seed,"
    "edge_resolution,revalidated";

std::string render_csv(const std::vector<RunRecord>& records, bool with_header = true);
std::vector<RunRecord> parse_csv(const std::string& text);
std::vector<RunRecord> load_csv(const std::filesystem::path& path);
/// Appends to results.csv (writing version + header when the file is new).
void append_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

struct CellSummary {
  std::string experiment;
  std::string sampler;
  std::size_t n = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;  // percent
  double v_mean = 0.0;
  double v_std = 0.0;  // sample standard deviation (0 for a single run)
};

/// Groups by (experiment, sampler, N), ordered by first appearance.
std::vector<CellSummary> summarize(const std::vector<RunRecord>& records);

/// Markdown table: one row per (experiment, sampler), columns per N in
/// first-appearance order, each "SR% | |V| mean +- std".
std::string render_table(const std::vector<CellSummary>& cells);

/// 800x500 SVG. x: log2(N) mapped linearly onto [80, 760] over the observed
/// N range (centre when a single N); y: SR mapped as 440 - 4 * SR, so 0% is
/// at y=440 and 100% at y=40. Colour per experiment, dash style per sampler.
std::string render_svg(const std::vector<CellSummary>& cells);

/// Writes table.md and chart.svg into out_dir.
void render_report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir);

}  // namespace ldsplan::bench
