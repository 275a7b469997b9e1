#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cclab/config.hpp"
#include "cclab/frames.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

inline constexpr const char* kVersion = "0.3.0";

std::vector<std::string> experiment_names();

/// One experiment read from an INI file (see README). Keys of the section
/// named after the experiment land in `params`.
struct ExperimentConfig {
  std::string experiment;
  std::string frame = "heisenberg1";  // built-in name or frame file
  std::vector<double> eps_list{0.0};  // >= 0, kept in descending order
  std::optional<std::uint64_t> seed;
  std::string out_dir = "cclab_out";
  int threads = 1;
  int nodes = 41;         // lattice nodes per axis
  std::vector<Axis> box;  // explicit lattice box; empty means fitted per run
  bool use_cache = true;
  std::map<std::string, IniEntry> params;

  /// A non-empty `experiment` overrides the file's experiment key.
  static ExperimentConfig parse(const std::string& text, const std::string& experiment = "");
  static ExperimentConfig load(const std::string& path, const std::string& experiment = "");

  /// Sets an experiment parameter (command-line overrides).
  void set(const std::string& key, const std::string& value);
  void set_eps_list(const std::vector<double>& eps);
  const IniEntry* param(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  Vec point(const std::string& key, const Vec& fallback) const;

  /// Throws ParseError when the seed or the experiment is missing.
  void validate() const;
  /// Canonical dump of everything that affects results (not out_dir, threads
  /// or caching).
  std::string canonical() const;
  std::string hash() const;
};

struct OutputFile {
  std::string path;
  std::string kind;  // "table", "field", "plot"
  std::size_t rows = 0;
};

/// Long-format record: one (experiment, eps, abscissa, value) row.
struct PlotRow {
  double eps = 0.0;
  std::string axis;  // "r", "t", "step", ...
  double x = 0.0;
  std::string quantity;
  double value = 0.0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ResultManifest {
  std::string experiment;
  std::string frame;
  std::string config_hash;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  std::string out_dir;
  std::string error;  // set when the run aborted; outputs hold what was flushed
  std::vector<OutputFile> outputs;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<Check> checks;
  std::vector<PlotRow> plot;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;

  bool all_pass() const;
  std::string to_json() const;
  /// Scalars printed with %.17g, one per line.
  std::string scalar_summary() const;
};

/// Runs the experiment, writes CSV tables and manifest.json into out_dir.
/// On failure the manifest records the error before the exception propagates.
ResultManifest run(const ExperimentConfig& config);

/// Writes plot_<experiment>.csv (experiment, frame, eps, axis, x, quantity,
/// value) next to the manifest and returns its path. Throws
/// ManifestIncomplete when the manifest has no rows or lists missing files.
std::string emit_plot_data(const ResultManifest& manifest);

// ---------------------------------------------------------------------------
// Distance tables: d_eps(x, node) for every node of a lattice, stored under
// out_dir/cache keyed by frame, eps, lattice, source and options.

std::string distance_table_key(const std::string& frame_id, double eps, const Lattice& lat, const Vec& x,
                               const Lattice& solve_lat);
/// Node distances of `lat` from x, solved on solve_lat. Reads or writes
/// cache_dir when it is non-empty; `hit` reports whether the file existed.
std::vector<double> cached_distance_table(const EpsFrame& ef, const std::string& frame_id, const Lattice& lat,
                                          const Vec& x, const Lattice& solve_lat, const std::string& cache_dir,
                                          bool* hit = nullptr);

}  // namespace cclab
