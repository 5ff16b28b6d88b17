#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xlit/model.hpp"
#include "xlit/solver.hpp"

namespace xlit {

// Instance generators. Pure functions of their parameters: same arguments,
// byte-identical model documents.
std::string gen_knapsack(int64_t n, uint64_t seed);
std::string gen_alldiff_chain(int64_t n);
std::string gen_disjunctive(int64_t ntasks, uint64_t seed);

struct RunConfig {
  std::string name;
  std::string ext = "none";  // none | all | comma list
  int64_t psum_interval = 1;
  PsumOrder psum_order = PsumOrder::Struct;
  std::optional<Heuristic> heuristic;
  std::optional<uint64_t> max_conflicts;
  std::optional<int64_t> timeout_ms;
};

struct BenchRow {
  std::string family;
  std::string instance;
  std::string config;
  uint64_t seed = 0;
  Status status = Status::Unknown;
  std::optional<int64_t> objective;
  uint64_t fails = 0;
  int64_t time_ms = 0;
};

struct BenchCell {
  std::string family;
  std::string config;
  double geo_fails = 0.0;
  double geo_time_ms = 0.0;
  int solved = 0;
  int runs = 0;
};

struct BenchInstance {
  std::string family;
  std::string instance;
  uint64_t seed = 0;
  std::string model_text;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchCell> cells;
  std::vector<std::string> warnings;
};

// Runs every instance under every config on a worker pool (one solver
// instance per worker). Timed-out runs contribute the limit value to the
// geometric means.
BenchReport run_bench(const std::vector<BenchInstance>& instances,
                      const std::vector<RunConfig>& configs, int jobs,
                      uint64_t fails_limit_value);

// Geometric mean with timeout substitution already applied by the caller;
// zero values are clamped to 1 before taking logs.
double geometric_mean(const std::vector<double>& xs);

std::string rows_csv(const std::vector<BenchRow>& rows);
std::string render_cells(const std::vector<BenchCell>& cells);

SolverConfig to_solver_config(const RunConfig& rc, uint64_t seed);

struct StatsDoc {
  Status status;
  std::optional<int64_t> best_objective;
  SolveStats stats;
};
std::string stats_json(const SolveResult& r);

}  // namespace xlit
