#include "xlit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "xlit/rng.hpp"

namespace xlit {

using json = nlohmann::json;

std::string gen_knapsack(int64_t n, uint64_t seed) {
  if (n < 1) throw ModelError("knapsack needs n >= 1");
  SplitMix64 rng(seed);
  struct Item {
    int64_t w, p;
  };
  std::vector<Item> items;
  int64_t wsum = 0;
  for (int64_t i = 0; i < n; ++i) {
    int64_t w = rng.uniform(1, 100);
    int64_t p = std::max<int64_t>(1, w + rng.uniform(-10, 10));
    items.push_back({w, p});
    wsum += w;
  }
  int64_t cap = (wsum + 1) / 2;
  // Structural order: profit/weight ratio descending, stable on input order.
  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return items[a].p * items[b].w > items[b].p * items[a].w;
  });

  json doc;
  doc["vars"] = json::array();
  for (int64_t i = 0; i < n; ++i)
    doc["vars"].push_back({{"name", "x" + std::to_string(i + 1)}, {"lb", 0}, {"ub", 1}});
  json wcoeffs = json::array(), wvars = json::array();
  json pcoeffs = json::array(), pvars = json::array(), sorder = json::array();
  for (size_t idx : order) {
    wcoeffs.push_back(items[idx].w);
    wvars.push_back("x" + std::to_string(idx + 1));
    pcoeffs.push_back(items[idx].p);
    pvars.push_back("x" + std::to_string(idx + 1));
    sorder.push_back("x" + std::to_string(idx + 1));
  }
  doc["constraints"] = json::array();
  doc["constraints"].push_back(
      {{"type", "linear_le"}, {"coeffs", wcoeffs}, {"vars", wvars}, {"bound", cap}});
  doc["objective"] = {{"sense", "max"}, {"coeffs", pcoeffs}, {"vars", pvars}};
  doc["search"] = {{"heuristic", "fixed"}, {"order", sorder}, {"value_choice", "max"}};
  return doc.dump(2) + "\n";
}

std::string gen_alldiff_chain(int64_t n) {
  if (n < 3) throw ModelError("alldiff chain needs n >= 3");
  json doc;
  doc["vars"] = json::array();
  json order = json::array(), coeffs = json::array(), vars = json::array();
  for (int64_t i = 1; i <= n; ++i) {
    std::string name = "x" + std::to_string(i);
    doc["vars"].push_back({{"name", name}, {"lb", 1}, {"ub", 5}});
    order.push_back(name);
    coeffs.push_back(1);
    vars.push_back(name);
  }
  doc["constraints"] = json::array();
  for (int64_t i = 1; i + 2 <= n; ++i) {
    json av = json::array();
    av.push_back("x" + std::to_string(i));
    av.push_back("x" + std::to_string(i + 1));
    av.push_back("x" + std::to_string(i + 2));
    doc["constraints"].push_back({{"type", "alldiff"}, {"vars", av}});
  }
  doc["objective"] = {{"sense", "min"}, {"coeffs", coeffs}, {"vars", vars}};
  doc["search"] = {{"heuristic", "fixed"}, {"order", order}, {"value_choice", "min"}};
  return doc.dump(2) + "\n";
}

std::string gen_disjunctive(int64_t ntasks, uint64_t seed) {
  if (ntasks < 2) throw ModelError("disjunctive needs >= 2 tasks");
  SplitMix64 rng(seed);
  std::vector<int64_t> dur;
  int64_t dsum = 0;
  for (int64_t i = 0; i < ntasks; ++i) {
    dur.push_back(rng.uniform(3, 10));
    dsum += dur.back();
  }
  int64_t horizon = (13 * dsum + 9) / 10;  // ceil(1.3 * sum)

  json doc;
  doc["vars"] = json::array();
  json starts = json::array(), durations = json::array(), order = json::array();
  // Mirror variables channel s_i + m_i = horizon so the makespan bound
  // E >= s_i + d_i stays in positive-coefficient form: E + m_i >= horizon + d_i.
  // Each mirror is declared right after its start, which keeps plain
  // enumeration of the model cheap.
  for (int64_t i = 0; i < ntasks; ++i) {
    std::string s = "s" + std::to_string(i + 1);
    doc["vars"].push_back({{"name", s}, {"lb", 0}, {"ub", horizon - dur[i]}});
    doc["vars"].push_back(
        {{"name", "m" + std::to_string(i + 1)}, {"lb", dur[i]}, {"ub", horizon}});
    starts.push_back(s);
    durations.push_back(dur[i]);
    order.push_back(s);
  }
  doc["vars"].push_back({{"name", "makespan"}, {"lb", 0}, {"ub", horizon}});
  order.push_back("makespan");

  doc["constraints"] = json::array();
  doc["constraints"].push_back(
      {{"type", "disjunctive"}, {"starts", starts}, {"durations", durations}});
  for (int64_t i = 0; i < ntasks; ++i) {
    std::string s = "s" + std::to_string(i + 1), mv = "m" + std::to_string(i + 1);
    doc["constraints"].push_back({{"type", "linear_eq"},
                                  {"coeffs", {1, 1}},
                                  {"vars", {s, mv}},
                                  {"bound", horizon}});
    doc["constraints"].push_back({{"type", "linear_ge"},
                                  {"coeffs", {1, 1}},
                                  {"vars", {"makespan", mv}},
                                  {"bound", horizon + dur[i]}});
    order.push_back(mv);
  }
  doc["objective"] = {{"sense", "min"}, {"coeffs", {1}}, {"vars", {"makespan"}}};
  doc["search"] = {{"heuristic", "fixed"}, {"order", order}, {"value_choice", "min"}};
  return doc.dump(2) + "\n";
}

double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += std::log(std::max(1.0, x));
  return std::exp(acc / static_cast<double>(xs.size()));
}

SolverConfig to_solver_config(const RunConfig& rc, uint64_t seed) {
  SolverConfig sc;
  sc.ext = parse_ext(rc.ext);
  sc.psum_interval = rc.psum_interval;
  sc.psum_order = rc.psum_order;
  sc.heuristic = rc.heuristic;
  sc.seed = seed;
  sc.max_conflicts = rc.max_conflicts;
  sc.timeout_ms = rc.timeout_ms;
  return sc;
}

BenchReport run_bench(const std::vector<BenchInstance>& instances,
                      const std::vector<RunConfig>& configs, int jobs,
                      uint64_t fails_limit_value) {
  BenchReport rep;
  struct Task {
    size_t inst, cfg;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < instances.size(); ++i)
    for (size_t c = 0; c < configs.size(); ++c) tasks.push_back({i, c});
  rep.rows.resize(tasks.size());

  std::atomic<size_t> next{0};
  std::mutex warn_mu;
  auto worker = [&]() {
    for (;;) {
      size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const BenchInstance& inst = instances[tasks[t].inst];
      const RunConfig& rc = configs[tasks[t].cfg];
      BenchRow row;
      row.family = inst.family;
      row.instance = inst.instance;
      row.config = rc.name;
      row.seed = inst.seed;
      try {
        ModelInstance m = parse_model(inst.model_text);
        Solver solver(m, to_solver_config(rc, inst.seed));
        SolveResult res = solver.solve();
        row.status = res.status;
        row.objective = res.best_objective;
        row.fails = res.stats.fails;
        row.time_ms = res.stats.wall_ms;
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> g(warn_mu);
        rep.warnings.push_back("run " + inst.instance + "/" + rc.name + " failed: " + ex.what());
        row.status = Status::Unknown;
        row.fails = 0;
        row.time_ms = -1;  // marks ERROR rows; excluded from means
      }
      rep.rows[t] = std::move(row);
    }
  };
  int nw = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::map<std::pair<std::string, std::string>, std::vector<const BenchRow*>> cells;
  for (const auto& row : rep.rows) cells[{row.family, row.config}].push_back(&row);
  for (const auto& [key, rows] : cells) {
    BenchCell cell;
    cell.family = key.first;
    cell.config = key.second;
    std::vector<double> fails, times;
    for (const BenchRow* r : rows) {
      if (r->time_ms < 0) continue;  // ERROR
      ++cell.runs;
      if (r->status == Status::Optimal || r->status == Status::Sat ||
          r->status == Status::Unsat) {
        ++cell.solved;
        fails.push_back(static_cast<double>(r->fails));
        times.push_back(static_cast<double>(r->time_ms));
      } else {
        // Timeouts count at the limit value.
        fails.push_back(static_cast<double>(fails_limit_value));
        times.push_back(static_cast<double>(r->time_ms));
      }
    }
    cell.geo_fails = geometric_mean(fails);
    cell.geo_time_ms = geometric_mean(times);
    rep.cells.push_back(cell);
  }
  return rep;
}

std::string rows_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "family,instance,config,seed,status,objective,fails,time_ms\n";
  for (const auto& r : rows) {
    os << r.family << "," << r.instance << "," << r.config << "," << r.seed << ","
       << (r.time_ms < 0 ? "ERROR" : status_str(r.status)) << ",";
    if (r.objective)
      os << *r.objective;
    os << "," << r.fails << "," << r.time_ms << "\n";
  }
  return os.str();
}

std::string render_cells(const std::vector<BenchCell>& cells) {
  std::ostringstream os;
  os << "family               config               geo-fails    geo-time-ms  svd/runs\n";
  for (const auto& c : cells) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-20s %-20s %12.1f %12.1f  %d/%d\n", c.family.c_str(),
                  c.config.c_str(), c.geo_fails, c.geo_time_ms, c.solved, c.runs);
    os << buf;
  }
  return os.str();
}

std::string stats_json(const SolveResult& r) {
  json doc;
  doc["status"] = status_str(r.status);
  if (r.best_objective)
    doc["best_objective"] = *r.best_objective;
  else
    doc["best_objective"] = nullptr;
  doc["fails"] = r.stats.fails;
  doc["decisions"] = r.stats.decisions;
  doc["propagations"] = r.stats.propagations;
  doc["restarts"] = r.stats.restarts;
  doc["psum_created"] = r.stats.psum_created;
  doc["psum_collected"] = r.stats.psum_collected;
  doc["nogoods_learned"] = r.stats.nogoods_learned;
  doc["nogoods_deleted"] = r.stats.nogoods_deleted;
  doc["wall_ms"] = r.stats.wall_ms;
  return doc.dump(2) + "\n";
}

}  // namespace xlit
