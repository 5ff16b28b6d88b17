#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "xlit/bench.hpp"
#include "xlit/model.hpp"
#include "xlit/solver.hpp"
#include "xlit/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw xlit::ModelError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw xlit::ModelError("cannot write '" + path + "'");
  out << text;
}

xlit::PsumOrder parse_order(const std::string& s) {
  if (s == "struct") return xlit::PsumOrder::Struct;
  if (s == "random") return xlit::PsumOrder::Random;
  if (s == "coeff") return xlit::PsumOrder::Coeff;
  throw CLI::ValidationError("--psum-order must be struct|random|coeff");
}

int cmd_solve(const std::string& model_path, const std::string& ext, int64_t interval,
              const std::string& order, const std::string& heuristic, uint64_t seed,
              int64_t max_conflicts, int64_t timeout_ms, const std::string& stats_out,
              const std::string& trace_out, bool verify_expl, bool verify_ng) {
  xlit::ModelInstance m = xlit::parse_model(slurp(model_path));
  xlit::SolverConfig cfg;
  cfg.ext = xlit::parse_ext(ext);
  cfg.psum_interval = interval;
  cfg.psum_order = parse_order(order);
  cfg.seed = seed;
  if (!heuristic.empty()) {
    if (heuristic == "fixed")
      cfg.heuristic = xlit::Heuristic::Fixed;
    else if (heuristic == "vsids")
      cfg.heuristic = xlit::Heuristic::Vsids;
    else
      throw CLI::ValidationError("--heuristic must be fixed|vsids");
  }
  if (max_conflicts >= 0) cfg.max_conflicts = static_cast<uint64_t>(max_conflicts);
  if (timeout_ms >= 0) cfg.timeout_ms = timeout_ms;
  cfg.verify_explanations = verify_expl;
  cfg.verify_nogoods = verify_ng;
  std::ofstream trace_f;
  if (!trace_out.empty()) {
    trace_f.open(trace_out);
    if (!trace_f) throw xlit::ModelError("cannot write '" + trace_out + "'");
    cfg.trace = &trace_f;
  }
  xlit::Solver solver(m, std::move(cfg));
  xlit::SolveResult res = solver.solve();
  std::string doc = xlit::stats_json(res);
  if (stats_out.empty() || stats_out == "-")
    std::cout << doc;
  else
    spit(stats_out, doc);
  if (res.best_assignment) {
    json sol;
    for (size_t i = 0; i < res.best_assignment->size(); ++i)
      sol[m.vars[i].name] = (*res.best_assignment)[i];
    std::cout << "solution: " << sol.dump() << "\n";
  }
  if (verify_expl || verify_ng) {
    std::cout << "verify: explanations " << res.verify.explanations_checked << " checked, "
              << res.verify.explanations_failed << " failed; nogoods "
              << res.verify.nogoods_checked << " checked, " << res.verify.nogoods_failed
              << " failed; refusals " << res.verify.refusals << "\n";
    for (const auto& f : res.verify.failures) std::cout << "verify-failure: " << f << "\n";
    if (res.verify.explanations_failed || res.verify.nogoods_failed) return 3;
  }
  return res.status == xlit::Status::Unknown ? 1 : 0;
}

int cmd_bench(const std::string& grid_path, const std::string& out_dir, int jobs) {
  json grid = json::parse(slurp(grid_path));
  std::vector<xlit::BenchInstance> instances;
  for (const auto& fam : grid.at("families")) {
    std::string name = fam.at("name");
    std::vector<uint64_t> seeds;
    for (const auto& s : fam.at("seeds")) seeds.push_back(s.get<uint64_t>());
    for (uint64_t seed : seeds) {
      xlit::BenchInstance bi;
      bi.family = name;
      bi.seed = seed;
      if (name.rfind("knapsack", 0) == 0) {
        int64_t n = fam.at("n").get<int64_t>();
        bi.model_text = xlit::gen_knapsack(n, seed);
        bi.instance = name + "-n" + std::to_string(n) + "-s" + std::to_string(seed);
      } else if (name.rfind("alldiff-chain", 0) == 0) {
        int64_t n = fam.at("n").get<int64_t>();
        bi.model_text = xlit::gen_alldiff_chain(n);
        bi.instance = name + "-n" + std::to_string(n);
      } else if (name.rfind("disjunctive", 0) == 0) {
        int64_t nt = fam.at("ntasks").get<int64_t>();
        bi.model_text = xlit::gen_disjunctive(nt, seed);
        bi.instance = name + "-t" + std::to_string(nt) + "-s" + std::to_string(seed);
      } else {
        throw xlit::ModelError("unknown family '" + name + "'");
      }
      instances.push_back(std::move(bi));
    }
  }
  std::vector<xlit::RunConfig> configs;
  uint64_t limit = 1000000;
  for (const auto& jc : grid.at("configs")) {
    xlit::RunConfig rc;
    rc.name = jc.at("name");
    rc.ext = jc.value("ext", "none");
    rc.psum_interval = jc.value("psum_interval", int64_t{1});
    rc.psum_order = parse_order(jc.value("psum_order", std::string("struct")));
    if (jc.contains("heuristic"))
      rc.heuristic = jc["heuristic"] == "vsids" ? xlit::Heuristic::Vsids : xlit::Heuristic::Fixed;
    rc.max_conflicts = grid.value("max_conflicts", uint64_t{1000000});
    limit = *rc.max_conflicts;
    if (grid.contains("timeout_ms")) rc.timeout_ms = grid["timeout_ms"].get<int64_t>();
    configs.push_back(std::move(rc));
  }
  xlit::BenchReport rep = xlit::run_bench(instances, configs, jobs, limit);
  fs::create_directories(out_dir);
  spit(out_dir + "/rows.csv", xlit::rows_csv(rep.rows));
  std::string table = xlit::render_cells(rep.cells);
  spit(out_dir + "/table.txt", table);
  std::cout << table;
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_verify(const std::string& model_path, const std::string& trace_path) {
  xlit::ModelInstance parsed = xlit::parse_model(slurp(model_path));
  xlit::ModelInstance norm = xlit::normalize(parsed);
  xlit::verify::TraceReport rep =
      xlit::verify::check_trace(parsed, norm, slurp(trace_path));
  std::cout << "explanations: " << rep.explanations_passed << "/" << rep.explanations_checked
            << " passed\n"
            << "nogoods: " << rep.nogoods_passed << "/" << rep.nogoods_checked << " passed\n"
            << "refused: " << rep.refused << "\n";
  for (const auto& f : rep.failures) std::cout << "failure: " << f << "\n";
  bool ok = rep.explanations_passed == rep.explanations_checked &&
            rep.nogoods_passed == rep.nogoods_checked;
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-domain solver with an extensible resolution language"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "solve a model file");
  std::string model_path, ext = "none", order = "struct", heuristic, stats_out, trace_out;
  int64_t interval = 1, max_conflicts = -1, timeout_ms = -1;
  uint64_t seed = 0;
  bool verify_expl = false, verify_ng = false;
  solve->add_option("--model", model_path)->required();
  solve->add_option("--ext", ext, "none|all|linear,lex,table,disj");
  solve->add_option("--psum-interval", interval);
  solve->add_option("--psum-order", order, "struct|random|coeff");
  solve->add_option("--heuristic", heuristic, "fixed|vsids");
  solve->add_option("--seed", seed);
  solve->add_option("--max-conflicts", max_conflicts);
  solve->add_option("--timeout-ms", timeout_ms);
  solve->add_option("--stats", stats_out, "stats JSON output path (- for stdout)");
  solve->add_option("--trace", trace_out, "trail/explanation/nogood trace path");
  solve->add_flag("--verify-explanations", verify_expl);
  solve->add_flag("--verify-nogoods", verify_ng);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance");
  std::string family, gen_out;
  int64_t gn = 10, gtasks = 3;
  uint64_t gseed = 0;
  gen->add_option("family", family, "knapsack|alldiff-chain|disjunctive")->required();
  gen->add_option("--n", gn);
  gen->add_option("--ntasks", gtasks);
  gen->add_option("--seed", gseed);
  gen->add_option("--out", gen_out);

  // bench
  auto* bench = app.add_subcommand("bench", "run a configuration grid");
  std::string grid_path, out_dir = "bench-out";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  bench->add_option("--grid", grid_path)->required();
  bench->add_option("--out", out_dir);
  bench->add_option("--jobs", jobs);

  // verify
  auto* ver = app.add_subcommand("verify", "re-check a solve trace against the model");
  std::string vmodel, vtrace;
  ver->add_option("--model", vmodel)->required();
  ver->add_option("--run-trace", vtrace)->required();

  try {
    app.parse(argc, argv);
    if (solve->parsed())
      return cmd_solve(model_path, ext, interval, order, heuristic, seed, max_conflicts,
                       timeout_ms, stats_out, trace_out, verify_expl, verify_ng);
    if (gen->parsed()) {
      std::string text;
      if (family == "knapsack")
        text = xlit::gen_knapsack(gn, gseed);
      else if (family == "alldiff-chain")
        text = xlit::gen_alldiff_chain(gn);
      else if (family == "disjunctive")
        text = xlit::gen_disjunctive(gtasks, gseed);
      else
        throw CLI::ValidationError("unknown family '" + family + "'");
      if (gen_out.empty())
        std::cout << text;
      else
        spit(gen_out, text);
      return 0;
    }
    if (bench->parsed()) return cmd_bench(grid_path, out_dir, jobs);
    if (ver->parsed()) return cmd_verify(vmodel, vtrace);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const xlit::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
