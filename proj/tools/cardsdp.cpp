// cardsdp: SDP lower bounds for cardinality-constrained portfolio selection.
//
//   cardsdp solve  <instance.json> [--aleph K] [--export-sdpa F] [--out report.json]
//   cardsdp exact  <instance.json> [--aleph K] [--time-limit S] [--enumerate]
//   cardsdp bench  <dir> [--aleph 2,3] [--time-limit S] [--jobs J] --out results.csv
//   cardsdp gen    --n N [--seed S] -o instance.json
//
// Exit codes: 0 completed, 2 invalid input, 3 solver failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardsdp/cardsdp.hpp"

namespace {

using namespace cardsdp;
using nlohmann::ordered_json;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

bool log_enabled() {
  const char* v = std::getenv("CARDSDP_LOG");
  return v && *v && std::string(v) != "0";
}

struct SolverFlags {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 100;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--gap-tol", gap_tol, "relative duality gap tolerance")->capture_default_str();
    cmd->add_option("--feas-tol", feas_tol, "relative feasibility tolerance")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "interior-point iteration cap")->capture_default_str();
  }

  ipm::SolverConfig config() const {
    ipm::SolverConfig cfg;
    cfg.gap_tol = gap_tol;
    cfg.feas_tol = feas_tol;
    cfg.max_iter = max_iter;
    cfg.verbose = log_enabled();
    cfg.validate();
    return cfg;
  }
};

Instance load_with_aleph(const std::string& path, std::optional<int> aleph) {
  Instance inst = load_instance(path);
  if (aleph) inst = inst.with_aleph(*aleph);
  return inst;
}

ordered_json vector_json(const linalg::Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json finite_json(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json portfolio_json(const std::optional<Portfolio>& p) {
  if (!p) return nullptr;
  ordered_json j;
  j["objective"] = p->objective;
  j["support"] = p->support;
  j["x"] = vector_json(p->x);
  j["max_residual"] = p->residuals.max();
  return j;
}

ordered_json report_json(const Instance& inst, const cardopt::RunReport& r) {
  ordered_json j;
  j["n"] = inst.n();
  j["aleph"] = inst.aleph();
  j["lb_sdp"] = finite_json(r.lb_sdp);
  j["lb_safe"] = r.lb_safe;
  j["ub"] = finite_json(r.ub);
  j["gap"] = optional_json(r.gap);
  j["rank"] = r.rank;
  j["sdp_status"] = ipm::to_string(r.sdp_status);
  j["sdp_iterations"] = r.sdp_iterations;
  j["sdp_rel_gap"] = r.sdp_rel_gap;
  j["sdp_time"] = r.sdp_time;
  j["round_time"] = r.round_time;
  j["portfolio"] = portfolio_json(r.portfolio);
  return j;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string show(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string show(const std::optional<double>& v) { return v ? show(*v) : "undefined"; }

void print_portfolio(const Portfolio& p) {
  std::cout << "portfolio:";
  for (int i : p.support) std::cout << " x[" << i << "]=" << show(p.x(i));
  std::cout << "\n";
}

int cmd_solve(const std::string& path, std::optional<int> aleph, const SolverFlags& flags,
              const std::string& sdpa, const std::string& out) {
  const Instance inst = load_with_aleph(path, aleph);
  const ipm::SolverConfig cfg = flags.config();
  if (!sdpa.empty()) sdp::write_sdpa(sdp::build_sdp(inst), std::filesystem::path(sdpa));

  const cardopt::RunReport r = cardopt::run(inst, cfg);
  std::cout << "instance: " << path << " (n=" << inst.n() << ", aleph=" << inst.aleph() << ")\n"
            << "sdp status: " << ipm::to_string(r.sdp_status) << " after " << r.sdp_iterations
            << " iterations, rel gap " << show(r.sdp_rel_gap) << "\n"
            << "lower bound: " << show(r.lb_sdp) << (r.lb_safe ? "" : " (not certified)") << "\n"
            << "upper bound: " << (r.portfolio ? show(r.ub) : "none") << "\n"
            << "gap: " << show(r.gap) << "\n"
            << "rank: " << r.rank << "\n"
            << "time: sdp " << show(r.sdp_time) << " s, rounding " << show(r.round_time) << " s\n";
  if (r.portfolio) print_portfolio(*r.portfolio);
  if (!out.empty()) write_json(out, report_json(inst, r));
  return r.sdp_status == ipm::Status::NumericalFailure ? kExitSolver : 0;
}

int cmd_exact(const std::string& path, std::optional<int> aleph, double time_limit, bool enumerate,
              const std::string& out) {
  const Instance inst = load_with_aleph(path, aleph);
  exact::ExactResult r;
  if (enumerate) {
    r = exact::enumerate_supports(inst);
  } else {
    exact::BranchAndBoundOptions opt;
    opt.time_limit = time_limit;
    r = exact::branch_and_bound(inst, opt);
  }
  const std::optional<double> gap =
      std::isnan(r.gap) ? std::nullopt : std::optional<double>(r.gap);
  std::cout << "instance: " << path << " (n=" << inst.n() << ", aleph=" << inst.aleph() << ")\n"
            << "status: " << exact::to_string(r.status) << "\n"
            << "upper bound: " << (r.best_x ? show(r.ub) : "none") << "\n"
            << "lower bound: " << show(r.lb) << "\n"
            << "gap: " << show(gap) << "\n"
            << "nodes: " << r.nodes << "\n"
            << "time: " << show(r.wall_time) << " s\n";
  if (r.best_x) print_portfolio(*r.best_x);
  if (!out.empty()) {
    ordered_json j;
    j["n"] = inst.n();
    j["aleph"] = inst.aleph();
    j["status"] = exact::to_string(r.status);
    j["ub"] = finite_json(r.ub);
    j["lb"] = finite_json(r.lb);
    j["gap"] = optional_json(gap);
    j["nodes"] = r.nodes;
    j["wall_time"] = r.wall_time;
    j["portfolio"] = portfolio_json(r.best_x);
    write_json(out, j);
  }
  return 0;
}

int cmd_bench(const std::string& dir, const bench::BenchOptions& opt, const std::string& out) {
  const auto rows = bench::run_bench(dir, opt);
  const auto agg = bench::aggregate(rows);
  if (out.empty()) {
    bench::write_bench_csv(rows, std::cout);
    std::cout << "\n";
    bench::write_aggregate_csv(agg, std::cout);
    return 0;
  }
  const std::filesystem::path rows_path(out);
  const std::filesystem::path agg_path = bench::aggregate_path(rows_path);
  std::ofstream rows_out(rows_path, std::ios::binary);
  std::ofstream agg_out(agg_path, std::ios::binary);
  if (!rows_out || !agg_out) throw ParseError("cannot write " + out);
  bench::write_bench_csv(rows, rows_out);
  bench::write_aggregate_csv(agg, agg_out);
  std::cerr << rows.size() << " rows -> " << rows_path.string() << ", " << agg.size()
            << " aggregates -> " << agg_path.string() << "\n";
  return 0;
}

int cmd_gen(const GenSpec& spec, const std::string& out) {
  const Instance inst = generate_instance(spec);
  if (out.empty()) {
    std::cout << dump_instance(inst);
  } else {
    save_instance(inst, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDP lower bounds for cardinality-constrained portfolio selection"};
  app.require_subcommand(1);

  std::string path;
  std::optional<int> aleph;
  std::string out;
  SolverFlags flags;

  auto* solve = app.add_subcommand("solve", "solve the SDP relaxation and round it");
  std::string sdpa;
  solve->add_option("instance", path, "instance JSON file")->required();
  solve->add_option("--aleph", aleph, "override the cardinality bound");
  solve->add_option("--export-sdpa", sdpa, "write the relaxation in SDPA sparse format");
  solve->add_option("--out", out, "write the report as JSON");
  flags.add_to(solve);

  auto* ex = app.add_subcommand("exact", "solve to optimality by branch-and-bound");
  double time_limit = 90.0;
  bool enumerate = false;
  ex->add_option("instance", path, "instance JSON file")->required();
  ex->add_option("--aleph", aleph, "override the cardinality bound");
  ex->add_option("--time-limit", time_limit, "seconds")->capture_default_str();
  ex->add_flag("--enumerate", enumerate, "enumerate every support instead");
  ex->add_option("--out", out, "write the result as JSON");

  auto* bn = app.add_subcommand("bench", "SDP vs branch-and-bound over a directory");
  std::string dir;
  bench::BenchOptions bopt;
  bool no_timing = false;
  bn->add_option("directory", dir, "directory of instance JSON files")->required();
  bn->add_option("--aleph", bopt.alephs, "cardinality bounds to run (default: from each file)")
      ->delimiter(',');
  bn->add_option("--time-limit", bopt.time_limit, "branch-and-bound seconds per row")
      ->capture_default_str();
  bn->add_option("--jobs", bopt.jobs, "instances solved in parallel")->capture_default_str();
  bn->add_flag("--no-timing", no_timing, "leave wall-clock columns empty (reproducible output)");
  bn->add_option("--out", out, "per-row CSV; aggregates go to <stem>_aggregate.csv");
  flags.add_to(bn);

  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  GenSpec spec;
  gen->add_option("--n", spec.n, "number of assets")->capture_default_str();
  gen->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  gen->add_option("--factors", spec.factor_count, "number of common factors")->capture_default_str();
  gen->add_option("--rho-quantile", spec.target_rho_quantile, "return target quantile")
      ->capture_default_str();
  gen->add_option("--factor-vol", spec.factor_vol, "common-factor volatility (percent)")
      ->capture_default_str();
  gen->add_option("--aleph", spec.aleph, "cardinality bound")->capture_default_str();
  gen->add_option("-o,--out", out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(path, aleph, flags, sdpa, out);
    if (*ex) return cmd_exact(path, aleph, time_limit, enumerate, out);
    if (*bn) {
      bopt.timing = !no_timing;
      bopt.solver = flags.config();
      if (bopt.jobs < 1) throw ValidationError("jobs", "must be >= 1");
      if (!(bopt.time_limit > 0.0)) throw ValidationError("time_limit", "must be positive");
      return cmd_bench(dir, bopt, out);
    }
    if (*gen) return cmd_gen(spec, out);
  } catch (const NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
