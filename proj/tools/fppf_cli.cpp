// Command-line front end: solve, bench, sweep-init, twobus-cert, check.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fppf/errors.hpp"
#include "fppf/experiments.hpp"

namespace fs = std::filesystem;
using namespace fppf;

namespace {

constexpr int kOk = 0;
constexpr int kNotConverged = 1;
constexpr int kModelError = 2;

struct CommonFlags {
  std::vector<std::string> cases;
  std::string algo = "fppf";
  double tol = 1e-8;
  int max_iter = 100;
  double rx_cap = 0.0;  // 0 disables the cap
  double load_scale = 1.0;
  std::string order = "v-xc-psi";
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool many_cases) {
  if (many_cases)
    cmd->add_option("--case", f.cases, "Case files (.m or .json)")->required()->expected(1, -1);
  else
    cmd->add_option("--case", f.cases, "Case file (.m or .json)")->required()->expected(1);
  cmd->add_option("--algo", f.algo, "Comma-separated subset of fppf,nr,fdlf");
  cmd->add_option("--tol", f.tol, "Mismatch tolerance in p.u.");
  cmd->add_option("--max-iter", f.max_iter, "Iteration limit");
  cmd->add_option("--rx-cap", f.rx_cap, "Cap branch R/X at this value before solving");
  cmd->add_option("--load-scale", f.load_scale, "Scale every Pd, Qd and Pg by this factor");
  cmd->add_option("--update-order", f.order, "FPPF update order: v-xc-psi or psi-xc-v");
  cmd->add_option("--out-dir", f.out_dir, "Directory for reports");
}

ExperimentConfig to_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  for (const auto& c : f.cases) cfg.cases.emplace_back(c);
  cfg.algorithms = parse_algorithms(f.algo);
  cfg.tol = f.tol;
  cfg.max_iter = f.max_iter;
  if (f.rx_cap > 0.0) cfg.rx_cap = f.rx_cap;
  cfg.load_scale = f.load_scale;
  if (f.order == "v-xc-psi")
    cfg.order = UpdateOrder::VXcPsi;
  else if (f.order == "psi-xc-v")
    cfg.order = UpdateOrder::PsiXcV;
  else
    throw PreconditionError("unknown update order '" + f.order + "'");
  return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << text;
}

// Initial voltages from a solution JSON (the format `solve` writes).
VoltageGuess read_init(const fs::path& p, const CaseData& c) {
  std::ifstream is(p);
  if (!is) throw ParseError("cannot open " + p.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("init file: ") + e.what());
  }
  VoltageGuess g = flat_guess(c);
  for (const auto& b : j.at("buses")) {
    const Index i = c.bus_index(b.at("id").get<int>());
    g.vm[i] = b.at("vm").get<double>();
    g.va[i] = b.at("va_deg").get<double>() * std::numbers::pi / 180.0;
  }
  return g;
}

int cmd_solve(const CommonFlags& f, const std::string& init_path) {
  const ExperimentConfig cfg = to_config(f);
  validate_config(cfg);
  const fs::path case_path = cfg.cases.front();
  const PreparedCase pc = prepare_case(prepare_experiment_case(parse_case(case_path), cfg));
  const VoltageGuess init = init_path.empty() ? flat_guess(pc.case_data) : read_init(init_path, pc.case_data);
  fs::create_directories(f.out_dir);

  int code = kOk;
  const std::string stem = case_path.stem().string();
  for (Algorithm a : cfg.algorithms) {
    const Solution s = run_algorithm(a, pc, init, cfg);
    const fs::path base = fs::path(f.out_dir) / (stem + "_" + to_string(a));
    write_file(base.string() + ".json", solution_to_json(s) + "\n");
    std::ofstream trace(base.string() + "_trace.csv");
    write_trace_csv(trace, s.report);
    std::cout << stem << ' ' << to_string(a) << ": " << to_string(s.report.status) << " after " << s.report.iterations
              << " iterations, mismatch " << s.report.final_mismatch();
    if (s.report.offending_branch) std::cout << ", offending branch " << *s.report.offending_branch;
    std::cout << '\n';
    if (!s.report.message.empty() && !s.report.converged()) std::cout << "  " << s.report.message << '\n';
    if (!s.report.converged()) code = kNotConverged;
  }
  return code;
}

int cmd_bench(const CommonFlags& f) {
  const ExperimentConfig cfg = to_config(f);
  const auto cells = run_bench(cfg);
  fs::create_directories(f.out_dir);
  std::ostringstream csv;
  write_bench_csv(csv, cells);
  write_file(fs::path(f.out_dir) / "bench.csv", csv.str());
  std::cout << csv.str();
  return kOk;
}

int cmd_sweep(const CommonFlags& f, const std::vector<double>& deltas, int samples, std::uint64_t seed, unsigned workers) {
  ExperimentConfig cfg = to_config(f);
  cfg.sweep.deltas = deltas;
  cfg.sweep.samples = samples;
  cfg.sweep.seed = seed;
  cfg.sweep.workers = workers;
  validate_config(cfg);
  const CaseData c = prepare_experiment_case(parse_case(cfg.cases.front()), cfg);
  const auto cells = run_sweep(c, cfg);
  fs::create_directories(f.out_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, cells);
  write_file(fs::path(f.out_dir) / "sweep.csv", csv.str());
  std::cout << csv.str();
  return kOk;
}

int cmd_check(const CommonFlags& f) {
  const ExperimentConfig cfg = to_config(f);
  validate_config(cfg);
  const CaseData c = prepare_experiment_case(parse_case(cfg.cases.front()), cfg);
  const NetworkMatrices nm = build_admittance(c);
  const BidirGraph g = build_graph(c, nm.order);
  const AssumptionReport r = check_assumptions(nm, g);

  nlohmann::json j;
  j["buses"] = c.bus_count();
  j["load_buses"] = nm.order.n_load;
  j["generator_buses"] = nm.order.n_gen;
  j["edges"] = g.edge_count();
  j["cycles"] = g.cycle_count();
  j["row_dominant"] = r.row_dominant;
  j["worst_margin"] = r.worst_margin;
  j["worst_bus"] = r.worst_bus;
  j["diag_dominant"] = r.diag_dominant;
  j["scaled_margin"] = r.scaled_margin;
  j["offdiag_positive"] = r.offdiag_positive;
  auto& bad = j["nonpositive_edges"] = nlohmann::json::array();
  for (std::size_t e : r.nonpositive_edges) {
    const auto [from, to] = g.edges()[e];
    bad.push_back({nm.bus_ids[static_cast<std::size_t>(from)], nm.bus_ids[static_cast<std::size_t>(to)]});
  }
  j["pst_ratio_ok"] = r.pst_ratio_ok;
  auto& pst = j["pst_violations"] = nlohmann::json::array();
  for (std::size_t b : r.pst_violations) pst.push_back({c.branches[b].from, c.branches[b].to});
  j["solver_may_start"] = r.solver_may_start();
  std::cout << j.dump(2) << '\n';
  return r.solver_may_start() ? kOk : kModelError;
}

struct CertFlags {
  twobus::TwoBusCase c;
  double shift_deg = 0.0;
  int grid = 101;
  int iters = 200;
  std::string out_dir = ".";
};

int cmd_cert(CertFlags f) {
  f.c.mu.shift = f.shift_deg * std::numbers::pi / 180.0;
  const CertificateReport r = certify_two_bus(f.c, f.grid, f.iters);
  fs::create_directories(f.out_dir);
  std::ostringstream js;
  write_certificate_json(js, r);
  write_file(fs::path(f.out_dir) / "certificate.json", js.str());
  if (!r.trajectory.points.empty()) {
    std::ofstream os(fs::path(f.out_dir) / "trajectory.csv");
    twobus::write_trajectory_csv(os, r.trajectory);
  }
  std::cout << (r.certified ? "certified" : "not certified");
  if (!r.certified) std::cout << ": " << r.failing;
  std::cout << '\n';
  if (r.assumption_ok && r.eps.feasible) std::cout << "contraction factor " << r.contraction.factor << '\n';
  return r.certified ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point power flow solver with Newton-Raphson and fast-decoupled baselines"};
  app.require_subcommand(1);

  CommonFlags solve_f, bench_f, sweep_f, check_f;
  std::string init_path;
  auto* solve = app.add_subcommand("solve", "Solve one case with the selected algorithms");
  add_common(solve, solve_f, false);
  solve->add_option("--init", init_path, "Start from the voltages in a solution JSON instead of a flat start");

  auto* bench = app.add_subcommand("bench", "Iteration counts per case and algorithm (CSV)");
  bench_f.algo = "nr,fdlf,fppf";
  add_common(bench, bench_f, true);

  auto* sweep = app.add_subcommand("sweep-init", "Success rate from random initial voltage magnitudes (CSV)");
  sweep_f.algo = "nr,fdlf,fppf";
  add_common(sweep, sweep_f, false);
  std::vector<double> deltas{0.1};
  int samples = 200;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  sweep->add_option("--delta", deltas, "Half-width of the initial magnitude distribution")->delimiter(',');
  sweep->add_option("--samples", samples, "Samples per delta");
  sweep->add_option("--seed", seed, "Random seed");
  sweep->add_option("--workers", workers, "Worker threads (0 = all cores)");

  auto* check = app.add_subcommand("check", "Report the standing assumptions on a case (JSON)");
  add_common(check, check_f, false);

  CertFlags cert_f;
  auto* cert = app.add_subcommand("twobus-cert", "Certify convergence on a two-bus system");
  cert->add_option("--b", cert_f.c.b, "Series susceptance (p.u.)");
  cert->add_option("--g", cert_f.c.mu.g, "Series conductance (p.u.)");
  cert->add_option("--bc", cert_f.c.mu.b_c, "Total line charging (p.u.)");
  cert->add_option("--tbar", cert_f.c.mu.tbar, "Tap ratio minus one");
  cert->add_option("--shift", cert_f.shift_deg, "Phase shift (degrees)");
  cert->add_option("--V2", cert_f.c.V2, "Generator voltage (p.u.)");
  cert->add_option("--P1", cert_f.c.Pbar1, "Net active injection at bus 1 (p.u., negative for load)");
  cert->add_option("--Q1", cert_f.c.Q1, "Net reactive injection at bus 1 (p.u.)");
  cert->add_option("--grid", cert_f.grid, "Grid points per axis for the contraction estimate");
  cert->add_option("--iters", cert_f.iters, "Simulated iterations");
  cert->add_option("--out-dir", cert_f.out_dir, "Directory for reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? kOk : kModelError;
  }

  try {
    if (*solve) return cmd_solve(solve_f, init_path);
    if (*bench) return cmd_bench(bench_f);
    if (*sweep) return cmd_sweep(sweep_f, deltas, samples, seed, workers);
    if (*check) return cmd_check(check_f);
    if (*cert) return cmd_cert(cert_f);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModelError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModelError;
  }
  return kOk;
}
