#include "fppf/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fppf/errors.hpp"

namespace fppf {

void validate_config(const ExperimentConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw PreconditionError("tolerance must be positive");
  if (cfg.max_iter < 1) throw PreconditionError("max-iter must be at least 1");
  if (cfg.rx_cap && !(*cfg.rx_cap > 0.0)) throw PreconditionError("rx-cap must be positive");
  if (!(cfg.load_scale >= 1.0)) throw PreconditionError("load-scale must be at least 1");
  if (cfg.algorithms.empty()) throw PreconditionError("no algorithm selected");
  if (cfg.sweep.samples < 1) throw PreconditionError("samples must be at least 1");
  for (double d : cfg.sweep.deltas)
    if (!(d >= 0.0 && d < 1.0)) throw PreconditionError("delta must lie in [0, 1)");
  if (!(cfg.sweep.match_tol > 0.0)) throw PreconditionError("match tolerance must be positive");
}

Algorithm parse_algorithm(const std::string& name) {
  std::string s;
  for (char ch : name)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "fppf") return Algorithm::Fppf;
  if (s == "nr") return Algorithm::NewtonRaphson;
  if (s == "fdlf") return Algorithm::FastDecoupled;
  throw PreconditionError("unknown algorithm '" + name + "' (expected fppf, nr or fdlf)");
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
  std::vector<Algorithm> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const Algorithm a = parse_algorithm(item);
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  if (out.empty()) throw PreconditionError("no algorithm selected");
  return out;
}

CaseData prepare_experiment_case(CaseData c, const ExperimentConfig& cfg) {
  if (cfg.rx_cap) c = cap_rx_ratios(std::move(c), *cfg.rx_cap).case_data;
  if (cfg.load_scale != 1.0) c = scale_loading(std::move(c), cfg.load_scale);
  return c;
}

Solution run_algorithm(Algorithm a, const PreparedCase& pc, const VoltageGuess& init, const ExperimentConfig& cfg) {
  NrOptions nr;
  nr.tol = cfg.tol;
  nr.max_iter = cfg.max_iter;
  nr.flat_start = false;
  switch (a) {
    case Algorithm::Fppf: {
      FppfOptions o;
      o.tol = cfg.tol;
      o.max_iter = cfg.max_iter;
      o.order = cfg.order;
      return solve_fppf(pc.case_data, pc.constants, state_from_voltages(pc.constants, init.vm, init.va), o).solution;
    }
    case Algorithm::NewtonRaphson:
      return solve_nr(pc.case_data, pc.matrices, init, nr);
    case Algorithm::FastDecoupled:
      return solve_fdlf(pc.case_data, pc.matrices, init, nr);
  }
  throw PreconditionError("unknown algorithm");
}

std::vector<BenchCell> run_bench(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<BenchCell> cells;
  for (const auto& path : cfg.cases) {
    const std::string name = path.stem().string();
    std::optional<PreparedCase> pc;
    std::string error;
    try {
      pc = prepare_case(prepare_experiment_case(parse_case(path), cfg));
    } catch (const Error& e) {
      error = e.what();
    }
    for (Algorithm a : cfg.algorithms) {
      BenchCell cell;
      cell.case_name = name;
      cell.algorithm = a;
      if (!pc) {
        cell.status = "error: " + error;
        cells.push_back(cell);
        continue;
      }
      try {
        const Solution s = run_algorithm(a, *pc, flat_guess(pc->case_data), cfg);
        cell.converged = s.report.converged();
        cell.iterations = s.report.iterations;
        cell.final_mismatch = s.report.final_mismatch();
        cell.status = to_string(s.report.status);
      } catch (const Error& e) {
        cell.status = std::string("error: ") + e.what();
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void write_bench_csv(std::ostream& os, const std::vector<BenchCell>& cells) {
  os << "case,algorithm,iterations,final_mismatch,status\n";
  for (const auto& c : cells) {
    std::ostringstream mis;
    mis << std::scientific << std::setprecision(6) << c.final_mismatch;
    os << csv_field(c.case_name) << ',' << to_string(c.algorithm) << ','
       << (c.converged ? std::to_string(c.iterations) : std::string("FAIL")) << ',' << mis.str() << ','
       << csv_field(c.status) << '\n';
  }
}

// The generator is seeded from (seed, sample) only, so every delta and every
// algorithm sees the same underlying uniforms for a given sample.
Vec draw_initial_magnitudes(std::uint64_t seed, double delta, int sample, Index n) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ static_cast<std::uint64_t>(sample);
  std::mt19937_64 gen(splitmix64(state));
  Vec v(n);
  for (Index i = 0; i < n; ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1p-53;
    v[i] = 1.0 - delta + 2.0 * delta * u;
  }
  return v;
}

std::vector<SweepCell> run_sweep(const CaseData& c, const ExperimentConfig& cfg) {
  validate_config(cfg);
  const PreparedCase pc = prepare_case(c);
  NrOptions nr;
  nr.tol = cfg.tol;
  nr.max_iter = cfg.max_iter;
  const Solution ref = solve_nr(pc.case_data, pc.matrices, flat_guess(pc.case_data), nr);
  if (!ref.report.converged())
    throw NumericalError("flat-start Newton-Raphson reference did not converge: " + ref.report.message);
  const Index ref_bus = pc.case_data.reference_bus_index();

  std::vector<Index> load_buses;
  for (Index i = 0; i < c.bus_count(); ++i)
    if (c.buses[static_cast<std::size_t>(i)].kind == BusKind::PQ) load_buses.push_back(i);

  const std::size_t nd = cfg.sweep.deltas.size();
  const std::size_t na = cfg.algorithms.size();
  const std::size_t ns = static_cast<std::size_t>(cfg.sweep.samples);
  std::vector<char> ok(nd * na * ns, 0);

  auto run_sample = [&](std::size_t task) {
    const std::size_t d = task / ns;
    const std::size_t s = task % ns;
    const double delta = cfg.sweep.deltas[d];
    const Vec draw = draw_initial_magnitudes(cfg.sweep.seed, delta, static_cast<int>(s), static_cast<Index>(load_buses.size()));
    VoltageGuess init = flat_guess(pc.case_data);
    for (std::size_t k = 0; k < load_buses.size(); ++k) init.vm[load_buses[k]] = draw[static_cast<Index>(k)];
    for (std::size_t a = 0; a < na; ++a) {
      bool good = false;
      try {
        const Solution sol = run_algorithm(cfg.algorithms[a], pc, init, cfg);
        if (sol.report.converged()) {
          const SolutionGap gap = compare_solutions(sol, ref, ref_bus);
          good = gap.vm <= cfg.sweep.match_tol && gap.theta <= cfg.sweep.match_tol;
        }
      } catch (const Error&) {
        good = false;
      }
      ok[(d * na + a) * ns + s] = good ? 1 : 0;
    }
  };

  const std::size_t tasks = nd * ns;
  unsigned workers = cfg.sweep.workers > 0 ? cfg.sweep.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(tasks, 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < tasks; t += workers) run_sample(t);
    });
  for (auto& t : pool) t.join();

  std::vector<SweepCell> cells;
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t a = 0; a < na; ++a) {
      SweepCell cell;
      cell.delta = cfg.sweep.deltas[d];
      cell.algorithm = cfg.algorithms[a];
      cell.samples = cfg.sweep.samples;
      for (std::size_t s = 0; s < ns; ++s) cell.successes += ok[(d * na + a) * ns + s];
      cells.push_back(cell);
    }
  return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "delta,algorithm,successes,samples,success_rate\n";
  for (const auto& c : cells) {
    std::ostringstream line;
    line << std::setprecision(6) << c.delta << ',' << to_string(c.algorithm) << ',' << c.successes << ',' << c.samples
         << ',' << std::fixed << std::setprecision(1) << c.success_rate();
    os << line.str() << '\n';
  }
}

CertificateReport certify_two_bus(const twobus::TwoBusCase& c, int grid_n, int sim_iters) {
  using namespace twobus;
  CertificateReport r;
  try {
    r.params = derive_params(c);
    r.nominal = nominal_box(r.params.gammaP, r.params.gammaQ);
    r.assumption_ok = true;
  } catch (const Error& e) {
    r.assumption_message = e.what();
    r.failing = std::string("assumption: ") + e.what();
    return r;
  }
  r.eps = solve_eps(r.params);
  if (!r.eps.feasible) {
    r.failing = "eps expansion: " + r.eps.diagnostic;
    return r;
  }
  r.eps_check = eps_residual(r.params, r.eps.box);
  r.contraction = contraction_factor(r.params, r.eps.box, grid_n);
  r.trajectory = simulate_fmu(r.params, State{0.0, 0.0}, sim_iters);
  r.trajectory_inside = !r.trajectory.domain_exit;
  for (std::size_t k = 1; k < r.trajectory.points.size(); ++k)
    if (!r.eps.box.contains(r.trajectory.points[k].psi, r.trajectory.points[k].x, 1e-12)) r.trajectory_inside = false;
  if (!(r.contraction.factor < 1.0)) {
    r.failing = "contraction: sampled Jacobian norm " + std::to_string(r.contraction.factor) + " >= 1";
    return r;
  }
  if (!r.trajectory_inside) {
    r.failing = "simulation: trajectory left the box";
    return r;
  }
  r.certified = true;
  return r;
}

void write_certificate_json(std::ostream& os, const CertificateReport& r) {
  nlohmann::json j;
  j["certified"] = r.certified;
  j["failing"] = r.failing;
  j["assumption_ok"] = r.assumption_ok;
  if (!r.assumption_message.empty()) j["assumption_message"] = r.assumption_message;
  const auto& p = r.params;
  j["params"] = {{"g_t", p.g_t},         {"b_t", p.b_t},         {"b_h", p.b_h},       {"rho", p.rho},
                 {"rho_t", p.rho_t},     {"gammaP_t", p.gammaP_t}, {"gammaQ_t", p.gammaQ_t},
                 {"gammaP", p.gammaP},   {"gammaQ", p.gammaQ},   {"k_mu", p.k_mu},     {"V1circ", p.V1circ}};
  if (r.assumption_ok) {
    j["nominal"] = {{"k1m", r.nominal.k1m}, {"k2m", r.nominal.k2m}, {"k2p", r.nominal.k2p}};
    j["eps"] = {{"feasible", r.eps.feasible},     {"eps1", r.eps.box.eps1}, {"eps2", r.eps.box.eps2},
                {"k1", r.eps.box.k1},             {"k2", r.eps.box.k2},     {"iterations", r.eps.iterations},
                {"diagnostic", r.eps.diagnostic}};
    j["eps_residual"] = {{"e1", r.eps_check.e1}, {"e2", r.eps_check.e2}};
    j["contraction"] = {{"factor", r.contraction.factor}, {"excluded", r.contraction.excluded}};
    if (!r.trajectory.points.empty()) {
      const auto& last = r.trajectory.points.back();
      j["trajectory"] = {{"steps", r.trajectory.points.size() - 1},
                         {"domain_exit", r.trajectory.domain_exit},
                         {"inside_box", r.trajectory_inside},
                         {"final_psi", last.psi},
                         {"final_x", last.x}};
    }
  }
  os << j.dump(2) << '\n';
}

}  // namespace fppf
