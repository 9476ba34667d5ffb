#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fppf/baselines.hpp"
#include "fppf/fppf_core.hpp"
#include "fppf/twobus.hpp"

namespace fppf {

struct SweepConfig {
  std::vector<double> deltas{0.1};
  int samples = 200;
  std::uint64_t seed = 1;
  double match_tol = 1e-5;
  unsigned workers = 0;  // 0 means hardware concurrency
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> cases;
  std::vector<Algorithm> algorithms{Algorithm::Fppf};
  double tol = 1e-8;
  int max_iter = 100;
  std::optional<double> rx_cap;
  double load_scale = 1.0;
  UpdateOrder order = UpdateOrder::VXcPsi;
  SweepConfig sweep;
};

/// Throws PreconditionError on out-of-range values.
void validate_config(const ExperimentConfig& cfg);

/// Parse "fppf,nr,fdlf".
std::vector<Algorithm> parse_algorithms(const std::string& list);
Algorithm parse_algorithm(const std::string& name);

/// Apply the R/X cap, then the uniform load scale.
CaseData prepare_experiment_case(CaseData c, const ExperimentConfig& cfg);

/// Run one algorithm on an already prepared case from the given start.
Solution run_algorithm(Algorithm a, const PreparedCase& pc, const VoltageGuess& init, const ExperimentConfig& cfg);

struct BenchCell {
  std::string case_name;
  Algorithm algorithm = Algorithm::Fppf;
  bool converged = false;
  int iterations = 0;
  double final_mismatch = 0.0;
  std::string status;
};

std::vector<BenchCell> run_bench(const ExperimentConfig& cfg);
void write_bench_csv(std::ostream& os, const std::vector<BenchCell>& cells);

/// Initial load-bus magnitudes for one sample, uniform on [1 - delta, 1 + delta].
/// Depends only on (seed, delta, sample), never on the algorithm.
Vec draw_initial_magnitudes(std::uint64_t seed, double delta, int sample, Index n);

struct SweepCell {
  double delta = 0.0;
  Algorithm algorithm = Algorithm::Fppf;
  int successes = 0;
  int samples = 0;
  double success_rate() const { return samples > 0 ? 100.0 * successes / samples : 0.0; }
};

/// Throws NumericalError when the flat-start NR reference does not converge.
std::vector<SweepCell> run_sweep(const CaseData& c, const ExperimentConfig& cfg);
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);

struct CertificateReport {
  twobus::TwoBusParams params;
  bool assumption_ok = false;
  std::string assumption_message;
  twobus::NominalBox nominal;
  twobus::EpsSolveResult eps;
  twobus::EpsResidual eps_check;
  twobus::ContractionEstimate contraction;
  twobus::Trajectory trajectory;
  bool trajectory_inside = false;
  bool certified = false;
  std::string failing;  // which check rejected the certificate
};

CertificateReport certify_two_bus(const twobus::TwoBusCase& c, int grid_n = 101, int sim_iters = 200);
void write_certificate_json(std::ostream& os, const CertificateReport& r);

}  // namespace fppf
