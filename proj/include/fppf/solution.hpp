#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fppf/types.hpp"

namespace fppf {

enum class Algorithm { Fppf, NewtonRaphson, FastDecoupled };

enum class SolveStatus {
  Converged,
  MaxIterations,
  LeftValidityRegion,  // |psi_k| > 1 or v_i <= 0 during the fixed-point iteration
  Singular,
  Diverged,
};

const char* to_string(Algorithm a);
const char* to_string(SolveStatus s);

struct SolveReport {
  Algorithm algorithm = Algorithm::Fppf;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  std::vector<double> mismatch_history;  // entry 0 is the initial mismatch
  double wall_seconds = 0.0;
  std::string message;
  std::optional<std::size_t> offending_branch;  // graph edge index for domain exits
  std::optional<double> offending_value;        // psi on that branch when it left [-1, 1]
  std::optional<int> failed_iteration;

  bool converged() const { return status == SolveStatus::Converged; }
  double final_mismatch() const { return mismatch_history.empty() ? 0.0 : mismatch_history.back(); }
};

/// Bus quantities in case (file) order.
struct Solution {
  std::vector<int> bus_ids;
  Vec theta;  // radians
  Vec vm;     // p.u.
  std::vector<int> gen_bus_ids;  // one entry per generator bus
  Vec qg;                        // reactive generation at each generator bus, p.u.
  double ps = 0.0;               // slack power absorbed by the participation vector
  double base_mva = 100.0;
  SolveReport report;
};

std::string solution_to_json(const Solution& s, int indent = 2);
void write_trace_csv(std::ostream& os, const SolveReport& r);

/// Largest |Vm| and reference-aligned |theta| differences between two solutions
/// of the same case; angles are aligned at bus position `ref`.
struct SolutionGap {
  double vm = 0.0;
  double theta = 0.0;
};
SolutionGap compare_solutions(const Solution& a, const Solution& b, Index ref);

}  // namespace fppf
