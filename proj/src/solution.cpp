#include "fppf/solution.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "fppf/errors.hpp"

namespace fppf {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Fppf: return "fppf";
    case Algorithm::NewtonRaphson: return "nr";
    case Algorithm::FastDecoupled: return "fdlf";
  }
  return "?";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::LeftValidityRegion: return "left_validity_region";
    case SolveStatus::Singular: return "singular";
    case SolveStatus::Diverged: return "diverged";
  }
  return "?";
}

std::string solution_to_json(const Solution& s, int indent) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  nlohmann::json j;
  j["algorithm"] = to_string(s.report.algorithm);
  j["status"] = to_string(s.report.status);
  j["converged"] = s.report.converged();
  j["iterations"] = s.report.iterations;
  j["wall_seconds"] = s.report.wall_seconds;
  j["base_mva"] = s.base_mva;
  if (!s.report.message.empty()) j["message"] = s.report.message;
  if (s.report.offending_branch) j["offending_branch"] = *s.report.offending_branch;
  if (s.report.offending_value) j["offending_value"] = *s.report.offending_value;
  if (s.report.failed_iteration) j["failed_iteration"] = *s.report.failed_iteration;
  j["mismatch"] = s.report.mismatch_history;

  auto& buses = j["buses"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i) {
    const auto k = static_cast<Index>(i);
    buses.push_back({{"id", s.bus_ids[i]},
                     {"vm", k < s.vm.size() ? s.vm[k] : 0.0},
                     {"va_deg", k < s.theta.size() ? s.theta[k] * kDeg : 0.0}});
  }
  auto& gens = j["gens"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.gen_bus_ids.size(); ++i) {
    const auto k = static_cast<Index>(i);
    gens.push_back({{"bus", s.gen_bus_ids[i]}, {"qg", k < s.qg.size() ? s.qg[k] : 0.0}});
  }
  j["ps"] = s.ps;
  return j.dump(indent);
}

void write_trace_csv(std::ostream& os, const SolveReport& r) {
  os << "iteration,mismatch\n";
  os.precision(17);
  for (std::size_t k = 0; k < r.mismatch_history.size(); ++k) os << k << ',' << r.mismatch_history[k] << '\n';
}

SolutionGap compare_solutions(const Solution& a, const Solution& b, Index ref) {
  if (a.vm.size() != b.vm.size() || a.theta.size() != b.theta.size())
    throw DimensionError("solutions describe different cases");
  SolutionGap gap;
  if (a.vm.size() == 0) return gap;
  gap.vm = (a.vm - b.vm).cwiseAbs().maxCoeff();
  const Vec da = a.theta.array() - a.theta[ref];
  const Vec db = b.theta.array() - b.theta[ref];
  gap.theta = (da - db).cwiseAbs().maxCoeff();
  return gap;
}

}  // namespace fppf
