#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "fppf/types.hpp"

namespace fppf {

enum class BusKind { PQ, PV };

/// Bus data in per-unit on the case base. Angles are in radians.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double Pd = 0.0;
  double Qd = 0.0;
  double Gs = 0.0;
  double Bs = 0.0;
  double Vm = 1.0;  // voltage setpoint on PV buses, initial guess elsewhere
  double Va = 0.0;
};

struct Generator {
  int bus = 0;
  double Pg = 0.0;
  double Qg = 0.0;
  double Vg = 1.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_c = 0.0;     // total line charging
  double tap = 1.0;     // off-nominal ratio t, 1 when absent
  double shift = 0.0;   // phase shift theta_s, radians
  bool in_service = true;
};

/// A parsed power flow case. Buses keep file order; all quantities are per-unit.
struct CaseData {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> gens;  // in-service generators only
  std::vector<Branch> branches;  // in-service branches only
  int slack_bus = 0;             // designated reference bus (file type 3)
  std::vector<double> alpha;     // participation factor per bus, sums to 1

  Index bus_count() const { return static_cast<Index>(buses.size()); }
  /// Position of bus `id` in `buses`; throws ModelError when absent.
  Index bus_index(int id) const;
  /// Known net active injection per bus (sum of Pg minus Pd).
  Vec scheduled_p() const;
  /// Known net reactive injection per bus (sum of Qg minus Qd).
  Vec scheduled_q() const;
  /// True when alpha is not a unit vector on the slack bus.
  bool distributed_slack() const;
  /// Bus carrying the angle reference: the slack, or the highest-alpha bus.
  Index reference_bus_index() const;
};

enum class CaseFormat { MatpowerM, Json };

/// Parse a case file. The format is inferred from the extension when omitted
/// (`.json` is JSON, everything else MATPOWER).
CaseData parse_case(const std::filesystem::path& path);
CaseData parse_case(const std::filesystem::path& path, CaseFormat format);
CaseData parse_matpower(std::string_view text);
CaseData parse_case_json(std::string_view text);

/// Serialize to the JSON mirror format (engineering units, as in the files).
std::string case_to_json(const CaseData& c);

/// Checks ids, participation factors and connectivity; throws ModelError.
void validate_case(const CaseData& c);

struct RxCapResult {
  CaseData case_data;
  int modified = 0;
};

/// Replace r by cap*x on every branch whose R/X exceeds cap.
RxCapResult cap_rx_ratios(CaseData c, double cap);

/// Multiply every Pd, Qd and Pg by `factor`.
CaseData scale_loading(CaseData c, double factor);

/// Internal bus numbering: load (PQ) buses first, then generator (PV) buses,
/// each group in file order.
struct BusOrdering {
  std::vector<Index> internal_to_case;
  std::vector<Index> case_to_internal;
  Index n_load = 0;
  Index n_gen = 0;

  Index size() const { return n_load + n_gen; }
};

BusOrdering make_ordering(const CaseData& c);

/// Per-branch series parameters in the convention y = g - j b with g >= 0, b > 0.
struct BranchAdmittance {
  Index from = 0;  // internal indices
  Index to = 0;
  double g = 0.0;
  double b = 0.0;
  double shift = 0.0;
};

struct NetworkMatrices {
  BusOrdering order;
  std::vector<int> bus_ids;  // case bus id per internal index
  SpMatC Y;  // internal ordering
  SpMat G;
  SpMat B;
  SpMat B_LL;
  SpMat B_LG;
  SpMat B_GL;
  SpMat B_GG;
  Vec Gdiag;
  Vec Bdiag;
  std::vector<BranchAdmittance> branches;  // same order as CaseData::branches
};

struct YbusOptions {
  bool zero_resistance = false;
  bool zero_charging = false;
  bool zero_bus_shunts = false;
  bool unit_taps = false;
  bool zero_shifts = false;
};

/// Assemble the complex bus admittance matrix (Pi-model line with the
/// transformer on the from side) in the given ordering.
SpMatC assemble_ybus(const CaseData& c, const BusOrdering& order, const YbusOptions& opts = {});

NetworkMatrices build_admittance(const CaseData& c);

class BidirGraph;

struct AssumptionReport {
  // Literal strict row dominance of B_LL. Line charging alone makes this fail
  // on most real cases, so it is reported but does not gate the solver.
  bool row_dominant = false;
  double worst_margin = 0.0;  // min over load rows of |B_ii| - sum_j |B_ij|
  int worst_bus = 0;          // case bus id of the row attaining worst_margin
  // Dominance after a positive diagonal scaling: -B_LL is a nonsingular
  // M-matrix, checked as B_ij >= 0 off the diagonal and (-B_LL)^{-1} 1 > 0.
  bool diag_dominant = false;
  double scaled_margin = 0.0;  // min entry of (-B_LL)^{-1} 1
  bool offdiag_positive = false;
  std::vector<std::size_t> nonpositive_edges;  // graph edge indices
  bool pst_ratio_ok = true;
  std::vector<std::size_t> pst_violations;  // case branch indices with b/g <= tan|theta_s|

  bool solver_may_start() const { return diag_dominant && offdiag_positive; }
};

AssumptionReport check_assumptions(const NetworkMatrices& nm, const BidirGraph& graph);

}  // namespace fppf
