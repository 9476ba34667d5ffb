#pragma once

#include "fppf/netmodel.hpp"
#include "fppf/solution.hpp"

namespace fppf {

struct NrOptions {
  double tol = 1e-8;
  int max_iter = 100;
  bool flat_start = true;  // ignore the supplied init and start from V_L = 1, theta = 0
};

/// Initial bus voltages in case order. Generator buses are reset to their setpoints.
struct VoltageGuess {
  Vec vm;
  Vec va;
};

VoltageGuess flat_guess(const CaseData& c);

/// Polar Newton-Raphson on the 2n+m-1 mismatch equations (single slack).
Solution solve_nr(const CaseData& c, const NetworkMatrices& nm, const VoltageGuess& init,
                  const NrOptions& opts = {});

enum class FdlfScheme { XB, BX };

/// Fast-decoupled load flow with constant B' and B''. One P half-step plus one
/// Q half-step is one iteration.
Solution solve_fdlf(const CaseData& c, const NetworkMatrices& nm, const VoltageGuess& init,
                    const NrOptions& opts = {}, FdlfScheme scheme = FdlfScheme::XB);

/// Complex bus injections S = V conj(Y V) for voltages in internal ordering.
VecC bus_injections(const SpMatC& Y, const VecC& V);

}  // namespace fppf
