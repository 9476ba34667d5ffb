#include "fppf/twobus.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "fppf/errors.hpp"

namespace fppf::twobus {

namespace {

// Roundoff allowance for inequalities that hold with equality at mu = 0.
constexpr double kIneqSlack = 1e-12;

bool in_domain(const InvariantBox& b) {
  const double k1 = b.psi_halfwidth();
  const double k2 = b.x_halfwidth();
  return k1 >= 0.0 && k1 < 1.0 && k2 >= 0.0 && k2 < 1.0;
}

}  // namespace

bool InvariantBox::contains(double psi, double x, double slack) const {
  return std::abs(psi) <= psi_halfwidth() + slack && std::abs(x) <= x_halfwidth() + slack;
}

TwoBusParams derive_params(const TwoBusCase& c) {
  if (!(c.b > 0.0)) throw ModelError("series susceptance b must be positive");
  if (!(c.mu.tbar > -1.0)) throw ModelError("tap perturbation must exceed -1");
  if (!(c.V2 > 0.0)) throw ModelError("generator voltage must be positive");
  if (c.mu.g < 0.0) throw ModelError("series conductance must be nonnegative");

  const double t = 1.0 + c.mu.tbar;
  const double cs = std::cos(c.mu.shift);
  const double sn = std::sin(c.mu.shift);
  TwoBusParams p;
  p.g_t = (c.mu.g * cs - c.b * sn) / t;
  p.b_t = (c.b * cs + c.mu.g * sn) / t;
  p.b_h = c.b - c.mu.b_c / 2.0;
  if (!(p.b_t > 0.0)) throw ModelError("effective transfer susceptance b~ is not positive");
  if (!(p.b_h > 0.0)) throw ModelError("b - b_c/2 is not positive");
  p.rho = c.mu.g / p.b_h;
  p.rho_t = p.g_t / p.b_t;
  p.k_mu = c.b * p.b_h / (p.b_t * p.b_t);
  p.V1circ = p.b_t / p.b_h * c.V2;
  const double base = p.b_t * p.V1circ * c.V2;
  p.gammaP_t = c.Pbar1 / base;
  p.gammaQ_t = c.Q1 / base;
  p.gammaP = p.gammaP_t / p.k_mu;
  p.gammaQ = p.gammaQ_t / p.k_mu;
  return p;
}

NominalBox nominal_box(double gammaP, double gammaQ) {
  const double margin = 4.0 * gammaP * gammaP - 4.0 * gammaQ;
  if (!(margin > 0.0)) {
    std::ostringstream msg;
    msg << "loading violates 4 gP^2 - 4 gQ > 0 (value " << margin << ")";
    throw DomainError(msg.str(), std::nullopt, margin);
  }
  if (!(margin < 1.0)) {
    std::ostringstream msg;
    msg << "loading violates 4 gP^2 - 4 gQ < 1 (value " << margin << ")";
    throw DomainError(msg.str(), std::nullopt, margin);
  }
  const double disc = std::sqrt(std::max(0.0, 0.25 + gammaQ - gammaP * gammaP));
  NominalBox b;
  b.k2m = 1.0 - std::sqrt(0.5 + gammaQ + disc);
  b.k2p = 1.0 - std::sqrt(0.5 + gammaQ - disc);
  b.k1m = -gammaP / (1.0 - b.k2m);
  return b;
}

InvariantBox nominal_invariant_box(const TwoBusParams& p) {
  const NominalBox nb = nominal_box(p.gammaP, p.gammaQ);
  InvariantBox box;
  box.k1 = std::abs(nb.k1m);
  box.k2 = nb.k2m;
  return box;
}

EpsResidual eps_residual(const TwoBusParams& p, const InvariantBox& box) {
  const double k1 = box.k1, k2 = box.k2, e1 = box.eps1, e2 = box.eps2;
  const double gp = std::abs(p.gammaP);
  const double s1 = k1 + e1;
  EpsResidual r;
  r.e1 = p.k_mu * gp / (1.0 - k2 - e2) - gp / (1.0 - k2) + p.rho * (1.0 + k2 + e2) + p.rho_t - e1;
  r.e2 = -p.k_mu * p.gammaQ / (1.0 - k2 - e2) + (1.0 - k2) + p.rho_t * s1 - std::sqrt(1.0 - s1 * s1) - e2;
  return r;
}

bool check_eps_invariance(const TwoBusParams& p, const InvariantBox& box) {
  if (!(box.eps2 < 1.0 - box.k2)) throw PreconditionError("eps2 must be below 1 - k2");
  if (box.k1 + box.eps1 > 1.0) throw PreconditionError("k1 + eps1 must not exceed 1");
  const EpsResidual r = eps_residual(p, box);
  return r.e1 <= kIneqSlack && r.e2 <= kIneqSlack;
}

EpsSolveResult solve_eps(const TwoBusParams& p, int max_iter, double tol) {
  EpsSolveResult out;
  InvariantBox box;
  try {
    box = nominal_invariant_box(p);
  } catch (const DomainError& e) {
    out.diagnostic = e.what();
    return out;
  }
  const double gp = std::abs(p.gammaP);
  EpsResidual r = eps_residual(p, box);
  int it = 0;
  while (std::max(std::abs(r.e1), std::abs(r.e2)) > tol) {
    if (it >= max_iter) {
      out.diagnostic = "Newton iteration on E did not converge";
      out.box = box;
      out.iterations = it;
      return out;
    }
    ++it;
    const double d = 1.0 - box.k2 - box.eps2;
    const double s1 = box.k1 + box.eps1;
    Eigen::Matrix2d J;
    J(0, 0) = -1.0;
    J(0, 1) = p.k_mu * gp / (d * d) + p.rho;
    J(1, 0) = p.rho_t + s1 / std::sqrt(1.0 - s1 * s1);
    J(1, 1) = -p.k_mu * p.gammaQ / (d * d) - 1.0;
    const double det = J.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-14) {
      out.diagnostic = "singular Jacobian of E";
      out.box = box;
      out.iterations = it;
      return out;
    }
    const Eigen::Vector2d step = J.partialPivLu().solve(Eigen::Vector2d(r.e1, r.e2));
    double lambda = 1.0;
    InvariantBox trial = box;
    bool moved = false;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      trial.eps1 = box.eps1 - lambda * step[0];
      trial.eps2 = box.eps2 - lambda * step[1];
      if (in_domain(trial)) {
        moved = true;
        break;
      }
    }
    if (!moved) {
      out.diagnostic = "Newton iterate left the eps domain";
      out.box = box;
      out.iterations = it;
      return out;
    }
    box = trial;
    r = eps_residual(p, box);
    if (!std::isfinite(r.e1) || !std::isfinite(r.e2)) {
      out.diagnostic = "E is not finite";
      out.iterations = it;
      return out;
    }
  }
  out.iterations = it;
  // A negative component means the inequality already holds with slack on
  // that side; the box never shrinks below the nominal one.
  box.eps1 = std::max(box.eps1, 0.0);
  box.eps2 = std::max(box.eps2, 0.0);
  out.box = box;
  if (!in_domain(box)) {
    out.diagnostic = "root lies outside the eps domain";
    return out;
  }
  if (!check_eps_invariance(p, box)) {
    const EpsResidual rr = eps_residual(p, box);
    std::ostringstream msg;
    msg << "clamped root fails the invariance inequalities (E1 = " << rr.e1 << ", E2 = " << rr.e2 << ")";
    out.diagnostic = msg.str();
    return out;
  }
  out.feasible = true;
  return out;
}

State fmu_step(const TwoBusParams& p, const State& s) {
  if (!(std::abs(s.psi) <= 1.0)) throw DomainError("psi outside [-1, 1]", 0, s.psi);
  if (!(s.x > -1.0)) throw DomainError("x must exceed -1", std::nullopt, s.x);
  State n;
  const double xp1 = s.x + 1.0;
  n.psi = -p.gammaP_t / xp1 + p.rho * xp1 - p.rho_t * std::sqrt(1.0 - s.psi * s.psi);
  if (!(std::abs(n.psi) <= 1.0)) throw DomainError("updated psi outside [-1, 1]", 0, n.psi);
  n.x = p.gammaQ_t / xp1 - p.rho_t * n.psi + std::sqrt(1.0 - n.psi * n.psi) - 1.0;
  return n;
}

Eigen::Matrix2d fmu_jacobian(const TwoBusParams& p, const State& s) {
  const State n = fmu_step(p, s);
  const double xp1 = s.x + 1.0;
  const double dpsi_dpsi = p.rho_t == 0.0 ? 0.0 : p.rho_t * s.psi / std::sqrt(1.0 - s.psi * s.psi);
  const double dpsi_dx = p.gammaP_t / (xp1 * xp1) + p.rho;
  const double chain = -p.rho_t - n.psi / std::sqrt(1.0 - n.psi * n.psi);
  Eigen::Matrix2d J;
  J << dpsi_dpsi, dpsi_dx, chain * dpsi_dpsi, chain * dpsi_dx - p.gammaQ_t / (xp1 * xp1);
  return J;
}

ContractionEstimate contraction_factor(const TwoBusParams& p, const InvariantBox& box, int grid_n) {
  if (grid_n < 2) throw PreconditionError("grid_n must be at least 2");
  ContractionEstimate est;
  const double a = box.psi_halfwidth();
  const double c = box.x_halfwidth();
  for (int i = 0; i < grid_n; ++i) {
    const double psi = -a + 2.0 * a * i / (grid_n - 1);
    for (int j = 0; j < grid_n; ++j) {
      const double x = -c + 2.0 * c * j / (grid_n - 1);
      try {
        const State n = fmu_step(p, {psi, x});
        if (std::abs(n.psi) >= 1.0) {
          ++est.excluded;
          continue;
        }
        const Eigen::Matrix2d J = fmu_jacobian(p, {psi, x});
        est.factor = std::max(est.factor, J.cwiseAbs().rowwise().sum().maxCoeff());
      } catch (const DomainError&) {
        ++est.excluded;
      }
    }
  }
  return est;
}

Trajectory simulate_fmu(const TwoBusParams& p, State init, int iters) {
  if (!(std::abs(init.psi) <= 1.0) || !(init.x > -1.0)) throw PreconditionError("initial state needs |psi| <= 1 and x > -1");
  Trajectory t;
  t.points.push_back(init);
  State s = init;
  for (int k = 0; k < iters; ++k) {
    try {
      s = fmu_step(p, s);
    } catch (const DomainError&) {
      t.domain_exit = true;
      break;
    }
    t.points.push_back(s);
    if (!(s.x > -1.0)) {
      t.domain_exit = true;
      break;
    }
  }
  return t;
}

Trajectory simulate_fmu(const TwoBusCase& c, State init, int iters) { return simulate_fmu(derive_params(c), init, iters); }

CaseData to_case_data(const TwoBusCase& c) {
  derive_params(c);
  CaseData d;
  d.base_mva = 100.0;
  Bus b1;
  b1.id = 1;
  b1.kind = BusKind::PQ;
  b1.Pd = -c.Pbar1;
  b1.Qd = -c.Q1;
  Bus b2;
  b2.id = 2;
  b2.kind = BusKind::PV;
  b2.Vm = c.V2;
  d.buses = {b1, b2};
  Generator g;
  g.bus = 2;
  g.Vg = c.V2;
  d.gens = {g};
  const double mag = c.mu.g * c.mu.g + c.b * c.b;
  Branch br;
  br.from = 2;
  br.to = 1;
  br.r = c.mu.g / mag;
  br.x = c.b / mag;
  br.b_c = c.mu.b_c;
  br.tap = 1.0 + c.mu.tbar;
  br.shift = c.mu.shift;
  d.branches = {br};
  d.slack_bus = 2;
  d.alpha = {0.0, 1.0};
  validate_case(d);
  return d;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << "iter,psi,x\n";
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < t.points.size(); ++k) os << k << ',' << t.points[k].psi << ',' << t.points[k].x << '\n';
  os.precision(old);
}

}  // namespace fppf::twobus
