#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fppf/errors.hpp"
#include "fppf/fppf_core.hpp"
#include "fppf/twobus.hpp"

using namespace fppf;
using namespace fppf::twobus;

namespace {

TwoBusParams nominal(double gP, double gQ) {
  TwoBusParams p;
  p.gammaP = p.gammaP_t = gP;
  p.gammaQ = p.gammaQ_t = gQ;
  p.b_t = p.b_h = 1.0;
  return p;
}

TwoBusCase small_mu_case() {
  TwoBusCase c;
  c.b = 5.0;
  c.mu = {0.05, 0.02, 0.01, 0.005};
  c.V2 = 1.02;
  c.Pbar1 = -1.0;
  c.Q1 = -0.3;
  return c;
}

// High-voltage fixed point of the nominal map found without the closed form:
// eliminate psi, scan x for sign changes, bisect, keep the root nearest x = 0.
State brute_force_fixed_point(double gP, double gQ) {
  auto phi = [&](double x) {
    const double psi = -gP / (x + 1.0);
    return gQ / (x + 1.0) + std::sqrt(1.0 - psi * psi) - 1.0 - x;
  };
  const double lo = std::abs(gP) - 1.0 + 1e-9;  // keeps |psi| <= 1
  const int n = 20000;
  double best = std::nan("");
  for (int i = 0; i < n; ++i) {
    double a = lo + (0.5 - lo) * i / n;
    double b = lo + (0.5 - lo) * (i + 1) / n;
    if (phi(a) * phi(b) > 0.0) continue;
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (a + b);
      (phi(a) * phi(m) <= 0.0 ? b : a) = m;
    }
    const double root = 0.5 * (a + b);
    if (std::isnan(best) || std::abs(root) < std::abs(best)) best = root;
  }
  return {-gP / (best + 1.0), best};
}

}  // namespace

TEST_CASE("derived constants") {
  SUBCASE("nominal system") {
    TwoBusCase c;
    c.b = 4.0;
    const TwoBusParams p = derive_params(c);
    CHECK(p.g_t == 0.0);
    CHECK(p.b_t == 4.0);
    CHECK(p.b_h == 4.0);
    CHECK(p.rho == 0.0);
    CHECK(p.rho_t == 0.0);
    CHECK(p.k_mu == 1.0);
    CHECK(p.V1circ == 1.0);
  }
  SUBCASE("charging only") {
    TwoBusCase c;
    c.b = 4.0;
    c.mu.b_c = 0.4;
    const TwoBusParams p = derive_params(c);
    CHECK(p.b_t == 4.0);
    CHECK(p.b_h == doctest::Approx(3.8));
    CHECK(p.k_mu == doctest::Approx(3.8 / 4.0));
  }
  SUBCASE("full perturbation against complex arithmetic") {
    TwoBusCase c;
    c.b = 5.0;
    c.mu = {0.25, 0.1, 0.0, 0.02};
    c.V2 = 1.04;
    c.Pbar1 = -0.8;
    c.Q1 = -0.2;
    const TwoBusParams p = derive_params(c);
    // transfer admittance seen from bus 1 is (g - j b) e^{-j shift} / t
    const std::complex<double> yt =
        std::complex<double>(c.mu.g, -c.b) * std::exp(std::complex<double>(0, -c.mu.shift)) / (1.0 + c.mu.tbar);
    CHECK(p.g_t == doctest::Approx(yt.real()).epsilon(1e-14));
    CHECK(p.b_t == doctest::Approx(-yt.imag()).epsilon(1e-14));
    const double bh = 5.0 - 0.05;
    CHECK(p.b_h == doctest::Approx(bh));
    CHECK(p.rho == doctest::Approx(0.25 / bh));
    CHECK(p.rho_t == doctest::Approx(yt.real() / -yt.imag()));
    const double v1 = -yt.imag() / bh * 1.04;
    CHECK(p.V1circ == doctest::Approx(v1));
    CHECK(p.gammaP_t == doctest::Approx(-0.8 / (-yt.imag() * v1 * 1.04)));
    CHECK(p.gammaP_t == doctest::Approx(p.k_mu * p.gammaP));
    CHECK(p.gammaQ_t == doctest::Approx(p.k_mu * p.gammaQ));
  }
  SUBCASE("invalid inputs") {
    TwoBusCase c;
    c.b = 0.0;
    CHECK_THROWS_AS(derive_params(c), ModelError);
    c.b = 1.0;
    c.mu.tbar = -1.0;
    CHECK_THROWS_AS(derive_params(c), ModelError);
    c.mu.tbar = 0.0;
    c.mu.shift = 1.6;  // b~ < 0
    CHECK_THROWS_AS(derive_params(c), ModelError);
  }
}

TEST_CASE("nominal box corner is a fixed point") {
  const double gP = 0.3, gQ = -0.05;
  const NominalBox b = nominal_box(gP, gQ);
  CHECK(b.k1m < 0.0);
  CHECK(b.k2m < b.k2p);
  const State xi{b.k1m, -b.k2m};
  const State next = fmu_step(nominal(gP, gQ), xi);
  CHECK(std::abs(next.psi - xi.psi) < 1e-12);
  CHECK(std::abs(next.x - xi.x) < 1e-12);

  const State oracle = brute_force_fixed_point(gP, gQ);
  CHECK(std::abs(oracle.psi - xi.psi) < 1e-10);
  CHECK(std::abs(oracle.x - xi.x) < 1e-10);
}

TEST_CASE("nominal box limits and assumption errors") {
  CHECK_THROWS_AS(nominal_box(0.0, 0.0), DomainError);   // 4gP^2 - 4gQ = 0
  CHECK_THROWS_AS(nominal_box(0.6, 0.0), DomainError);   // = 1.44
  CHECK_THROWS_AS(nominal_box(0.1, 0.05), DomainError);  // negative

  double prev = 1.0;
  for (double gP : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
    const NominalBox b = nominal_box(gP, -0.05);
    CHECK(std::abs(b.k1m) < prev);
    prev = std::abs(b.k1m);
  }
  CHECK(prev < 1e-5);

  // close to the outer boundary the two roots merge
  const double gP = 0.4;
  const double gQ = gP * gP - 0.25 + 1e-12;
  const NominalBox b = nominal_box(gP, gQ);
  CHECK(std::abs(b.k2m - b.k2p) < 1e-5);
}

TEST_CASE("eps invariance inequalities") {
  TwoBusCase c;
  c.b = 2.0;
  c.Pbar1 = -0.5;
  c.Q1 = -0.1;
  const TwoBusParams p0 = derive_params(c);
  InvariantBox box0 = nominal_invariant_box(p0);
  CHECK(check_eps_invariance(p0, box0));

  TwoBusCase lossy = c;
  lossy.mu.g = 1.0;  // rho~ = 0.5
  const TwoBusParams pl = derive_params(lossy);
  CHECK(pl.rho_t == doctest::Approx(0.5));
  CHECK_FALSE(check_eps_invariance(pl, nominal_invariant_box(pl)));

  InvariantBox bad = box0;
  bad.eps2 = 1.0 - bad.k2;
  CHECK_THROWS_AS(check_eps_invariance(p0, bad), PreconditionError);
  bad = box0;
  bad.eps1 = 1.0;
  CHECK_THROWS_AS(check_eps_invariance(p0, bad), PreconditionError);
}

TEST_CASE("solve_eps") {
  SUBCASE("zero perturbation gives eps = 0") {
    TwoBusCase c;
    c.b = 2.0;
    c.Pbar1 = -0.5;
    c.Q1 = -0.1;
    const EpsSolveResult r = solve_eps(derive_params(c));
    CHECK(r.feasible);
    CHECK(r.box.eps1 == 0.0);
    CHECK(r.box.eps2 == 0.0);
  }
  SUBCASE("small perturbation is certified") {
    const TwoBusParams p = derive_params(small_mu_case());
    const EpsSolveResult r = solve_eps(p);
    REQUIRE(r.feasible);
    CHECK(r.box.eps1 >= 0.0);
    CHECK(r.box.eps2 >= 0.0);
    CHECK(r.box.eps1 + r.box.eps2 > 0.0);
    CHECK(check_eps_invariance(p, r.box));

    // enlarging eps1 keeps the first inequality satisfied
    double last = eps_residual(p, r.box).e1;
    for (double extra = 0.0; extra <= 0.05; extra += 0.005) {
      InvariantBox b = r.box;
      b.eps1 += extra;
      const double e1 = eps_residual(p, b).e1;
      CHECK(e1 <= 1e-12);
      CHECK(e1 <= last + 1e-15);
      last = e1;
    }
  }
  SUBCASE("rho~ = 1 is not certified") {
    TwoBusCase c;
    c.b = 2.0;
    c.mu.g = 2.0;
    c.Pbar1 = -0.5;
    c.Q1 = -0.1;
    const TwoBusParams p = derive_params(c);
    CHECK(p.rho_t == doctest::Approx(1.0));
    const EpsSolveResult r = solve_eps(p);
    CHECK_FALSE(r.feasible);
    CHECK_FALSE(r.diagnostic.empty());
  }
}

TEST_CASE("analytic Jacobian matches finite differences") {
  const TwoBusParams p = derive_params(small_mu_case());
  const InvariantBox box = solve_eps(p).box;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> up(-box.psi_halfwidth(), box.psi_halfwidth());
  std::uniform_real_distribution<double> ux(-box.x_halfwidth(), box.x_halfwidth());
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const State s{up(rng), ux(rng)};
    const Eigen::Matrix2d J = fmu_jacobian(p, s);
    const State a = fmu_step(p, {s.psi + h, s.x}), b = fmu_step(p, {s.psi - h, s.x});
    const State c = fmu_step(p, {s.psi, s.x + h}), d = fmu_step(p, {s.psi, s.x - h});
    Eigen::Matrix2d fd;
    fd << (a.psi - b.psi) / (2 * h), (c.psi - d.psi) / (2 * h), (a.x - b.x) / (2 * h), (c.x - d.x) / (2 * h);
    CHECK((J - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("contraction factor") {
  const TwoBusParams p = nominal(0.3, -0.05);
  const InvariantBox box = nominal_invariant_box(p);
  const ContractionEstimate e = contraction_factor(p, box);
  CHECK(e.factor > 0.0);
  CHECK(e.factor < 1.0);
  CHECK(e.excluded == 0);

  const Eigen::Matrix2d J0 = fmu_jacobian(nominal(0.0, 0.0), {0.0, 0.0});
  CHECK(J0.cwiseAbs().rowwise().sum().maxCoeff() < 1.0);
  CHECK_THROWS_AS(contraction_factor(p, box, 1), PreconditionError);
}

TEST_CASE("certified box is invariant under sampling") {
  const TwoBusParams p = derive_params(small_mu_case());
  const EpsSolveResult r = solve_eps(p);
  REQUIRE(r.feasible);
  const InvariantBox& box = r.box;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = box.psi_halfwidth(), c = box.x_halfwidth();
  int outside = 0;
  for (int i = 0; i < 10000; ++i) {
    State s{a * u(rng), c * u(rng)};
    // a quarter of the samples sit on the boundary
    if (i % 4 == 0) s.psi = (u(rng) < 0 ? -a : a);
    if (i % 4 == 1) s.x = (u(rng) < 0 ? -c : c);
    const State n = fmu_step(p, s);
    if (!box.contains(n.psi, n.x, 1e-12)) ++outside;
  }
  CHECK(outside == 0);
}

TEST_CASE("trajectories converge to the high-voltage solution") {
  const double gP = 0.3, gQ = -0.05;
  const TwoBusParams p = nominal(gP, gQ);
  const NominalBox nb = nominal_box(gP, gQ);

  const Trajectory still = simulate_fmu(p, {nb.k1m, -nb.k2m}, 10);
  for (const State& s : still.points) {
    CHECK(s.psi == doctest::Approx(nb.k1m).epsilon(1e-12));
    CHECK(s.x == doctest::Approx(-nb.k2m).epsilon(1e-12));
  }

  const State oracle = brute_force_fixed_point(gP, gQ);
  const Trajectory t = simulate_fmu(p, {0.0, 0.0}, 300);
  REQUIRE_FALSE(t.domain_exit);
  CHECK(std::abs(t.points.back().psi - oracle.psi) < 1e-10);
  CHECK(std::abs(t.points.back().x - oracle.x) < 1e-10);
  // linear rate: error ratios settle below one
  const double e1 = std::abs(t.points[20].x - oracle.x), e2 = std::abs(t.points[21].x - oracle.x);
  CHECK(e2 < e1);
  CHECK_THROWS_AS(simulate_fmu(p, {1.5, 0.0}, 5), PreconditionError);
}

TEST_CASE("domain exit is flagged") {
  const TwoBusParams p = nominal(0.9, 0.0);
  const Trajectory t = simulate_fmu(p, {0.0, -0.5}, 10);
  CHECK(t.domain_exit);
}

TEST_CASE("general solver on the equivalent case matches the two-bus limit") {
  const TwoBusCase c = small_mu_case();
  const TwoBusParams p = derive_params(c);
  const Trajectory t = simulate_fmu(p, {0.0, 0.0}, 500);
  REQUIRE_FALSE(t.domain_exit);
  const State lim = t.points.back();

  const PreparedCase pc = prepare_case(to_case_data(c));
  CHECK(pc.constants.vcirc_load[0] == doctest::Approx(p.V1circ).epsilon(1e-14));
  FppfOptions o;
  o.tol = 1e-13;
  const FppfResult r = solve_fppf(pc.case_data, pc.constants, flat_start(pc.constants), o);
  REQUIRE(r.solution.report.converged());
  const Index b1 = pc.case_data.bus_index(1), b2 = pc.case_data.bus_index(2);
  const double x = r.solution.vm[b1] / p.V1circ - 1.0;
  const double psi = std::sin(r.solution.theta[b2] - r.solution.theta[b1]);
  CHECK(std::abs(x - lim.x) < 1e-8);
  CHECK(std::abs(psi - lim.psi) < 1e-8);
}
