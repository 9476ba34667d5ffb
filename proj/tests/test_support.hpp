#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "fppf/netmodel.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) { return std::string(FPPF_DATA_DIR) + "/" + name; }

inline fppf::CaseData load(const std::string& name, double rx_cap = 0.8) {
  fppf::CaseData c = fppf::parse_case(data_path(name));
  return rx_cap > 0.0 ? fppf::cap_rx_ratios(c, rx_cap).case_data : c;
}

// Dense bus admittance in case order, written out per branch without the
// library's assembly code.
inline Eigen::MatrixXcd dense_ybus(const fppf::CaseData& c) {
  const auto n = c.bus_count();
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const std::complex<double> j(0, 1);
  for (const auto& br : c.branches) {
    const auto f = c.bus_index(br.from);
    const auto t = c.bus_index(br.to);
    const std::complex<double> z(br.r, br.x);
    const std::complex<double> ys = 1.0 / z;
    const std::complex<double> a = br.tap * std::exp(j * br.shift);
    Y(f, f) += (ys + j * br.b_c / 2.0) / (br.tap * br.tap);
    Y(t, t) += ys + j * br.b_c / 2.0;
    Y(f, t) -= ys / std::conj(a);
    Y(t, f) -= ys / a;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    Y(i, i) += std::complex<double>(b.Gs, b.Bs);
  }
  return Y;
}

// Complex injections V conj(Y V) for case-order voltages.
inline Eigen::VectorXcd dense_injections(const fppf::CaseData& c, const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  Eigen::VectorXcd V(vm.size());
  for (Eigen::Index i = 0; i < vm.size(); ++i) V[i] = std::polar(vm[i], va[i]);
  const Eigen::MatrixXcd Y = dense_ybus(c);
  return V.cwiseProduct((Y * V).conjugate());
}

// Largest power-balance error of case-order voltages: P at every non-slack
// bus, Q at every load bus.
inline double balance_error(const fppf::CaseData& c, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                            bool include_slack_p = false) {
  const Eigen::VectorXcd s = dense_injections(c, vm, va);
  const Eigen::VectorXd p = c.scheduled_p();
  const Eigen::VectorXd q = c.scheduled_q();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.bus_count(); ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    if (include_slack_p || b.id != c.slack_bus) worst = std::max(worst, std::abs(s[i].real() - p[i]));
    if (b.kind == fppf::BusKind::PQ) worst = std::max(worst, std::abs(s[i].imag() - q[i]));
  }
  return worst;
}

// Total series and shunt active losses of case-order voltages, branch by branch.
inline double branch_losses(const fppf::CaseData& c, const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  const std::complex<double> j(0, 1);
  double total = 0.0;
  for (const auto& br : c.branches) {
    const auto f = c.bus_index(br.from);
    const auto t = c.bus_index(br.to);
    const std::complex<double> Vf = std::polar(vm[f], va[f]);
    const std::complex<double> Vt = std::polar(vm[t], va[t]);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> a = br.tap * std::exp(j * br.shift);
    const std::complex<double> If = (ys + j * br.b_c / 2.0) / (br.tap * br.tap) * Vf - ys / std::conj(a) * Vt;
    const std::complex<double> It = -ys / a * Vf + (ys + j * br.b_c / 2.0) * Vt;
    total += (Vf * std::conj(If) + Vt * std::conj(It)).real();
  }
  for (Eigen::Index i = 0; i < c.bus_count(); ++i) total += c.buses[static_cast<std::size_t>(i)].Gs * vm[i] * vm[i];
  return total;
}

// Nine-bus case with every loss, shunt and transformer element removed.
inline fppf::CaseData lossless_case9() {
  fppf::CaseData c = fppf::parse_case(data_path("case9.m"));
  for (auto& br : c.branches) {
    br.r = 0.0;
    br.b_c = 0.0;
    br.tap = 1.0;
    br.shift = 0.0;
  }
  for (auto& b : c.buses) {
    b.Gs = 0.0;
    b.Bs = 0.0;
  }
  return c;
}

}  // namespace testsupport
