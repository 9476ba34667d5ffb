#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "fppf/errors.hpp"
#include "fppf/experiments.hpp"
#include "test_support.hpp"

using namespace fppf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fppf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FPPF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("FPPF") == Algorithm::Fppf);
  CHECK(parse_algorithm(" nr") == Algorithm::NewtonRaphson);
  CHECK(parse_algorithms("nr,fdlf,nr") == std::vector<Algorithm>{Algorithm::NewtonRaphson, Algorithm::FastDecoupled});
  CHECK_THROWS_AS(parse_algorithm("gauss"), PreconditionError);
  CHECK_THROWS_AS(parse_algorithms(""), PreconditionError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  ExperimentConfig bad = cfg;
  bad.load_scale = 0.5;
  CHECK_THROWS_AS(validate_config(bad), PreconditionError);
  bad = cfg;
  bad.sweep.deltas = {1.0};
  CHECK_THROWS_AS(validate_config(bad), PreconditionError);
  bad = cfg;
  bad.sweep.samples = 0;
  CHECK_THROWS_AS(validate_config(bad), PreconditionError);
  bad = cfg;
  bad.tol = 0.0;
  CHECK_THROWS_AS(validate_config(bad), PreconditionError);
  bad = cfg;
  bad.rx_cap = -1.0;
  CHECK_THROWS_AS(validate_config(bad), PreconditionError);
}

TEST_CASE("initial magnitude draws") {
  const Vec a = draw_initial_magnitudes(42, 0.3, 7, 50);
  const Vec b = draw_initial_magnitudes(42, 0.3, 7, 50);
  CHECK(a == b);
  CHECK((a.array() >= 0.7).all());
  CHECK((a.array() <= 1.3).all());
  CHECK(a != draw_initial_magnitudes(42, 0.3, 8, 50));
  CHECK(a != draw_initial_magnitudes(43, 0.3, 7, 50));
  CHECK((draw_initial_magnitudes(42, 0.0, 7, 50).array() == 1.0).all());
  // the same underlying uniforms are scaled by delta
  const Vec c = draw_initial_magnitudes(42, 0.15, 7, 50);
  CHECK(((a.array() - 1.0) - 2.0 * (c.array() - 1.0)).abs().maxCoeff() < 1e-14);
}

TEST_CASE("sweep is deterministic and delta 0 always succeeds") {
  ExperimentConfig cfg;
  cfg.algorithms = {Algorithm::NewtonRaphson, Algorithm::FastDecoupled, Algorithm::Fppf};
  cfg.rx_cap = 0.8;
  cfg.sweep.deltas = {0.0, 0.2};
  cfg.sweep.samples = 12;
  cfg.sweep.seed = 9;
  const CaseData c = prepare_experiment_case(parse_case(testsupport::data_path("case30.m")), cfg);

  cfg.sweep.workers = 1;
  const auto one = run_sweep(c, cfg);
  cfg.sweep.workers = 4;
  const auto four = run_sweep(c, cfg);
  std::ostringstream a, b;
  write_sweep_csv(a, one);
  write_sweep_csv(b, four);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("delta,algorithm,successes,samples,success_rate\n", 0) == 0);

  REQUIRE(one.size() == 6);
  for (const auto& cell : one) {
    CHECK(cell.samples == 12);
    if (cell.delta == 0.0) CHECK(cell.success_rate() == 100.0);
  }
}

TEST_CASE("load scale 1 leaves the case unchanged") {
  ExperimentConfig cfg;
  const CaseData c = parse_case(testsupport::data_path("case9.m"));
  const CaseData d = prepare_experiment_case(c, cfg);
  CHECK(d.scheduled_p() == c.scheduled_p());
  CHECK(d.scheduled_q() == c.scheduled_q());
  for (std::size_t k = 0; k < c.branches.size(); ++k) CHECK(d.branches[k].r == c.branches[k].r);
}

TEST_CASE("bench table") {
  ExperimentConfig cfg;
  cfg.cases = {testsupport::data_path("case9.m"), "/nonexistent/case.m"};
  cfg.algorithms = {Algorithm::NewtonRaphson, Algorithm::Fppf};
  cfg.rx_cap = 0.8;
  const auto cells = run_bench(cfg);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].converged);
  CHECK(cells[0].iterations == 4);
  CHECK(cells[1].converged);
  CHECK_FALSE(cells[2].converged);
  std::ostringstream os;
  write_bench_csv(os, cells);
  const std::string s = os.str();
  CHECK(s.rfind("case,algorithm,iterations,final_mismatch,status\n", 0) == 0);
  CHECK(s.find("case,nr,FAIL") != std::string::npos);
}

TEST_CASE("two-bus certificate") {
  twobus::TwoBusCase c;
  c.b = 2.0;
  c.Pbar1 = -0.5;
  c.Q1 = -0.1;
  const CertificateReport ok = certify_two_bus(c, 41, 200);
  CHECK(ok.certified);
  CHECK(ok.contraction.factor < 1.0);
  CHECK(ok.trajectory_inside);
  std::ostringstream js;
  write_certificate_json(js, ok);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("certified").get<bool>());

  c.mu.g = 2.0;
  const CertificateReport no = certify_two_bus(c, 41, 200);
  CHECK_FALSE(no.certified);
  CHECK_FALSE(no.failing.empty());
}

TEST_CASE("command-line exit codes and outputs") {
  const fs::path out = scratch("cli");
  const std::string case9 = testsupport::data_path("case9.m");

  CHECK(run_cli("solve --case " + case9 + " --algo fppf,nr,fdlf --rx-cap 0.8 --out-dir " + out.string()) == 0);
  for (const char* a : {"fppf", "nr", "fdlf"}) {
    CHECK(fs::exists(out / (std::string("case9_") + a + ".json")));
    CHECK(fs::exists(out / (std::string("case9_") + a + "_trace.csv")));
  }
  const auto j = nlohmann::json::parse(slurp(out / "case9_fppf.json"));
  CHECK(j.at("buses").size() == 9);

  // restart from the written solution converges immediately
  CHECK(run_cli("solve --case " + case9 + " --rx-cap 0.8 --init " + (out / "case9_fppf.json").string() +
                " --out-dir " + (out / "warm").string()) == 0);
  const auto w = nlohmann::json::parse(slurp(out / "warm" / "case9_fppf.json"));
  CHECK(w.at("iterations").get<int>() == 0);

  // disconnected case: model error
  CaseData broken = parse_case(case9);
  broken.branches.erase(broken.branches.begin(), broken.branches.begin() + 3);
  std::ofstream(out / "broken.json") << case_to_json(broken);
  CHECK(run_cli("solve --case " + (out / "broken.json").string() + " --out-dir " + out.string()) == 2);
  CHECK(run_cli("solve --case /nonexistent.m --out-dir " + out.string()) == 2);

  // non-convergence
  CHECK(run_cli("solve --case " + case9 + " --max-iter 2 --out-dir " + out.string()) == 1);

  CHECK(run_cli("check --case " + case9) == 0);
  CHECK(run_cli("bench --case " + case9 + " --out-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "bench.csv"));
  CHECK(run_cli("sweep-init --case " + case9 + " --delta 0.1,0.2 --samples 3 --out-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(run_cli("twobus-cert --b 2 --P1 -0.5 --Q1 -0.1 --grid 21 --out-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "certificate.json"));
  CHECK(run_cli("twobus-cert --b 2 --g 2 --P1 -0.5 --Q1 -0.1 --grid 21 --out-dir " + out.string()) == 1);
  CHECK(run_cli("solve --case " + case9 + " --load-scale 0.5") == 2);
  CHECK(run_cli("solve --case " + case9 + " --tol abc") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("--help") == 0);
  fs::remove_all(out);
}
