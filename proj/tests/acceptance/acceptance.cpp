// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
#include "config.hpp"
#include "diagnostics.hpp"
#include "factors.hpp"
#include "pipeline.hpp"
#include "regress.hpp"
#include "simulate.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ccepc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0, 1);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

ModelSpec cce_model(int k) {
  ModelSpec s;
  s.dependent = "y";
  s.lag_dep = 1;
  for (int j = 1; j <= k; ++j) s.regressors.push_back("x" + std::to_string(j));
  s.observed_cf = {"g1"};
  s.cf_lags = 2;
  CsaSpec csa;
  csa.variables = {"y"};
  for (const auto& x : s.regressors) csa.variables.push_back(x);
  csa.lags = 2;
  s.csa = csa;
  return s;
}

McSuite suite_of(std::vector<std::string> estimators, std::optional<int> pcs = std::nullopt) {
  McSuite s;
  s.estimators = std::move(estimators);
  s.model.pcs = pcs;
  return s;
}

Outcome identity() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DgpConfig d;
    d.seed = seed;
    Panel p = gen_dgp(d).panel;
    FitResult f = fit(cce_model(d.k), p);
    for (int i = 0; i < f.design.n(); ++i) {
      const auto& u = f.design.units[i];
      Eigen::ColPivHouseholderQR<Matrix> qr(u.X);
      Vector b = qr.solve(u.y);
      worst = std::max(worst, (b - f.per_unit[i].ols.coef).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-10, fmt("max |b_cce - b_ols| = %.2e over 20 panels of 30x65", worst)};
}

double brute_cd(const Matrix& e) {
  const int n = static_cast<int>(e.rows()), t = static_cast<int>(e.cols());
  long double sum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      long double mi = e.row(i).mean(), mj = e.row(j).mean(), sij = 0, sii = 0, sjj = 0;
      for (int s = 0; s < t; ++s) {
        sij += (e(i, s) - mi) * (e(j, s) - mj);
        sii += (e(i, s) - mi) * (e(i, s) - mi);
        sjj += (e(j, s) - mj) * (e(j, s) - mj);
      }
      sum += sij / std::sqrt(sii * sjj);
    }
  return static_cast<double>(std::sqrt(2.0L * t / (n * (n - 1.0L))) * sum);
}

Outcome cd_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + rep % 19, t = 3 + (rep * 7) % 60;
    Matrix e = gaussian(n, t, rng);
    worst = std::max(worst, std::fabs(cd_test(e).statistic - brute_cd(e)));
  }
  Matrix same(3, 4);
  same << 1, 2, 0, 5, 1, 2, 0, 5, 1, 2, 0, 5;
  double closed = cd_test(same).statistic;
  bool ok = worst < 1e-10 && std::fabs(closed - 2 * std::sqrt(3.0)) < 1e-12;
  return {ok, fmt("max deviation %.2e over 50 matrices; perfect-correlation CD = %.6f (2*sqrt(3) = %.6f)", worst,
                  closed, 2 * std::sqrt(3.0))};
}

Outcome factor_counts() {
  std::string detail;
  bool ok = true;
  for (int m = 1; m <= 3; ++m) {
    DgpConfig d;
    d.m_ucf = m;
    d.m_ocf = 1;
    d.omega_sd = 0;
    d.gamma = {{0.0}, 1.0};
    d.theta = {{0.0}, 0.5};
    d.seed = 300 + m;
    McReport r = run_monte_carlo(d, 300, suite_of({"pipeline"}), 0);
    double hit = r.numfac_hits.at("u");
    ok = ok && hit >= 0.8 && r.completed == 300;
    detail += fmt("m=%.0f: k_GR(u) hit rate %.3f; ", m, hit);
  }
  return {ok, detail + "need >= 0.800 each over 300 replications"};
}

Outcome dependence_contrast() {
  SimulationConfig s = simulation_preset("paper-contrast");
  s.dgp.seed = 4;
  McReport r = run_monte_carlo(s.dgp, 300, s.suite, 0);
  double twfe = r.rejection.at("cd/twfe"), pipe = r.rejection.at("cd/pipeline");
  return {twfe >= 0.95 && pipe <= 0.15 && r.completed == 300,
          fmt("CD rejection at 5%%: TWFE %.3f (need >= 0.95), step-3 pipeline %.3f (need <= 0.15)", twfe, pipe)};
}

Outcome bias_contrast() {
  DgpConfig d;
  d.k = 2;
  d.m_ucf = 3;
  d.gamma = {{1.0, 0.0, 0.0}, 1.0};
  d.gamma_x = {{0, 1, 0, 0, 0, 1}, 0.5};
  d.corr_gamma_x = 0.3;
  d.seed = 5;
  McReport r = run_monte_carlo(d, 300, suite_of({"twfe", "ccemg"}), 0);
  auto mean_abs_bias = [&](const std::string& est) {
    return 0.5 * (std::fabs(r.metrics.at(est + "/beta1").bias) + std::fabs(r.metrics.at(est + "/beta2").bias));
  };
  double twfe = mean_abs_bias("twfe"), cce = mean_abs_bias("ccemg");
  return {twfe >= 3 * cce && cce < 0.03 && r.completed == 300,
          fmt("mean |bias| of slopes: TWFE %.4f, CCE-MG %.4f, ratio %.1f (need >= 3 and CCE-MG < 0.03)", twfe, cce,
              twfe / cce)};
}

Outcome loading_sum() {
  auto rate = [](double shift, std::uint64_t seed) {
    DgpConfig d;
    d.m_ucf = 3;
    d.omega_sd = 0;
    d.gamma = {{0.28}, 0.3};
    d.regime.fixed_fraction = 0.5;
    d.regime.gamma_shift = {shift};
    d.seed = seed;
    McReport r = run_monte_carlo(d, 300, suite_of({"pipeline"}, 3), 0);
    return r.rejection.at("loading_sum/pipeline");
  };
  double power = rate(0.52, 61), size = rate(0.0, 62);
  return {power >= 0.8 && size >= 0.01 && size <= 0.10,
          fmt("loading sums 2.40 vs 0.84: rejection %.3f (need >= 0.80); equal loadings: %.3f (need in [0.01, 0.10])",
              power, size)};
}

Outcome delta_size() {
  auto rate = [](double beta_sd, std::uint64_t seed) {
    DgpConfig d;
    d.n = 20;
    d.t = 60;
    d.m_ucf = 0;
    d.m_ocf = 0;
    d.rho = {{0.5}, 0.0};
    d.beta = {{1.0}, beta_sd};
    d.seed = seed;
    return run_monte_carlo(d, 500, suite_of({"mg"}), 0).rejection.at("delta/mg");
  };
  double size = rate(0.0, 71), power = rate(1.0, 72);
  return {size >= 0.01 && size <= 0.10 && power >= 0.95,
          fmt("homogeneous slopes: rejection %.3f (need in [0.01, 0.10]); slope sd 1: %.3f (need >= 0.95)", size,
              power)};
}

Outcome pc_invariants() {
  double worst_orth = 0;
  bool shares_ok = true, deterministic = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DgpConfig d;
    d.seed = seed;
    d.regime.fixed_fraction = 0.5;
    Panel p = gen_dgp(d).panel;
    ModelSpec s = cce_model(d.k);
    s.regime_var = "fixed";
    PipelineOptions one, many;
    one.pcs = many.pcs = 3;
    one.threads = 1;
    many.threads = 8;
    PipelineResult a = run_three_step(p, s, one);
    PipelineResult b = run_three_step(p, s, one);
    PipelineResult c = run_three_step(p, s, many);
    const Matrix& f = a.factors.components;
    const double t = static_cast<double>(f.rows());
    Matrix g = f.transpose() * f / t - Matrix::Identity(f.cols(), f.cols());
    worst_orth = std::max(worst_orth, g.cwiseAbs().maxCoeff());
    for (std::size_t k = 1; k < a.factors.shares.size(); ++k)
      shares_ok = shares_ok && a.factors.shares[k] <= a.factors.shares[k - 1];
    deterministic = deterministic && f == b.factors.components && f == c.factors.components &&
                    a.step3.mg->coef == c.step3.mg->coef;
  }
  return {worst_orth < 1e-8 && shares_ok && deterministic,
          fmt("max |PC'PC/T - I| = %.2e", worst_orth) + "; shares nonincreasing: " + (shares_ok ? "yes" : "no") +
              "; identical across runs and 1/8 threads: " + (deterministic ? "yes" : "no")};
}

struct Cli {
  int code = -1;
  std::string out;
};

Cli run_cli(const std::string& args) {
  const std::string cmd = "cd '" FIXTURE_DIR "' && '" CCEPC_CLI "' " + args + " 2>/dev/null";
  Cli r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string stable_json(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) return "<invalid json>";
  j.erase("run_info");
  return j.dump();
}

Outcome end_to_end() {
  const std::string out = (fs::temp_directory_path() / "ccepc_acceptance_e2e").string();
  bool ok = true;
  std::string detail;
  for (const std::string cmd : {"pipeline --config fixture_config.json",
                                "simulate --preset paper-contrast --reps 30 --seed 9"}) {
    std::vector<std::string> docs;
    for (const char* threads : {"1", "8", "1", "8"}) {
      Cli r = run_cli(cmd + " --json --threads " + threads + " --output '" + out + "'");
      ok = ok && r.code == 0;
      docs.push_back(stable_json(r.out));
    }
    bool same = true;
    for (const auto& d : docs) same = same && d == docs[0];
    ok = ok && same;
    detail += cmd.substr(0, cmd.find(' ')) + (same ? " identical" : " DIFFERS") + " over 4 runs (threads 1/8); ";
  }
  fs::remove_all(out);
  return {ok, detail + "timestamps excluded"};
}

Outcome format_fidelity() {
  const std::string out = (fs::temp_directory_path() / "ccepc_acceptance_format").string();
  Cli r = run_cli("pipeline --config fixture_config.json --output '" + out + "'");
  fs::remove_all(out);
  std::ifstream in(GOLDEN_DIR "/benchmark_table.txt", std::ios::binary);
  std::ostringstream g;
  g << in.rdbuf();
  const std::vector<std::string> rows{"CD",       "F: PC = 0", "Δ (all)", "Δ (PC)", "t: PC F1 > PC F0",
                                      "Share PC (all)", "R2",  "R2 (MG)", "R2 (within)",
                                      "Estimated Number of Common Factors"};
  std::string missing;
  std::size_t pos = 0;
  for (const auto& row : rows) {
    std::size_t at = r.out.find("\n" + row + " ", pos);
    if (at == std::string::npos) at = r.out.find("\n" + row + "\n", pos);
    if (at == std::string::npos) {
      missing += " '" + row + "'";
    } else {
      pos = at + 1;
    }
  }
  const bool same = r.code == 0 && r.out == g.str();
  const bool ten = r.out.find("(10)") != std::string::npos;
  return {same && missing.empty() && ten,
          std::string("ten columns: ") + (ten ? "yes" : "no") +
              "; footer rows in order: " + (missing.empty() ? "all present" : "missing" + missing) +
              "; golden file: " + (same ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "CCE-MG equals per-unit OLS", identity},
      {2, "CD oracle", cd_oracle},
      {3, "factor-count recovery", factor_counts},
      {4, "dependence contrast", dependence_contrast},
      {5, "bias contrast", bias_contrast},
      {6, "loading-sum power and size", loading_sum},
      {7, "delta test size and power", delta_size},
      {8, "PC invariants", pc_invariants},
      {9, "end-to-end determinism", end_to_end},
      {10, "format fidelity", format_fidelity},
  };
  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
