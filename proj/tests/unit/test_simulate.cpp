#include "error.hpp"
#include "helpers.hpp"
#include "paneldata.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"

#include <doctest.h>

#include <cmath>

using namespace ccepc;

TEST_SUITE("simulate") {

TEST_CASE("same seed gives byte-identical panels") {
  DgpConfig d;
  d.seed = 42;
  std::string a = to_csv(gen_dgp(d).panel);
  std::string b = to_csv(gen_dgp(d).panel);
  CHECK(a == b);
  d.seed = 43;
  CHECK(to_csv(gen_dgp(d).panel) != a);
}

TEST_CASE("panel layout") {
  DgpConfig d;
  d.n = 5;
  d.t = 12;
  d.k = 2;
  d.m_ocf = 2;
  d.regime.fixed_fraction = 0.4;
  Simulated s = gen_dgp(d);
  CHECK(s.panel.units() == 5);
  CHECK(s.panel.periods() == 12);
  CHECK(s.panel.has("x2"));
  CHECK(s.panel.series("g2").common);
  CHECK(s.panel.series("fixed").values.col(0).sum() == 2.0);
  CHECK(format_period(s.panel.period_index().front()) == "2004q1");
  CHECK(s.truth.beta.rows() == 5);
  CHECK(s.truth.beta.cols() == 2);
  CHECK((s.truth.rho.array().abs() < 1.0).all());
}

TEST_CASE("noiseless panel is identified exactly") {
  DgpConfig d;
  d.n = 6;
  d.t = 30;
  d.m_ucf = 0;
  d.m_ocf = 0;
  d.eps_sd = 0;
  d.omega_sd = 0;
  d.chi_sd = 1;  // regressors need their own variation
  d.beta = {{1.5}, 0.4};
  Simulated s = gen_dgp(d);
  ModelSpec spec;
  spec.dependent = "y";
  spec.regressors = {"x1"};
  spec.csa = CsaSpec{{"y", "x1"}, 0};
  FitResult f = fit(spec, s.panel);
  for (int i = 0; i < d.n; ++i) {
    CHECK(std::fabs(f.per_unit[i].ols.coef(0) - s.truth.rho(i)) < 1e-9);
    CHECK(std::fabs(f.per_unit[i].ols.coef(1) - s.truth.beta(i, 0)) < 1e-9);
  }
}

TEST_CASE("epsilon variance matches its configured value") {
  DgpConfig d;
  d.n = 500;
  d.t = 201;
  d.m_ucf = 1;
  d.m_ocf = 1;
  d.eps_sd = 1.7;
  d.seed = 5;
  Simulated s = gen_dgp(d);
  const DgpTruth& tr = s.truth;
  const Matrix& y = s.panel.series("y").values;
  const Matrix& x = s.panel.series("x1").values;
  const Matrix& g = s.panel.series("g1").values;
  long double sum = 0, sum2 = 0;
  long count = 0;
  for (int i = 0; i < d.n; ++i)
    for (int t = 1; t < d.t; ++t) {
      double e = y(i, t) - tr.alpha(i) - tr.rho(i) * y(i, t - 1) - tr.beta(i, 0) * x(i, t) -
                 tr.theta(i, 0) * g(0, t) - tr.gamma(i, 0) * tr.f(t, 0);
      sum += e;
      sum2 += static_cast<long double>(e) * e;
      ++count;
    }
  REQUIRE(count >= 100000);
  double mean = static_cast<double>(sum / count);
  double var = static_cast<double>(sum2 / count) - mean * mean;
  CHECK(std::fabs(var / (1.7 * 1.7) - 1) < 0.02);
}

TEST_CASE("invalid configurations") {
  auto config_error = [](DgpConfig d) {
    try {
      d.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Config;
    }
    return false;
  };
  DgpConfig d;
  d.rho = {{1.2}, 0.1};
  CHECK(config_error(d));
  d = {};
  d.burn_in = 10;
  CHECK(config_error(d));
  d = {};
  d.eps_sd = -1;
  CHECK(config_error(d));
  d = {};
  d.gamma = {{1, 2}, 1};  // two means for three factors
  CHECK(config_error(d));
  CHECK_THROWS_AS(run_monte_carlo(DgpConfig{}, 0, McSuite{}, 1), Error);
  McSuite bad;
  bad.estimators = {"ols"};
  CHECK_THROWS_AS(run_monte_carlo(DgpConfig{}, 1, bad, 1), Error);
}

TEST_CASE("replication seeds are distinct and stable") {
  CHECK(replication_seed(7, 0) == replication_seed(7, 0));
  CHECK(replication_seed(7, 0) != replication_seed(7, 1));
  CHECK(replication_seed(7, 0) != replication_seed(8, 0));
}

TEST_CASE("one replication equals a hand-composed run") {
  DgpConfig d;
  d.n = 15;
  d.t = 40;
  d.seed = 11;
  McSuite suite;
  suite.estimators = {"mg", "ccemg"};
  McReport r = run_monte_carlo(d, 1, suite, 1);
  REQUIRE(r.completed == 1);

  DgpConfig c = d;
  c.seed = replication_seed(d.seed, 0);
  Simulated s = gen_dgp(c);
  ModelSpec spec;
  spec.dependent = "y";
  spec.regressors = {"x1"};
  spec.cf_lags = 2;
  FitResult mg = fit(spec, s.panel);
  spec.observed_cf = {"g1"};
  spec.csa = CsaSpec{{"y", "x1"}, 2};
  FitResult cce = fit(spec, s.panel);
  CHECK(r.metrics.at("mg/beta1").bias == mg.mg->coef(1) - s.truth.beta.col(0).mean());
  CHECK(r.metrics.at("mg/rho").bias == mg.mg->coef(0) - s.truth.rho.mean());
  CHECK(r.metrics.at("ccemg/beta1").bias == cce.mg->coef(1) - s.truth.beta.col(0).mean());
  CHECK(r.p_values.at("cd/ccemg").at(0) == cd_test(cce.residuals).p_value);
}

TEST_CASE("Monte Carlo aggregates do not depend on the thread count") {
  DgpConfig d;
  d.n = 12;
  d.t = 30;
  d.seed = 3;
  McSuite suite;
  suite.estimators = {"fe", "ccemg", "pipeline"};
  suite.model.pcs = 2;
  McReport a = run_monte_carlo(d, 6, suite, 1);
  McReport b = run_monte_carlo(d, 6, suite, 4);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (const auto& [key, m] : a.metrics) {
    CHECK(m.bias == b.metrics.at(key).bias);
    CHECK(m.rmse == b.metrics.at(key).rmse);
  }
  CHECK(a.rejection == b.rejection);
  CHECK(a.numfac_counts == b.numfac_counts);
  for (const auto& [key, v] : a.rejection) {
    CHECK(v >= 0);
    CHECK(v <= 1);
  }
}

TEST_CASE("CD size on FE residuals without factors") {
  DgpConfig d;
  d.n = 20;
  d.t = 50;
  d.m_ucf = 1;
  d.m_ocf = 0;
  d.gamma = {{0.0}, 0.0};
  d.gamma_x = {{0.0}, 0.0};
  d.seed = 2024;
  McSuite suite;
  suite.estimators = {"fe"};
  McReport r = run_monte_carlo(d, 200, suite, 0);
  CHECK(r.rejection.at("cd/fe") >= 0.02);
  CHECK(r.rejection.at("cd/fe") <= 0.09);
}

TEST_CASE("CCE-MG RMSE falls with T") {
  std::vector<double> rmse;
  for (int t : {40, 65, 100}) {
    DgpConfig d;
    d.n = 30;
    d.t = t;
    d.seed = 77;
    McSuite suite;
    suite.estimators = {"ccemg"};
    rmse.push_back(run_monte_carlo(d, 60, suite, 0).metrics.at("ccemg/beta1").rmse);
  }
  int inversions = (rmse[1] > rmse[0]) + (rmse[2] > rmse[1]);
  CHECK(inversions <= 1);
  CHECK(rmse[2] < rmse[0]);
}

TEST_CASE("FE and CCE-MG are consistent without factors") {
  DgpConfig d;
  d.n = 30;
  d.t = 65;
  d.m_ucf = 0;
  d.m_ocf = 1;
  d.rho = {{0.0}, 0.0};
  d.beta = {{1.0}, 0.0};
  d.alpha = {{0.0}, 0.0};
  d.theta = {{0.0}, 0.0};
  d.theta_x = {{0.0}, 0.0};
  d.seed = 500;
  McSuite suite;
  suite.estimators = {"fe", "ccemg"};
  McReport r = run_monte_carlo(d, 500, suite, 0);
  CHECK(std::fabs(r.metrics.at("fe/beta1").bias) < 0.01);
  CHECK(std::fabs(r.metrics.at("ccemg/beta1").bias) < 0.01);
}

}
