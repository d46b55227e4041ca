#include "simulate.hpp"

#include "error.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

namespace ccepc {

double Dist::mean_at(int j) const {
  if (mean.empty()) return 0.0;
  return mean.size() == 1 ? mean[0] : mean.at(j);
}

namespace {

void check_dist(const Dist& d, const std::string& name, int dim, int per_regressor = 0) {
  if (!(d.sd >= 0.0) || !std::isfinite(d.sd))
    fail(ErrorKind::Config, "simulation: " + name + ".sd must be a finite value >= 0");
  const int size = static_cast<int>(d.mean.size());
  if (size > 1 && size != dim && (per_regressor == 0 || size != dim * per_regressor))
    fail(ErrorKind::Config, "simulation: " + name + ".mean must have 1 or " + std::to_string(dim) +
                                (per_regressor ? " or " + std::to_string(dim * per_regressor) : "") +
                                " entries, got " + std::to_string(size));
  for (double v : d.mean)
    if (!std::isfinite(v)) fail(ErrorKind::Config, "simulation: " + name + ".mean must be finite");
}

void check_sd(double v, const std::string& name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    fail(ErrorKind::Config, "simulation: " + name + " must be a finite value >= 0");
}

}  // namespace

void DgpConfig::validate() const {
  if (n < 2) fail(ErrorKind::Config, "simulation: n must be >= 2");
  if (t < 3) fail(ErrorKind::Config, "simulation: t must be >= 3");
  if (burn_in < 50) fail(ErrorKind::Config, "simulation: burn_in must be >= 50");
  if (m_ucf < 0 || m_ocf < 0) fail(ErrorKind::Config, "simulation: factor counts must be >= 0");
  if (k < 1) fail(ErrorKind::Config, "simulation: k must be >= 1");
  check_dist(rho, "rho", 1);
  if (rho.mean.size() != 1) fail(ErrorKind::Config, "simulation: rho.mean must be a scalar");
  if (!(std::abs(rho.mean[0]) < 1.0))
    fail(ErrorKind::Config, "simulation: rho.mean must lie in (-1, 1)");
  if (!(rho.sd < 1.0))
    fail(ErrorKind::Config, "simulation: rho.sd must be < 1 so truncated draws stay feasible");
  check_dist(beta, "beta", k);
  check_dist(alpha, "alpha", 1);
  check_dist(gamma, "gamma", m_ucf);
  check_dist(gamma_x, "gamma_x", m_ucf, k);
  check_dist(theta, "theta", m_ocf);
  check_dist(theta_x, "theta_x", m_ocf, k);
  check_dist(xi, "xi", m_ucf);
  if (!(std::abs(corr_gamma_x) <= 1.0))
    fail(ErrorKind::Config, "simulation: corr_gamma_x must lie in [-1, 1]");
  check_sd(eps_sd, "eps_sd");
  check_sd(chi_sd, "chi_sd");
  check_sd(omega_sd, "omega_sd");
  if (!(std::abs(factor_ar) < 1.0))
    fail(ErrorKind::Config, "simulation: factor_ar must lie in (-1, 1)");
  if (!(regime.fixed_fraction >= 0.0 && regime.fixed_fraction <= 1.0))
    fail(ErrorKind::Config, "simulation: regime.fixed_fraction must lie in [0, 1]");
  check_dist({regime.gamma_shift, 0.0}, "regime.gamma_shift", m_ucf);
}

namespace {

// Means for regressor loadings: one value, one per factor, or one per
// (regressor, factor) pair in regressor-major order.
double regressor_mean(const Dist& d, int j, int f, int factors) {
  if (static_cast<int>(d.mean.size()) == factors && factors > 1) return d.mean[f];
  if (d.mean.size() > 1 && static_cast<int>(d.mean.size()) != factors) return d.mean.at(j * factors + f);
  return d.mean_at(f);
}

}  // namespace

Simulated gen_dgp(const DgpConfig& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  auto draw = [&](const Dist& d, int j) { return d.mean_at(j) + d.sd * z(rng); };

  const int n = c.n, k = c.k, mu = c.m_ucf, mo = c.m_ocf;
  const int n_fixed = static_cast<int>(std::lround(c.regime.fixed_fraction * n));
  DgpTruth tr;
  tr.alpha.resize(n);
  tr.rho.resize(n);
  tr.beta.resize(n, k);
  tr.gamma.resize(n, mu);
  tr.gamma_x.resize(n, k * mu);
  tr.theta.resize(n, mo);
  tr.theta_x.resize(n, k * mo);
  tr.fixed.assign(n, 0);

  constexpr int kMaxRetries = 1000;
  for (int i = 0; i < n; ++i) {
    tr.fixed[i] = i < n_fixed ? 1 : 0;
    tr.alpha(i) = draw(c.alpha, 0);
    double r = draw(c.rho, 0);
    int tries = 0;
    while (!(std::abs(r) < 1.0)) {
      if (++tries > kMaxRetries)
        fail(ErrorKind::Config, "simulation: could not draw a stationary rho after " +
                                    std::to_string(kMaxRetries) + " retries");
      r = draw(c.rho, 0);
    }
    tr.rho(i) = r;
    for (int j = 0; j < k; ++j) tr.beta(i, j) = draw(c.beta, j);
    for (int f = 0; f < mu; ++f) {
      const double zg = z(rng);
      const double shift = tr.fixed[i] ? Dist{c.regime.gamma_shift, 0}.mean_at(f) : 0.0;
      tr.gamma(i, f) = c.gamma.mean_at(f) + shift + c.gamma.sd * zg;
      for (int j = 0; j < k; ++j) {
        const double e = z(rng);
        const double mix = c.corr_gamma_x * zg + std::sqrt(1.0 - c.corr_gamma_x * c.corr_gamma_x) * e;
        tr.gamma_x(i, j * mu + f) = regressor_mean(c.gamma_x, j, f, mu) + c.gamma_x.sd * mix;
      }
    }
    for (int g = 0; g < mo; ++g) {
      tr.theta(i, g) = draw(c.theta, g);
      for (int j = 0; j < k; ++j)
        tr.theta_x(i, j * mo + g) = regressor_mean(c.theta_x, j, g, mo) + c.theta_x.sd * z(rng);
    }
  }
  tr.xi.resize(mo, mu);
  for (int g = 0; g < mo; ++g)
    for (int f = 0; f < mu; ++f) tr.xi(g, f) = draw(c.xi, f);

  const int total = c.burn_in + c.t;
  const double innov = std::sqrt(1.0 - c.factor_ar * c.factor_ar);
  Matrix f_all = Matrix::Zero(total, mu), g_all = Matrix::Zero(total, mo);
  Matrix y_all = Matrix::Zero(n, total);
  std::vector<Matrix> x_all(k, Matrix::Zero(n, total));
  Vector f_prev = Vector::Zero(mu);
  Vector y_prev = Vector::Zero(n);
  for (int s = 0; s < total; ++s) {
    Vector f(mu);
    for (int a = 0; a < mu; ++a) f(a) = c.factor_ar * f_prev(a) + innov * z(rng);
    Vector g = tr.xi * f;
    for (int a = 0; a < mo; ++a) g(a) += c.omega_sd * z(rng);
    f_all.row(s) = f.transpose();
    g_all.row(s) = g.transpose();
    for (int i = 0; i < n; ++i) {
      double y = tr.alpha(i) + tr.rho(i) * y_prev(i);
      for (int j = 0; j < k; ++j) {
        double x = c.chi_sd * z(rng);
        for (int a = 0; a < mu; ++a) x += tr.gamma_x(i, j * mu + a) * f(a);
        for (int a = 0; a < mo; ++a) x += tr.theta_x(i, j * mo + a) * g(a);
        x_all[j](i, s) = x;
        y += x * tr.beta(i, j);
      }
      for (int a = 0; a < mo; ++a) y += tr.theta(i, a) * g(a);
      for (int a = 0; a < mu; ++a) y += tr.gamma(i, a) * f(a);
      y += c.eps_sd * z(rng);
      y_all(i, s) = y;
    }
    y_prev = y_all.col(s);
    f_prev = f;
  }

  std::vector<std::string> countries;
  const int width = std::max(2, static_cast<int>(std::to_string(n).size()));
  for (int i = 0; i < n; ++i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "C%0*d", width, i + 1);
    countries.emplace_back(buf);
  }
  std::vector<int> periods;
  for (int s = 0; s < c.t; ++s) periods.push_back(c.start_period + s);

  Simulated out;
  out.panel = Panel(countries, periods);
  auto unit_series = [&](const Matrix& all) {
    Series s;
    s.values = all.rightCols(c.t);
    s.missing = Mask::Constant(n, c.t, false);
    return s;
  };
  out.panel = out.panel.with_series("y", unit_series(y_all));
  for (int j = 0; j < k; ++j)
    out.panel = out.panel.with_series("x" + std::to_string(j + 1), unit_series(x_all[j]));
  if (n_fixed > 0) {
    Series s;
    s.values.resize(n, c.t);
    for (int i = 0; i < n; ++i) s.values.row(i).setConstant(tr.fixed[i]);
    s.missing = Mask::Constant(n, c.t, false);
    out.panel = out.panel.with_series("fixed", s);
  }
  for (int a = 0; a < mo; ++a) {
    Series s;
    s.common = true;
    s.values = g_all.col(a).tail(c.t).transpose();
    s.missing = Mask::Constant(1, c.t, false);
    out.panel = out.panel.with_series("g" + std::to_string(a + 1), s);
  }
  tr.f = f_all.bottomRows(c.t);
  tr.g = g_all.bottomRows(c.t);
  out.truth = std::move(tr);
  return out;
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep) {
  // splitmix64 applied to a counter offset from the master seed
  std::uint64_t x = master + (rep + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

struct RepOutcome {
  bool ok = false;
  std::string message;
  std::map<std::string, double> errors;   // metric key -> estimate - truth
  std::map<std::string, double> p;        // test key -> p-value
  int k_y = -1, k_u = -1, k_y_er = -1, k_u_er = -1;
};

ModelSpec base_spec(const DgpConfig& c, const McModel& m, Estimator est) {
  ModelSpec s;
  s.dependent = "y";
  s.lag_dep = 1;
  for (int j = 0; j < c.k; ++j) s.regressors.push_back("x" + std::to_string(j + 1));
  s.cf_lags = m.cf_lags;
  s.estimator = est;
  return s;
}

ModelSpec cce_spec(const DgpConfig& c, const McModel& m) {
  ModelSpec s = base_spec(c, m, Estimator::MG);
  for (int a = 0; a < c.m_ocf; ++a) s.observed_cf.push_back("g" + std::to_string(a + 1));
  CsaSpec csa;
  csa.variables.push_back("y");
  for (const auto& x : s.regressors) csa.variables.push_back(x);
  csa.lags = m.csa_lags;
  s.csa = csa;
  return s;
}

void record_coefs(RepOutcome& out, const std::string& est, const FitResult& f,
                  const DgpConfig& c, const DgpTruth& tr) {
  const CoefTable& tab = f.coefficients();
  const int lag = f.design.column_index("L.y");
  if (lag >= 0) out.errors[est + "/rho"] = tab.coef(lag) - tr.rho.mean();
  for (int j = 0; j < c.k; ++j) {
    const std::string name = "x" + std::to_string(j + 1);
    const int col = f.design.column_index(name);
    if (col >= 0) out.errors[est + "/beta" + std::to_string(j + 1)] = tab.coef(col) - tr.beta.col(j).mean();
  }
}

void record_tests(RepOutcome& out, const std::string& est, const TestBundle& b) {
  if (b.cd) out.p["cd/" + est] = b.cd->p_value;
  if (b.delta_all) {
    out.p["delta/" + est] = b.delta_all->p_value;
    out.p["delta_adj/" + est] = b.delta_all->get("p_adj");
  }
}

RepOutcome run_replication(const DgpConfig& base, const McSuite& suite, std::uint64_t seed) {
  RepOutcome out;
  DgpConfig c = base;
  c.seed = seed;
  try {
    Simulated sim = gen_dgp(c);
    const Panel& panel = sim.panel;
    for (const auto& est : suite.estimators) {
      if (est == "fe" || est == "twfe" || est == "mg") {
        Estimator e = est == "fe" ? Estimator::FE : est == "twfe" ? Estimator::TWFE : Estimator::MG;
        FitResult f = fit(base_spec(c, suite.model, e), panel);
        record_coefs(out, est, f, c, sim.truth);
        record_tests(out, est, standard_tests(f));
      } else if (est == "ccemg" || est == "pooled_cce") {
        ModelSpec s = cce_spec(c, suite.model);
        s.pooled_cce = est == "pooled_cce";
        FitResult f = fit(s, panel);
        record_coefs(out, est, f, c, sim.truth);
        record_tests(out, est, standard_tests(f));
      } else if (est == "pipeline") {
        ModelSpec s = cce_spec(c, suite.model);
        if (panel.has("fixed")) s.regime_var = "fixed";
        PipelineOptions opt;
        opt.pcs = suite.model.pcs;
        opt.kmax = suite.model.kmax;
        PipelineResult r = run_three_step(panel, s, opt);
        record_coefs(out, est, r.step3, c, sim.truth);
        record_tests(out, est, r.step3_tests);
        record_coefs(out, "ccemg_step1", r.step1, c, sim.truth);
        if (r.step3_regime_tests && r.step3_regime_tests->loading_sum)
          out.p["loading_sum/pipeline"] = r.step3_regime_tests->loading_sum->p_value;
        out.k_y = r.numfac.y.k_gr;
        out.k_u = r.numfac.u.k_gr;
        out.k_y_er = r.numfac.y.k_er;
        out.k_u_er = r.numfac.u.k_er;
      }
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.message = e.what();
  }
  return out;
}

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

McReport run_monte_carlo(const DgpConfig& config, int reps, const McSuite& suite, int threads) {
  config.validate();
  if (reps < 1) fail(ErrorKind::Config, "simulation: reps must be >= 1");
  for (const auto& est : suite.estimators) {
    if (est != "fe" && est != "twfe" && est != "mg" && est != "ccemg" && est != "pooled_cce" &&
        est != "pipeline")
      fail(ErrorKind::Config, "simulation: unknown estimator '" + est +
                                  "' (fe, twfe, mg, ccemg, pooled_cce, pipeline)");
    if ((est == "pipeline") && config.m_ocf < 1)
      fail(ErrorKind::Config, "simulation: the pipeline needs at least one observed factor (m_ocf >= 1)");
  }
  if (!(suite.level > 0 && suite.level < 1))
    fail(ErrorKind::Config, "simulation: test level must lie in (0, 1)");

  const auto start = std::chrono::steady_clock::now();
  std::vector<RepOutcome> outcomes(reps);
  parallel_for(reps, threads, [&](int r) {
    outcomes[r] = run_replication(config, suite, replication_seed(config.seed, r));
  });

  McReport rep;
  rep.config = config;
  rep.suite = suite;
  rep.reps = reps;
  rep.true_factors = config.true_factor_count();

  std::map<std::string, std::vector<double>> errors;
  std::map<std::string, std::vector<double>> pvals;
  std::map<std::string, std::vector<int>> counts;
  for (int r = 0; r < reps; ++r) {
    const RepOutcome& o = outcomes[r];
    if (!o.ok) {
      rep.failures.push_back({r, replication_seed(config.seed, r), o.message});
      continue;
    }
    ++rep.completed;
    for (const auto& [key, v] : o.errors) errors[key].push_back(v);
    for (const auto& [key, v] : o.p) pvals[key].push_back(v);
    if (o.k_u >= 0) {
      counts["y"].push_back(o.k_y);
      counts["u"].push_back(o.k_u);
      counts["y_er"].push_back(o.k_y_er);
      counts["u_er"].push_back(o.k_u_er);
    }
  }
  if (rep.failures.size() > 0.05 * reps) {
    const auto& f = rep.failures.front();
    fail(ErrorKind::Estimation, std::to_string(rep.failures.size()) + " of " + std::to_string(reps) +
                                    " replications failed (more than 5%); first: rep " +
                                    std::to_string(f.rep) + ", seed " + std::to_string(f.seed) +
                                    ": " + f.message);
  }

  for (const auto& [key, v] : errors) {
    McMetric m;
    m.count = static_cast<int>(v.size());
    long double s = 0, sa = 0, s2 = 0;
    for (double e : v) {
      s += e;
      sa += std::abs(e);
      s2 += e * e;
    }
    m.bias = static_cast<double>(s / m.count);
    m.mae = static_cast<double>(sa / m.count);
    m.rmse = std::sqrt(static_cast<double>(s2 / m.count));
    if (m.count > 1) {
      long double dev = 0;
      for (double e : v) dev += (e - m.bias) * (e - m.bias);
      m.mc_se = std::sqrt(static_cast<double>(dev / (m.count - 1)) / m.count);
    }
    rep.metrics[key] = m;
  }
  for (const auto& [key, v] : pvals) {
    int rejects = 0;
    for (double p : v) rejects += p < suite.level ? 1 : 0;
    rep.rejection[key] = static_cast<double>(rejects) / static_cast<double>(v.size());
  }
  rep.p_values = std::move(pvals);
  for (const auto& [key, v] : counts) {
    int hits = 0;
    for (int kk : v) hits += kk == rep.true_factors ? 1 : 0;
    rep.numfac_hits[key] = static_cast<double>(hits) / static_cast<double>(v.size());
  }
  rep.numfac_counts = std::move(counts);
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.utc = utc_now();
  return rep;
}

}  // namespace ccepc
