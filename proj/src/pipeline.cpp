#include "pipeline.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace ccepc {

namespace {

void attempt(TestBundle& bundle, const std::string& label, std::optional<TestReport>& slot,
             const std::function<TestReport()>& run) {
  try {
    slot = run();
  } catch (const Error& e) {
    bundle.skipped.push_back(label + ": " + e.what());
  }
}

std::vector<int> pc_columns(const Design& d, int regime) {
  std::vector<int> out;
  for (std::size_t c = 0; c < d.columns.size(); ++c)
    if (d.columns[c].block == Block::Pc && d.columns[c].regime == regime)
      out.push_back(static_cast<int>(c));
  return out;
}

}  // namespace

TestBundle standard_tests(const FitResult& fit) {
  TestBundle b;
  attempt(b, "CD", b.cd, [&] { return cd_test(fit.residuals, fit.design.countries); });
  if (!fit.mg) return b;
  const Design& d = fit.design;
  attempt(b, "delta (all)", b.delta_all,
          [&] { return delta_test(d, delta_all_columns(d)).as_report("delta (all)"); });
  const auto pcs = d.columns_in(Block::Pc);
  if (pcs.empty()) return b;
  attempt(b, "F: PC = 0", b.wald_pc, [&] { return wald_zero_test(*fit.mg, pcs); });
  attempt(b, "delta (PC)", b.delta_pc, [&] { return delta_test(d, pcs).as_report("delta (PC)"); });
  const auto group_a = pc_columns(d, 1);
  const auto group_b = pc_columns(d, 0);
  if (!group_a.empty())
    attempt(b, "loading-sum", b.loading_sum,
            [&] { return loading_sum_test(fit, group_a, group_b); });
  return b;
}

namespace {

ModelSpec step1_spec(const ModelSpec& spec) {
  ModelSpec s = spec;
  s.label = "step 1: CCE-MG";
  s.estimator = Estimator::MG;
  s.pcs.reset();
  s.regime_var.reset();
  s.pooled_cce = false;
  return s;
}

ModelSpec step3_spec(const ModelSpec& spec, int m, bool regime) {
  ModelSpec s;
  s.label = regime ? "step 3: MG + PC x regime" : "step 3: MG + PC";
  s.dependent = spec.dependent;
  s.lag_dep = spec.lag_dep;
  s.regressors = spec.regressors;
  s.cf_lags = spec.cf_lags;
  s.pcs = m;
  if (regime) s.regime_var = spec.regime_var;
  s.estimator = Estimator::MG;
  return s;
}

Matrix dependent_block(const Design& d) {
  Matrix y(d.n(), d.t());
  for (int i = 0; i < d.n(); ++i) y.row(i) = d.units[i].y.transpose();
  return y;
}

}  // namespace

NumFac count_factors(const Design& design, const Matrix& composite, const PipelineOptions& options,
                     std::vector<std::string>& warnings) {
  const int n = design.n(), t = design.t();
  int kmax = options.kmax ? *options.kmax : default_kmax(n, t);
  if (kmax < 1) fail(ErrorKind::Specification, "kmax must be >= 1");
  const int kmax_cap = std::min(n, t) - 2;
  if (kmax_cap < 1) fail(ErrorKind::Specification, "panel too small for factor-count selection");
  if (kmax > kmax_cap) {
    warnings.push_back("kmax " + std::to_string(kmax) + " reduced to min(N, T) - 2 = " +
                       std::to_string(kmax_cap));
    kmax = kmax_cap;
  }

  NumFac nf;
  nf.spectrum_y = eigen_spectrum(dependent_block(design), options.center, options.normalize);
  nf.spectrum_u = eigen_spectrum(composite, options.center, options.normalize);
  nf.y = ahn_horenstein(nf.spectrum_y.eigenvalues, kmax);
  nf.u = ahn_horenstein(nf.spectrum_u.eigenvalues, kmax);
  for (const auto& w : nf.y.warnings) warnings.push_back("factor count (y): " + w);
  for (const auto& w : nf.u.warnings) warnings.push_back("factor count (u): " + w);
  if (nf.u.prefers_zero)
    warnings.push_back("factor count (u): growth-rate ratio at k = 0 exceeds every k >= 1; "
                       "the composite may contain no strong factor");
  if (nf.y.k_gr != nf.u.k_gr)
    warnings.push_back("estimated factor counts differ: k(y) = " + std::to_string(nf.y.k_gr) +
                       ", k(u) = " + std::to_string(nf.u.k_gr));
  return nf;
}

PipelineResult run_three_step(const Panel& panel, const ModelSpec& spec,
                              const PipelineOptions& options) {
  if (!spec.csa) fail(ErrorKind::Specification, "pipeline step 1 needs cross-section averages (csa)");
  if (spec.observed_cf.empty())
    fail(ErrorKind::Specification, "pipeline step 1 needs observed common factors");

  PipelineResult out;
  const ModelSpec s1 = step1_spec(spec);
  out.step1 = fit(s1, panel, nullptr, 0, options.threads);
  out.step1_tests = standard_tests(out.step1);
  if (out.step1_tests.cd) {
    const auto& cd = *out.step1_tests.cd;
    if (cd.p_value < 0.01) {
      std::string msg = "step-1 residuals show strong cross-sectional dependence (CD = " +
                        std::to_string(cd.statistic) + ", p = " + std::to_string(cd.p_value) +
                        "); consider more lags of the cross-section averages or observed factors";
      if (options.strict_cd) fail(ErrorKind::Estimation, msg);
      out.warnings.push_back(msg);
    }
  }

  out.composite = composite_residuals(out.step1, s1, panel, options.subtract_observed_cf);
  const Design& d1 = out.step1.design;
  const int n = d1.n(), t = d1.t();
  out.numfac = count_factors(d1, out.composite, options, out.warnings);

  if (options.pcs) {
    if (*options.pcs < 1) fail(ErrorKind::Specification, "pcs must be >= 1");
    out.m = *options.pcs;
    out.m_source = "override";
  } else {
    out.m = out.numfac.u.k_gr;
    out.m_source = "k_GR(u)";
    if (out.m < 1) {
      out.warnings.push_back("no factor count could be selected for u; using one component");
      out.m = 1;
    }
  }

  Matrix source = out.composite;
  if (options.pc_source == PcSource::CompositeObserved) {
    std::vector<int> extra;
    for (std::size_t c = 0; c < d1.columns.size(); ++c) {
      const auto& col = d1.columns[c];
      if ((col.block == Block::ObservedCf || col.block == Block::Csa) && col.lag == 0)
        extra.push_back(static_cast<int>(c));
    }
    Matrix stacked(n + static_cast<Eigen::Index>(extra.size()), t);
    stacked.topRows(n) = out.composite;
    for (std::size_t a = 0; a < extra.size(); ++a)
      stacked.row(n + a) = d1.units[0].X.col(extra[a]).transpose();
    source = std::move(stacked);
  }
  out.factors = extract_pcs(source, out.m, d1.periods, options.center, options.normalize);

  out.step3 = fit(step3_spec(spec, out.m, false), panel, &out.factors, d1.trim, options.threads);
  out.step3_tests = standard_tests(out.step3);
  if (out.step3_tests.cd && out.step3_tests.cd->p_value < 0.05)
    out.warnings.push_back("step-3 residuals still reject weak cross-sectional dependence at 5% (CD = " +
                           std::to_string(out.step3_tests.cd->statistic) + ")");
  if (spec.regime_var) {
    out.step3_regime = fit(step3_spec(spec, out.m, true), panel, &out.factors, d1.trim, options.threads);
    out.step3_regime_tests = standard_tests(*out.step3_regime);
  }
  return out;
}

BenchmarkResult run_benchmarks(const Panel& panel, const ModelSpec& spec,
                               const PipelineOptions& options) {
  if (!spec.regime_var)
    fail(ErrorKind::Specification, "the benchmark family needs a regime variable");
  BenchmarkResult out;
  out.pipeline = run_three_step(panel, spec, options);
  const int trim = out.pipeline.step1.design.trim;

  auto base = [&](const std::string& label, Estimator est) {
    ModelSpec s;
    s.label = label;
    s.dependent = spec.dependent;
    s.lag_dep = spec.lag_dep;
    s.regressors = spec.regressors;
    s.cf_lags = 0;
    s.estimator = est;
    return s;
  };
  auto with_cf = [&](ModelSpec s, bool regime) {
    s.observed_cf = spec.observed_cf;
    if (regime) s.regime_var = spec.regime_var;
    return s;
  };
  auto add = [&](const std::string& header, const ModelSpec& s) {
    BenchmarkColumn col{header, fit(s, panel, nullptr, trim, options.threads), {}};
    col.tests = standard_tests(col.fit);
    out.columns.push_back(std::move(col));
  };

  out.columns.push_back({"MG-CCE", out.pipeline.step1, out.pipeline.step1_tests});
  add("FE", base("FE", Estimator::FE));
  add("TWFE", base("TWFE", Estimator::TWFE));
  add("FE", with_cf(base("FE + CF", Estimator::FE), false));
  add("FE", with_cf(base("FE + CF x regime", Estimator::FE), true));
  add("MG", base("MG", Estimator::MG));
  add("MG", with_cf(base("MG + CF", Estimator::MG), false));
  add("MG", with_cf(base("MG + CF x regime", Estimator::MG), true));
  out.columns.push_back({"MG", out.pipeline.step3, out.pipeline.step3_tests});
  out.columns.push_back({"MG", *out.pipeline.step3_regime, *out.pipeline.step3_regime_tests});

  const SampleInfo& ref = out.columns.front().fit.sample;
  for (std::size_t c = 1; c < out.columns.size(); ++c) {
    const SampleInfo& s = out.columns[c].fit.sample;
    if (s.n != ref.n || s.t != ref.t || s.obs != ref.obs || s.first_period != ref.first_period ||
        s.last_period != ref.last_period)
      fail(ErrorKind::Estimation, "benchmark column " + std::to_string(c + 1) +
                                      " does not share the common estimation sample");
  }
  return out;
}

namespace {

Vector standardized(const Vector& v) {
  const double mean = v.mean();
  Vector c = v.array() - mean;
  const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(v.size() - 1));
  if (!(sd > 0)) fail(ErrorKind::Degenerate, "cannot standardize a constant series");
  return c / sd;
}

}  // namespace

std::vector<DissectTable> dissect_pcs(const FactorSet& factors, const Panel& panel,
                                      const std::vector<std::string>& observables,
                                      DissectMode mode) {
  const int t = static_cast<int>(factors.components.rows());
  if (factors.periods.size() != static_cast<std::size_t>(t))
    fail(ErrorKind::Specification, "dissection needs period labels on the components");
  const int k = static_cast<int>(observables.size());
  const bool fd = mode == DissectMode::FirstDifferences;
  const int rows = fd ? t - 1 : t;
  if (rows < k + 2)
    fail(ErrorKind::Specification, "dissection sample too short: " + std::to_string(rows) +
                                       " periods for " + std::to_string(k + 1) + " coefficients");

  Matrix X(rows, k + 1);
  for (int j = 0; j < k; ++j) {
    const Series& s = panel.series(observables[j]);
    if (!s.common)
      fail(ErrorKind::Specification, "dissection observable '" + observables[j] +
                                         "' is not a common factor");
    Vector v(t);
    for (int r = 0; r < t; ++r) {
      int col = panel.column_of(factors.periods[r]);
      if (col < 0 || s.missing(0, col))
        fail(ErrorKind::Specification, "observable '" + observables[j] + "' is missing at " +
                                           format_period(factors.periods[r]));
      v(r) = s.values(0, col);
    }
    Vector z = standardized(v);
    if (fd)
      X.col(j) = z.tail(rows) - z.head(rows);
    else
      X.col(j) = z;
  }
  X.col(k).setOnes();

  std::vector<DissectTable> out;
  for (int c = 0; c < factors.count(); ++c) {
    Vector y = standardized(factors.components.col(c));
    if (fd) y = y.tail(rows).eval();
    OlsResult r = ols(y, X);
    DissectTable tab;
    tab.component = "pc" + std::to_string(c + 1);
    tab.names = observables;
    tab.names.push_back("constant");
    tab.coef = r.coef;
    tab.se = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    for (int j = 0; j <= k; ++j)
      if (r.dropped[j]) {
        tab.coef(j) = std::numeric_limits<double>::quiet_NaN();
        tab.se(j) = std::numeric_limits<double>::quiet_NaN();
      }
    tab.r2 = k == 0 ? 0.0 : r.r2;
    tab.periods = rows;
    out.push_back(std::move(tab));
  }
  return out;
}

}  // namespace ccepc
