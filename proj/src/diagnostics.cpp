#include "diagnostics.hpp"

#include "error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>

namespace ccepc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double TestReport::get(const std::string& key) const {
  for (const auto& [k, v] : extra)
    if (k == key) return v;
  return kNaN;
}

TestReport cd_test(const Matrix& residuals, const std::vector<std::string>& units) {
  const Eigen::Index n = residuals.rows(), t = residuals.cols();
  if (n < 2 || t < 3) fail(ErrorKind::Specification, "CD test needs N >= 2 and T >= 3");
  Matrix z = residuals;
  for (Eigen::Index i = 0; i < n; ++i) {
    z.row(i).array() -= z.row(i).mean();
    double norm = z.row(i).norm();
    if (!(norm > 0.0)) {
      std::string who = i < static_cast<Eigen::Index>(units.size()) ? units[i] : "row " + std::to_string(i);
      fail(ErrorKind::Degenerate, "CD test: zero-variance residual series for " + who);
    }
    z.row(i) /= norm;
  }
  // Sum over i<j of rho_ij = (|sum_i z_i|^2 - sum_i |z_i|^2) / 2, with |z_i| = 1.
  Eigen::RowVectorXd total = z.colwise().sum();
  double pair_sum = 0.5 * (total.squaredNorm() - static_cast<double>(n));
  TestReport r;
  r.name = "CD";
  r.statistic = std::sqrt(2.0 * t / (static_cast<double>(n) * (n - 1))) * pair_sum;
  r.p_value = normal_two_sided_p(r.statistic);
  r.null_description = "weak cross-sectional dependence";
  r.reference = "standard normal, two-sided";
  r.n = static_cast<int>(n);
  r.t = static_cast<int>(t);
  r.extra.push_back({"mean_rho", pair_sum / (0.5 * n * (n - 1))});
  return r;
}

TestReport DeltaReport::as_report(const std::string& name) const {
  TestReport r;
  r.name = name;
  r.statistic = delta;
  r.p_value = p;
  r.null_description = "slope homogeneity of the tested coefficients";
  r.reference = "standard normal, two-sided";
  r.n = n;
  r.t = t;
  r.k = k;
  r.extra = {{"delta_adj", delta_adj}, {"p_adj", p_adj}, {"s_tilde", s_tilde},
             {"partial_units", static_cast<double>(partial_units)}};
  return r;
}

std::vector<int> delta_all_columns(const Design& design) {
  std::vector<int> cols;
  for (std::size_t c = 0; c < design.columns.size(); ++c)
    if (design.columns[c].block != Block::Intercept) cols.push_back(static_cast<int>(c));
  return cols;
}

DeltaReport delta_test(const Design& design, const std::vector<int>& tested) {
  const int k = static_cast<int>(tested.size());
  if (k < 1) fail(ErrorKind::Specification, "delta test needs at least one tested coefficient");
  const int ncols = static_cast<int>(design.columns.size());
  std::vector<bool> is_tested(ncols, false);
  for (int c : tested) {
    if (c < 0 || c >= ncols) fail(ErrorKind::Specification, "delta test: column index out of range");
    if (is_tested[c]) fail(ErrorKind::Specification, "delta test: column selected twice");
    is_tested[c] = true;
  }
  std::vector<int> nuisance;
  for (int c = 0; c < ncols; ++c)
    if (!is_tested[c]) nuisance.push_back(c);

  const int n = design.n();
  const int t = design.t();
  // Tested columns that vanish in a unit (a regime never visited, say) are
  // left out of that unit's contribution; the centring uses the sum of the
  // per-unit dimensions.
  struct Unit {
    std::vector<int> keep;  // positions within `tested`
    Matrix xtx;
    Vector xty;
    Vector b;
    double sigma2 = 0;
    bool noiseless = false;
  };
  std::vector<Unit> units(n);
  std::vector<int> present(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto& ud = design.units[i];
    Matrix z(t, nuisance.size()), x(t, k);
    for (std::size_t a = 0; a < nuisance.size(); ++a) z.col(a) = ud.X.col(nuisance[a]);
    for (int a = 0; a < k; ++a) x.col(a) = ud.X.col(tested[a]);
    PrunedQr qz(z);
    Matrix xt_all = qz.residualize(x);
    Vector yt = qz.residualize(ud.y);
    PrunedQr qx(xt_all);
    Unit& u = units[i];
    u.keep = qx.kept();
    if (u.keep.empty()) continue;
    Matrix xt(t, u.keep.size());
    for (std::size_t a = 0; a < u.keep.size(); ++a) {
      xt.col(a) = xt_all.col(u.keep[a]);
      ++present[u.keep[a]];
    }
    const int ki = static_cast<int>(u.keep.size());
    const int df = t - qz.rank() - ki;
    if (df < 1)
      fail(ErrorKind::Estimation, "delta test: no residual degrees of freedom for " + design.countries[i]);
    u.b = qx.solve(yt);
    u.xtx = xt.transpose() * xt;
    u.xty = xt.transpose() * yt;
    double ssr = (yt - xt * u.b).squaredNorm();
    double scale = yt.squaredNorm();
    u.noiseless = ssr <= 1e-20 * scale;
    u.sigma2 = std::max(ssr, 1e-20 * scale) / df;
    if (!(u.sigma2 > 0.0))
      fail(ErrorKind::Degenerate, "delta test: dependent variable is zero after partialling for " +
                                      design.countries[i]);
  }
  for (int a = 0; a < k; ++a)
    if (present[a] == 0)
      fail(ErrorKind::Specification, "delta test: column '" + design.columns[tested[a]].name +
                                         "' is dropped (collinear or zero) in every unit");

  Matrix a = Matrix::Zero(k, k);
  Vector rhs = Vector::Zero(k);
  for (const auto& u : units) {
    for (std::size_t p = 0; p < u.keep.size(); ++p) {
      rhs(u.keep[p]) += u.xty(p) / u.sigma2;
      for (std::size_t q = 0; q < u.keep.size(); ++q) a(u.keep[p], u.keep[q]) += u.xtx(p, q) / u.sigma2;
    }
  }
  Vector pooled = a.ldlt().solve(rhs);

  long double s = 0;
  double dims = 0, dims_adj = 0;
  int partial = 0;
  const double tol = 1e-10 * std::max(1.0, pooled.cwiseAbs().maxCoeff());
  for (const auto& u : units) {
    const int ki = static_cast<int>(u.keep.size());
    if (ki == 0) continue;
    if (ki < k) ++partial;
    dims += ki;
    dims_adj += ki * (t - ki - 1) / (t + 1.0);
    Vector d(ki);
    for (int p = 0; p < ki; ++p) d(p) = u.b(p) - pooled(u.keep[p]);
    if (u.noiseless && d.cwiseAbs().maxCoeff() <= tol) continue;
    s += d.dot(u.xtx * d) / u.sigma2;
  }

  DeltaReport r;
  r.n = n;
  r.t = t;
  r.k = k;
  r.partial_units = partial;
  r.s_tilde = static_cast<double>(s);
  r.delta = (r.s_tilde - dims) / std::sqrt(2.0 * dims);
  r.delta_adj = (r.s_tilde - dims) / std::sqrt(2.0 * dims_adj);
  r.p = normal_two_sided_p(r.delta);
  r.p_adj = normal_two_sided_p(r.delta_adj);
  return r;
}

TestReport loading_sum_test(const CoefTable& mg, const std::vector<int>& group_a,
                            const std::vector<int>& group_b) {
  if (group_a.empty() || group_a.size() != group_b.size())
    fail(ErrorKind::Specification, "loading-sum test: groups must select equally many coefficients");
  const Eigen::Index k = mg.coef.size();
  Vector w = Vector::Zero(k);
  for (int c : group_a) {
    if (c < 0 || c >= k) fail(ErrorKind::Specification, "loading-sum test: column out of range");
    w(c) += 1.0;
  }
  for (int c : group_b) {
    if (c < 0 || c >= k) fail(ErrorKind::Specification, "loading-sum test: column out of range");
    w(c) -= 1.0;
  }
  double diff = 0, var = 0;
  for (Eigen::Index a = 0; a < k; ++a) {
    if (w(a) == 0) continue;
    diff += w(a) * mg.coef(a);
    for (Eigen::Index b = 0; b < k; ++b)
      if (w(b) != 0) var += w(a) * w(b) * mg.cov(a, b);
  }
  if (!std::isfinite(diff) || !std::isfinite(var))
    fail(ErrorKind::Degenerate, "loading-sum test: selected coefficients lack an MG variance");
  if (var <= 1e-28 * std::max(1.0, diff * diff))
    fail(ErrorKind::Degenerate, "loading-sum test: zero dispersion of per-unit differences");
  TestReport r;
  r.name = "loading-sum";
  r.statistic = diff / std::sqrt(var);
  r.p_value = normal_upper_p(r.statistic);
  r.null_description = "sum of group-A loadings does not exceed sum of group-B loadings";
  r.reference = "standard normal, one-sided upper tail";
  r.k = static_cast<int>(group_a.size());
  r.extra = {{"difference", diff}, {"se", std::sqrt(var)}};
  return r;
}

TestReport loading_sum_test(const FitResult& fit, const std::vector<int>& group_a,
                            const std::vector<int>& group_b) {
  if (!fit.mg) fail(ErrorKind::Specification, "loading-sum test needs a mean-group fit");
  TestReport r = loading_sum_test(*fit.mg, group_a, group_b);
  r.n = fit.sample.n;
  r.t = fit.sample.t;
  return r;
}

TestReport wald_zero_test(const CoefTable& coefs, const std::vector<int>& columns) {
  const int m = static_cast<int>(columns.size());
  if (m < 1) fail(ErrorKind::Specification, "Wald test needs at least one coefficient");
  Vector b(m);
  Matrix v(m, m);
  for (int a = 0; a < m; ++a) {
    b(a) = coefs.coef(columns[a]);
    for (int c = 0; c < m; ++c) v(a, c) = coefs.cov(columns[a], columns[c]);
  }
  if (!b.allFinite() || !v.allFinite())
    fail(ErrorKind::Degenerate, "Wald test: selected coefficients lack a finite covariance");
  Eigen::LDLT<Matrix> ldlt(v);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0))
    fail(ErrorKind::Degenerate, "Wald test: covariance of selected coefficients is singular");
  const double w = b.dot(ldlt.solve(b));
  TestReport r;
  r.name = "F: PC = 0";
  r.statistic = w / m;
  r.p_value = boost::math::gamma_q(0.5 * m, 0.5 * w);
  r.null_description = "selected mean-group coefficients are jointly zero";
  r.reference = "Wald on MG means with nonparametric covariance, chi2(m)/m";
  r.k = m;
  return r;
}

}  // namespace ccepc
