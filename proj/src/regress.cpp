#include "regress.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <sstream>

namespace ccepc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Pruned QR

PrunedQr::PrunedQr(const Matrix& X, double tolerance)
    : rows_(static_cast<int>(X.rows())), cols_(static_cast<int>(X.cols())), packed_(X) {
  dropped_.assign(cols_, false);
  std::vector<Vector> reflectors;
  std::vector<double> taus;
  Matrix r_full = Matrix::Zero(std::min(rows_, cols_), cols_);
  int r = 0;
  for (int j = 0; j < cols_; ++j) {
    const double original = X.col(j).norm();
    if (r >= rows_ || original == 0.0) {
      dropped_[j] = true;
      continue;
    }
    auto v = packed_.col(j).segment(r, rows_ - r);
    const double remaining = v.norm();
    if (remaining <= tolerance * original) {
      dropped_[j] = true;
      continue;
    }
    const double alpha = v(0) >= 0 ? -remaining : remaining;
    Vector u = v;
    u(0) -= alpha;
    const double tau = 2.0 / u.squaredNorm();
    for (int c = j + 1; c < cols_; ++c) {
      auto w = packed_.col(c).segment(r, rows_ - r);
      w -= (tau * u.dot(w)) * u;
    }
    r_full.col(j).head(r) = packed_.col(j).head(r);
    r_full(r, j) = alpha;
    reflectors.push_back(std::move(u));
    taus.push_back(tau);
    kept_.push_back(j);
    ++r;
  }
  r_.resize(r, r);
  for (int a = 0; a < r; ++a) r_.col(a) = r_full.col(kept_[a]).head(r);
  // Reflector k acts on rows k..rows_-1; pack them for apply_qt.
  packed_.resize(rows_, r);
  packed_.setZero();
  tau_.resize(r);
  for (int k = 0; k < r; ++k) {
    packed_.col(k).segment(k, rows_ - k) = reflectors[k];
    tau_(k) = taus[k];
  }
}

Vector PrunedQr::apply_qt(Vector v) const {
  for (int k = 0; k < rank(); ++k) {
    auto u = packed_.col(k).segment(k, rows_ - k);
    auto seg = v.segment(k, rows_ - k);
    seg -= (tau_(k) * u.dot(seg)) * u;
  }
  return v;
}

Vector PrunedQr::solve(const Vector& y) const {
  if (rank() == 0) return Vector(0);
  Vector z = apply_qt(y);
  return r_.triangularView<Eigen::Upper>().solve(z.head(rank()));
}

Matrix PrunedQr::gram_inverse() const {
  if (rank() == 0) return Matrix(0, 0);
  Matrix rinv = r_.triangularView<Eigen::Upper>().solve(Matrix::Identity(rank(), rank()));
  return rinv * rinv.transpose();
}

Matrix PrunedQr::residualize(const Matrix& A) const {
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    Vector z = apply_qt(A.col(c));
    z.head(rank()).setZero();
    // Apply Q = H_0 ... H_{r-1} in reverse order.
    for (int k = rank() - 1; k >= 0; --k) {
      auto u = packed_.col(k).segment(k, rows_ - k);
      auto seg = z.segment(k, rows_ - k);
      seg -= (tau_(k) * u.dot(seg)) * u;
    }
    out.col(c) = z;
  }
  return out;
}

// ---------------------------------------------------------------------------
// OLS

OlsResult ols(const Vector& y, const Matrix& X, double tolerance) {
  const int t = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (y.size() != t) fail(ErrorKind::Specification, "ols: y and X have different row counts");
  if (t <= k)
    fail(ErrorKind::Estimation, "insufficient observations: T = " + std::to_string(t) +
                                    " with K = " + std::to_string(k) + " columns");
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  if (!(sst > 0.0)) fail(ErrorKind::Degenerate, "degenerate regression: dependent variable is constant");

  PrunedQr qr(X, tolerance);
  OlsResult r;
  r.rank = qr.rank();
  r.dropped = qr.dropped();
  Vector b = qr.solve(y);
  r.coef = Vector::Zero(k);
  for (int a = 0; a < r.rank; ++a) r.coef(qr.kept()[a]) = b(a);
  r.residuals = y - X * r.coef;
  r.ssr = r.residuals.squaredNorm();
  r.df = t - r.rank;
  r.sigma2 = r.ssr / r.df;
  r.r2 = 1.0 - r.ssr / sst;
  Matrix gi = qr.gram_inverse();
  r.gram_inv = Matrix::Zero(k, k);
  for (int a = 0; a < r.rank; ++a)
    for (int c = 0; c < r.rank; ++c) r.gram_inv(qr.kept()[a], qr.kept()[c]) = gi(a, c);
  r.cov = r.sigma2 * r.gram_inv;
  return r;
}

Matrix demean(const Matrix& block, DemeanMode mode) {
  Vector row_means = block.rowwise().mean();
  Matrix out = block.colwise() - row_means;
  if (mode == DemeanMode::UnitTime) {
    Eigen::RowVectorXd col_means = block.colwise().mean();
    const double grand = block.mean();
    out.rowwise() -= col_means;
    out.array() += grand;
  }
  return out;
}

double normal_two_sided_p(double z) {
  if (!std::isfinite(z)) return std::isnan(z) ? kNaN : 0.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double normal_upper_p(double z) {
  if (std::isnan(z)) return kNaN;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::FE: return "FE";
    case Estimator::TWFE: return "TWFE";
    case Estimator::MG: return "MG";
  }
  return "?";
}

std::optional<Estimator> estimator_from(const std::string& name) {
  if (name == "FE" || name == "fe") return Estimator::FE;
  if (name == "TWFE" || name == "twfe") return Estimator::TWFE;
  if (name == "MG" || name == "mg") return Estimator::MG;
  return std::nullopt;
}

const char* to_string(Block b) {
  switch (b) {
    case Block::LagDep: return "lag-dependent";
    case Block::Regressor: return "regressor";
    case Block::ObservedCf: return "observed-cf";
    case Block::Csa: return "csa";
    case Block::Pc: return "pc";
    case Block::Intercept: return "intercept";
  }
  return "?";
}

std::vector<int> Design::columns_in(Block b) const {
  std::vector<int> out;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c].block == b) out.push_back(static_cast<int>(c));
  return out;
}

int Design::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c].name == name) return static_cast<int>(c);
  return -1;
}

// ---------------------------------------------------------------------------
// Design construction

int required_trim(const ModelSpec& spec) {
  int trim = 1;
  if (spec.csa) trim = std::max(trim, spec.csa->lags);
  if (!spec.observed_cf.empty()) trim = std::max(trim, spec.cf_lags);
  return trim;
}

namespace {

std::string lag_name(const std::string& base, int lag) {
  return lag == 0 ? base : "L" + std::to_string(lag) + "." + base;
}

void require_cell(const Panel& panel, const Series& s, const std::string& var, int i, int t) {
  if (s.missing(s.common ? 0 : i, t))
    fail(ErrorKind::Specification, "missing cell (" +
                                       (s.common ? std::string("(common)") : panel.countries()[i]) +
                                       ", " + format_period(panel.period_index()[t]) + ", " +
                                       var + "); interpolate or balance first");
}

}  // namespace

Design build_design(const ModelSpec& spec, const Panel& panel, const FactorSet* factors,
                    int min_trim) {
  if (spec.lag_dep != 0 && spec.lag_dep != 1)
    fail(ErrorKind::Specification, "lag_dep must be 0 or 1");
  if (spec.cf_lags < 0) fail(ErrorKind::Specification, "cf_lags must be >= 0");
  if (spec.csa && spec.csa->lags < 0) fail(ErrorKind::Specification, "csa lags must be >= 0");
  if (spec.pcs && !factors)
    fail(ErrorKind::Specification, "model requests principal components but none were supplied");
  if (spec.pcs && *spec.pcs > factors->count())
    fail(ErrorKind::Specification, "model requests " + std::to_string(*spec.pcs) +
                                       " components but only " +
                                       std::to_string(factors->count()) + " are available");

  const Series& dep = panel.series(spec.dependent);
  if (dep.common) fail(ErrorKind::Specification, "dependent '" + spec.dependent + "' is a common factor");
  for (const auto& x : spec.regressors)
    if (panel.series(x).common)
      fail(ErrorKind::Specification, "regressor '" + x + "' is a common factor; list it under observed_cf");
  for (const auto& g : spec.observed_cf)
    if (!panel.series(g).common)
      fail(ErrorKind::Specification, "observed common factor '" + g + "' is a country series");

  const int n = panel.units();
  const int t_all = panel.periods();
  const int trim = std::max(required_trim(spec), min_trim);
  if (trim >= t_all)
    fail(ErrorKind::Specification, "panel has " + std::to_string(t_all) +
                                       " periods; cannot trim " + std::to_string(trim));
  const int t_eff = t_all - trim;

  Design d;
  d.countries = panel.countries();
  d.periods.assign(panel.period_index().begin() + trim, panel.period_index().end());
  d.trim = trim;

  const bool split_pc = spec.regime_var && spec.pcs;
  const bool split_cf = spec.regime_var && !spec.pcs && !spec.observed_cf.empty();
  const Series* regime = spec.regime_var ? &panel.series(*spec.regime_var) : nullptr;
  if (regime && !split_pc && !split_cf)
    fail(ErrorKind::Specification, "regime interaction needs observed common factors or PCs to split");

  // Lagged regime indicator per (unit, row).
  Eigen::MatrixXi regime_lag;
  if (regime) {
    regime_lag.resize(n, t_eff);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < t_eff; ++r) {
        int t = trim + r - 1;
        require_cell(panel, *regime, *spec.regime_var, i, t);
        double v = regime->values(regime->common ? 0 : i, t);
        if (v != 0.0 && v != 1.0)
          fail(ErrorKind::Specification, "regime variable '" + *spec.regime_var +
                                             "' must be 0/1; found " + std::to_string(v));
        regime_lag(i, r) = static_cast<int>(v);
      }
  }

  // Column legend, with a filler that writes the column for unit i.
  struct Filler {
    DesignColumn column;
    std::function<double(int, int)> value;  // (unit, row) -> value
  };
  std::vector<Filler> fillers;

  if (spec.lag_dep == 1) {
    fillers.push_back({{"L." + spec.dependent, Block::LagDep, spec.dependent, 1, -1},
                       [&](int i, int r) {
                         require_cell(panel, dep, spec.dependent, i, trim + r - 1);
                         return dep.values(i, trim + r - 1);
                       }});
  }
  for (const auto& x : spec.regressors) {
    const Series* s = &panel.series(x);
    fillers.push_back({{x, Block::Regressor, x, 0, -1}, [&, s, x](int i, int r) {
                         require_cell(panel, *s, x, i, trim + r);
                         return s->values(i, trim + r);
                       }});
  }

  auto add_split = [&](std::vector<Filler> block_fillers, bool split) {
    if (!split) {
      for (auto& f : block_fillers) fillers.push_back(std::move(f));
      return;
    }
    for (int value : {1, 0}) {
      for (const auto& f : block_fillers) {
        Filler g = f;
        g.column.regime = value;
        g.column.name = f.column.name + "#" + *spec.regime_var + "=" + std::to_string(value);
        auto inner = f.value;
        g.value = [inner, value, &regime_lag](int i, int r) {
          return regime_lag(i, r) == value ? inner(i, r) : 0.0;
        };
        fillers.push_back(std::move(g));
      }
    }
  };

  {
    std::vector<Filler> cf;
    for (const auto& g : spec.observed_cf) {
      const Series* s = &panel.series(g);
      for (int l = 0; l <= spec.cf_lags; ++l) {
        cf.push_back({{lag_name(g, l), Block::ObservedCf, g, l, -1}, [&, s, g, l](int, int r) {
                        require_cell(panel, *s, g, 0, trim + r - l);
                        return s->values(0, trim + r - l);
                      }});
      }
    }
    add_split(std::move(cf), split_cf);
  }

  CommonBlock csa;
  if (spec.csa) {
    csa = cross_section_averages(panel, spec.csa->variables, spec.csa->lags);
    for (std::size_t c = 0; c < csa.names.size(); ++c) {
      int col = static_cast<int>(c);
      int lag = col % (spec.csa->lags + 1);
      const std::string& var = spec.csa->variables[c / (spec.csa->lags + 1)];
      fillers.push_back({{csa.names[c], Block::Csa, var, lag, -1}, [&, col](int, int r) {
                           if (csa.missing(trim + r, col))
                             fail(ErrorKind::Specification, "cross-section average lag out of range");
                           return csa.values(trim + r, col);
                         }});
    }
  }

  if (spec.pcs) {
    int offset = 0;
    if (!factors->periods.empty()) {
      auto it = std::find(factors->periods.begin(), factors->periods.end(), d.periods.front());
      if (it == factors->periods.end())
        fail(ErrorKind::Specification, "principal components do not cover period " +
                                           format_period(d.periods.front()));
      offset = static_cast<int>(it - factors->periods.begin());
      if (offset + t_eff > static_cast<int>(factors->periods.size()) ||
          factors->periods[offset + t_eff - 1] != d.periods.back())
        fail(ErrorKind::Specification, "principal components do not cover the estimation window");
    } else if (factors->components.rows() != t_eff) {
      fail(ErrorKind::Specification, "principal components have " +
                                         std::to_string(factors->components.rows()) +
                                         " rows, estimation window has " + std::to_string(t_eff));
    }
    std::vector<Filler> pc;
    for (int k = 0; k < *spec.pcs; ++k) {
      std::string name = "pc" + std::to_string(k + 1);
      pc.push_back({{name, Block::Pc, name, 0, -1}, [factors, offset, k](int, int r) {
                      return factors->components(offset + r, k);
                    }});
    }
    add_split(std::move(pc), split_pc);
  }

  const bool intercept = spec.estimator == Estimator::MG || spec.pooled_cce;
  if (intercept)
    fillers.push_back({{"_cons", Block::Intercept, "", 0, -1}, [](int, int) { return 1.0; }});

  for (const auto& f : fillers) d.columns.push_back(f.column);
  const int k = static_cast<int>(fillers.size());
  d.units.resize(n);
  for (int i = 0; i < n; ++i) {
    UnitDesign& u = d.units[i];
    u.y.resize(t_eff);
    u.X.resize(t_eff, k);
    for (int r = 0; r < t_eff; ++r) {
      require_cell(panel, dep, spec.dependent, i, trim + r);
      u.y(r) = dep.values(i, trim + r);
      for (int c = 0; c < k; ++c) u.X(r, c) = fillers[c].value(i, r);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Estimation

CoefTable mean_group(const std::vector<Vector>& coefs,
                     const std::vector<std::vector<bool>>& dropped) {
  const int n = static_cast<int>(coefs.size());
  const int k = n > 0 ? static_cast<int>(coefs.front().size()) : 0;
  CoefTable tab;
  tab.coef = Vector::Constant(k, kNaN);
  tab.se = Vector::Constant(k, kNaN);
  tab.t = Vector::Constant(k, kNaN);
  tab.p = Vector::Constant(k, kNaN);
  tab.cov = Matrix::Constant(k, k, kNaN);
  tab.n_units.assign(k, 0);
  auto present = [&](int i, int j) { return !dropped[i][j]; };
  for (int j = 0; j < k; ++j) {
    long double sum = 0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (present(i, j)) {
        sum += coefs[i](j);
        ++count;
      }
    tab.n_units[j] = count;
    if (count > 0) tab.coef(j) = static_cast<double>(sum / count);
  }
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      long double s = 0;
      int both = 0;
      for (int i = 0; i < n; ++i)
        if (present(i, a) && present(i, b)) {
          s += (coefs[i](a) - tab.coef(a)) * (coefs[i](b) - tab.coef(b));
          ++both;
        }
      double v;
      if (both >= 2) {
        v = static_cast<double>(s / (static_cast<long double>(tab.n_units[a]) * tab.n_units[b]) *
                                both / (both - 1));
      } else if (tab.n_units[a] >= 1 && tab.n_units[b] >= 1 && both == 0 && a != b) {
        v = 0.0;  // disjoint unit sets
      } else {
        v = kNaN;
      }
      tab.cov(a, b) = tab.cov(b, a) = v;
    }
  }
  for (int j = 0; j < k; ++j) {
    tab.se(j) = std::sqrt(tab.cov(j, j));
    tab.t(j) = tab.coef(j) / tab.se(j);
    tab.p(j) = normal_two_sided_p(tab.t(j));
  }
  return tab;
}

namespace {

double squared_correlation(const Vector& a, const Vector& b) {
  Vector ac = a.array() - a.mean();
  Vector bc = b.array() - b.mean();
  double den = ac.norm() * bc.norm();
  if (!(den > 0)) return kNaN;
  double c = ac.dot(bc) / den;
  return c * c;
}

Vector stack_y(const Design& d) {
  Vector y(d.n() * d.t());
  for (int i = 0; i < d.n(); ++i) y.segment(i * d.t(), d.t()) = d.units[i].y;
  return y;
}

double within_sst(const Design& d) {
  long double s = 0;
  for (const auto& u : d.units) s += (u.y.array() - u.y.mean()).square().sum();
  return static_cast<double>(s);
}

// Pooled OLS on stacked rows with country-clustered covariance.
CoefTable pooled_clustered(const Vector& y, const Matrix& X, int n, int t, OlsResult& out) {
  out = ols(y, X);
  const int k = static_cast<int>(X.cols());
  Matrix meat = Matrix::Zero(k, k);
  for (int i = 0; i < n; ++i) {
    Vector score = X.middleRows(i * t, t).transpose() * out.residuals.segment(i * t, t);
    meat += score * score.transpose();
  }
  const double obs = static_cast<double>(n) * t;
  const double c = (static_cast<double>(n) / (n - 1)) * ((obs - 1) / (obs - out.rank));
  Matrix cov = c * out.gram_inv * meat * out.gram_inv;
  CoefTable tab;
  tab.coef = out.coef;
  tab.cov = cov;
  tab.se.resize(k);
  tab.t.resize(k);
  tab.p.resize(k);
  tab.n_units.assign(k, n);
  for (int j = 0; j < k; ++j) {
    if (out.dropped[j]) {
      tab.coef(j) = tab.se(j) = tab.t(j) = tab.p(j) = kNaN;
      tab.n_units[j] = 0;
      continue;
    }
    tab.se(j) = std::sqrt(cov(j, j));
    tab.t(j) = tab.coef(j) / tab.se(j);
    tab.p(j) = normal_two_sided_p(tab.t(j));
  }
  return tab;
}

void fit_mg(FitResult& r, int threads) {
  const Design& d = r.design;
  const int n = d.n();
  r.per_unit.resize(n);
  std::vector<std::string> errors(n);
  parallel_for(n, threads, [&](int i) {
    try {
      r.per_unit[i].country = d.countries[i];
      r.per_unit[i].ols = ols(d.units[i].y, d.units[i].X);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::string failed;
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty()) failed += "\n  " + d.countries[i] + ": " + errors[i];
  if (!failed.empty()) fail(ErrorKind::Estimation, "unit regressions failed:" + failed);

  std::vector<Vector> coefs;
  std::vector<std::vector<bool>> dropped;
  for (const auto& u : r.per_unit) {
    coefs.push_back(u.ols.coef);
    dropped.push_back(u.ols.dropped);
  }
  r.mg = mean_group(coefs, dropped);
  r.residuals.resize(n, d.t());
  Vector fitted(n * d.t());
  long double r2_sum = 0;
  for (int i = 0; i < n; ++i) {
    r.residuals.row(i) = r.per_unit[i].ols.residuals.transpose();
    fitted.segment(i * d.t(), d.t()) = d.units[i].y - r.per_unit[i].ols.residuals;
    r2_sum += r.per_unit[i].ols.r2;
  }
  r.r2 = squared_correlation(fitted, stack_y(d));
  r.r2_mg = static_cast<double>(r2_sum / n);
  r.r2_within = 1.0 - r.residuals.squaredNorm() / within_sst(d);
  r.variance = "nonparametric mean-group dispersion";
}

void fit_fe(FitResult& r, DemeanMode mode) {
  const Design& d = r.design;
  const int n = d.n(), t = d.t();
  const int k = static_cast<int>(d.columns.size());
  Matrix ybl(n, t);
  for (int i = 0; i < n; ++i) ybl.row(i) = d.units[i].y.transpose();
  Matrix ydm = demean(ybl, mode);
  Vector y(n * t);
  for (int i = 0; i < n; ++i) y.segment(i * t, t) = ydm.row(i).transpose();
  Matrix X(n * t, k);
  for (int c = 0; c < k; ++c) {
    Matrix bl(n, t);
    for (int i = 0; i < n; ++i) bl.row(i) = d.units[i].X.col(c).transpose();
    Matrix dm = demean(bl, mode);
    for (int i = 0; i < n; ++i) X.col(c).segment(i * t, t) = dm.row(i).transpose();
  }
  OlsResult o;
  r.pooled = pooled_clustered(y, X, n, t, o);
  r.residuals.resize(n, t);
  for (int i = 0; i < n; ++i) r.residuals.row(i) = o.residuals.segment(i * t, t).transpose();
  Vector ylev = stack_y(d);
  r.r2 = squared_correlation(ylev - o.residuals, ylev);
  r.r2_mg = kNaN;
  r.r2_within = 1.0 - o.ssr / within_sst(d);
  r.variance = "clustered by country";
}

void fit_pooled_cce(FitResult& r) {
  const Design& d = r.design;
  const int n = d.n(), t = d.t();
  std::vector<int> nuisance, slopes;
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    Block b = d.columns[c].block;
    (b == Block::Csa || b == Block::Intercept ? nuisance : slopes).push_back(static_cast<int>(c));
  }
  const int ks = static_cast<int>(slopes.size());
  Vector y(n * t);
  Matrix X(n * t, ks);
  for (int i = 0; i < n; ++i) {
    const auto& u = d.units[i];
    Matrix z(t, nuisance.size());
    for (std::size_t a = 0; a < nuisance.size(); ++a) z.col(a) = u.X.col(nuisance[a]);
    Matrix s(t, ks);
    for (int a = 0; a < ks; ++a) s.col(a) = u.X.col(slopes[a]);
    PrunedQr qz(z);
    y.segment(i * t, t) = qz.residualize(u.y);
    X.middleRows(i * t, t) = qz.residualize(s);
  }
  OlsResult o;
  CoefTable slope_tab = pooled_clustered(y, X, n, t, o);
  const int k = static_cast<int>(d.columns.size());
  CoefTable tab;
  tab.coef = Vector::Constant(k, kNaN);
  tab.se = tab.t = tab.p = tab.coef;
  tab.cov = Matrix::Constant(k, k, kNaN);
  tab.n_units.assign(k, 0);
  for (int a = 0; a < ks; ++a) {
    tab.coef(slopes[a]) = slope_tab.coef(a);
    tab.se(slopes[a]) = slope_tab.se(a);
    tab.t(slopes[a]) = slope_tab.t(a);
    tab.p(slopes[a]) = slope_tab.p(a);
    tab.n_units[slopes[a]] = slope_tab.n_units[a];
    for (int b = 0; b < ks; ++b) tab.cov(slopes[a], slopes[b]) = slope_tab.cov(a, b);
  }
  r.pooled = tab;
  r.residuals.resize(n, t);
  for (int i = 0; i < n; ++i) r.residuals.row(i) = o.residuals.segment(i * t, t).transpose();
  Vector ylev = stack_y(d);
  r.r2 = squared_correlation(ylev - o.residuals, ylev);
  r.r2_mg = kNaN;
  r.r2_within = 1.0 - o.ssr / within_sst(d);
  r.variance = "clustered by country";
  r.notes.push_back(
      "pooled CCE: slopes pooled, cross-section-average loadings and intercepts unit-specific; "
      "the variance estimator for this case is not established, clustered SEs are indicative");
}

}  // namespace

FitResult fit(const ModelSpec& spec, const Panel& panel, const FactorSet* factors, int min_trim,
              int threads) {
  if (spec.pooled_cce && !spec.csa)
    fail(ErrorKind::Specification, "pooled CCE requires cross-section averages");
  if (spec.pooled_cce && spec.estimator != Estimator::MG)
    fail(ErrorKind::Specification, "pooled CCE is selected with estimator MG and pooled_cce = true");
  FitResult r;
  r.spec = spec;
  r.design = build_design(spec, panel, factors, min_trim);
  const Design& d = r.design;
  if (d.n() < 2) fail(ErrorKind::Specification, "estimation needs at least 2 countries");
  r.sample = {d.n(), d.t(), d.n() * d.t(), d.periods.front(), d.periods.back()};
  if (spec.pooled_cce) {
    r.kind = "pooled CCE";
    fit_pooled_cce(r);
    return r;
  }
  switch (spec.estimator) {
    case Estimator::MG:
      r.kind = "MG";
      fit_mg(r, threads);
      break;
    case Estimator::FE:
      r.kind = "FE";
      fit_fe(r, DemeanMode::Unit);
      break;
    case Estimator::TWFE:
      r.kind = "TWFE";
      fit_fe(r, DemeanMode::UnitTime);
      break;
  }
  return r;
}

Matrix composite_residuals(const FitResult& fit, const ModelSpec& spec, const Panel& panel,
                           bool subtract_observed_cf) {
  auto mismatch = [](const std::string& what) {
    fail(ErrorKind::Specification, "composite residuals: " + what);
  };
  if (fit.kind != "MG") mismatch("fit must be a mean-group fit (got " + fit.kind + ")");
  if (!spec.csa || !fit.spec.csa) mismatch("step-1 fit must include cross-section averages");
  if (fit.spec.dependent != spec.dependent || fit.spec.lag_dep != spec.lag_dep ||
      fit.spec.regressors != spec.regressors || fit.spec.observed_cf != spec.observed_cf ||
      fit.spec.cf_lags != spec.cf_lags || fit.spec.csa->variables != spec.csa->variables ||
      fit.spec.csa->lags != spec.csa->lags)
    mismatch("model specification differs from the one used for the fit");
  const Design& d = fit.design;
  if (panel.countries() != d.countries) mismatch("panel countries differ from the fit");
  const Series& dep = panel.series(spec.dependent);

  std::vector<int> cols;
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    Block b = d.columns[c].block;
    if (b == Block::LagDep || b == Block::Regressor ||
        (subtract_observed_cf && b == Block::ObservedCf))
      cols.push_back(static_cast<int>(c));
  }
  Matrix u(d.n(), d.t());
  for (int i = 0; i < d.n(); ++i) {
    const auto& unit = d.units[i];
    const Vector& b = fit.per_unit[i].ols.coef;
    for (int r = 0; r < d.t(); ++r) {
      int col = panel.column_of(d.periods[r]);
      if (col < 0 || dep.missing(i, col)) mismatch("panel does not cover the fit window");
      double v = dep.values(i, col);
      if (std::abs(v - unit.y(r)) > 1e-12 * std::max(1.0, std::abs(v)))
        mismatch("panel values differ from the data used for the fit");
      for (int c : cols) v -= unit.X(r, c) * b(c);
      u(i, r) = v;
    }
  }
  return u;
}

}  // namespace ccepc
