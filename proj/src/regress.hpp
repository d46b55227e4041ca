#pragma once

#include "factors.hpp"
#include "paneldata.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ccepc {

inline constexpr double kPivotTolerance = 1e-10;

// Householder QR that walks the columns in their given order and drops a
// column whose remaining norm falls below `tolerance` times its original
// norm. Retained columns keep their relative order.
class PrunedQr {
 public:
  explicit PrunedQr(const Matrix& X, double tolerance = kPivotTolerance);

  int rank() const { return static_cast<int>(kept_.size()); }
  int cols() const { return cols_; }
  const std::vector<int>& kept() const { return kept_; }
  const std::vector<bool>& dropped() const { return dropped_; }

  // Least-squares coefficients for the retained columns (length rank()).
  Vector solve(const Vector& y) const;
  // (R'R)^-1 for the retained columns, i.e. (X_k'X_k)^-1.
  Matrix gram_inverse() const;
  // A minus its projection onto the retained columns.
  Matrix residualize(const Matrix& A) const;

 private:
  Vector apply_qt(Vector v) const;

  int rows_ = 0;
  int cols_ = 0;
  Matrix packed_;  // reflectors below the diagonal, R on and above
  Vector tau_;
  Matrix r_;       // rank x rank
  std::vector<int> kept_;
  std::vector<bool> dropped_;
};

struct OlsResult {
  Vector coef;                // zero placeholder for dropped columns
  std::vector<bool> dropped;
  Vector residuals;
  Matrix cov;                 // sigma2 (X'X)^-1 on retained columns, zero elsewhere
  Matrix gram_inv;            // (X'X)^-1 on retained columns, zero elsewhere
  double ssr = 0;
  double sigma2 = 0;
  double r2 = 0;              // centered
  int rank = 0;
  int df = 0;
};

OlsResult ols(const Vector& y, const Matrix& X, double tolerance = kPivotTolerance);

enum class DemeanMode { Unit, UnitTime };

// Rows are units, columns periods.
Matrix demean(const Matrix& block, DemeanMode mode);

enum class Estimator { FE, TWFE, MG };
const char* to_string(Estimator e);
std::optional<Estimator> estimator_from(const std::string& name);

struct CsaSpec {
  std::vector<std::string> variables;
  int lags = 2;
};

struct ModelSpec {
  std::string label;
  std::string dependent;
  int lag_dep = 1;
  std::vector<std::string> regressors;
  std::vector<std::string> observed_cf;
  int cf_lags = 2;
  std::optional<CsaSpec> csa;
  std::optional<int> pcs;
  // Regime interactions split the PC block when pcs is set, otherwise the
  // observed-CF block. The regime enters at a one-quarter lag.
  std::optional<std::string> regime_var;
  Estimator estimator = Estimator::MG;
  bool pooled_cce = false;
};

enum class Block { LagDep, Regressor, ObservedCf, Csa, Pc, Intercept };
const char* to_string(Block b);

struct DesignColumn {
  std::string name;
  Block block = Block::Regressor;
  std::string base;  // underlying variable
  int lag = 0;
  int regime = -1;   // -1 no split, otherwise the lagged regime value selected
};

struct UnitDesign {
  Vector y;
  Matrix X;
};

struct Design {
  std::vector<DesignColumn> columns;
  std::vector<UnitDesign> units;
  std::vector<std::string> countries;
  std::vector<int> periods;  // estimation-window quarters
  int trim = 0;

  int n() const { return static_cast<int>(units.size()); }
  int t() const { return static_cast<int>(periods.size()); }
  std::vector<int> columns_in(Block b) const;
  int column_index(const std::string& name) const;
};

int required_trim(const ModelSpec& spec);

// `min_trim` raises the number of leading periods removed so that several
// specifications can share one estimation window.
Design build_design(const ModelSpec& spec, const Panel& panel,
                    const FactorSet* factors = nullptr, int min_trim = 0);

struct CoefTable {
  Vector coef;
  Vector se;
  Vector t;
  Vector p;  // two-sided, standard normal
  Matrix cov;
  std::vector<int> n_units;  // units contributing (MG); N for pooled
};

struct UnitFit {
  std::string country;
  OlsResult ols;
};

struct SampleInfo {
  int n = 0;
  int t = 0;
  int obs = 0;
  int first_period = 0;
  int last_period = 0;
};

struct FitResult {
  ModelSpec spec;
  std::string kind;  // "MG", "FE", "TWFE", "pooled CCE"
  Design design;
  std::vector<UnitFit> per_unit;   // MG only
  std::optional<CoefTable> mg;
  std::optional<CoefTable> pooled;
  Matrix residuals;                // N x T_eff
  SampleInfo sample;
  double r2 = 0;
  double r2_mg = 0;                // NaN unless MG
  double r2_within = 0;
  std::string variance;
  std::vector<std::string> notes;

  const CoefTable& coefficients() const { return mg ? *mg : *pooled; }
  const std::vector<DesignColumn>& columns() const { return design.columns; }
};

FitResult fit(const ModelSpec& spec, const Panel& panel, const FactorSet* factors = nullptr,
              int min_trim = 0, int threads = 1);

// Mean-group aggregation of per-unit coefficient vectors. Coefficients
// dropped in a unit are excluded from that coefficient's average.
CoefTable mean_group(const std::vector<Vector>& coefs,
                     const std::vector<std::vector<bool>>& dropped);

// y - rho_i y_{t-1} - X beta_i, optionally also minus the fitted
// observed-CF contribution.
Matrix composite_residuals(const FitResult& fit, const ModelSpec& spec, const Panel& panel,
                           bool subtract_observed_cf = false);

double normal_two_sided_p(double z);
double normal_upper_p(double z);

}  // namespace ccepc
