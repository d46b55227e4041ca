#pragma once

#include "paneldata.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccepc {

// Normal draw with a per-component mean. A one-element mean broadcasts.
struct Dist {
  std::vector<double> mean{0.0};
  double sd = 0.0;

  double mean_at(int j) const;
};

struct RegimeConfig {
  double fixed_fraction = 0.0;       // units 0..round(f N)-1 are in the fixed group
  std::vector<double> gamma_shift{0.0};  // added to the fixed group's factor loadings
};

struct DgpConfig {
  int n = 30;
  int t = 65;
  int burn_in = 50;
  int m_ucf = 3;   // unobserved factors F
  int m_ocf = 1;   // observed factors G
  int k = 1;       // country regressors X
  Dist rho{{0.5}, 0.1};
  Dist beta{{1.0}, 0.0};
  Dist alpha{{0.0}, 1.0};
  Dist gamma{{1.0}, 1.0};    // y loadings on F
  Dist gamma_x{{0.5}, 0.5};  // X loadings on F
  Dist theta{{0.5}, 0.5};    // y loadings on G
  Dist theta_x{{0.5}, 0.5};  // X loadings on G
  Dist xi{{0.5}, 0.5};       // G loadings on F, common to all units
  double corr_gamma_x = 0.0; // correlation of gamma_x draws with gamma draws
  double eps_sd = 1.0;
  double chi_sd = 1.0;
  double omega_sd = 1.0;
  double factor_ar = 0.5;    // F has unit variance for every AR coefficient
  RegimeConfig regime;
  int start_period = 2004 * 4;  // 2004q1
  std::uint64_t seed = 42;

  void validate() const;
  // Factors present in y: F plus G when G has its own shocks.
  int true_factor_count() const { return m_ucf + (omega_sd > 0 ? m_ocf : 0); }
};

struct DgpTruth {
  Vector alpha, rho;
  Matrix beta;     // N x k
  Matrix gamma;    // N x m_ucf
  Matrix gamma_x;  // N x (k * m_ucf), regressor-major
  Matrix theta;    // N x m_ocf
  Matrix theta_x;  // N x (k * m_ocf), regressor-major
  Matrix xi;       // m_ocf x m_ucf
  Matrix f;        // T x m_ucf
  Matrix g;        // T x m_ocf
  std::vector<int> fixed;  // 0/1 per unit
};

struct Simulated {
  Panel panel;  // y, x1..xk, fixed (when a fixed group exists); common g1..gm
  DgpTruth truth;
};

Simulated gen_dgp(const DgpConfig& config);

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep);

struct McModel {
  int csa_lags = 2;
  int cf_lags = 2;
  std::optional<int> pcs;
  std::optional<int> kmax;
};

struct McSuite {
  std::vector<std::string> estimators{"fe", "twfe", "mg", "ccemg", "pipeline"};
  McModel model;
  double level = 0.05;
};

struct McMetric {
  double bias = 0;        // mean error
  double mae = 0;         // mean absolute error
  double rmse = 0;
  double mc_se = 0;       // standard error of the mean error
  int count = 0;
};

struct McFailure {
  int rep = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct McReport {
  DgpConfig config;
  McSuite suite;
  int reps = 0;
  int completed = 0;
  int true_factors = 0;
  // "<estimator>/rho", "<estimator>/beta1", ...
  std::map<std::string, McMetric> metrics;
  // "cd/<estimator>", "delta/<estimator>", "loading_sum/pipeline"
  std::map<std::string, double> rejection;
  std::map<std::string, std::vector<double>> p_values;
  // "y" and "u" hit rates of k_GR against the true count, plus "u_er", "y_er"
  std::map<std::string, double> numfac_hits;
  std::map<std::string, std::vector<int>> numfac_counts;
  std::vector<McFailure> failures;
  double wall_clock_seconds = 0;
  std::string utc;
};

McReport run_monte_carlo(const DgpConfig& config, int reps, const McSuite& suite, int threads);

}  // namespace ccepc
