#pragma once

#include "regress.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ccepc {

struct TestReport {
  std::string name;
  double statistic = 0;
  double p_value = 0;
  std::string null_description;
  std::string reference;  // reference distribution used for p_value
  int n = 0;
  int t = 0;
  int k = 0;
  std::vector<std::pair<std::string, double>> extra;

  double get(const std::string& key) const;
};

// Pesaran CD on an N x T residual matrix. `units` names rows in errors.
TestReport cd_test(const Matrix& residuals, const std::vector<std::string>& units = {});

struct DeltaReport {
  double s_tilde = 0;
  double delta = 0;
  double delta_adj = 0;
  double p = 0;
  double p_adj = 0;
  int n = 0;
  int t = 0;
  int k = 0;
  int partial_units = 0;  // units where some tested columns are absent

  TestReport as_report(const std::string& name) const;
};

// Swamy-type slope homogeneity test on the `tested` design columns; every
// other column is partialled out of each unit's design first.
DeltaReport delta_test(const Design& design, const std::vector<int>& tested);

// Tested set for the "all" variant: every column except the intercept.
std::vector<int> delta_all_columns(const Design& design);

// One-sided test that the sum of MG coefficients in `group_a` exceeds the
// sum in `group_b`.
TestReport loading_sum_test(const CoefTable& mg, const std::vector<int>& group_a,
                            const std::vector<int>& group_b);
TestReport loading_sum_test(const FitResult& fit, const std::vector<int>& group_a,
                            const std::vector<int>& group_b);

// Joint Wald test that the selected MG means are zero, using the
// nonparametric MG covariance; statistic is W / m against chi2(m) / m.
TestReport wald_zero_test(const CoefTable& coefs, const std::vector<int>& columns);

}  // namespace ccepc
