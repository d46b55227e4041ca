#pragma once

#include "diagnostics.hpp"
#include "factors.hpp"
#include "regress.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ccepc {

enum class PcSource { Composite, CompositeObserved };

struct PipelineOptions {
  std::optional<int> pcs;   // overrides k_GR(u)
  std::optional<int> kmax;  // default floor(min(N, T) / 2)
  bool center = true;
  bool normalize = false;
  PcSource pc_source = PcSource::Composite;
  bool subtract_observed_cf = false;
  bool strict_cd = false;   // halt when step-1 CD rejects at 1%
  int threads = 1;
};

// Tests attached to one fitted column. Tests that do not apply are left
// empty; tests that apply but cannot be computed are listed in `skipped`.
struct TestBundle {
  std::optional<TestReport> cd;
  std::optional<TestReport> wald_pc;
  std::optional<TestReport> delta_all;
  std::optional<TestReport> delta_pc;
  std::optional<TestReport> loading_sum;
  std::vector<std::string> skipped;
};

TestBundle standard_tests(const FitResult& fit);

struct NumFac {
  FactorCount y;
  FactorCount u;
  Spectrum spectrum_y;
  Spectrum spectrum_u;
};

// Ahn-Horenstein counts for the design's dependent variable and for the
// composite residuals; kmax is capped at min(N, T) - 2 with a warning.
NumFac count_factors(const Design& design, const Matrix& composite, const PipelineOptions& options,
                     std::vector<std::string>& warnings);

struct PipelineResult {
  FitResult step1;
  TestBundle step1_tests;
  Matrix composite;  // N x T_eff
  NumFac numfac;
  int m = 0;
  std::string m_source;  // "k_GR(u)" or "override"
  FactorSet factors;
  FitResult step3;
  TestBundle step3_tests;
  std::optional<FitResult> step3_regime;
  std::optional<TestBundle> step3_regime_tests;
  std::vector<std::string> warnings;
};

PipelineResult run_three_step(const Panel& panel, const ModelSpec& spec,
                              const PipelineOptions& options);

struct BenchmarkColumn {
  std::string header;  // "MG-CCE", "FE", ...
  FitResult fit;
  TestBundle tests;
};

struct BenchmarkResult {
  PipelineResult pipeline;
  std::vector<BenchmarkColumn> columns;
};

// The ten-column family: CCE-MG; FE; TWFE; FE+CFs; FE+CFxregime; MG;
// MG+CFs; MG+CFxregime; MG+PCs; MG+PCxregime, all on one sample.
BenchmarkResult run_benchmarks(const Panel& panel, const ModelSpec& spec,
                               const PipelineOptions& options);

enum class DissectMode { Levels, FirstDifferences };

struct DissectTable {
  std::string component;
  std::vector<std::string> names;  // observables then "constant"
  Vector coef;
  Vector se;
  double r2 = 0;
  int periods = 0;
};

// Regresses each standardized component on standardized observables
// (differenced after standardizing in FD mode) plus a constant.
std::vector<DissectTable> dissect_pcs(const FactorSet& factors, const Panel& panel,
                                      const std::vector<std::string>& observables,
                                      DissectMode mode);

}  // namespace ccepc
