#pragma once

#include "config.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ccepc {

Json test_to_json(const TestReport& r);
Json bundle_to_json(const TestBundle& b);
Json fit_to_json(const FitResult& fit, const TestBundle* tests = nullptr);
Json factor_count_to_json(const FactorCount& fc);
Json numfac_to_json(const NumFac& nf);
Json factors_to_json(const FactorSet& fs);
Json pipeline_to_json(const PipelineResult& p);
Json benchmarks_to_json(const std::vector<BenchmarkColumn>& columns);
Json dissect_to_json(const std::vector<DissectTable>& tables, DissectMode mode);
Json mc_to_json(const McReport& r);

// `country,period,residual`, one row per estimation-sample cell.
std::string residuals_csv(const FitResult& fit);

struct TableColumn {
  std::string header;
  const FitResult* fit = nullptr;
  const TestBundle* tests = nullptr;
};

// Column-1 extras of the merged table: share block and factor counts.
struct TableExtras {
  const FactorSet* factors = nullptr;
  const NumFac* numfac = nullptr;
};

// Fixed-width coefficient table: estimates over "(standard errors)" with
// stars at 10/5/1%, observed-CF lags, CSAs and intercepts hidden, then the
// footer block.
std::string render_table(const std::vector<TableColumn>& columns, const TableExtras& extras = {});

std::string render_test(const TestReport& r);
std::string render_numfac(const NumFac& nf, int m = 0, const std::string& m_source = "");
std::string render_dissect(const std::vector<DissectTable>& tables, DissectMode mode);
std::string render_mc(const McReport& r);

// Display width in terminal columns, counting UTF-8 code points.
int display_width(const std::string& s);

}  // namespace ccepc
