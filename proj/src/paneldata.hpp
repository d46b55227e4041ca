#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccepc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Quarters are plain integers: year * 4 + (quarter - 1).
int parse_period(std::string_view text);
std::string format_period(int quarter_index);

// One named series. Country series are N x T, common factors 1 x T.
// Missing cells are flagged in `missing`; the corresponding value is
// unspecified and never read.
struct Series {
  Matrix values;
  Mask missing;
  bool common = false;

  bool complete() const { return !missing.any(); }
};

class Panel {
 public:
  Panel() = default;
  Panel(std::vector<std::string> countries, std::vector<int> periods);

  int units() const { return static_cast<int>(countries_.size()); }
  int periods() const { return static_cast<int>(periods_.size()); }
  const std::vector<std::string>& countries() const { return countries_; }
  const std::vector<int>& period_index() const { return periods_; }

  bool has(const std::string& name) const { return series_.count(name) != 0; }
  const Series& series(const std::string& name) const;
  std::vector<std::string> names() const;

  // Returns a copy with `name` added. Overwriting an existing series
  // requires `replace`.
  Panel with_series(const std::string& name, Series series,
                    bool replace = false) const;

  // Restricts to periods [first, last] (quarter indices, inclusive).
  Panel window(int first, int last) const;

  // Rows with the given period: column position or -1.
  int column_of(int quarter_index) const;

 private:
  std::vector<std::string> countries_;
  std::vector<int> periods_;
  std::map<std::string, Series> series_;
};

struct ColumnMapping {
  std::string name;    // name inside the panel
  std::string column;  // CSV header
};

struct CsvSchema {
  std::string country_column = "country";
  std::string period_column = "period";
  std::vector<ColumnMapping> variables;
  std::vector<ColumnMapping> common_factors;
};

Panel load_csv(const std::string& path, const CsvSchema& schema);
Panel parse_csv(std::string_view text, const CsvSchema& schema);

// Writes `country,period,<unit vars>,<common factors>` with common factors
// replicated on every row. Empty cell = missing.
std::string to_csv(const Panel& panel);
void write_csv(const Panel& panel, const std::string& path);

Panel interpolate_linear(const Panel& panel, const std::string& variable);

enum class TransformKind {
  Lag,
  Diff,
  Log,
  Standardize,
  InterpolateLinear,
  RealRateCombine,
};

std::optional<TransformKind> transform_kind_from(std::string_view name);
const char* to_string(TransformKind kind);

struct TransformSpec {
  TransformKind kind = TransformKind::Lag;
  std::string source;
  std::string target;
  int k = 1;
  // RealRateCombine: target = source - scale * 4 * dlog(cpi).
  std::string cpi;
  double scale = 100.0;
  bool replace = false;
};

Panel apply_transform(const Panel& panel, const TransformSpec& spec);

// Averages over countries, plus `lags` lagged copies of each average.
// Columns are variable-major: csa_v, L1.csa_v, ..., Lp.csa_v.
struct CommonBlock {
  std::vector<std::string> names;
  Matrix values;  // T x c
  Mask missing;   // true for cells a lag shifted out of range
};

CommonBlock cross_section_averages(const Panel& panel,
                                   const std::vector<std::string>& variables,
                                   int lags);

// Restricts to [first, last] and requires every referenced cell observed.
Panel balance(const Panel& panel, const std::vector<std::string>& variables,
              int first, int last);

}  // namespace ccepc
