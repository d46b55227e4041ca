#include "paneldata.hpp"

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ccepc {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// RFC 4180 field splitting; quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

Series make_series(int rows, int cols, bool common) {
  Series s;
  s.values = Matrix::Zero(rows, cols);
  s.missing = Mask::Constant(rows, cols, true);
  s.common = common;
  return s;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

int parse_period(std::string_view text) {
  text = trim(text);
  auto q = text.find_first_of("qQ");
  if (q == std::string_view::npos || q == 0 || q + 2 != text.size())
    fail(ErrorKind::Ingestion, "unparseable period '" + std::string(text) + "' (expected YYYYqQ)");
  int year = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + q, year);
  if (ec != std::errc() || ptr != text.data() + q)
    fail(ErrorKind::Ingestion, "unparseable period '" + std::string(text) + "' (expected YYYYqQ)");
  int quarter = text[q + 1] - '0';
  if (quarter < 1 || quarter > 4)
    fail(ErrorKind::Ingestion, "quarter out of range in period '" + std::string(text) + "'");
  return year * 4 + (quarter - 1);
}

std::string format_period(int quarter_index) {
  int year = quarter_index >= 0 ? quarter_index / 4 : (quarter_index - 3) / 4;
  int quarter = quarter_index - year * 4 + 1;
  return std::to_string(year) + "q" + std::to_string(quarter);
}

Panel::Panel(std::vector<std::string> countries, std::vector<int> periods)
    : countries_(std::move(countries)), periods_(std::move(periods)) {
  for (std::size_t i = 1; i < countries_.size(); ++i)
    if (!(countries_[i - 1] < countries_[i]))
      fail(ErrorKind::Schema, "countries must be unique and sorted");
  for (std::size_t t = 1; t < periods_.size(); ++t)
    if (periods_[t] != periods_[t - 1] + 1)
      fail(ErrorKind::Schema, "periods must be consecutive quarters");
}

const Series& Panel::series(const std::string& name) const {
  auto it = series_.find(name);
  if (it == series_.end()) fail(ErrorKind::Specification, "unknown variable '" + name + "'");
  return it->second;
}

std::vector<std::string> Panel::names() const {
  std::vector<std::string> out;
  out.reserve(series_.size());
  for (const auto& [name, s] : series_) out.push_back(name);
  return out;
}

Panel Panel::with_series(const std::string& name, Series series, bool replace) const {
  if (has(name) && !replace)
    fail(ErrorKind::Specification,
         "variable '" + name + "' already exists (set replace to overwrite)");
  int rows = series.common ? 1 : units();
  if (series.values.rows() != rows || series.values.cols() != periods() ||
      series.missing.rows() != rows || series.missing.cols() != periods())
    fail(ErrorKind::Specification, "series '" + name + "' has the wrong shape");
  Panel out = *this;
  out.series_[name] = std::move(series);
  return out;
}

Panel Panel::window(int first, int last) const {
  int a = column_of(first);
  int b = column_of(last);
  if (a < 0 || b < 0 || b < a)
    fail(ErrorKind::Specification, "window " + format_period(first) + "-" +
                                       format_period(last) + " is outside the panel periods");
  std::vector<int> periods(periods_.begin() + a, periods_.begin() + b + 1);
  Panel out(countries_, std::move(periods));
  for (const auto& [name, s] : series_) {
    Series w;
    w.common = s.common;
    w.values = s.values.middleCols(a, b - a + 1);
    w.missing = s.missing.middleCols(a, b - a + 1);
    out.series_[name] = std::move(w);
  }
  return out;
}

int Panel::column_of(int quarter_index) const {
  if (periods_.empty()) return -1;
  int c = quarter_index - periods_.front();
  return (c >= 0 && c < periods()) ? c : -1;
}

Panel parse_csv(std::string_view text, const CsvSchema& schema) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!trim(line).empty()) lines.push_back(line);
    pos = nl + 1;
  }
  if (lines.empty()) fail(ErrorKind::Schema, "CSV input has no header row");

  auto header = split_csv_line(lines.front());
  if (!header.empty() && header[0].size() >= 3 &&
      header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
    header[0].erase(0, 3);
  std::unordered_map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = static_cast<int>(i);
  auto need = [&](const std::string& c) {
    auto it = col.find(c);
    if (it == col.end()) fail(ErrorKind::Schema, "CSV column '" + c + "' not found in header");
    return it->second;
  };
  int country_col = need(schema.country_column);
  int period_col = need(schema.period_column);
  std::vector<int> var_cols, cf_cols;
  for (const auto& m : schema.variables) var_cols.push_back(need(m.column));
  for (const auto& m : schema.common_factors) cf_cols.push_back(need(m.column));

  struct Row {
    std::string country;
    int period;
    std::vector<std::string> fields;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::set<std::string> country_set;
  std::set<std::pair<std::string, int>> seen;
  int pmin = 0, pmax = 0;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    auto fields = split_csv_line(lines[l]);
    if (fields.size() != header.size())
      fail(ErrorKind::Ingestion, "row " + std::to_string(l + 1) + ": expected " +
                                     std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
    std::string country(trim(fields[country_col]));
    if (country.empty()) fail(ErrorKind::Ingestion, "row " + std::to_string(l + 1) + ": empty country");
    int period = 0;
    try {
      period = parse_period(fields[period_col]);
    } catch (const Error& e) {
      fail(ErrorKind::Ingestion, "row " + std::to_string(l + 1) + ": " + e.what());
    }
    if (!seen.insert({country, period}).second)
      fail(ErrorKind::Schema, "duplicate (country, period) pair (" + country + ", " +
                                  format_period(period) + ") at row " + std::to_string(l + 1));
    if (rows.empty()) {
      pmin = pmax = period;
    } else {
      pmin = std::min(pmin, period);
      pmax = std::max(pmax, period);
    }
    country_set.insert(country);
    rows.push_back({std::move(country), period, std::move(fields), l + 1});
  }

  std::vector<std::string> countries(country_set.begin(), country_set.end());
  std::vector<int> periods;
  if (!rows.empty())
    for (int p = pmin; p <= pmax; ++p) periods.push_back(p);
  Panel panel(countries, periods);
  const int n = panel.units();
  const int t = panel.periods();

  std::unordered_map<std::string, int> unit_of;
  for (int i = 0; i < n; ++i) unit_of[countries[i]] = i;

  std::vector<Series> vars(schema.variables.size(), make_series(n, t, false));
  std::vector<Series> cfs(schema.common_factors.size(), make_series(1, t, true));

  auto cell = [&](const Row& r, int c) -> std::optional<double> {
    std::string_view f = trim(r.fields[c]);
    if (f.empty()) return std::nullopt;
    auto v = parse_number(f);
    if (!v)
      fail(ErrorKind::Ingestion, "row " + std::to_string(r.line) + ", column '" + header[c] +
                                     "': cannot parse '" + std::string(f) + "' as a number");
    return v;
  };

  for (const auto& r : rows) {
    int i = unit_of[r.country];
    int c = r.period - pmin;
    for (std::size_t k = 0; k < var_cols.size(); ++k) {
      if (auto v = cell(r, var_cols[k])) {
        vars[k].values(i, c) = *v;
        vars[k].missing(i, c) = false;
      }
    }
    for (std::size_t k = 0; k < cf_cols.size(); ++k) {
      if (auto v = cell(r, cf_cols[k])) {
        auto& s = cfs[k];
        if (!s.missing(0, c)) {
          double prev = s.values(0, c);
          if (std::abs(prev - *v) > 1e-9 * std::max(1.0, std::abs(prev)))
            fail(ErrorKind::Schema, "common factor '" + schema.common_factors[k].name +
                                        "' differs across countries at " +
                                        format_period(r.period) + " (row " +
                                        std::to_string(r.line) + ")");
        } else {
          s.values(0, c) = *v;
          s.missing(0, c) = false;
        }
      }
    }
  }

  for (std::size_t k = 0; k < vars.size(); ++k)
    panel = panel.with_series(schema.variables[k].name, std::move(vars[k]));
  for (std::size_t k = 0; k < cfs.size(); ++k)
    panel = panel.with_series(schema.common_factors[k].name, std::move(cfs[k]));
  return panel;
}

Panel load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IO, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema);
}

std::string to_csv(const Panel& panel) {
  std::vector<std::string> unit_names, common_names;
  for (const auto& name : panel.names())
    (panel.series(name).common ? common_names : unit_names).push_back(name);
  std::ostringstream out;
  out << "country,period";
  for (const auto& v : unit_names) out << ',' << v;
  for (const auto& v : common_names) out << ',' << v;
  out << '\n';
  for (int i = 0; i < panel.units(); ++i) {
    for (int t = 0; t < panel.periods(); ++t) {
      out << panel.countries()[i] << ',' << format_period(panel.period_index()[t]);
      for (const auto& v : unit_names) {
        const auto& s = panel.series(v);
        out << ',';
        if (!s.missing(i, t)) out << format_number(s.values(i, t));
      }
      for (const auto& v : common_names) {
        const auto& s = panel.series(v);
        out << ',';
        if (!s.missing(0, t)) out << format_number(s.values(0, t));
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_csv(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IO, "cannot write '" + path + "'");
  out << to_csv(panel);
}

Panel interpolate_linear(const Panel& panel, const std::string& variable) {
  Series s = panel.series(variable);
  std::vector<std::string> short_units;
  for (int i = 0; i < s.values.rows(); ++i) {
    std::vector<int> obs;
    for (int t = 0; t < s.values.cols(); ++t)
      if (!s.missing(i, t)) obs.push_back(t);
    if (obs.size() < 2) {
      short_units.push_back(s.common ? variable : panel.countries()[i]);
      continue;
    }
    for (std::size_t k = 1; k < obs.size(); ++k) {
      int a = obs[k - 1], b = obs[k];
      double xa = s.values(i, a), xb = s.values(i, b);
      for (int t = a + 1; t < b; ++t) {
        s.values(i, t) = xa + (t - a) * (xb - xa) / (b - a);
        s.missing(i, t) = false;
      }
    }
  }
  if (!short_units.empty()) {
    std::string list;
    for (const auto& u : short_units) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorKind::Specification, "cannot interpolate '" + variable +
                                       "': fewer than 2 observed values for " + list);
  }
  return panel.with_series(variable, std::move(s), true);
}

std::optional<TransformKind> transform_kind_from(std::string_view name) {
  if (name == "lag") return TransformKind::Lag;
  if (name == "diff") return TransformKind::Diff;
  if (name == "log") return TransformKind::Log;
  if (name == "standardize") return TransformKind::Standardize;
  if (name == "interpolate-linear") return TransformKind::InterpolateLinear;
  if (name == "real-rate-combine") return TransformKind::RealRateCombine;
  return std::nullopt;
}

const char* to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Lag: return "lag";
    case TransformKind::Diff: return "diff";
    case TransformKind::Log: return "log";
    case TransformKind::Standardize: return "standardize";
    case TransformKind::InterpolateLinear: return "interpolate-linear";
    case TransformKind::RealRateCombine: return "real-rate-combine";
  }
  return "?";
}

Panel apply_transform(const Panel& panel, const TransformSpec& spec) {
  const Series& src = panel.series(spec.source);
  const std::string target = spec.target.empty() ? spec.source : spec.target;
  const bool in_place = target == spec.source;
  // Interpolation fills gaps in place; every other transform must name a
  // fresh target unless overwriting is explicitly requested.
  const bool fills_in_place = in_place && spec.kind == TransformKind::InterpolateLinear;
  if (panel.has(target) && !spec.replace && !fills_in_place)
    fail(ErrorKind::Specification, "transform target '" + target +
                                       "' already exists (set replace to overwrite)");
  const int rows = static_cast<int>(src.values.rows());
  const int cols = static_cast<int>(src.values.cols());
  Series out = make_series(rows, cols, src.common);

  switch (spec.kind) {
    case TransformKind::Lag: {
      if (spec.k < 1) fail(ErrorKind::Specification, "lag order must be >= 1");
      if (spec.k >= cols)
        fail(ErrorKind::Specification, "lag order " + std::to_string(spec.k) +
                                           " is not smaller than T = " + std::to_string(cols));
      out.values.rightCols(cols - spec.k) = src.values.leftCols(cols - spec.k);
      out.missing.rightCols(cols - spec.k) = src.missing.leftCols(cols - spec.k);
      break;
    }
    case TransformKind::Diff: {
      for (int i = 0; i < rows; ++i)
        for (int t = 1; t < cols; ++t)
          if (!src.missing(i, t) && !src.missing(i, t - 1)) {
            out.values(i, t) = src.values(i, t) - src.values(i, t - 1);
            out.missing(i, t) = false;
          }
      break;
    }
    case TransformKind::Log: {
      for (int i = 0; i < rows; ++i)
        for (int t = 0; t < cols; ++t) {
          if (src.missing(i, t)) continue;
          double v = src.values(i, t);
          if (!(v > 0.0))
            fail(ErrorKind::Specification, "log of non-positive value in '" + spec.source + "'");
          out.values(i, t) = std::log(v);
          out.missing(i, t) = false;
        }
      break;
    }
    case TransformKind::Standardize: {
      // Pooled over all observed cells: the whole panel for country series,
      // the T-vector for common factors (which has a single row).
      long double sum = 0, n = 0;
      for (int i = 0; i < rows; ++i)
        for (int t = 0; t < cols; ++t)
          if (!src.missing(i, t)) {
            sum += src.values(i, t);
            n += 1;
          }
      if (n < 2) fail(ErrorKind::Specification, "standardize needs at least 2 observations");
      long double mean = sum / n, ss = 0;
      for (int i = 0; i < rows; ++i)
        for (int t = 0; t < cols; ++t)
          if (!src.missing(i, t)) ss += (src.values(i, t) - mean) * (src.values(i, t) - mean);
      double sd = static_cast<double>(std::sqrt(ss / (n - 1)));
      if (!(sd > 0.0))
        fail(ErrorKind::Specification, "standardize: '" + spec.source + "' has zero variance");
      for (int i = 0; i < rows; ++i)
        for (int t = 0; t < cols; ++t)
          if (!src.missing(i, t)) {
            out.values(i, t) = (src.values(i, t) - static_cast<double>(mean)) / sd;
            out.missing(i, t) = false;
          }
      break;
    }
    case TransformKind::InterpolateLinear: {
      Panel tmp = panel;
      if (!in_place) tmp = panel.with_series(target, src, true);
      return interpolate_linear(tmp, target);
    }
    case TransformKind::RealRateCombine: {
      if (spec.cpi.empty())
        fail(ErrorKind::Specification, "real-rate-combine needs a cpi source");
      const Series& cpi = panel.series(spec.cpi);
      if (cpi.common != src.common && !cpi.common)
        fail(ErrorKind::Specification, "real-rate-combine: cpi must be a country series or common factor");
      for (int i = 0; i < rows; ++i) {
        int ci = cpi.common ? 0 : i;
        for (int t = 1; t < cols; ++t) {
          if (src.missing(i, t) || cpi.missing(ci, t) || cpi.missing(ci, t - 1)) continue;
          double p1 = cpi.values(ci, t), p0 = cpi.values(ci, t - 1);
          if (!(p1 > 0.0) || !(p0 > 0.0))
            fail(ErrorKind::Specification, "real-rate-combine: non-positive cpi in '" + spec.cpi + "'");
          out.values(i, t) = src.values(i, t) - spec.scale * 4.0 * (std::log(p1) - std::log(p0));
          out.missing(i, t) = false;
        }
      }
      break;
    }
  }
  return panel.with_series(target, std::move(out), true);
}

CommonBlock cross_section_averages(const Panel& panel,
                                   const std::vector<std::string>& variables, int lags) {
  if (lags < 0) fail(ErrorKind::Specification, "cross-section average lags must be >= 0");
  const int t = panel.periods();
  CommonBlock block;
  const int c = static_cast<int>(variables.size()) * (lags + 1);
  block.values = Matrix::Zero(t, c);
  block.missing = Mask::Constant(t, c, false);
  int col = 0;
  for (const auto& v : variables) {
    const Series& s = panel.series(v);
    if (s.common)
      fail(ErrorKind::Specification,
           "cross-section averages are taken over country series; '" + v + "' is a common factor");
    if (!s.complete())
      fail(ErrorKind::Specification,
           "cross-section average of '" + v + "' needs a complete series; interpolate or balance first");
    Vector avg = s.values.colwise().mean().transpose();
    for (int l = 0; l <= lags; ++l, ++col) {
      block.names.push_back(l == 0 ? "csa_" + v : "L" + std::to_string(l) + ".csa_" + v);
      for (int tt = 0; tt < t; ++tt) {
        if (tt - l < 0) {
          block.missing(tt, col) = true;
        } else {
          block.values(tt, col) = avg(tt - l);
        }
      }
    }
  }
  return block;
}

Panel balance(const Panel& panel, const std::vector<std::string>& variables, int first,
              int last) {
  Panel w = panel.window(first, last);
  std::ostringstream cells;
  std::map<std::string, int> per_country;
  int missing = 0;
  for (const auto& v : variables) {
    const Series& s = w.series(v);
    for (int i = 0; i < s.missing.rows(); ++i)
      for (int t = 0; t < s.missing.cols(); ++t)
        if (s.missing(i, t)) {
          std::string who = s.common ? std::string("(common)") : w.countries()[i];
          cells << "  (" << who << ", " << format_period(w.period_index()[t]) << ", " << v
                << ")\n";
          ++per_country[who];
          ++missing;
        }
  }
  if (missing > 0) {
    std::ostringstream msg;
    msg << "panel is not balanced: " << missing << " missing cell(s)\nper country:";
    for (const auto& [who, count] : per_country) msg << ' ' << who << '=' << count;
    msg << "\ncells:\n" << cells.str();
    fail(ErrorKind::Specification, msg.str());
  }
  return w;
}

}  // namespace ccepc
