#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace ccepc {

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json mat(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(Vector(m.row(i).transpose())));
  return a;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_int(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld", v);
  return buf;
}

std::string pad_left(const std::string& s, int width) {
  int w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string pad_right(const std::string& s, int width) {
  int w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string stars(double p) {
  if (!std::isfinite(p)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

std::string value_text(double v) { return std::isfinite(v) ? fmt("%.3f", v) : "."; }

constexpr int kLabelWidth = 30;
constexpr int kValueWidth = 11;
constexpr int kStarWidth = 3;
constexpr int kCellWidth = kValueWidth + kStarWidth;

std::string cell(const std::string& value, const std::string& star = "") {
  return pad_left(value, kValueWidth) + pad_right(star, kStarWidth);
}

const std::string kBlankCell(kCellWidth, ' ');

}  // namespace

int display_width(const std::string& s) {
  int w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

Json test_to_json(const TestReport& r) {
  Json j;
  j["name"] = r.name;
  j["statistic"] = num(r.statistic);
  j["p_value"] = num(r.p_value);
  j["null"] = r.null_description;
  j["reference"] = r.reference;
  j["n"] = r.n;
  j["t"] = r.t;
  j["k"] = r.k;
  Json extra = Json::object();
  for (const auto& [k, v] : r.extra) extra[k] = num(v);
  j["extra"] = extra;
  return j;
}

Json bundle_to_json(const TestBundle& b) {
  Json j = Json::object();
  auto put = [&](const char* key, const std::optional<TestReport>& r) {
    j[key] = r ? test_to_json(*r) : Json(nullptr);
  };
  put("cd", b.cd);
  put("wald_pc", b.wald_pc);
  put("delta_all", b.delta_all);
  put("delta_pc", b.delta_pc);
  put("loading_sum", b.loading_sum);
  j["skipped"] = b.skipped;
  return j;
}

Json fit_to_json(const FitResult& fit, const TestBundle* tests) {
  Json j;
  j["label"] = fit.spec.label;
  j["kind"] = fit.kind;
  j["estimator"] = to_string(fit.spec.estimator);
  j["variance"] = fit.variance;
  j["notes"] = fit.notes;
  j["sample"] = Json{{"countries", fit.sample.n},
                     {"periods", fit.sample.t},
                     {"obs", fit.sample.obs},
                     {"first", format_period(fit.sample.first_period)},
                     {"last", format_period(fit.sample.last_period)},
                     {"trim", fit.design.trim}};
  const CoefTable& ct = fit.coefficients();
  Json cols = Json::array();
  for (std::size_t c = 0; c < fit.columns().size(); ++c) {
    const DesignColumn& d = fit.columns()[c];
    Json col{{"name", d.name},
             {"block", to_string(d.block)},
             {"base", d.base},
             {"lag", d.lag},
             {"regime", d.regime < 0 ? Json(nullptr) : Json(d.regime)},
             {"coef", num(ct.coef(c))},
             {"se", num(ct.se(c))},
             {"t", num(ct.t(c))},
             {"p", num(ct.p(c))},
             {"n_units", c < ct.n_units.size() ? ct.n_units[c] : 0}};
    cols.push_back(col);
  }
  j["coefficients"] = cols;
  j["covariance"] = mat(ct.cov);
  j["r2"] = Json{{"r2", num(fit.r2)}, {"r2_mg", num(fit.r2_mg)}, {"r2_within", num(fit.r2_within)}};
  Json units = Json::array();
  for (const auto& u : fit.per_unit) {
    Json coef = Json::array();
    for (Eigen::Index c = 0; c < u.ols.coef.size(); ++c)
      coef.push_back(u.ols.dropped[c] ? Json(nullptr) : num(u.ols.coef(c)));
    units.push_back(Json{{"country", u.country},
                         {"coef", coef},
                         {"rank", u.ols.rank},
                         {"df", u.ols.df},
                         {"sigma2", num(u.ols.sigma2)},
                         {"r2", num(u.ols.r2)}});
  }
  j["per_unit"] = units;
  j["tests"] = tests ? bundle_to_json(*tests) : Json(nullptr);
  return j;
}

Json factor_count_to_json(const FactorCount& fc) {
  return Json{{"k_er", fc.k_er},         {"k_gr", fc.k_gr},         {"kmax", fc.kmax},
              {"kmax_used", fc.kmax_used}, {"er", vec(fc.er)},       {"gr", vec(fc.gr)},
              {"er0", num(fc.er0)},        {"gr0", num(fc.gr0)},     {"prefers_zero", fc.prefers_zero},
              {"warnings", fc.warnings}};
}

Json numfac_to_json(const NumFac& nf) {
  return Json{{"y", factor_count_to_json(nf.y)},
              {"u", factor_count_to_json(nf.u)},
              {"eigenvalues_y", vec(nf.spectrum_y.eigenvalues)},
              {"eigenvalues_u", vec(nf.spectrum_u.eigenvalues)},
              {"clamped_y", nf.spectrum_y.clamped},
              {"clamped_u", nf.spectrum_u.clamped}};
}

Json factors_to_json(const FactorSet& fs) {
  Json periods = Json::array();
  for (int p : fs.periods) periods.push_back(format_period(p));
  Json anchors = Json::array();
  for (const auto& a : fs.anchors)
    anchors.push_back(Json{{"rule", a.rule}, {"value", num(a.value)}, {"flipped", a.flipped}});
  Json comps = Json::array();
  for (int c = 0; c < fs.count(); ++c) comps.push_back(vec(Vector(fs.components.col(c))));
  Json loads = Json::array();
  for (int c = 0; c < fs.count(); ++c) loads.push_back(vec(Vector(fs.loadings.col(c))));
  return Json{{"count", fs.count()},
              {"share_total", num(fs.share_total())},
              {"shares", vec(std::vector<double>(fs.shares.begin(),
                                                 fs.shares.begin() + std::min<std::size_t>(fs.count(), fs.shares.size())))},
              {"anchors", anchors},
              {"periods", periods},
              {"components", comps},
              {"loadings", loads}};
}

Json pipeline_to_json(const PipelineResult& p) {
  Json j;
  j["step1"] = fit_to_json(p.step1, &p.step1_tests);
  j["numfac"] = numfac_to_json(p.numfac);
  j["m"] = p.m;
  j["m_source"] = p.m_source;
  j["factors"] = factors_to_json(p.factors);
  j["step3"] = fit_to_json(p.step3, &p.step3_tests);
  j["step3_regime"] = p.step3_regime ? fit_to_json(*p.step3_regime, &*p.step3_regime_tests) : Json(nullptr);
  j["warnings"] = p.warnings;
  return j;
}

Json benchmarks_to_json(const std::vector<BenchmarkColumn>& columns) {
  Json a = Json::array();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    Json c = fit_to_json(columns[i].fit, &columns[i].tests);
    c["column"] = static_cast<int>(i + 1);
    c["header"] = columns[i].header;
    c.erase("per_unit");
    c.erase("covariance");
    a.push_back(c);
  }
  return a;
}

Json dissect_to_json(const std::vector<DissectTable>& tables, DissectMode mode) {
  Json a = Json::array();
  for (const auto& t : tables) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < t.names.size(); ++i)
      rows.push_back(Json{{"name", t.names[i]}, {"coef", num(t.coef(i))}, {"se", num(t.se(i))}});
    a.push_back(Json{{"component", t.component}, {"rows", rows}, {"r2", num(t.r2)}, {"periods", t.periods}});
  }
  return Json{{"mode", mode == DissectMode::Levels ? "levels" : "fd"}, {"tables", a}};
}

Json mc_to_json(const McReport& r) {
  Json j;
  j["reps"] = r.reps;
  j["completed"] = r.completed;
  j["true_factors"] = r.true_factors;
  Json metrics = Json::object();
  for (const auto& [k, m] : r.metrics)
    metrics[k] = Json{{"bias", num(m.bias)}, {"mae", num(m.mae)}, {"rmse", num(m.rmse)},
                      {"mc_se", num(m.mc_se)}, {"count", m.count}};
  j["metrics"] = metrics;
  Json rej = Json::object();
  for (const auto& [k, v] : r.rejection) rej[k] = num(v);
  j["rejection"] = rej;
  Json hits = Json::object();
  for (const auto& [k, v] : r.numfac_hits) hits[k] = num(v);
  j["numfac_hits"] = hits;
  Json counts = Json::object();
  for (const auto& [k, v] : r.numfac_counts) counts[k] = v;
  j["numfac_counts"] = counts;
  Json pv = Json::object();
  for (const auto& [k, v] : r.p_values) pv[k] = vec(v);
  j["p_values"] = pv;
  Json fails = Json::array();
  for (const auto& f : r.failures)
    fails.push_back(Json{{"rep", f.rep}, {"seed", f.seed}, {"message", f.message}});
  j["failures"] = fails;
  return j;
}

std::string residuals_csv(const FitResult& fit) {
  std::string out = "country,period,residual\n";
  const auto& periods = fit.design.periods;
  for (Eigen::Index i = 0; i < fit.residuals.rows(); ++i) {
    const std::string& country = fit.design.countries[i];
    for (Eigen::Index t = 0; t < fit.residuals.cols(); ++t) {
      out += country;
      out += ',';
      out += format_period(periods[t]);
      out += ',';
      out += fmt("%.17g", fit.residuals(i, t));
      out += '\n';
    }
  }
  return out;
}

namespace {

struct RowKey {
  int group;  // display group
  std::string key;
  bool operator<(const RowKey& o) const { return group != o.group ? group < o.group : key < o.key; }
};

enum Group { kMain = 0, kCfOne, kCfZero, kPc, kPcOne, kPcZero, kGroups };

int group_of(const DesignColumn& d) {
  switch (d.block) {
    case Block::LagDep:
    case Block::Regressor: return kMain;
    case Block::ObservedCf:
      if (d.lag != 0) return -1;
      return d.regime == 0 ? kCfZero : kCfOne;
    case Block::Pc:
      if (d.regime < 0) return kPc;
      return d.regime == 1 ? kPcOne : kPcZero;
    default: return -1;
  }
}

std::string row_label(const DesignColumn& d) {
  if (d.block == Block::LagDep) return d.base + "(t-1)";
  if (d.block == Block::Pc) {
    std::string b = d.base;
    if (b.rfind("pc", 0) == 0) return "  PC" + b.substr(2);
    return "  " + b;
  }
  if (d.block == Block::ObservedCf) return "  " + d.base;
  return d.base;
}

std::string row_id(const DesignColumn& d) {
  if (d.block == Block::LagDep) return "L." + d.base;
  return d.base;
}

std::string line(const std::string& label, const std::vector<std::string>& cells) {
  std::string s = pad_right(label, kLabelWidth);
  for (const auto& c : cells) s += c;
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s + "\n";
}

}  // namespace

std::string render_table(const std::vector<TableColumn>& columns, const TableExtras& extras) {
  const std::size_t nc = columns.size();
  const int width = kLabelWidth + kCellWidth * static_cast<int>(nc);
  const std::string rule_heavy(width, '=');
  const std::string rule(width, '-');

  std::optional<std::string> regime;
  for (const auto& c : columns)
    if (c.fit->spec.regime_var) regime = *c.fit->spec.regime_var;

  // Rows in order of first appearance, per group; each (column, row) maps to
  // a design column.
  std::vector<std::vector<std::string>> order(kGroups);
  std::map<std::string, std::string> labels;
  std::vector<std::map<std::string, int>> where(nc);
  for (std::size_t ci = 0; ci < nc; ++ci) {
    const auto& cols = columns[ci].fit->columns();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      int g = group_of(cols[k]);
      if (g < 0) continue;
      std::string id = std::to_string(g) + "|" + row_id(cols[k]);
      auto& o = order[g];
      if (std::find(o.begin(), o.end(), id) == o.end()) {
        o.push_back(id);
        labels[id] = row_label(cols[k]);
      }
      where[ci][id] = static_cast<int>(k);
    }
  }

  std::string out = rule_heavy + "\n";
  {
    std::vector<std::string> nums, kinds;
    for (std::size_t ci = 0; ci < nc; ++ci) {
      nums.push_back(cell("(" + std::to_string(ci + 1) + ")"));
      kinds.push_back(cell(columns[ci].header));
    }
    out += line("", nums);
    out += line("", kinds);
  }
  out += rule + "\n";

  auto coef_rows = [&](const std::string& id) {
    std::vector<std::string> est(nc, kBlankCell), se(nc, kBlankCell);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      auto it = where[ci].find(id);
      if (it == where[ci].end()) continue;
      const CoefTable& ct = columns[ci].fit->coefficients();
      int k = it->second;
      est[ci] = cell(value_text(ct.coef(k)));
      if (std::isfinite(ct.se(k)))
        se[ci] = cell("(" + fmt("%.3f", ct.se(k)) + ")", stars(ct.p(k)));
      else
        se[ci] = cell(".");
    }
    out += line(labels[id], est);
    out += line("", se);
  };

  const std::string reg = regime.value_or("");
  const std::string headers[kGroups] = {
      "",
      regime ? "Observed Common Factors (" + reg + " = 1 if coefficients vary)" : "Observed Common Factors",
      "Observed Common Factors (" + reg + " = 0)",
      "Principal Components (PC)",
      "Principal Components (PC) " + reg + " = 1",
      "Principal Components (PC) " + reg + " = 0"};
  for (int g = 0; g < kGroups; ++g) {
    if (order[g].empty()) continue;
    if (g != kMain) out += headers[g] + "\n";
    for (const auto& id : order[g]) coef_rows(id);
  }

  // Footer.
  auto row = [&](const std::string& label, auto&& value_of) {
    std::vector<std::string> cells(nc, kBlankCell);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      std::optional<std::string> v = value_of(ci);
      if (v) cells[ci] = cell(*v);
    }
    out += line(label, cells);
  };
  out += rule + "\n";
  row("Obs", [&](std::size_t ci) { return std::optional(fmt_int(columns[ci].fit->sample.obs)); });
  row("Countries", [&](std::size_t ci) { return std::optional(fmt_int(columns[ci].fit->sample.n)); });
  row("Time Periods", [&](std::size_t ci) { return std::optional(fmt_int(columns[ci].fit->sample.t)); });

  auto test_rows = [&](const std::string& label, std::optional<TestReport> TestBundle::*slot) {
    auto get = [&](std::size_t ci) -> const TestReport* {
      if (!columns[ci].tests) return nullptr;
      const auto& r = columns[ci].tests->*slot;
      return r ? &*r : nullptr;
    };
    row(label, [&](std::size_t ci) -> std::optional<std::string> {
      auto r = get(ci);
      return r ? std::optional(value_text(r->statistic)) : std::nullopt;
    });
    row("  p", [&](std::size_t ci) -> std::optional<std::string> {
      auto r = get(ci);
      return r ? std::optional(value_text(r->p_value)) : std::nullopt;
    });
  };
  out += rule + "\n";
  test_rows("CD", &TestBundle::cd);
  out += rule + "\n";
  test_rows("F: PC = 0", &TestBundle::wald_pc);
  test_rows("Δ (all)", &TestBundle::delta_all);
  test_rows("Δ (PC)", &TestBundle::delta_pc);
  test_rows("t: PC F1 > PC F0", &TestBundle::loading_sum);

  if (extras.factors && extras.factors->count() > 0) {
    const FactorSet& fs = *extras.factors;
    out += rule + "\n";
    auto first_only = [&](const std::string& label, double v) {
      row(label, [&](std::size_t ci) -> std::optional<std::string> {
        return ci == 0 ? std::optional(value_text(v)) : std::nullopt;
      });
    };
    first_only("Share PC (all)", fs.share_total());
    for (int c = 0; c < fs.count() && c < static_cast<int>(fs.shares.size()); ++c)
      first_only("  PC " + std::to_string(c + 1), fs.shares[c]);
  }

  out += rule + "\n";
  row("R2", [&](std::size_t ci) { return std::optional(value_text(columns[ci].fit->r2)); });
  row("R2 (MG)", [&](std::size_t ci) -> std::optional<std::string> {
    double v = columns[ci].fit->r2_mg;
    return std::isfinite(v) ? std::optional(value_text(v)) : std::nullopt;
  });
  row("R2 (within)", [&](std::size_t ci) { return std::optional(value_text(columns[ci].fit->r2_within)); });

  if (extras.numfac) {
    out += rule + "\n";
    out += "Estimated Number of Common Factors\n";
    auto count_row = [&](const std::string& label, int k) {
      row(label, [&](std::size_t ci) -> std::optional<std::string> {
        return ci == 0 ? std::optional(fmt_int(k)) : std::nullopt;
      });
    };
    count_row("  û", extras.numfac->u.k_gr);
    count_row("  y", extras.numfac->y.k_gr);
  }
  out += rule_heavy + "\n";
  out += "Standard errors in parentheses. * p<0.10, ** p<0.05, *** p<0.01.\n";
  return out;
}

std::string render_test(const TestReport& r) {
  std::ostringstream s;
  s << r.name << "\n";
  s << pad_right("  statistic", 20) << value_text(r.statistic) << "\n";
  s << pad_right("  p-value", 20) << value_text(r.p_value) << "\n";
  s << pad_right("  N, T", 20) << r.n << ", " << r.t << "\n";
  for (const auto& [k, v] : r.extra) s << pad_right("  " + k, 20) << value_text(v) << "\n";
  s << "  H0: " << r.null_description << "\n";
  s << "  reference: " << r.reference << "\n";
  return s.str();
}

std::string render_numfac(const NumFac& nf, int m, const std::string& m_source) {
  std::ostringstream s;
  s << "Estimated number of common factors (Ahn-Horenstein)\n";
  s << pad_right("", 10) << pad_left("y", 10) << pad_left("û", 10) << "\n";
  s << pad_right("k (GR)", 10) << pad_left(fmt_int(nf.y.k_gr), 10) << pad_left(fmt_int(nf.u.k_gr), 10) << "\n";
  s << pad_right("k (ER)", 10) << pad_left(fmt_int(nf.y.k_er), 10) << pad_left(fmt_int(nf.u.k_er), 10) << "\n";
  s << pad_right("kmax", 10) << pad_left(fmt_int(nf.y.kmax_used), 10) << pad_left(fmt_int(nf.u.kmax_used), 10)
    << "\n";
  if (m > 0) s << "components carried forward: " << m << " (" << m_source << ")\n";
  s << "\n" << pad_right("k", 4) << pad_left("ER(y)", 12) << pad_left("GR(y)", 12) << pad_left("ER(û)", 12)
    << pad_left("GR(û)", 12) << "\n";
  std::size_t rows = std::max(nf.y.er.size(), nf.u.er.size());
  auto at = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? value_text(v[i]) : std::string(".");
  };
  for (std::size_t i = 0; i < rows; ++i)
    s << pad_right(fmt_int(static_cast<long long>(i + 1)), 4) << pad_left(at(nf.y.er, i), 12)
      << pad_left(at(nf.y.gr, i), 12) << pad_left(at(nf.u.er, i), 12) << pad_left(at(nf.u.gr, i), 12) << "\n";
  for (const auto& w : nf.y.warnings) s << "warning (y): " << w << "\n";
  for (const auto& w : nf.u.warnings) s << "warning (û): " << w << "\n";
  return s.str();
}

std::string render_dissect(const std::vector<DissectTable>& tables, DissectMode mode) {
  std::ostringstream s;
  s << "Principal component dissection (" << (mode == DissectMode::Levels ? "L" : "FD")
    << "; variables standardized)\n";
  if (tables.empty()) return s.str();
  std::vector<std::string> head;
  for (const auto& t : tables) head.push_back(cell(t.component));
  s << line("", head);
  for (std::size_t r = 0; r < tables[0].names.size(); ++r) {
    std::vector<std::string> est, se;
    for (const auto& t : tables) {
      est.push_back(cell(value_text(t.coef(r))));
      double p = std::isfinite(t.se(r)) && t.se(r) > 0 ? normal_two_sided_p(t.coef(r) / t.se(r)) : NAN;
      se.push_back(std::isfinite(t.se(r)) ? cell("(" + fmt("%.3f", t.se(r)) + ")", stars(p)) : cell("."));
    }
    s << line(tables[0].names[r], est) << line("", se);
  }
  std::vector<std::string> r2, periods;
  for (const auto& t : tables) {
    r2.push_back(cell(value_text(t.r2)));
    periods.push_back(cell(fmt_int(t.periods)));
  }
  s << line("Time Periods", periods) << line("R2", r2);
  return s.str();
}

std::string render_mc(const McReport& r) {
  std::ostringstream s;
  s << "Monte Carlo: " << r.completed << " of " << r.reps << " replications completed, N=" << r.config.n
    << ", T=" << r.config.t << ", true factors " << r.true_factors << "\n\n";
  s << pad_right("parameter", 22) << pad_left("bias", 11) << pad_left("MAE", 11) << pad_left("RMSE", 11)
    << pad_left("MC s.e.", 11) << pad_left("count", 8) << "\n";
  for (const auto& [k, m] : r.metrics)
    s << pad_right(k, 22) << pad_left(fmt("%.4f", m.bias), 11) << pad_left(fmt("%.4f", m.mae), 11)
      << pad_left(fmt("%.4f", m.rmse), 11) << pad_left(fmt("%.4f", m.mc_se), 11) << pad_left(fmt_int(m.count), 8)
      << "\n";
  if (!r.rejection.empty()) {
    s << "\n" << pad_right("rejection frequency", 22) << pad_left("rate", 11) << "\n";
    for (const auto& [k, v] : r.rejection) s << pad_right(k, 22) << pad_left(fmt("%.3f", v), 11) << "\n";
  }
  if (!r.numfac_hits.empty()) {
    s << "\n" << pad_right("factor-count hit rate", 22) << pad_left("rate", 11) << "\n";
    for (const auto& [k, v] : r.numfac_hits) s << pad_right(k, 22) << pad_left(fmt("%.3f", v), 11) << "\n";
  }
  for (const auto& f : r.failures)
    s << "failed replication " << f.rep << " (seed " << f.seed << "): " << f.message << "\n";
  return s.str();
}

}  // namespace ccepc
