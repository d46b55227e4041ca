#include "commands.hpp"

#include "error.hpp"
#include "report.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#ifndef CCEPC_VERSION
#define CCEPC_VERSION "0.0.0"
#endif

namespace ccepc {

namespace {

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

std::vector<std::string> referenced_variables(const RunConfig& c) {
  std::vector<std::string> v;
  if (!c.model) return v;
  const ModelSpec& m = *c.model;
  add_unique(v, m.dependent);
  for (const auto& r : m.regressors) add_unique(v, r);
  for (const auto& g : m.observed_cf) add_unique(v, g);
  if (m.csa)
    for (const auto& a : m.csa->variables) add_unique(v, a);
  if (m.regime_var) add_unique(v, *m.regime_var);
  if (c.pipeline.dissect)
    for (const auto& o : c.pipeline.dissect->observables) add_unique(v, o);
  return v;
}

Json envelope(const RunConfig& c, const std::string& command) {
  Json j;
  j["config"] = to_json(c);
  j["provenance"] = Json{{"version", CCEPC_VERSION}, {"command", command}, {"seed", c.seed}};
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

CommandResult cmd_estimate(const RunConfig& c, const Panel& panel) {
  FitResult f = fit(*c.model, panel, nullptr, 0, c.threads);
  TestBundle tests = standard_tests(f);
  CommandResult r;
  r.document = envelope(c, "estimate");
  r.document["fit"] = fit_to_json(f, &tests);
  std::string header = f.kind == "MG" && f.spec.csa ? "MG-CCE" : f.kind;
  r.text = render_table({{header, &f, &tests}});
  r.artifacts = {{"table.txt", r.text}, {"fit.json", ""}, {"residuals.csv", residuals_csv(f)}};
  return r;
}

CommandResult cmd_pipeline(const RunConfig& c, const Panel& panel) {
  PipelineOptions opt = c.pipeline.options;
  ModelSpec spec = *c.model;
  if (spec.pcs && !opt.pcs) opt.pcs = spec.pcs;
  spec.pcs.reset();

  CommandResult r;
  r.document = envelope(c, "pipeline");
  PipelineResult p;
  std::vector<BenchmarkColumn> bench;
  if (spec.regime_var && c.pipeline.benchmarks) {
    BenchmarkResult b = run_benchmarks(panel, spec, opt);
    p = std::move(b.pipeline);
    bench = std::move(b.columns);
  } else {
    p = run_three_step(panel, spec, opt);
    bench.push_back({"MG-CCE", p.step1, p.step1_tests});
    bench.push_back({"MG", p.step3, p.step3_tests});
    if (p.step3_regime) bench.push_back({"MG", *p.step3_regime, *p.step3_regime_tests});
  }
  r.document["provenance"]["m"] = p.m;
  r.document["provenance"]["m_source"] = p.m_source;
  Json body = pipeline_to_json(p);
  for (auto it = body.begin(); it != body.end(); ++it) r.document[it.key()] = it.value();
  r.document["benchmarks"] = benchmarks_to_json(bench);

  std::vector<TableColumn> cols;
  for (const auto& b : bench) cols.push_back({b.header, &b.fit, &b.tests});
  r.text = render_table(cols, {&p.factors, &p.numfac});

  Json dissect = Json::array();
  std::string dissect_text;
  if (c.pipeline.dissect) {
    for (DissectMode mode : c.pipeline.dissect->modes) {
      auto tables = dissect_pcs(p.factors, panel, c.pipeline.dissect->observables, mode);
      dissect.push_back(dissect_to_json(tables, mode));
      dissect_text += render_dissect(tables, mode) + "\n";
    }
  }
  r.document["dissect"] = dissect;
  // warnings last so they are easy to find
  Json warnings = r.document["warnings"];
  r.document.erase("warnings");
  r.document["warnings"] = warnings;

  r.artifacts = {{"table.txt", r.text},
                 {"pipeline.json", ""},
                 {"residuals.csv", residuals_csv(p.step3)},
                 {"step1_residuals.csv", residuals_csv(p.step1)},
                 {"pcs.csv", factors_to_csv(p.factors)}};
  if (!dissect_text.empty()) r.artifacts.push_back({"dissect.txt", dissect_text});
  if (!dissect_text.empty()) r.text += "\n" + dissect_text;
  return r;
}

CommandResult cmd_numfac(const RunConfig& c, const Panel& panel) {
  FitResult f = fit(*c.model, panel, nullptr, 0, c.threads);
  Matrix u = composite_residuals(f, *c.model, panel, c.pipeline.options.subtract_observed_cf);
  std::vector<std::string> warnings;
  NumFac nf = count_factors(f.design, u, c.pipeline.options, warnings);
  CommandResult r;
  r.document = envelope(c, "numfac");
  r.document["sample"] = Json{{"countries", f.sample.n}, {"periods", f.sample.t}};
  r.document["numfac"] = numfac_to_json(nf);
  r.document["warnings"] = warnings;
  r.text = render_numfac(nf);
  r.artifacts = {{"numfac.txt", r.text}, {"numfac.json", ""}};
  return r;
}

CommandResult cmd_cd(const RunConfig& c, const Panel& panel) {
  FitResult f = fit(*c.model, panel, nullptr, 0, c.threads);
  TestReport cd = cd_test(f.residuals, f.design.countries);
  CommandResult r;
  r.document = envelope(c, "cd");
  r.document["model"] = Json{{"label", f.spec.label}, {"kind", f.kind}};
  r.document["cd"] = test_to_json(cd);
  r.text = "Residuals of " + f.kind + (f.spec.label.empty() ? "" : " (" + f.spec.label + ")") + "\n" +
           render_test(cd);
  r.artifacts = {{"cd.txt", r.text}, {"cd.json", ""}};
  return r;
}

CommandResult cmd_simulate(const RunConfig& c) {
  const SimulationConfig& s = *c.simulation;
  McReport mc = run_monte_carlo(s.dgp, s.reps, s.suite, c.threads);
  CommandResult r;
  r.document = envelope(c, "simulate");
  r.document["run_info"] = Json{{"utc", mc.utc}, {"wall_clock_seconds", mc.wall_clock_seconds}};
  r.document["report"] = mc_to_json(mc);
  r.text = render_mc(mc);
  r.artifacts = {{"summary.txt", r.text}, {"mc.json", ""}};
  if (s.export_panel) r.artifacts.push_back({"panel.csv", to_csv(gen_dgp(s.dgp).panel)});
  return r;
}

}  // namespace

RunConfig resolve(const std::string& command, const Json& config, const Json& overrides) {
  RunConfig c = parse_config(config);
  apply_overrides(c, overrides_from_json(overrides));
  check_for_command(c, command);
  return c;
}

Panel prepare_panel(const RunConfig& c) {
  if (c.simulation) {
    Panel p = gen_dgp(c.simulation->dgp).panel;
    for (const auto& t : c.transforms) p = apply_transform(p, t);
    return p;
  }
  Panel p = load_csv(c.input->path, c.input->schema);
  for (const auto& t : c.transforms) p = apply_transform(p, t);
  if (p.periods() == 0) fail(ErrorKind::Schema, "input has no periods");
  const int first = c.input->first.value_or(p.period_index().front());
  const int last = c.input->last.value_or(p.period_index().back());
  return balance(p, referenced_variables(c), first, last);
}

CommandResult run_command(const std::string& command, const Json& config, const Json& overrides) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig c = resolve(command, config, overrides);
  CommandResult r;
  if (command == "simulate") {
    r = cmd_simulate(c);
  } else {
    Panel panel = prepare_panel(c);
    if (command == "estimate") r = cmd_estimate(c, panel);
    else if (command == "pipeline") r = cmd_pipeline(c, panel);
    else if (command == "numfac") r = cmd_numfac(c, panel);
    else r = cmd_cd(c, panel);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json info{{"utc", utc_now()}, {"wall_clock_seconds", seconds}, {"threads", c.threads}};
  if (r.document.contains("run_info")) info["utc"] = r.document["run_info"]["utc"];
  r.document["run_info"] = info;
  r.output_dir = c.output.directory;
  for (auto& a : r.artifacts)
    if (a.data.empty() && a.name.size() > 5 && a.name.substr(a.name.size() - 5) == ".json")
      a.data = dump(r.document);
  return r;
}

void write_artifacts(const CommandResult& result, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail(ErrorKind::IO, "cannot create output directory '" + directory + "': " + ec.message());
  for (const auto& a : result.artifacts) {
    const fs::path path = fs::path(directory) / a.name;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IO, "cannot write '" + path.string() + "'");
    out << a.data;
    if (!out) fail(ErrorKind::IO, "failed writing '" + path.string() + "'");
  }
}

}  // namespace ccepc
