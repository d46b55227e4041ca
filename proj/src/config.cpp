#include "config.hpp"

#include "error.hpp"

#include <set>

namespace ccepc {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  fail(ErrorKind::Config, "config: " + path + ": " + msg);
}

// Object reader that records consumed keys so leftovers can be rejected.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    static const Json null_value;
    auto it = j_.find(key);
    return it == j_.end() ? null_value : *it;
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), sub(key));
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(j_.at(key), sub(key));
  }

  template <class T>
  T need(const std::string& key) {
    used_.insert(key);
    if (!has(key)) bad(sub(key), "required");
    return convert<T>(j_.at(key), sub(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) bad(sub(it.key()), "unknown key");
  }

  template <class T>
  static T convert(const Json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, Json>) {
      (void)path;
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(path, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) bad(path, "expected an integer");
      return v.get<int>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad(path, "expected a nonnegative integer");
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) bad(path, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array()) bad(path, "expected a list of strings");
      std::vector<std::string> out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<std::string>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (v.is_number()) return {v.get<double>()};
      if (!v.is_array() || v.empty()) bad(path, "expected a number or a nonempty list of numbers");
      std::vector<double> out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<double>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

int period_from(const std::string& text, const std::string& path) {
  try {
    return parse_period(text);
  } catch (const Error& e) {
    bad(path, e.what());
  }
}

std::vector<ColumnMapping> mappings(const Json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected a list");
  std::vector<ColumnMapping> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (v[i].is_string()) {
      out.push_back({v[i].get<std::string>(), v[i].get<std::string>()});
      continue;
    }
    Obj o(v[i], p);
    ColumnMapping m;
    m.name = o.need<std::string>("name");
    m.column = o.get<std::string>("column", m.name);
    o.finish();
    out.push_back(m);
  }
  return out;
}

Json mappings_to_json(const std::vector<ColumnMapping>& ms) {
  Json a = Json::array();
  for (const auto& m : ms) a.push_back(Json{{"name", m.name}, {"column", m.column}});
  return a;
}

Dist dist_from(const Json& v, const std::string& path, Dist fallback) {
  Obj o(v, path);
  fallback.mean = o.get<std::vector<double>>("mean", fallback.mean);
  fallback.sd = o.get<double>("sd", fallback.sd);
  o.finish();
  return fallback;
}

Json dist_to_json(const Dist& d) {
  Json mean = d.mean.size() == 1 ? Json(d.mean[0]) : Json(d.mean);
  return Json{{"mean", mean}, {"sd", d.sd}};
}

ModelSpec model_from(const Json& v, const std::string& path) {
  Obj o(v, path);
  ModelSpec m;
  m.label = o.get<std::string>("label", "");
  m.dependent = o.need<std::string>("dependent");
  m.lag_dep = o.get<int>("lag_dep", 1);
  if (m.lag_dep != 0 && m.lag_dep != 1) bad(o.sub("lag_dep"), "must be 0 or 1");
  m.regressors = o.get<std::vector<std::string>>("regressors", {});
  m.observed_cf = o.get<std::vector<std::string>>("observed_cf", {});
  m.cf_lags = o.get<int>("cf_lags", 2);
  if (m.cf_lags < 0) bad(o.sub("cf_lags"), "must be >= 0");
  if (o.has("csa")) {
    const Json& c = o.raw("csa");
    Obj co(c, o.sub("csa"));
    CsaSpec csa;
    std::vector<std::string> defaults{m.dependent};
    defaults.insert(defaults.end(), m.regressors.begin(), m.regressors.end());
    csa.variables = co.get<std::vector<std::string>>("variables", defaults);
    csa.lags = co.get<int>("lags", 2);
    if (csa.lags < 0) bad(co.sub("lags"), "must be >= 0");
    co.finish();
    m.csa = csa;
  } else {
    o.raw("csa");  // allow explicit null
  }
  m.pcs = o.opt<int>("pcs");
  m.regime_var = o.opt<std::string>("regime_var");
  const std::string est = o.get<std::string>("estimator", "MG");
  auto e = estimator_from(est);
  if (!e) bad(o.sub("estimator"), "unknown estimator '" + est + "' (FE, TWFE, MG)");
  m.estimator = *e;
  m.pooled_cce = o.get<bool>("pooled_cce", false);
  o.finish();
  return m;
}

Json model_to_json(const ModelSpec& m) {
  Json j;
  j["label"] = m.label;
  j["dependent"] = m.dependent;
  j["lag_dep"] = m.lag_dep;
  j["regressors"] = m.regressors;
  j["observed_cf"] = m.observed_cf;
  j["cf_lags"] = m.cf_lags;
  j["csa"] = m.csa ? Json{{"variables", m.csa->variables}, {"lags", m.csa->lags}} : Json(nullptr);
  j["pcs"] = m.pcs ? Json(*m.pcs) : Json(nullptr);
  j["regime_var"] = m.regime_var ? Json(*m.regime_var) : Json(nullptr);
  j["estimator"] = to_string(m.estimator);
  j["pooled_cce"] = m.pooled_cce;
  return j;
}

TransformSpec transform_from(const Json& v, const std::string& path) {
  Obj o(v, path);
  TransformSpec t;
  const std::string kind = o.need<std::string>("kind");
  auto k = transform_kind_from(kind);
  if (!k)
    bad(o.sub("kind"), "unknown transform '" + kind +
                           "' (lag, diff, log, standardize, interpolate-linear, real-rate-combine)");
  t.kind = *k;
  t.source = o.need<std::string>("source");
  t.target = o.get<std::string>("target", t.kind == TransformKind::InterpolateLinear ? t.source : "");
  if (t.target.empty()) bad(o.sub("target"), "required");
  t.k = o.get<int>("k", 1);
  t.cpi = o.get<std::string>("cpi", "");
  t.scale = o.get<double>("scale", 100.0);
  t.replace = o.get<bool>("replace", false);
  o.finish();
  return t;
}

Json transform_to_json(const TransformSpec& t) {
  Json j{{"kind", to_string(t.kind)}, {"source", t.source}, {"target", t.target}};
  if (t.kind == TransformKind::Lag) j["k"] = t.k;
  if (t.kind == TransformKind::RealRateCombine) {
    j["cpi"] = t.cpi;
    j["scale"] = t.scale;
  }
  j["replace"] = t.replace;
  return j;
}

McSuite suite_from(const Json& v, const std::string& path, McSuite s) {
  Obj o(v, path);
  s.estimators = o.get<std::vector<std::string>>("estimators", s.estimators);
  s.model.csa_lags = o.get<int>("csa_lags", s.model.csa_lags);
  s.model.cf_lags = o.get<int>("cf_lags", s.model.cf_lags);
  if (o.has("pcs")) s.model.pcs = o.get<int>("pcs", 0);
  else o.raw("pcs");
  if (o.has("kmax")) s.model.kmax = o.get<int>("kmax", 0);
  else o.raw("kmax");
  s.level = o.get<double>("level", s.level);
  o.finish();
  return s;
}

Json suite_to_json(const McSuite& s) {
  return Json{{"estimators", s.estimators},
              {"csa_lags", s.model.csa_lags},
              {"cf_lags", s.model.cf_lags},
              {"pcs", s.model.pcs ? Json(*s.model.pcs) : Json(nullptr)},
              {"kmax", s.model.kmax ? Json(*s.model.kmax) : Json(nullptr)},
              {"level", s.level}};
}

const char* mode_name(DissectMode m) { return m == DissectMode::Levels ? "levels" : "fd"; }

}  // namespace

DgpConfig dgp_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  DgpConfig d;
  d.n = o.get<int>("n", d.n);
  d.t = o.get<int>("t", d.t);
  d.burn_in = o.get<int>("burn_in", d.burn_in);
  d.m_ucf = o.get<int>("m_ucf", d.m_ucf);
  d.m_ocf = o.get<int>("m_ocf", d.m_ocf);
  d.k = o.get<int>("k", d.k);
  if (o.has("rho")) d.rho = dist_from(o.raw("rho"), o.sub("rho"), d.rho);
  if (o.has("beta")) d.beta = dist_from(o.raw("beta"), o.sub("beta"), d.beta);
  if (o.has("alpha")) d.alpha = dist_from(o.raw("alpha"), o.sub("alpha"), d.alpha);
  if (o.has("gamma")) d.gamma = dist_from(o.raw("gamma"), o.sub("gamma"), d.gamma);
  if (o.has("gamma_x")) d.gamma_x = dist_from(o.raw("gamma_x"), o.sub("gamma_x"), d.gamma_x);
  if (o.has("theta")) d.theta = dist_from(o.raw("theta"), o.sub("theta"), d.theta);
  if (o.has("theta_x")) d.theta_x = dist_from(o.raw("theta_x"), o.sub("theta_x"), d.theta_x);
  if (o.has("xi")) d.xi = dist_from(o.raw("xi"), o.sub("xi"), d.xi);
  d.corr_gamma_x = o.get<double>("corr_gamma_x", d.corr_gamma_x);
  if (o.has("noise")) {
    Obj n(o.raw("noise"), o.sub("noise"));
    d.eps_sd = n.get<double>("eps", d.eps_sd);
    d.chi_sd = n.get<double>("chi", d.chi_sd);
    d.omega_sd = n.get<double>("omega", d.omega_sd);
    n.finish();
  }
  d.factor_ar = o.get<double>("factor_ar", d.factor_ar);
  if (o.has("regime")) {
    Obj r(o.raw("regime"), o.sub("regime"));
    d.regime.fixed_fraction = r.get<double>("fixed_fraction", d.regime.fixed_fraction);
    d.regime.gamma_shift = r.get<std::vector<double>>("gamma_shift", d.regime.gamma_shift);
    r.finish();
  }
  if (o.has("start_period"))
    d.start_period = period_from(o.get<std::string>("start_period", ""), o.sub("start_period"));
  o.finish();
  d.validate();
  return d;
}

Json dgp_to_json(const DgpConfig& d) {
  Json j;
  j["n"] = d.n;
  j["t"] = d.t;
  j["burn_in"] = d.burn_in;
  j["m_ucf"] = d.m_ucf;
  j["m_ocf"] = d.m_ocf;
  j["k"] = d.k;
  j["rho"] = dist_to_json(d.rho);
  j["beta"] = dist_to_json(d.beta);
  j["alpha"] = dist_to_json(d.alpha);
  j["gamma"] = dist_to_json(d.gamma);
  j["gamma_x"] = dist_to_json(d.gamma_x);
  j["theta"] = dist_to_json(d.theta);
  j["theta_x"] = dist_to_json(d.theta_x);
  j["xi"] = dist_to_json(d.xi);
  j["corr_gamma_x"] = d.corr_gamma_x;
  j["noise"] = Json{{"eps", d.eps_sd}, {"chi", d.chi_sd}, {"omega", d.omega_sd}};
  j["factor_ar"] = d.factor_ar;
  j["regime"] = Json{{"fixed_fraction", d.regime.fixed_fraction},
                     {"gamma_shift", d.regime.gamma_shift.size() == 1 ? Json(d.regime.gamma_shift[0])
                                                                     : Json(d.regime.gamma_shift)}};
  j["start_period"] = format_period(d.start_period);
  return j;
}

CsvSchema schema_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  CsvSchema s;
  s.country_column = o.get<std::string>("country_column", s.country_column);
  s.period_column = o.get<std::string>("period_column", s.period_column);
  if (o.has("variables")) s.variables = mappings(o.raw("variables"), o.sub("variables"));
  if (o.has("common_factors"))
    s.common_factors = mappings(o.raw("common_factors"), o.sub("common_factors"));
  o.finish();
  if (s.variables.empty() && s.common_factors.empty())
    bad(path, "declare at least one variable or common factor");
  return s;
}

SimulationConfig simulation_preset(const std::string& name) {
  SimulationConfig s;
  if (name == "paper-contrast") {
    DgpConfig& d = s.dgp;
    d.n = 30;
    d.t = 65;
    d.k = 2;
    d.m_ucf = 3;
    d.m_ocf = 1;
    d.omega_sd = 0.0;
    d.gamma = {{0.0}, 1.0};
    d.theta = {{0.0}, 0.5};
    d.corr_gamma_x = 0.3;
    s.reps = 300;
    s.suite.estimators = {"twfe", "pipeline"};
  } else {
    fail(ErrorKind::Config, "config: unknown simulation preset '" + name + "' (paper-contrast)");
  }
  s.preset = name;
  return s;
}

Overrides overrides_from_json(const Json& j) {
  Overrides o;
  if (j.is_null()) return o;
  Obj r(j, "overrides");
  o.seed = r.opt<std::uint64_t>("seed");
  o.threads = r.opt<int>("threads");
  o.strict_cd = r.opt<bool>("strict_cd");
  o.pcs = r.opt<int>("pcs");
  o.kmax = r.opt<int>("kmax");
  o.csa_lags = r.opt<int>("csa_lags");
  o.cf_lags = r.opt<int>("cf_lags");
  o.output = r.opt<std::string>("output");
  o.reps = r.opt<int>("reps");
  o.preset = r.opt<std::string>("preset");
  r.finish();
  return o;
}

RunConfig parse_config(const Json& j) {
  Obj o(j, "config");
  RunConfig c;
  if (o.has("input")) {
    Obj in(o.raw("input"), "input");
    InputConfig ic;
    ic.path = in.need<std::string>("path");
    ic.schema = schema_from_json(in.need<Json>("schema"), "input.schema");
    if (in.has("window")) {
      Obj w(in.raw("window"), "input.window");
      if (w.has("first")) ic.first = period_from(w.get<std::string>("first", ""), "input.window.first");
      if (w.has("last")) ic.last = period_from(w.get<std::string>("last", ""), "input.window.last");
      w.finish();
    } else {
      in.raw("window");
    }
    in.finish();
    c.input = ic;
  } else {
    o.raw("input");
  }
  if (o.has("transforms")) {
    const Json& ts = o.raw("transforms");
    if (!ts.is_array()) bad("transforms", "expected a list");
    for (std::size_t i = 0; i < ts.size(); ++i)
      c.transforms.push_back(transform_from(ts[i], "transforms[" + std::to_string(i) + "]"));
  } else {
    o.raw("transforms");
  }
  if (o.has("model")) c.model = model_from(o.raw("model"), "model");
  else o.raw("model");

  if (o.has("pipeline")) {
    Obj p(o.raw("pipeline"), "pipeline");
    auto& opt = c.pipeline.options;
    opt.pcs = p.opt<int>("pcs");
    opt.kmax = p.opt<int>("kmax");
    opt.strict_cd = p.get<bool>("strict_cd", false);
    c.pipeline.benchmarks = p.get<bool>("benchmarks", true);
    if (p.has("dissect")) {
      Obj d(p.raw("dissect"), "pipeline.dissect");
      DissectConfig dc;
      dc.observables = d.need<std::vector<std::string>>("observables");
      if (d.has("modes")) {
        dc.modes.clear();
        for (const auto& m : d.get<std::vector<std::string>>("modes", {})) {
          if (m == "levels") dc.modes.push_back(DissectMode::Levels);
          else if (m == "fd") dc.modes.push_back(DissectMode::FirstDifferences);
          else bad("pipeline.dissect.modes", "unknown mode '" + m + "' (levels, fd)");
        }
      }
      d.finish();
      c.pipeline.dissect = dc;
    } else {
      p.raw("dissect");
    }
    p.finish();
  } else {
    o.raw("pipeline");
  }
  if (o.has("pc")) {
    Obj p(o.raw("pc"), "pc");
    const std::string src = p.get<std::string>("source", "composite");
    if (src == "composite") c.pipeline.options.pc_source = PcSource::Composite;
    else if (src == "composite+observed") c.pipeline.options.pc_source = PcSource::CompositeObserved;
    else bad("pc.source", "unknown source '" + src + "' (composite, composite+observed)");
    c.pipeline.options.center = p.get<bool>("center", true);
    c.pipeline.options.normalize = p.get<bool>("normalize", false);
    p.finish();
  } else {
    o.raw("pc");
  }
  if (o.has("composite")) {
    Obj p(o.raw("composite"), "composite");
    c.pipeline.options.subtract_observed_cf = p.get<bool>("subtract_observed_cf", false);
    p.finish();
  } else {
    o.raw("composite");
  }

  if (o.has("simulation")) {
    Obj s(o.raw("simulation"), "simulation");
    SimulationConfig sc;
    if (s.has("preset")) sc = simulation_preset(s.get<std::string>("preset", ""));
    else s.raw("preset");
    if (s.has("dgp")) {
      Json merged = dgp_to_json(sc.dgp);
      merged.merge_patch(s.raw("dgp"));
      if (!s.raw("dgp").is_object()) bad("simulation.dgp", "expected an object");
      sc.dgp = dgp_from_json(merged);
    } else {
      s.raw("dgp");
    }
    sc.reps = s.get<int>("reps", sc.reps);
    if (sc.reps < 1) bad("simulation.reps", "must be >= 1");
    if (s.has("suite")) sc.suite = suite_from(s.raw("suite"), "simulation.suite", sc.suite);
    else s.raw("suite");
    sc.export_panel = s.get<bool>("export_panel", false);
    s.finish();
    c.simulation = sc;
  } else {
    o.raw("simulation");
  }
  if (o.has("output")) {
    Obj out(o.raw("output"), "output");
    c.output.directory = out.get<std::string>("directory", c.output.directory);
    out.finish();
  } else {
    o.raw("output");
  }
  c.seed = o.get<std::uint64_t>("seed", c.seed);
  c.threads = o.get<int>("threads", c.threads);
  o.finish();
  return c;
}

void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.preset) {
    SimulationConfig s = simulation_preset(*o.preset);
    if (c.simulation) s.export_panel = c.simulation->export_panel;
    c.simulation = s;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.strict_cd) c.pipeline.options.strict_cd = *o.strict_cd;
  if (o.pcs) c.pipeline.options.pcs = *o.pcs;
  if (o.kmax) c.pipeline.options.kmax = *o.kmax;
  if (o.csa_lags) {
    if (*o.csa_lags < 0) fail(ErrorKind::Config, "--csa-lags must be >= 0");
    if (c.model && c.model->csa) c.model->csa->lags = *o.csa_lags;
    if (c.simulation) c.simulation->suite.model.csa_lags = *o.csa_lags;
  }
  if (o.cf_lags) {
    if (*o.cf_lags < 0) fail(ErrorKind::Config, "--cf-lags must be >= 0");
    if (c.model) c.model->cf_lags = *o.cf_lags;
    if (c.simulation) c.simulation->suite.model.cf_lags = *o.cf_lags;
  }
  if (o.output) c.output.directory = *o.output;
  if (o.reps) {
    if (!c.simulation) fail(ErrorKind::Config, "--reps needs a simulation section or --preset");
    if (*o.reps < 1) fail(ErrorKind::Config, "--reps must be >= 1");
    c.simulation->reps = *o.reps;
  }
  if (c.pipeline.options.pcs && c.simulation) c.simulation->suite.model.pcs = c.pipeline.options.pcs;
  if (c.pipeline.options.kmax && c.simulation) c.simulation->suite.model.kmax = c.pipeline.options.kmax;
  if (c.simulation) c.simulation->dgp.seed = c.seed;
  c.pipeline.options.threads = c.threads;
}

void check_for_command(const RunConfig& c, const std::string& command) {
  const bool data_command = command == "estimate" || command == "pipeline" || command == "numfac" ||
                            command == "cd";
  if (command == "simulate") {
    if (!c.simulation) fail(ErrorKind::Config, "config: simulate needs a simulation section (or --preset)");
    if (c.input) fail(ErrorKind::Config, "config: simulate takes a simulation section, not input");
    return;
  }
  if (!data_command) fail(ErrorKind::Config, "unknown command '" + command + "'");
  if (c.input.has_value() == c.simulation.has_value())
    fail(ErrorKind::Config, "config: exactly one of input or simulation is required for " + command);
  if (!c.model) fail(ErrorKind::Config, "config: " + command + " needs a model section");
  if (command == "pipeline") {
    if (!c.model->csa) fail(ErrorKind::Config, "config: pipeline needs model.csa");
    if (c.model->observed_cf.empty())
      fail(ErrorKind::Config, "config: pipeline needs model.observed_cf");
  }
  if (command != "pipeline" && c.model->pcs)
    fail(ErrorKind::Config, "config: model.pcs is only available through the pipeline command (" + command +
                                " fits the model without principal components)");
  if (c.threads < 0) fail(ErrorKind::Config, "config: threads must be >= 0");
}

Json to_json(const RunConfig& c) {
  Json j;
  if (c.input) {
    Json in;
    in["path"] = c.input->path;
    in["schema"] = Json{{"country_column", c.input->schema.country_column},
                        {"period_column", c.input->schema.period_column},
                        {"variables", mappings_to_json(c.input->schema.variables)},
                        {"common_factors", mappings_to_json(c.input->schema.common_factors)}};
    Json w = Json::object();
    if (c.input->first) w["first"] = format_period(*c.input->first);
    if (c.input->last) w["last"] = format_period(*c.input->last);
    in["window"] = w;
    j["input"] = in;
  }
  Json ts = Json::array();
  for (const auto& t : c.transforms) ts.push_back(transform_to_json(t));
  j["transforms"] = ts;
  if (c.model) j["model"] = model_to_json(*c.model);
  const auto& opt = c.pipeline.options;
  Json p;
  p["pcs"] = opt.pcs ? Json(*opt.pcs) : Json(nullptr);
  p["kmax"] = opt.kmax ? Json(*opt.kmax) : Json(nullptr);
  p["strict_cd"] = opt.strict_cd;
  p["benchmarks"] = c.pipeline.benchmarks;
  if (c.pipeline.dissect) {
    Json modes = Json::array();
    for (auto m : c.pipeline.dissect->modes) modes.push_back(mode_name(m));
    p["dissect"] = Json{{"observables", c.pipeline.dissect->observables}, {"modes", modes}};
  }
  j["pipeline"] = p;
  j["pc"] = Json{{"source", opt.pc_source == PcSource::Composite ? "composite" : "composite+observed"},
                 {"center", opt.center},
                 {"normalize", opt.normalize}};
  j["composite"] = Json{{"subtract_observed_cf", opt.subtract_observed_cf}};
  if (c.simulation) {
    Json s;
    if (c.simulation->preset) s["preset"] = *c.simulation->preset;
    s["dgp"] = dgp_to_json(c.simulation->dgp);
    s["reps"] = c.simulation->reps;
    s["suite"] = suite_to_json(c.simulation->suite);
    s["export_panel"] = c.simulation->export_panel;
    j["simulation"] = s;
  }
  j["output"] = Json{{"directory", c.output.directory}};
  j["seed"] = c.seed;
  return j;
}

}  // namespace ccepc
