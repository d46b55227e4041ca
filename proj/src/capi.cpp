#include <ccepc/ccepc.h>

#include "commands.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "factors.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>

struct ccepc_panel {
  ccepc::Panel panel;
};

struct ccepc_result {
  ccepc::CommandResult result;
  std::string json;
};

namespace {

thread_local std::string last_error;

ccepc_status status_for(ccepc::ErrorKind kind) {
  switch (ccepc::exit_code_for(kind)) {
    case 2: return CCEPC_ERR_CONFIG;
    case 3: return CCEPC_ERR_ESTIMATION;
    case 4: return CCEPC_ERR_IO;
    default: return CCEPC_ERR_INTERNAL;
  }
}

ccepc_status set_error(ccepc_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
ccepc_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return CCEPC_OK;
  } catch (const ccepc::Error& e) {
    return set_error(status_for(e.kind()), std::string(ccepc::to_string(e.kind())) + " error: " + e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(CCEPC_ERR_CONFIG, std::string("config error: invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(CCEPC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(CCEPC_ERR_INTERNAL, std::string("internal error: ") + e.what());
  } catch (...) {
    return set_error(CCEPC_ERR_INTERNAL, "internal error");
  }
}

ccepc::Json parse_json(const char* text, const char* what, bool allow_null) {
  if (!text) {
    if (allow_null) return ccepc::Json(nullptr);
    ccepc::fail(ccepc::ErrorKind::Config, std::string(what) + " is required");
  }
  try {
    return ccepc::Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ccepc::fail(ccepc::ErrorKind::Config, std::string(what) + " is not valid JSON: " + e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bool null_arg(const void* p, const char* name, ccepc_status* status) {
  if (p) return false;
  *status = set_error(CCEPC_ERR_CONFIG, std::string(name) + " must not be NULL");
  return true;
}

}  // namespace

extern "C" {

const char* ccepc_version(void) { return CCEPC_VERSION; }

const char* ccepc_last_error(void) { return last_error.c_str(); }

void ccepc_string_free(char* s) { std::free(s); }

ccepc_status ccepc_panel_load_csv(const char* path, const char* schema_json, ccepc_panel** out) {
  ccepc_status st;
  if (null_arg(path, "path", &st) || null_arg(out, "out", &st)) return st;
  *out = nullptr;
  return guarded([&] {
    ccepc::CsvSchema schema = ccepc::schema_from_json(parse_json(schema_json, "schema", false), "schema");
    *out = new ccepc_panel{ccepc::load_csv(path, schema)};
  });
}

ccepc_status ccepc_panel_simulate(const char* dgp_json, uint64_t seed, ccepc_panel** out) {
  ccepc_status st;
  if (null_arg(out, "out", &st)) return st;
  *out = nullptr;
  return guarded([&] {
    ccepc::Json j = parse_json(dgp_json, "dgp", true);
    ccepc::DgpConfig dgp = j.is_null() ? ccepc::DgpConfig{} : ccepc::dgp_from_json(j, "dgp");
    dgp.seed = seed;
    *out = new ccepc_panel{ccepc::gen_dgp(dgp).panel};
  });
}

void ccepc_panel_free(ccepc_panel* panel) { delete panel; }

int ccepc_panel_units(const ccepc_panel* panel) { return panel ? panel->panel.units() : 0; }

int ccepc_panel_periods(const ccepc_panel* panel) { return panel ? panel->panel.periods() : 0; }

ccepc_status ccepc_panel_series(const ccepc_panel* panel, const char* name, double* values, size_t capacity,
                                int* rows) {
  ccepc_status st;
  if (null_arg(panel, "panel", &st) || null_arg(name, "name", &st)) return st;
  return guarded([&] {
    const ccepc::Series& s = panel->panel.series(name);
    const auto r = s.values.rows(), c = s.values.cols();
    if (rows) *rows = static_cast<int>(r);
    if (!values) return;
    if (capacity < static_cast<size_t>(r * c))
      ccepc::fail(ccepc::ErrorKind::Config, "buffer too small for series '" + std::string(name) + "': need " +
                                                std::to_string(r * c) + " values");
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index t = 0; t < c; ++t)
        values[i * c + t] = s.missing(i, t) ? std::numeric_limits<double>::quiet_NaN() : s.values(i, t);
  });
}

ccepc_status ccepc_panel_csv(const ccepc_panel* panel, char** out) {
  ccepc_status st;
  if (null_arg(panel, "panel", &st) || null_arg(out, "out", &st)) return st;
  *out = nullptr;
  return guarded([&] { *out = copy_string(ccepc::to_csv(panel->panel)); });
}

ccepc_status ccepc_config_resolve(const char* command, const char* config_json, const char* overrides_json,
                                  char** out) {
  ccepc_status st;
  if (null_arg(command, "command", &st) || null_arg(out, "out", &st)) return st;
  *out = nullptr;
  return guarded([&] {
    ccepc::RunConfig c = ccepc::resolve(command, parse_json(config_json, "config", false),
                                        parse_json(overrides_json, "overrides", true));
    *out = copy_string(ccepc::to_json(c).dump(2));
  });
}

ccepc_status ccepc_run(const char* command, const char* config_json, const char* overrides_json,
                       ccepc_result** out) {
  ccepc_status st;
  if (null_arg(command, "command", &st) || null_arg(out, "out", &st)) return st;
  *out = nullptr;
  return guarded([&] {
    auto* r = new ccepc_result;
    try {
      r->result = ccepc::run_command(command, parse_json(config_json, "config", false),
                                     parse_json(overrides_json, "overrides", true));
      r->json = r->result.document.dump(2) + "\n";
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

const char* ccepc_result_json(const ccepc_result* result) { return result ? result->json.c_str() : ""; }

const char* ccepc_result_text(const ccepc_result* result) {
  return result ? result->result.text.c_str() : "";
}

const char* ccepc_result_output_dir(const ccepc_result* result) {
  return result ? result->result.output_dir.c_str() : "";
}

int ccepc_result_artifact_count(const ccepc_result* result) {
  return result ? static_cast<int>(result->result.artifacts.size()) : 0;
}

const char* ccepc_result_artifact_name(const ccepc_result* result, int index) {
  if (!result || index < 0 || index >= ccepc_result_artifact_count(result)) return nullptr;
  return result->result.artifacts[index].name.c_str();
}

const char* ccepc_result_artifact_data(const ccepc_result* result, int index, size_t* size) {
  if (!result || index < 0 || index >= ccepc_result_artifact_count(result)) return nullptr;
  const std::string& d = result->result.artifacts[index].data;
  if (size) *size = d.size();
  return d.c_str();
}

ccepc_status ccepc_result_write(const ccepc_result* result, const char* directory) {
  ccepc_status st;
  if (null_arg(result, "result", &st)) return st;
  return guarded([&] {
    ccepc::write_artifacts(result->result, directory ? directory : result->result.output_dir);
  });
}

void ccepc_result_free(ccepc_result* result) { delete result; }

ccepc_status ccepc_cd_test(const double* residuals, int units, int periods, double* statistic, double* p_value) {
  ccepc_status st;
  if (null_arg(residuals, "residuals", &st)) return st;
  return guarded([&] {
    if (units < 2 || periods < 2) ccepc::fail(ccepc::ErrorKind::Config, "CD test needs at least 2 units and 2 periods");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(residuals, units,
                                                                                               periods);
    ccepc::TestReport r = ccepc::cd_test(ccepc::Matrix(m));
    if (statistic) *statistic = r.statistic;
    if (p_value) *p_value = r.p_value;
  });
}

ccepc_status ccepc_ahn_horenstein(const double* eigenvalues, int count, int kmax, int* k_er, int* k_gr) {
  ccepc_status st;
  if (null_arg(eigenvalues, "eigenvalues", &st)) return st;
  return guarded([&] {
    if (count < 0) ccepc::fail(ccepc::ErrorKind::Config, "count must be >= 0");
    ccepc::FactorCount fc = ccepc::ahn_horenstein(std::vector<double>(eigenvalues, eigenvalues + count), kmax);
    if (k_er) *k_er = fc.k_er;
    if (k_gr) *k_gr = fc.k_gr;
  });
}

}  // extern "C"
