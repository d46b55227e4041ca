#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <ccepc/ccepc.h>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string fixtures = FIXTURE_DIR;

std::string fixture_config() {
  std::ifstream in(fixtures + "/fixture_config.json");
  Json j = Json::parse(in);
  j["input"]["path"] = fixtures + "/fixture_panel.csv";
  return j.dump();
}

const char* small_dgp = R"({"n": 8, "t": 30, "m_ucf": 1, "m_ocf": 1, "k": 1})";

}  // namespace

TEST_CASE("version and empty error") {
  CHECK(std::string(ccepc_version()).size() > 0);
  const double eig[] = {3, 2, 1, 0.5};
  REQUIRE(ccepc_ahn_horenstein(eig, 4, 1, nullptr, nullptr) == CCEPC_OK);
  CHECK(std::string(ccepc_last_error()).empty());
}

TEST_CASE("simulated panel handle") {
  ccepc_panel* p = nullptr;
  REQUIRE(ccepc_panel_simulate(small_dgp, 7, &p) == CCEPC_OK);
  CHECK(ccepc_panel_units(p) == 8);
  CHECK(ccepc_panel_periods(p) == 30);

  int rows = 0;
  REQUIRE(ccepc_panel_series(p, "y", nullptr, 0, &rows) == CCEPC_OK);
  CHECK(rows == 8);
  std::vector<double> y(8 * 30);
  REQUIRE(ccepc_panel_series(p, "y", y.data(), y.size(), &rows) == CCEPC_OK);
  CHECK(std::isfinite(y[0]));
  std::vector<double> g(30);
  REQUIRE(ccepc_panel_series(p, "g1", g.data(), g.size(), &rows) == CCEPC_OK);
  CHECK(rows == 1);

  CHECK(ccepc_panel_series(p, "y", y.data(), 10, &rows) == CCEPC_ERR_CONFIG);
  CHECK(std::string(ccepc_last_error()).find("buffer too small") != std::string::npos);
  CHECK(ccepc_panel_series(p, "nope", y.data(), y.size(), &rows) == CCEPC_ERR_CONFIG);

  char* csv = nullptr;
  REQUIRE(ccepc_panel_csv(p, &csv) == CCEPC_OK);
  CHECK(std::string(csv).rfind("country,period,x1,y,g1\n", 0) == 0);
  ccepc_string_free(csv);

  ccepc_panel* q = nullptr;
  REQUIRE(ccepc_panel_simulate(small_dgp, 7, &q) == CCEPC_OK);
  char *a = nullptr, *b = nullptr;
  ccepc_panel_csv(p, &a);
  ccepc_panel_csv(q, &b);
  CHECK(std::string(a) == std::string(b));
  ccepc_string_free(a);
  ccepc_string_free(b);
  ccepc_panel_free(q);
  ccepc_panel_free(p);
}

TEST_CASE("panel from CSV") {
  ccepc_panel* p = nullptr;
  const char* schema = R"({"variables": ["noncore", "fixed"], "common_factors": ["vix"]})";
  REQUIRE(ccepc_panel_load_csv((fixtures + "/fixture_panel.csv").c_str(), schema, &p) == CCEPC_OK);
  CHECK(ccepc_panel_units(p) == 12);
  CHECK(ccepc_panel_periods(p) == 48);
  ccepc_panel_free(p);

  CHECK(ccepc_panel_load_csv("/nonexistent/x.csv", schema, &p) == CCEPC_ERR_IO);
  CHECK(p == nullptr);
  CHECK(ccepc_panel_load_csv((fixtures + "/fixture_panel.csv").c_str(), "{not json", &p) == CCEPC_ERR_CONFIG);
  const char* missing = R"({"variables": ["no_such_column"]})";
  CHECK(ccepc_panel_load_csv((fixtures + "/fixture_panel.csv").c_str(), missing, &p) == CCEPC_ERR_CONFIG);
  CHECK(std::string(ccepc_last_error()).find("no_such_column") != std::string::npos);
}

TEST_CASE("null arguments are reported, not dereferenced") {
  CHECK(ccepc_panel_load_csv(nullptr, "{}", nullptr) == CCEPC_ERR_CONFIG);
  CHECK(ccepc_run(nullptr, "{}", nullptr, nullptr) == CCEPC_ERR_CONFIG);
  CHECK(ccepc_result_write(nullptr, nullptr) == CCEPC_ERR_CONFIG);
  CHECK(ccepc_panel_units(nullptr) == 0);
  CHECK(std::string(ccepc_result_json(nullptr)).empty());
  ccepc_panel_free(nullptr);
  ccepc_result_free(nullptr);
}

TEST_CASE("run the pipeline through the C interface") {
  const std::string cfg = fixture_config();
  ccepc_result* r = nullptr;
  REQUIRE(ccepc_run("pipeline", cfg.c_str(), R"({"threads": 2})", &r) == CCEPC_OK);
  Json doc = Json::parse(ccepc_result_json(r));
  CHECK(doc["provenance"]["command"] == "pipeline");
  CHECK(doc["provenance"]["m"] == 2);
  CHECK(doc["benchmarks"].size() == 10);
  CHECK(std::string(ccepc_result_text(r)).find("MG-CCE") != std::string::npos);

  std::vector<std::string> names;
  for (int i = 0; i < ccepc_result_artifact_count(r); ++i) names.push_back(ccepc_result_artifact_name(r, i));
  CHECK(names == std::vector<std::string>{"table.txt", "pipeline.json", "residuals.csv", "step1_residuals.csv",
                                          "pcs.csv"});
  CHECK(ccepc_result_artifact_name(r, 99) == nullptr);
  size_t size = 0;
  const char* data = ccepc_result_artifact_data(r, 1, &size);
  CHECK(size == std::string(ccepc_result_json(r)).size());
  CHECK(std::string(data, size) == ccepc_result_json(r));

  const fs::path dir = fs::temp_directory_path() / "ccepc_capi_test";
  fs::remove_all(dir);
  REQUIRE(ccepc_result_write(r, dir.string().c_str()) == CCEPC_OK);
  for (const auto& n : names) CHECK(fs::exists(dir / n));
  fs::remove_all(dir);
  ccepc_result_free(r);
}

TEST_CASE("resolved config is reproducible") {
  const std::string cfg = fixture_config();
  char* resolved = nullptr;
  REQUIRE(ccepc_config_resolve("pipeline", cfg.c_str(), R"({"pcs": 3})", &resolved) == CCEPC_OK);
  Json j = Json::parse(resolved);
  CHECK(j["pipeline"]["pcs"] == 3);
  char* again = nullptr;
  REQUIRE(ccepc_config_resolve("pipeline", resolved, nullptr, &again) == CCEPC_OK);
  CHECK(std::string(resolved) == std::string(again));
  ccepc_string_free(resolved);
  ccepc_string_free(again);
}

TEST_CASE("status codes") {
  ccepc_result* r = nullptr;
  CHECK(ccepc_run("pipeline", "{", nullptr, &r) == CCEPC_ERR_CONFIG);
  CHECK(ccepc_run("frobnicate", fixture_config().c_str(), nullptr, &r) == CCEPC_ERR_CONFIG);
  CHECK(ccepc_run("pipeline", fixture_config().c_str(), R"({"strict_cd": true})", &r) == CCEPC_ERR_ESTIMATION);
  CHECK(std::string(ccepc_last_error()).find("CD") != std::string::npos);
  Json bad = Json::parse(fixture_config());
  bad["input"]["path"] = "/nonexistent/panel.csv";
  CHECK(ccepc_run("estimate", bad.dump().c_str(), nullptr, &r) == CCEPC_ERR_IO);
  CHECK(r == nullptr);
}

TEST_CASE("raw-array tests") {
  const double identical[] = {1, 2, 0, 5, 1, 2, 0, 5, 1, 2, 0, 5};
  double stat = 0, p = 0;
  REQUIRE(ccepc_cd_test(identical, 3, 4, &stat, &p) == CCEPC_OK);
  CHECK(stat == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK(ccepc_cd_test(identical, 1, 4, &stat, &p) == CCEPC_ERR_CONFIG);
  const double flat[] = {1, 1, 1, 1, 1, 2, 3, 4};
  CHECK(ccepc_cd_test(flat, 2, 4, &stat, &p) == CCEPC_ERR_ESTIMATION);

  const double eig[] = {8, 1, 1, 1};
  int er = 0, gr = 0;
  REQUIRE(ccepc_ahn_horenstein(eig, 4, 2, &er, &gr) == CCEPC_OK);
  CHECK(gr == 1);
  const double unsorted[] = {1, 2, 3, 4};
  CHECK(ccepc_ahn_horenstein(unsorted, 4, 1, &er, &gr) == CCEPC_ERR_CONFIG);
}

TEST_CASE("simulate command") {
  ccepc_result* r = nullptr;
  const std::string cfg = std::string(R"({"simulation": {"dgp": )") + small_dgp +
                          R"(, "reps": 3, "suite": {"estimators": ["fe", "ccemg"]}}})";
  REQUIRE(ccepc_run("simulate", cfg.c_str(), R"({"seed": 7})", &r) == CCEPC_OK);
  Json doc = Json::parse(ccepc_result_json(r));
  CHECK(doc["report"]["completed"] == 3);
  CHECK(doc["provenance"]["seed"] == 7);
  ccepc_result_free(r);
}
