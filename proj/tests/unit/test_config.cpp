#include "commands.hpp"
#include "config.hpp"
#include "error.hpp"

#include <doctest.h>

#include <string>

using namespace ccepc;

namespace {

Json base_config() {
  return Json::parse(R"({
    "input": {
      "path": "panel.csv",
      "schema": {"variables": ["y", "x"], "common_factors": ["g"]},
      "window": {"first": "2005q1", "last": "2010q4"}
    },
    "model": {
      "dependent": "y",
      "regressors": ["x"],
      "observed_cf": ["g"],
      "csa": {"variables": ["y", "x"], "lags": 1}
    },
    "pipeline": {"pcs": 2},
    "seed": 9
  })");
}

std::string config_error(const Json& j, const std::string& command = "pipeline",
                         const Json& overrides = nullptr) {
  try {
    resolve(command, j, overrides);
  } catch (const Error& e) {
    CHECK(exit_code_for(e.kind()) == 2);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  RunConfig c = resolve("pipeline", base_config(), nullptr);
  CHECK(c.model->lag_dep == 1);
  CHECK(c.model->cf_lags == 2);
  CHECK(c.model->estimator == Estimator::MG);
  CHECK(c.model->csa->lags == 1);
  CHECK(c.pipeline.options.pcs == 2);
  CHECK_FALSE(c.pipeline.options.kmax.has_value());
  CHECK(c.output.directory == "ccepc-output");
  CHECK(c.seed == 9);
  CHECK(c.input->first == 2005 * 4);
  CHECK(c.input->last == 2010 * 4 + 3);
}

TEST_CASE("unknown keys are rejected with their path") {
  Json j = base_config();
  j["model"]["regresors"] = Json::array({"x"});
  std::string msg = config_error(j);
  CHECK(msg.find("model.regresors") != std::string::npos);
  CHECK(msg.find("unknown key") != std::string::npos);

  j = base_config();
  j["colour"] = "blue";
  CHECK(config_error(j).find("colour") != std::string::npos);

  j = base_config();
  j["model"]["csa"]["lag"] = 1;
  CHECK(config_error(j).find("model.csa.lag") != std::string::npos);
}

TEST_CASE("type errors name the path") {
  Json j = base_config();
  j["model"]["cf_lags"] = "two";
  CHECK(config_error(j).find("model.cf_lags") != std::string::npos);
  j = base_config();
  j["input"]["window"]["first"] = "2005Q5";
  CHECK(config_error(j).find("input.window.first") != std::string::npos);
  j = base_config();
  j["model"].erase("dependent");
  CHECK(config_error(j).find("model.dependent") != std::string::npos);
}

TEST_CASE("command requirements") {
  Json j = base_config();
  j["model"].erase("csa");
  CHECK_FALSE(config_error(j, "pipeline").empty());
  CHECK(config_error(j, "estimate").empty());
  CHECK_FALSE(config_error(base_config(), "simulate").empty());
  Json k = base_config();
  k.erase("input");
  CHECK_FALSE(config_error(k, "estimate").empty());
}

TEST_CASE("resolved config round-trips") {
  RunConfig c = resolve("pipeline", base_config(), nullptr);
  Json once = to_json(c);
  Json twice = to_json(resolve("pipeline", once, nullptr));
  CHECK(once == twice);
  CHECK_FALSE(once.contains("threads"));

  Json sim = Json::parse(R"({"simulation": {"preset": "paper-contrast", "reps": 5}, "seed": 3})");
  Json s1 = to_json(resolve("simulate", sim, nullptr));
  CHECK(to_json(resolve("simulate", s1, nullptr)) == s1);
}

TEST_CASE("overrides win over the file") {
  Json ov = {{"seed", 77},   {"pcs", 3},      {"kmax", 6},        {"csa_lags", 0},
             {"cf_lags", 1}, {"output", "o"}, {"strict_cd", true}, {"threads", 4}};
  RunConfig c = resolve("pipeline", base_config(), ov);
  CHECK(c.seed == 77);
  CHECK(c.pipeline.options.pcs == 3);
  CHECK(c.pipeline.options.kmax == 6);
  CHECK(c.model->csa->lags == 0);
  CHECK(c.model->cf_lags == 1);
  CHECK(c.output.directory == "o");
  CHECK(c.pipeline.options.strict_cd);
  CHECK(c.threads == 4);
  CHECK(c.pipeline.options.threads == 4);
  CHECK(config_error(base_config(), "pipeline", Json{{"reps", 5}}).find("reps") != std::string::npos);
  CHECK(config_error(base_config(), "pipeline", Json{{"bogus", 1}}).find("bogus") != std::string::npos);
}

TEST_CASE("preset equals the hand-written configuration") {
  Json preset = Json::parse(R"({"simulation": {"preset": "paper-contrast"}, "seed": 5})");
  Json hand = Json::parse(R"({
    "simulation": {
      "dgp": {"n": 30, "t": 65, "k": 2, "m_ucf": 3, "m_ocf": 1,
              "gamma": {"mean": 0, "sd": 1}, "theta": {"mean": 0, "sd": 0.5},
              "corr_gamma_x": 0.3, "noise": {"omega": 0}},
      "reps": 300,
      "suite": {"estimators": ["twfe", "pipeline"]}
    },
    "seed": 5
  })");
  Json a = to_json(resolve("simulate", preset, nullptr));
  Json b = to_json(resolve("simulate", hand, nullptr));
  a["simulation"].erase("preset");
  b["simulation"].erase("preset");
  CHECK(a == b);

  RunConfig via_flag = resolve("simulate", Json::object(), Json{{"preset", "paper-contrast"}, {"seed", 5}});
  Json c = to_json(via_flag);
  c["simulation"].erase("preset");
  CHECK(c == a);
  CHECK_FALSE(config_error(Json{{"simulation", {{"preset", "nope"}}}}, "simulate").empty());
}

TEST_CASE("dgp patches merge over the preset") {
  Json j = Json::parse(R"({"simulation": {"preset": "paper-contrast", "dgp": {"n": 12}}})");
  RunConfig c = resolve("simulate", j, nullptr);
  CHECK(c.simulation->dgp.n == 12);
  CHECK(c.simulation->dgp.m_ucf == 3);
  CHECK(c.simulation->dgp.seed == c.seed);
}

TEST_CASE("simulation DGP validation surfaces as a config error") {
  Json j = Json::parse(R"({"simulation": {"dgp": {"rho": {"mean": 1.5, "sd": 0}}}})");
  CHECK(config_error(j, "simulate").find("rho") != std::string::npos);
}

TEST_CASE("pcs in the model is refused outside the pipeline") {
  Json j = base_config();
  j["model"]["pcs"] = 2;
  j["input"]["path"] = "does-not-matter.csv";
  try {
    run_command("estimate", j, nullptr);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.kind()) == 2);
  }
}

}
