#pragma once

#include "paneldata.hpp"
#include "pipeline.hpp"
#include "regress.hpp"
#include "simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccepc {

using Json = nlohmann::ordered_json;

struct InputConfig {
  std::string path;
  CsvSchema schema;
  std::optional<int> first;  // quarter index
  std::optional<int> last;
};

struct DissectConfig {
  std::vector<std::string> observables;
  std::vector<DissectMode> modes{DissectMode::Levels};
};

struct PipelineConfig {
  PipelineOptions options;
  bool benchmarks = true;  // ten-column family when a regime variable is set
  std::optional<DissectConfig> dissect;
};

struct SimulationConfig {
  DgpConfig dgp;
  int reps = 100;
  McSuite suite;
  std::optional<std::string> preset;
  bool export_panel = false;
};

struct OutputConfig {
  std::string directory = "ccepc-output";
};

struct RunConfig {
  std::optional<InputConfig> input;
  std::vector<TransformSpec> transforms;
  std::optional<ModelSpec> model;
  PipelineConfig pipeline;
  std::optional<SimulationConfig> simulation;
  OutputConfig output;
  std::uint64_t seed = 42;
  int threads = 1;  // not part of the resolved document; results never depend on it
};

// Command-line overrides; set fields win over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<bool> strict_cd;
  std::optional<int> pcs;
  std::optional<int> kmax;
  std::optional<int> csa_lags;
  std::optional<int> cf_lags;
  std::optional<std::string> output;
  std::optional<int> reps;
  std::optional<std::string> preset;
};

Overrides overrides_from_json(const Json& j);

// Parses and validates a run configuration for `command`. Unknown keys are
// rejected with their path.
RunConfig parse_config(const Json& j);
void apply_overrides(RunConfig& config, const Overrides& o);
void check_for_command(const RunConfig& config, const std::string& command);

// The complete resolved configuration; feeding it back reproduces the run.
Json to_json(const RunConfig& config);

Json dgp_to_json(const DgpConfig& dgp);
DgpConfig dgp_from_json(const Json& j, const std::string& path = "simulation.dgp");
CsvSchema schema_from_json(const Json& j, const std::string& path = "input.schema");

// Named simulation presets. "paper-contrast": three factors, TWFE and
// pipeline CD rejection frequencies.
SimulationConfig simulation_preset(const std::string& name);

}  // namespace ccepc
