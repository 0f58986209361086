#pragma once

// Output files of a scenario run: traces (CSV or JSON), fit report and the
// run manifest. Numbers are written in shortest round-trip form, so outputs
// are byte-stable for a given (scenario, seed).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionpair/scenario.hpp"

namespace ionpair::report {

inline constexpr const char* kToolName = "ionpair";
inline constexpr const char* kVersion = "0.1.0";

enum class Format { Csv, Json };

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::string traces_csv(const scenario::ScenarioResult& result);
nlohmann::json traces_json(const scenario::ScenarioResult& result);

struct Manifest {
  std::string tool = kToolName;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::optional<int> shots_override;
  Format format = Format::Csv;
  std::string scenario_text;
  std::vector<std::string> outputs;
};

std::string config_hash(const std::string& scenario_text);
nlohmann::json to_json(const Manifest& m);
/// Throws std::invalid_argument on a malformed manifest.
Manifest manifest_from_json(const nlohmann::json& j);

/// Writes `<prefix>_trace.{csv,json}`, `<prefix>_report.json` and
/// `<prefix>_manifest.json` into `dir`. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const scenario::ScenarioResult& result,
                                                 const std::string& scenario_text,
                                                 const std::optional<int>& shots_override,
                                                 Format format,
                                                 const std::filesystem::path& dir);

}  // namespace ionpair::report
