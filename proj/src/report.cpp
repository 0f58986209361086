#include "ionpair/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ionpair::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf, ptr);
}

std::string traces_csv(const scenario::ScenarioResult& result) {
  const bool sweep = std::any_of(result.blocks.begin(), result.blocks.end(),
                                 [](const auto& b) { return b.gradient.has_value(); }) &&
                     result.blocks.size() > 1;
  const bool phase = std::any_of(result.blocks.begin(), result.blocks.end(),
                                 [](const auto& b) { return b.phase_scan; });
  std::string out;
  if (sweep) out += "gradient_v_per_mm2,";
  out += phase ? "wait_s,phi0_rad," : "wait_s,";
  out += "parity,parity_err,ion1_mean,ion2_mean\n";
  for (const auto& block : result.blocks) {
    for (const auto& t : block.traces) {
      if (sweep) out += format_double(block.gradient.value_or(0.0)) + ",";
      out += format_double(t.wait) + ",";
      if (phase) out += format_double(t.phi0) + ",";
      out += format_double(t.parity_mean) + "," + format_double(t.parity_stderr) + "," +
             format_double(t.single_ion_means[0]) + "," + format_double(t.single_ion_means[1]) + "\n";
    }
  }
  return out;
}

nlohmann::json traces_json(const scenario::ScenarioResult& result) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : result.blocks) {
    nlohmann::json b;
    if (block.gradient) b["gradient_v_per_mm2"] = *block.gradient;
    b["phase_scan"] = block.phase_scan;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : block.traces) {
      rows.push_back({{"wait_s", t.wait},
                      {"phi0_rad", t.phi0},
                      {"parity", t.parity_mean},
                      {"parity_err", t.parity_stderr},
                      {"ion1_mean", t.single_ion_means[0]},
                      {"ion2_mean", t.single_ion_means[1]},
                      {"shots", t.shots}});
    }
    b["points"] = rows;
    blocks.push_back(b);
  }
  return {{"name", result.scenario.name}, {"blocks", blocks}};
}

std::string config_hash(const std::string& scenario_text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(scenario::fnv1a64(scenario_text)));
  return buf;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json j{{"tool", m.tool},
                   {"version", m.version},
                   {"seed", m.seed},
                   {"format", m.format == Format::Csv ? "csv" : "json"},
                   {"config_hash", config_hash(m.scenario_text)},
                   {"scenario_text", m.scenario_text},
                   {"outputs", m.outputs}};
  j["shots_override"] = m.shots_override ? nlohmann::json(*m.shots_override) : nlohmann::json(nullptr);
  return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    if (j.at("tool").get<std::string>() != kToolName) throw std::invalid_argument("not an ionpair manifest");
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto fmt = j.at("format").get<std::string>();
    if (fmt == "csv") {
      m.format = Format::Csv;
    } else if (fmt == "json") {
      m.format = Format::Json;
    } else {
      throw std::invalid_argument("format must be csv or json");
    }
    if (!j.at("shots_override").is_null()) m.shots_override = j.at("shots_override").get<int>();
    m.scenario_text = j.at("scenario_text").get<std::string>();
    if (j.at("config_hash").get<std::string>() != config_hash(m.scenario_text)) {
      throw std::invalid_argument("config_hash does not match scenario_text");
    }
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> write_outputs(const scenario::ScenarioResult& result,
                                                 const std::string& scenario_text,
                                                 const std::optional<int>& shots_override,
                                                 Format format, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string prefix = result.scenario.output_prefix;
  const auto trace = dir / (prefix + (format == Format::Csv ? "_trace.csv" : "_trace.json"));
  const auto rep = dir / (prefix + "_report.json");
  const auto man = dir / (prefix + "_manifest.json");

  write_file(trace, format == Format::Csv ? traces_csv(result) : traces_json(result).dump(2) + "\n");
  write_file(rep, result.report.dump(2) + "\n");

  Manifest m;
  m.seed = result.scenario.noise.master_seed;
  m.shots_override = shots_override;
  m.format = format;
  m.scenario_text = scenario_text;
  m.outputs = {trace.filename().string(), rep.filename().string()};
  write_file(man, to_json(m).dump(2) + "\n");
  return {trace, rep, man};
}

}  // namespace ionpair::report
