// ionpair: run, list and describe two-ion Ramsey scenarios.
//
// Exit codes: 0 success, 1 I/O or internal error, 2 validation error or
// unknown scenario (nothing written), 3 fit did not converge (outputs written).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionpair/report.hpp"
#include "ionpair/scenario.hpp"

namespace fs = std::filesystem;
using namespace ionpair;

namespace {

struct Job {
  std::string text;
  std::optional<std::uint64_t> seed;
  std::optional<int> shots_override;
  std::optional<report::Format> format;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw scenario::ValidationError("scenario_file", "cannot read " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// A path to a .scn file, a manifest written by a previous run, or a built-in
// name / family.
std::vector<Job> load_jobs(const std::string& arg) {
  if (fs::exists(arg) && fs::is_regular_file(arg)) {
    const std::string text = slurp(arg);
    if (fs::path(arg).extension() == ".json") {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw scenario::ValidationError("manifest", e.what());
      }
      report::Manifest m;
      try {
        m = report::manifest_from_json(j);
      } catch (const std::invalid_argument& e) {
        throw scenario::ValidationError("manifest", e.what());
      }
      return {Job{m.scenario_text, m.seed, m.shots_override, m.format}};
    }
    return {Job{text, std::nullopt, std::nullopt, std::nullopt}};
  }
  std::vector<Job> jobs;
  for (const auto& name : scenario::resolve_builtin(arg)) {
    jobs.push_back(Job{std::string(scenario::builtin_text(name)), std::nullopt, std::nullopt, std::nullopt});
  }
  return jobs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-ion Ramsey parity simulator and scenario runner"};
  app.require_subcommand(1);

  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<int> shots_override;
  std::string out_dir = ".";
  std::string format_name;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run a scenario file, built-in scenario or manifest");
  run->add_option("scenario", target, "Scenario file, built-in name or manifest .json")->required();
  run->add_option("--seed", seed, "Master seed (overrides the scenario)");
  run->add_option("--shots-override", shots_override, "Shots per scan point")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--format", format_name, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);

  auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");
  auto* desc = app.add_subcommand("describe", "Describe a built-in scenario or family");
  std::string desc_name;
  desc->add_option("name", desc_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& n : scenario::builtin_names()) std::cout << n << "\n";
      return 0;
    }
    if (desc->parsed()) {
      const auto names = scenario::resolve_builtin(desc_name);
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) std::cout << "\n";
        std::cout << scenario::describe(scenario::parse_scenario(scenario::builtin_text(names[i])));
      }
      return 0;
    }

    // Validate everything before running or writing anything.
    const auto jobs = load_jobs(target);
    std::vector<scenario::Scenario> parsed;
    for (const auto& job : jobs) parsed.push_back(scenario::parse_scenario(job.text));
    if (fs::exists(out_dir) && !fs::is_directory(out_dir)) {
      throw scenario::ValidationError("out", out_dir + " is not a directory");
    }

    bool converged = true;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      scenario::RunOptions opts;
      opts.seed = seed ? seed : jobs[i].seed;
      opts.shots_override = shots_override ? shots_override : jobs[i].shots_override;
      opts.threads = threads;
      report::Format fmt = jobs[i].format.value_or(report::Format::Csv);
      if (!format_name.empty()) fmt = format_name == "json" ? report::Format::Json : report::Format::Csv;

      const auto result = scenario::run_scenario(parsed[i], opts);
      const auto paths = report::write_outputs(result, jobs[i].text, opts.shots_override, fmt, out_dir);
      for (const auto& p : paths) std::cout << p.string() << "\n";
      if (!result.fits_converged) {
        std::cerr << result.scenario.name << ": fit did not converge\n";
        converged = false;
      }
    }
    return converged ? 0 : 3;
  } catch (const scenario::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const scenario::UnknownScenario& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const analysis::FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
