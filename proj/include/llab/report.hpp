#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace llab {

inline constexpr const char* kReportSchema = "llab-report-1";
inline constexpr const char* kOutputDirEnv = "LLAB_OUTPUT_DIR";

using json = nlohmann::json;

// ----- configuration -----

struct ScenarioConfig {
  std::string name;
  std::string type;
  std::string preset;
  std::uint64_t seed = 0;
  double h = 0;
  json params = json::object();      // resolved recipe parameters; infinities stored as "inf"
  json tolerances = json::object();  // resolved
  // Fully resolved echo; config_from_echo(echo()) reproduces the config.
  json echo() const;
};

std::vector<std::string> scenario_types();

// Declarative text: optional top-level `seed`, then [[scenario]] tables with name, type, seed, h,
// [scenario.recipe] (preset plus parameters) and [scenario.tolerances]. Throws ConfigError with a field path.
std::vector<ScenarioConfig> parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = {},
                                         const std::string& source = "<config>");
std::vector<ScenarioConfig> load_config(const std::filesystem::path& file,
                                        std::optional<std::uint64_t> seed_override = {});
ScenarioConfig config_from_echo(const json& echo);

struct ParamInfo {
  std::string key;
  std::string kind;
  json default_value;
  std::string doc;
};
struct PresetInfo {
  std::string type, name, doc;
  std::vector<ParamInfo> params;
  std::map<std::string, double> tolerances;
  double default_h = 0;
};
std::vector<PresetInfo> list_presets();

// ----- report -----

struct CheckRecord {
  std::string name;
  std::string anchor;  // key of the anchor manifest, or "plumbing"
  double measured = 0;
  double bound = 0;
  std::string relation;  // "<=", ">=", "<", ">"
  bool pass = false;
  std::string note;
  bool operator==(const CheckRecord& o) const;
};

struct PlotSpec {
  std::string title, csv, svg;
  std::string x, y;
  std::string series;  // optional grouping column
  std::string y_transform;  // "" or "neglog" (plots -log y)
  bool logx = false, logy = false;
  bool has_fit = false;
  double fit_slope = 0, fit_intercept = 0;  // log(y) = slope log(x) + intercept in plotted units
  bool operator==(const PlotSpec& o) const;
};

struct ScenarioReport {
  json config = json::object();
  std::vector<CheckRecord> checks;
  std::map<std::string, double> constants;
  std::vector<std::string> artifacts;  // file names relative to the scenario directory
  std::vector<PlotSpec> plots;
  std::map<std::string, double> timings;  // seconds; excluded from the hashable section
  // CSV contents keyed by file name (written by emit_outputs, not serialized)
  std::map<std::string, std::string> tables;

  bool all_pass() const;
  bool operator==(const ScenarioReport& o) const;  // ignores timings and tables
};

// Anchor key -> short description of the result it refers to.
const std::map<std::string, std::string>& anchor_manifest();

json to_json(const ScenarioReport& r);
json hashable_section(const ScenarioReport& r);
ScenarioReport report_from_json(const json& j);

struct RunContext {
  int jobs = 1;
};

// Never throws for failing checks: errors inside a stage become failing checks.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunContext& ctx = {});

// Writes report.json, the CSV tables and the SVG plots into dir (created if absent).
void emit_outputs(ScenarioReport& report, const std::filesystem::path& dir);

// Re-renders every plot of every report found under dir from the CSV files on disk; returns plots written.
int rerender_reports(const std::filesystem::path& dir);

std::string render_svg(const PlotSpec& spec, const std::string& csv);

struct SuiteResult {
  std::vector<ScenarioReport> reports;
  bool all_pass = true;
};
// Bounded worker pool over scenarios; each writes into dir/<name>; index.json is written last.
SuiteResult run_suite(const std::vector<ScenarioConfig>& configs, const std::filesystem::path& dir, int jobs = 1);

}  // namespace llab
