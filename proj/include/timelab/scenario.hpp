#pragma once

#include <map>
#include <string>
#include <vector>

namespace timelab::report {

inline constexpr const char* artifact_version = "0.1.0";

/// Named table of numeric columns (axes declared by the header).
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// String-valued side table (event logs).
struct TextTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Result of one scenario run: scalar summary, array outputs and a
/// provenance block sufficient to reproduce the numbers.
struct RunResult {
    std::string id;
    std::string kind;
    std::map<std::string, double> summary;          // sorted, deterministic
    std::vector<Table> tables;
    std::vector<TextTable> text_tables;
    std::map<std::string, std::string> provenance;  // version, grids, dt, tolerances
};

/// Parses and validates a scenario file. Throws config_error naming the
/// offending field.
struct ScenarioConfig;
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

struct ScenarioConfig {
    std::string id;
    std::string kind;
    std::string raw;  // canonical JSON text of the scenario body
};

/// Runs one scenario (any kind except "sweep"). Deterministic: identical
/// configs produce identical results.
RunResult run_scenario(const ScenarioConfig& config);

/// Runs the Cartesian product of the sweep axes over the base scenario.
/// Returns one result per combination (ordered by axis values) plus a
/// combined table whose leading columns are the swept parameters.
struct SweepResult {
    std::vector<RunResult> runs;
    Table combined;
};
SweepResult run_sweep(const ScenarioConfig& config);

enum class ExportFormat { csv, json };

/// Writes result files under out_dir. CSV arrays carry a header row; JSON
/// mirrors RunResult with fixed 17-significant-digit formatting, so
/// identical runs export byte-identical files.
std::vector<std::string> export_results(const std::vector<RunResult>& results,
                                        ExportFormat format, const std::string& out_dir);
std::vector<std::string> export_sweep(const SweepResult& sweep, ExportFormat format,
                                      const std::string& out_dir);

/// %.17g rendering used by every exporter.
std::string format_double(double v);

}  // namespace timelab::report
