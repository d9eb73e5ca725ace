#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skyglow/geometry.hpp"

namespace skyglow {

// Settings for the analysis commands. Populated from a plain-text
// `key = value` config file (# comments) and/or command-line overrides.
struct RunConfig {
  std::filesystem::path panel_dir;
  std::filesystem::path mask_path;
  std::filesystem::path table_path;
  std::filesystem::path series_path;  // external year,value CSV (optional)
  std::filesystem::path out_dir = "out";
  std::vector<std::string> scopes{"world"};
  YearRange period_a{1993, 2006};
  YearRange period_b{2007, 2013};
  int threads = 0;  // 0 = hardware concurrency
  std::uint32_t chunk_rows = 256;
  double palette_clamp = 3.0;
  std::uint32_t max_render_width = 4320;
  bool percent_units = false;
  int qq_year_a = 0;  // 0 = first diff year
  int qq_year_b = 0;  // 0 = last diff year
  int quantiles = 99;
  std::string map_format = "ppm";

  static RunConfig from_file(const std::filesystem::path& path);
  // Applies one key=value setting; unknown keys raise FormatError.
  void set(const std::string& key, const std::string& value);

  int effective_threads() const;
};

// One line of the summary table. Growth columns are already percent; the
// persistence diagonals are fractions and are rendered as percent at one
// decimal. NaN renders as the literal NaN.
struct ReportRow {
  std::string name;
  double y_a = 0.0, y_b = 0.0;    // average annual growth, percent
  double sy_a = 0.0, sy_b = 0.0;  // growth dispersion, percent
  double app_a = 0.0, app_b = 0.0;
  double amm_a = 0.0, amm_b = 0.0;
  double a00_a = 0.0, a00_b = 0.0;
};

std::string report_header(YearRange period_a, YearRange period_b);
std::string format_report_row(const ReportRow& row);

// Subcommand entry points. All return a process exit code: 0 success,
// 1 completed with per-scope failures (NaN artifacts), 2 fatal.
int cmd_ingest(const std::filesystem::path& input, int year,
               const std::filesystem::path& output);
int cmd_synth(const std::filesystem::path& spec_path,
              const std::filesystem::path& out_dir);
int cmd_diff(const RunConfig& config);
int cmd_metrics(const RunConfig& config);
int cmd_markov(const RunConfig& config);
int cmd_growth(const RunConfig& config);
int cmd_render(const RunConfig& config);
int cmd_report(const RunConfig& config);
int cmd_run(const RunConfig& config);

}  // namespace skyglow
