// Command-line front end: nighttime-lights panel analytics.
//
//   skyglow synth   --spec panel.spec --out panel/
//   skyglow run     --config run.conf
//   skyglow report  --config run.conf --out results/
//
// Every analysis subcommand takes a config file plus optional overrides; see
// the README for the config key list and artifact schemas.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "skyglow/app.hpp"
#include "skyglow/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string panel_dir;
  std::string mask;
  std::string table;
  std::string series;
  std::string out_dir;
  std::string scopes;
  int threads = -1;
  int chunk_rows = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run config file (key = value)");
  cmd->add_option("--panel", args.panel_dir, "Directory of .nlg1 annual grids");
  cmd->add_option("--mask", args.mask, "RMSK region mask");
  cmd->add_option("--table", args.table, "Region table CSV (id,name,kind)");
  cmd->add_option("--series", args.series, "External year,value CSV");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--scopes", args.scopes, "Comma-separated scope list");
  cmd->add_option("--threads", args.threads, "Worker thread count");
  cmd->add_option("--chunk-rows", args.chunk_rows, "Rows per reduction band");
}

skyglow::RunConfig build_config(const CommonArgs& args) {
  skyglow::RunConfig config;
  if (!args.config_path.empty()) {
    config = skyglow::RunConfig::from_file(args.config_path);
  }
  if (!args.panel_dir.empty()) config.set("panel_dir", args.panel_dir);
  if (!args.mask.empty()) config.set("mask", args.mask);
  if (!args.table.empty()) config.set("table", args.table);
  if (!args.series.empty()) config.set("series", args.series);
  if (!args.out_dir.empty()) config.set("out", args.out_dir);
  if (!args.scopes.empty()) config.set("scopes", args.scopes);
  if (args.threads >= 0) config.set("threads", std::to_string(args.threads));
  if (args.chunk_rows > 0) config.set("chunk_rows", std::to_string(args.chunk_rows));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence diagnostics for annual nighttime-luminosity rasters"};
  app.require_subcommand(1);

  // ingest
  std::string ingest_input, ingest_output;
  int ingest_year = 0;
  auto* ingest = app.add_subcommand("ingest", "Convert an ASCII grid to NLG1");
  ingest->add_option("--input", ingest_input, "ASCII grid file")->required();
  ingest->add_option("--year", ingest_year, "Calendar year of the composite")
      ->required();
  ingest->add_option("--output", ingest_output, "NLG1 output path")->required();

  // synth
  std::string synth_spec, synth_out = "panel";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel");
  synth->add_option("--spec", synth_spec, "Panel spec file (key = value)")
      ->required();
  synth->add_option("--out", synth_out, "Output directory");

  CommonArgs diff_args, metrics_args, markov_args, growth_args, render_args,
      report_args, run_args;
  auto* diff = app.add_subcommand("diff", "Write demeaned change grids (NLD1)");
  add_common(diff, diff_args);
  auto* metrics =
      app.add_subcommand("metrics", "Sigma series, moments, QQ and scatter data");
  add_common(metrics, metrics_args);
  auto* markov = app.add_subcommand("markov", "3-state persistence probabilities");
  add_common(markov, markov_args);
  auto* growth = app.add_subcommand("growth", "Aggregate growth with year effects");
  add_common(growth, growth_args);
  auto* render = app.add_subcommand("render", "Color-coded change maps");
  add_common(render, render_args);
  auto* report = app.add_subcommand("report", "Per-scope summary table");
  add_common(report, report_args);
  auto* run = app.add_subcommand("run", "Full pipeline: all artifacts");
  add_common(run, run_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      return skyglow::cmd_ingest(ingest_input, ingest_year, ingest_output);
    }
    if (synth->parsed()) return skyglow::cmd_synth(synth_spec, synth_out);
    if (diff->parsed()) return skyglow::cmd_diff(build_config(diff_args));
    if (metrics->parsed()) return skyglow::cmd_metrics(build_config(metrics_args));
    if (markov->parsed()) return skyglow::cmd_markov(build_config(markov_args));
    if (growth->parsed()) return skyglow::cmd_growth(build_config(growth_args));
    if (render->parsed()) return skyglow::cmd_render(build_config(render_args));
    if (report->parsed()) return skyglow::cmd_report(build_config(report_args));
    if (run->parsed()) return skyglow::cmd_run(build_config(run_args));
  } catch (const skyglow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
