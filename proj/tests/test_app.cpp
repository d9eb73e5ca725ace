#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skyglow/app.hpp"
#include "skyglow/errors.hpp"

using namespace skyglow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("skyglow_test_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Synthesizes a small panel with regions and returns a ready config.
RunConfig make_fixture(const fs::path& dir, int threads) {
  const fs::path spec = dir / "panel.spec";
  std::ofstream(spec) << "width = 60\nheight = 40\nyears = 1992:2013\n"
                         "seed = 2024\nbase_dn = 30\nactive_fraction = 0.3\n"
                         "sigma = linear:4.0:2.0\nregions = 3\n"
                         "drift = 0.02,0.05,0.1\n";
  REQUIRE(cmd_synth(spec, dir / "panel") == 0);

  RunConfig config;
  config.set("panel_dir", (dir / "panel").string());
  config.set("mask", (dir / "panel" / "regions.rmsk").string());
  config.set("table", (dir / "panel" / "regions.csv").string());
  config.set("out", (dir / "out").string());
  config.set("scopes", "world,R1,R2,R3");
  config.set("threads", std::to_string(threads));
  return config;
}

}  // namespace

TEST_CASE("config files parse with comments and overrides") {
  const fs::path dir = temp_dir("config");
  const fs::path path = dir / "run.conf";
  std::ofstream(path) << "# analysis run\n"
                         "panel_dir = ./panel\n"
                         "scopes = world, Germany , Thailand\n"
                         "period_a = 1993:2006\n"
                         "period_b = 2007:2013\n"
                         "threads = 3\n"
                         "chunk_rows = 64\n"
                         "percent_units = true\n";
  RunConfig config = RunConfig::from_file(path);
  CHECK(config.panel_dir == "./panel");
  CHECK(config.scopes == std::vector<std::string>{"world", "Germany", "Thailand"});
  CHECK(config.period_a.first == 1993);
  CHECK(config.period_b.last == 2013);
  CHECK(config.threads == 3);
  CHECK(config.chunk_rows == 64);
  CHECK(config.percent_units);

  config.set("threads", "1");
  CHECK(config.effective_threads() == 1);
  CHECK_THROWS_AS(config.set("wat", "1"), FormatError);
  CHECK_THROWS_AS(config.set("period_a", "2010"), FormatError);
}

TEST_CASE("report header and fixture rows match the published layout") {
  CHECK(report_header({1993, 2006}, {2007, 2013}) ==
        "name,y9306,y0713,sy9306,sy0713,app9306,app0713,amm9306,amm0713,"
        "a009306,a000713");

  ReportRow world;
  world.name = "World";
  world.y_a = 1.66;
  world.y_b = 2.78;
  world.sy_a = 0.0;
  world.sy_b = 0.0;
  world.app_a = 0.099;
  world.app_b = 0.099;
  world.amm_a = 0.083;
  world.amm_b = 0.079;
  world.a00_a = 0.818;
  world.a00_b = 0.822;
  CHECK(format_report_row(world) ==
        "World,1.66,2.78,0.0,0.0,9.9,9.9,8.3,7.9,81.8,82.2");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  ReportRow singapore;
  singapore.name = "Singapore";
  singapore.y_a = 1.66;
  singapore.y_b = 2.81;
  singapore.sy_a = 0.7;
  singapore.sy_b = 0.5;
  singapore.app_a = nan;
  singapore.app_b = 0.112;
  singapore.amm_a = nan;
  singapore.amm_b = 0.116;
  singapore.a00_a = nan;
  singapore.a00_b = 0.773;
  CHECK(format_report_row(singapore) ==
        "Singapore,1.66,2.81,0.7,0.5,NaN,11.2,NaN,11.6,NaN,77.3");
}

TEST_CASE("end-to-end run emits every artifact") {
  const fs::path dir = temp_dir("run");
  RunConfig config = make_fixture(dir, 1);
  REQUIRE(cmd_run(config) == 0);

  for (const char* name : {"sigma_series.csv", "markov.csv", "growth.csv",
                           "moments.json", "qq.csv", "scatter.csv", "report.csv"}) {
    CHECK(fs::exists(dir / "out" / name));
  }
  CHECK(fs::exists(dir / "out" / "maps"));
  int maps = 0;
  for (const auto& e : fs::directory_iterator(dir / "out" / "maps")) {
    CHECK(e.path().extension() == ".ppm");
    ++maps;
  }
  CHECK(maps == 12);  // 4 scopes x 3 maps

  // Schema spot checks.
  const std::string sigma = read_text(dir / "out" / "sigma_series.csv");
  CHECK(sigma.rfind("scope,year,sigma,n\n", 0) == 0);
  CHECK(sigma.find("World,1993,") != std::string::npos);
  const std::string markov = read_text(dir / "out" / "markov.csv");
  CHECK(markov.rfind("scope,year,a_pp,a_00,a_mm,gap,converged,n_transitions\n", 0) ==
        0);
  const std::string report = read_text(dir / "out" / "report.csv");
  CHECK(report.rfind("name,y9306,", 0) == 0);
  CHECK(report.find("\nR2,") != std::string::npos);
  const std::string growth = read_text(dir / "out" / "growth.csv");
  CHECK(growth.find("World,1993-2006,") != std::string::npos);
}

TEST_CASE("thread count does not change any CSV byte") {
  const fs::path dir1 = temp_dir("t1");
  const fs::path dir2 = temp_dir("t2");
  RunConfig c1 = make_fixture(dir1, 1);
  RunConfig c2 = make_fixture(dir2, 3);
  REQUIRE(cmd_run(c1) == 0);
  REQUIRE(cmd_run(c2) == 0);
  for (const char* name : {"sigma_series.csv", "markov.csv", "growth.csv",
                           "moments.json", "qq.csv", "scatter.csv", "report.csv"}) {
    CHECK(read_text(dir1 / "out" / name) == read_text(dir2 / "out" / name));
  }
  CHECK(read_text(dir1 / "out" / "maps" / "World_cumulative_1993-2013.ppm") ==
        read_text(dir2 / "out" / "maps" / "World_cumulative_1993-2013.ppm"));
}

TEST_CASE("reruns over identical inputs are idempotent") {
  const fs::path dir = temp_dir("idem");
  RunConfig config = make_fixture(dir, 2);
  REQUIRE(cmd_run(config) == 0);
  const std::string first = read_text(dir / "out" / "markov.csv");
  REQUIRE(cmd_run(config) == 0);
  CHECK(read_text(dir / "out" / "markov.csv") == first);
}

TEST_CASE("periods outside the panel are a fatal argument error") {
  const fs::path dir = temp_dir("badperiod");
  RunConfig config = make_fixture(dir, 1);
  config.set("period_b", "2007:2031");
  CHECK(cmd_run(config) == 2);
}

TEST_CASE("unreadable inputs are fatal with a diagnostic") {
  RunConfig config;
  config.set("panel_dir", "/nonexistent/panel");
  CHECK(cmd_run(config) == 2);
}

TEST_CASE("empty scope list produces a header-only report") {
  const fs::path dir = temp_dir("vacuous");
  RunConfig config = make_fixture(dir, 1);
  config.scopes.clear();
  REQUIRE(cmd_report(config) == 0);
  CHECK(read_text(dir / "out" / "report.csv") ==
        "name,y9306,y0713,sy9306,sy0713,app9306,app0713,amm9306,amm0713,"
        "a009306,a000713\n");
}

TEST_CASE("ingest converts ASCII grids to NLG1") {
  const fs::path dir = temp_dir("ingest");
  std::ofstream(dir / "g.asc") << "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                                  "cellsize 1\n3 4\n";
  CHECK(cmd_ingest(dir / "g.asc", 1997, dir / "g.nlg1") == 0);
  CHECK(fs::exists(dir / "g.nlg1"));
  CHECK(cmd_ingest(dir / "missing.asc", 1997, dir / "h.nlg1") == 2);
}

TEST_CASE("diff emits demeaned grids and tiny-grid CSVs") {
  const fs::path dir = temp_dir("diff");
  RunConfig config = make_fixture(dir, 1);
  config.scopes = {"world"};
  REQUIRE(cmd_diff(config) == 0);
  CHECK(fs::exists(dir / "out" / "demeaned" / "World_1993.nld1"));
  CHECK(fs::exists(dir / "out" / "demeaned" / "World_2013.nld1"));
  CHECK(fs::exists(dir / "out" / "demeaned" / "World_1993.csv"));
}
