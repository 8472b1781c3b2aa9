#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace {

using setrap::cli::Json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = setrap::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string config(const std::string& name) { return std::string(SETRAP_CONFIG_DIR) + "/" + name; }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Cli, ParamsScaleFactors) {
  const Result r = run({"params", "-c", config("example.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["schema"], "setrap/1");
  EXPECT_NEAR(j["q0"].get<double>(), 0.98, 0.005);
  EXPECT_NEAR(j["u0_ev"].get<double>(), 6.1, 0.05);
}

TEST(Cli, RingSweepRowCount) {
  const Result r = run({"ring", "sweep", "--steps", "3", "-c", config("example.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "theta,R1_um,R2_um,qz,secular_hz,depth_mev");
  for (const auto& row : rows) EXPECT_EQ(row.size(), 6u);
}

TEST(Cli, TableAnMatchesTable) {
  const Result r = run({"multipole", "table-an", "--max-n", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 4u);
  const double expect[3][2] = {{1.029086, 0.236068}, {1.037418, -0.266149}, {1.040436, 0.276076}};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(std::stoi(rows[i + 1][0]), i + 2);
    EXPECT_NEAR(std::stod(rows[i + 1][1]), expect[i][0], 1e-5);
    EXPECT_NEAR(std::stod(rows[i + 1][2]), expect[i][1], 1e-5);
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"ring"}).code, 1);
  EXPECT_EQ(run({"params", "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"params", "--format", "csv"}).code, 1);
  EXPECT_EQ(run({"params", "-c", "/nonexistent/params.json"}).code, 1);
  EXPECT_EQ(run({"ring", "sweep", "--steps", "0"}).code, 1);
  EXPECT_EQ(run({"multipole", "depth", "--thetaw", "4"}).code, 2);
  EXPECT_EQ(run({"ring", "design", "--theta", "0.6"}).code, 2);
  EXPECT_EQ(run({"multipole", "layout", "--theta0", "3.141592653589793", "--thetaw", "1"}).code, 0);
  EXPECT_EQ(run({"multipole", "layout", "--theta0", "2.641592653589793", "--thetaw", "1"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, UnknownSubcommandPrintsHelp) {
  const Result r = run({"bogus"});
  EXPECT_NE(r.err.find("Subcommands:"), std::string::npos);
}

TEST(Cli, Deterministic) {
  const std::vector<std::vector<std::string>> cmds = {
      {"params", "-c", config("example.json")},
      {"multipole", "depth", "--theta0", "0.3", "--thetaw", "1.2"},
      {"multipole", "ueff-contours", "--resolution", "9", "--vc", "-0.1"},
      {"field", "eval", "-g", config("five_wire.json"), "--y-um", "7", "--format", "csv"},
      {"fourier", "grid", "-g", config("ring.json"), "--nkx", "3", "--nky", "2"},
  };
  for (const auto& c : cmds) {
    const Result a = run(c);
    const Result b = run(c);
    ASSERT_EQ(a.code, 0) << c[0] << " " << a.err;
    EXPECT_EQ(a.out, b.out);
  }
}

// CLI numbers are library numbers at 9 significant digits.
TEST(Cli, MatchesLibrary) {
  using namespace setrap;
  const Result r = run({"multipole", "depth", "--theta0", "0.3", "--thetaw", "1.2",
                        "-c", config("example.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  const TrapParams p = TrapParams::from_lab_units(100e6, 100, 10, 1, 100);
  const DepthReport d = intrinsic_depth(2, 0.3, 1.2, p);
  const double meV = 1e-3 * constants::elementary_charge;
  EXPECT_NEAR(j["depth_mev"].get<double>(), d.depth / meV, 1e-8 * d.depth / meV);
  EXPECT_NEAR(j["u_saddle"][0].get<double>(), d.saddle.u_saddle.real(), 1e-8);
  EXPECT_EQ(j["estimates"].size(), 4u);

  const Result f = run({"field", "eval", "-g", config("ring.json"), "--z-um", "100"});
  ASSERT_EQ(f.code, 0) << f.err;
  const Json fj = Json::parse(f.out);
  const PlanarRegion ring = make_annulus({0, 0}, 67.6e-6, 338.3e-6, 100);
  const FieldSample s = evaluate(ring, {0, 0, 100e-6});
  EXPECT_NEAR(fj["potential_v"].get<double>(), s.potential, 1e-8 * std::abs(s.potential));
}

TEST(Cli, MultipoleFieldMatchesStripModel) {
  using namespace setrap;
  const Result lay = run({"multipole", "layout", "--theta0", "0.4", "--thetaw", "1.1"});
  ASSERT_EQ(lay.code, 0) << lay.err;
  const auto regions = cli::geometry_from_json(Json::parse(lay.out));
  const Result f = run({"multipole", "field", "--theta0", "0.4", "--thetaw", "1.1",
                        "--y-um", "20", "--z-um", "70"});
  ASSERT_EQ(f.code, 0) << f.err;
  const Json j = Json::parse(f.out);
  const FieldSample s = superpose(regions, {0, 20e-6, 70e-6});
  EXPECT_NEAR(j["potential_v"].get<double>(), s.potential, 1e-6);
  EXPECT_NEAR(j["field_v_per_m"][0].get<double>(), s.field.y, 1e-6 * std::abs(s.field.y) + 1e-3);
  EXPECT_NEAR(j["field_v_per_m"][1].get<double>(), s.field.z, 1e-6 * std::abs(s.field.z) + 1e-3);
}

TEST(Cli, DegreesSwitch) {
  const Result a = run({"multipole", "depth", "--theta0", "30", "--thetaw", "60", "--deg"});
  const Result b = run({"multipole", "depth", "--theta0", "0.5235987755982988", "--thetaw",
                        "1.0471975511965976"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Result c = run({"multipole", "strength", "--theta0-deg", "30", "--thetaw",
                        "1.0471975511965976"});
  const Result d = run({"multipole", "strength", "--theta0", "0.5235987755982988", "--thetaw",
                        "1.0471975511965976"});
  EXPECT_EQ(c.out, d.out);
}

TEST(Cli, BiasOptimization) {
  const Result r = run({"multipole", "bias-opt", "--theta0-deg", "100", "--thetaw",
                        "1.5707963267948966", "-c", config("example.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(std::abs(j["vc_opt"].get<double>()), 0.18, 0.01);
  EXPECT_NEAR(j["depth_ratio"].get<double>(), 9.8, 0.2);
  EXPECT_TRUE(j["stable"].get<bool>());
}

TEST(Cli, OutputFile) {
  const auto path = std::filesystem::temp_directory_path() / "setrap_cli_test.json";
  const Result r = run({"params", "-o", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), run({"params"}).out);
  std::filesystem::remove(path);
}

TEST(Cli, FormattingNineDigits) {
  EXPECT_EQ(setrap::cli::fmt(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(setrap::cli::fmt(2.0), "2");
  EXPECT_TRUE(setrap::cli::num(std::nan("")).is_null());
  const Json j = setrap::cli::num(std::acos(-1.0));
  EXPECT_EQ(j.dump(), "3.14159265");
}

}  // namespace
