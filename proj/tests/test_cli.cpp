#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("qbound_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string("\"") + QBOUND_CLI + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST(Cli, SingleModeThreeDecibels) {
  const auto r = run("bound --modes 1 --db 3 --wx 1 --wy 1");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  // 2 (1 + cosh 2r) with e^{-2r} = 10^{-0.3}
  const double e = std::pow(10.0, -0.3);
  EXPECT_NEAR(j["f_hcr"].get<double>(), 2.0 + e + 1.0 / e, 1e-12);
  EXPECT_TRUE(j["closed_form_crosscheck"]["agrees"].get<bool>());
}

TEST(Cli, BalancedBound) {
  const auto r = run("bound --r 0.5 --phi1 0 --phi2 1.5707963267948966 --t 0.5");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["f_hcr"].get<double>(), 4 * std::exp(-1.0), 1e-9);
  EXPECT_NEAR(j["v_x"].get<double>(), 2 * std::exp(-1.0), 1e-6);
}

TEST(Cli, AutoConfigAndZeroWeight) {
  auto j = json::parse(run("bound --r 0.693 --auto-config").out);
  EXPECT_NEAR(j["f_hcr"].get<double>(), 4 * std::exp(-2 * 0.693), 1e-9);
  const auto r = run("bound --r " + std::to_string(std::log(2.0)) + " --phi2 1.5707963267948966 --t 0.5 --wx 1 --wy 0");
  ASSERT_EQ(r.code, 0);
  j = json::parse(r.out);
  EXPECT_NEAR(j["v_x"].get<double>(), 8.0 / 17.0, 1e-5);
  EXPECT_TRUE(j["v_y"].is_null());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("bound --r 0.5 --db 3").code, 2);
  EXPECT_EQ(run("bound --r 0.5 --r1 0.2").code, 2);
  EXPECT_EQ(run("bound --r -1").code, 2);
  EXPECT_EQ(run("bound --r 0.5 --wx -1").code, 2);
  EXPECT_EQ(run("bound --modes 3").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("simulate --scheme balanced --r 0.5 --shots 10").code, 2);
  EXPECT_EQ(run("simulate --scheme example1 --r2 0.5 --t 1").code, 2);
  EXPECT_EQ(run("verify --only no-such-check").code, 2);
  EXPECT_EQ(run("verify --only envelope --perturb-envelope 1e-2").code, 1);
}

TEST(Cli, RegionCsvAndJsonAgree) {
  const auto csv = run("region --r1 0.35 --r2 0.69 --points 25");
  ASSERT_EQ(csv.code, 0);
  const auto rows = parse_csv(csv.out);
  ASSERT_EQ(rows.size(), 26u);
  EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')), "v_x,v_y,segment,source,t,phi1,w_ratio");
  const auto js = run("region --r1 0.35 --r2 0.69 --points 25 --format json");
  ASSERT_EQ(js.code, 0);
  const auto j = json::parse(js.out);
  ASSERT_EQ(j.size(), 25u);
  const double e1 = std::exp(-0.7), e2 = std::exp(-1.38), s = std::exp(-0.35) + std::exp(-0.69);
  double prev = 0.0;
  for (std::size_t i = 0; i < 25; ++i) {
    const auto& row = rows[i + 1];
    ASSERT_EQ(row.size(), 7u);
    // plain C-locale decimals
    EXPECT_EQ(row[0].find_first_not_of("0123456789.e+-"), std::string::npos);
    const double vx = std::stod(row[0]), vy = std::stod(row[1]);
    EXPECT_DOUBLE_EQ(vx, j[i]["v_x"].get<double>());
    EXPECT_DOUBLE_EQ(vy, j[i]["v_y"].get<double>());
    EXPECT_EQ(row[2], j[i]["segment"].get<std::string>());
    EXPECT_GT(vx, prev);
    prev = vx;
    double rel = 0.0;
    if (row[2] == "low") rel = e2 / vx + e1 / vy - 1.0;
    if (row[2] == "middle") rel = (vx + vy) / (s * s) - 1.0;
    if (row[2] == "high") rel = e1 / vx + e2 / vy - 1.0;
    EXPECT_NEAR(rel, 0.0, 1e-12) << row[2];
  }
}

TEST(Cli, SingleModeRegionHasEmptyConfigFields) {
  const auto r = run("region --modes 1 --r 0.4 --points 5");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[1][2], "single");
  EXPECT_EQ(rows[1][4], "");
}

TEST(Cli, ConfigFileWithOverride) {
  const fs::path cfg = scratch_dir() / "probe.json";
  std::ofstream(cfg) << R"({"r": 0.5, "phi2": 1.5707963267948966, "t": 0.5, "wx": 1, "wy": 4})";
  auto j = json::parse(run("bound --config " + cfg.string()).out);
  EXPECT_DOUBLE_EQ(j["weights"]["w_y"].get<double>(), 4.0);
  EXPECT_DOUBLE_EQ(j["probe"]["r1"].get<double>(), 0.5);
  j = json::parse(run("bound --config " + cfg.string() + " --wy 1 --r1 0.3").out);
  EXPECT_DOUBLE_EQ(j["weights"]["w_y"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["probe"]["r1"].get<double>(), 0.3);
  EXPECT_DOUBLE_EQ(j["probe"]["r2"].get<double>(), 0.5);
}

TEST(Cli, OutputFileIsWrittenWhole) {
  const fs::path out = scratch_dir() / "region.csv";
  fs::remove(out);
  ASSERT_EQ(run("region --r1 0.2 --r2 0.5 --points 10 -o " + out.string()).code, 0);
  ASSERT_TRUE(fs::exists(out));
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(parse_csv(ss.str()).size(), 11u);
  for (const auto& entry : fs::directory_iterator(out.parent_path()))
    EXPECT_EQ(entry.path().filename().string().find(".tmp."), std::string::npos);
}

TEST(Cli, SimulateBalanced) {
  const auto r = run("simulate --scheme balanced --r 0.693 --shots 200000 --seed 4 --theta 0.3,-0.1");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["verdict"]["pass"].get<bool>());
  EXPECT_NEAR(j["mean"][0].get<double>(), 0.3, 0.01);
  EXPECT_NEAR(j["variance"][1].get<double>(), 0.5, 0.01);
  EXPECT_EQ(run("simulate --scheme balanced --r 0.693 --shots 200000 --seed 4 --theta 0.3,-0.1").out, r.out);
}

TEST(Cli, VerifyFilterPrintsJsonLines) {
  const auto r = run("verify --only quartic");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j["check"].get<std::string>().rfind("quartic/", 0), 0u);
    EXPECT_TRUE(j["pass"].get<bool>());
    ++n;
  }
  EXPECT_EQ(n, 3);
}
