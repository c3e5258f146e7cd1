#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cocyclelab/commands.hpp"
#include "cocyclelab/errors.hpp"

using namespace cocyclelab;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(COCYCLELAB_SOURCE_DIR) / "scenarios";

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cocyclelab_commands_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

}  // namespace

TEST(Commands, CounterexampleCsv) {
  CommandOptions o;
  o.k = 8;
  o.out = temp_file("ce.csv");
  std::ostringstream log;
  EXPECT_EQ(run_counterexample(o, log), kExitOk);
  const auto rows = lines(slurp(o.out));
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_EQ(rows[0], "n,inhomogeneous,overlap,square_integral,homogeneous_fixed_a,homogeneous_cell_max");
  for (std::size_t n = 1; n <= 16; ++n) EXPECT_EQ(rows[n].substr(0, rows[n].find(',', rows[n].find(',') + 1)),
                                                  std::to_string(n) + ",0.5");
}

TEST(Commands, ReportOnDoubling) {
  CommandOptions o;
  o.scenario = kScenarios / "doubling.json";
  o.out = temp_file("doubling_report.csv");
  std::ostringstream log;
  EXPECT_EQ(run_report(o, log), kExitOk) << log.str();
  const std::string text = log.str();
  EXPECT_NE(text.find("exact: yes"), std::string::npos);
  EXPECT_NE(text.find("prior-hom yes, post-hom yes, prior-inhom yes, post-inhom yes"), std::string::npos);
  EXPECT_NE(text.find("asymptotic periodicity: r=1"), std::string::npos);
  const auto rows = lines(slurp(o.out));
  EXPECT_EQ(rows[0], "check,status,detail");
  EXPECT_EQ(rows[1], "verdict exact,exact,");
  EXPECT_EQ(rows[2], "verdict mixing,mixing,");
}

TEST(Commands, ReportOnBakerIsConsistentNegative) {
  CommandOptions o;
  o.scenario = kScenarios / "baker_cyclic.json";
  o.out = temp_file("baker_report.csv");
  std::ostringstream log;
  EXPECT_EQ(run_report(o, log), kExitOk) << log.str();
  EXPECT_NE(log.str().find("exact: no"), std::string::npos);
  EXPECT_NE(log.str().find("prior-hom no, post-hom no, prior-inhom no, post-inhom no"), std::string::npos);
}

TEST(Commands, ReportOnPlantedCycle) {
  CommandOptions o;
  o.scenario = kScenarios / "block_cycle3.json";
  o.out = temp_file("cycle_report.csv");
  std::ostringstream log;
  EXPECT_EQ(run_report(o, log), kExitOk) << log.str();
  EXPECT_NE(log.str().find("r=3, rho=(1 2 3)"), std::string::npos);
}

TEST(Commands, OutputsAreBitIdentical) {
  CommandOptions o;
  o.scenario = kScenarios / "rotation_two_maps.json";
  std::ostringstream log;
  o.out = temp_file("mix_a.csv");
  run_mixing(o, log);
  o.out = temp_file("mix_b.csv");
  run_mixing(o, log);
  EXPECT_EQ(slurp(temp_file("mix_a.csv")), slurp(temp_file("mix_b.csv")));
  EXPECT_EQ(lines(slurp(temp_file("mix_a.csv")))[0], "notion,omega_id,f_id,g_id,n,value");

  o.out = temp_file("skew_a.csv");
  run_skew(o, log);
  o.out = temp_file("skew_b.csv");
  run_skew(o, log);
  EXPECT_EQ(slurp(temp_file("skew_a.csv")), slurp(temp_file("skew_b.csv")));
}

TEST(Commands, OtherCsvLayouts) {
  std::ostringstream log;
  CommandOptions o;
  o.scenario = kScenarios / "block_swap.json";
  o.out = temp_file("asymp.csv");
  EXPECT_EQ(run_asymp(o, log), kExitOk);
  EXPECT_EQ(lines(slurp(o.out)), (std::vector<std::string>{"omega_id,r,rho,residual", "0,2,(1 2),0"}));

  o.out = temp_file("exact.csv");
  o.horizon = 3;
  EXPECT_EQ(run_exactness(o, log), kExitOk);
  const auto ex = lines(slurp(o.out));
  EXPECT_EQ(ex[0], "omega_id,test,n,value_or_flag");
  EXPECT_EQ(ex[1], "0,norm,0,1");
  EXPECT_EQ(ex[5], "0,norm,,not exact");

  o.out = temp_file("qc.csv");
  o.eps = {0.5};
  EXPECT_EQ(run_qc(o, log), kExitOk);
  EXPECT_EQ(lines(slurp(o.out))[0], "eps,resolved,passed,delta,family_size,min_measure,witness_value");
}

TEST(Commands, Errors) {
  std::ostringstream log;
  CommandOptions o;
  EXPECT_THROW(run_mixing(o, log), ConfigError);
  o.scenario = kScenarios / "doubling.json";
  o.notion = "sideways";
  o.out = temp_file("bad.csv");
  EXPECT_THROW(run_mixing(o, log), ConfigError);
  EXPECT_THROW(run_command("run-everything", o, log), PreconditionError);
  o.notion = "all";
  EXPECT_THROW(run_skew(o, log), ConfigError);
  EXPECT_EQ(command_names().size(), 7u);
}
