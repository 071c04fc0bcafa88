#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ripr/cli.hpp"

namespace fs = std::filesystem;
using namespace ripr;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ripr_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

// Runs the CLI with stderr captured into `err`; returns the exit status.
int run_cli(const std::string& args, std::string* err = nullptr) {
  const fs::path log = scratch("stderr.txt");
  fs::create_directories(log.parent_path());
  const std::string cmd = std::string(RIPR_CLI_PATH) + " " + args + " 2> " + log.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

TEST(Cli, UnknownCommandIsUsageError) {
  const auto out = scratch("unknown");
  std::string err;
  EXPECT_EQ(run_cli("frobnicate --out " + out.string(), &err), 1);
  EXPECT_NE(err.find("unknown command"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, GainWithoutFamilyNamesIt) {
  std::string err;
  EXPECT_EQ(run_cli("gain --out " + scratch("gain_missing").string(), &err), 1);
  EXPECT_NE(err.find("family"), std::string::npos);
}

TEST(Cli, UnknownFamilyIsUsageError) {
  std::string err;
  EXPECT_EQ(run_cli("gain --family nope --alt cauchy --out " + scratch("gain_bad").string(), &err), 1);
  EXPECT_NE(err.find("nope"), std::string::npos);
}

TEST(Cli, BadGridFlag) {
  EXPECT_EQ(run_cli("gain --family gauss-pair --grid 1:2 --out " + scratch("grid_bad").string()), 1);
}

TEST(Cli, RateBernoulli) {
  const auto out = scratch("rate");
  ASSERT_EQ(run_cli("rate --experiment bernoulli --out " + out.string()), 0);
  EXPECT_EQ(first_line(out / "rate.csv"), "epsilon,delta,slack,bound,status");
  const std::string summary = slurp(out / "summary.txt");
  ASSERT_EQ(summary.rfind("fitted_slope = ", 0), 0u);
  const double slope = std::stod(summary.substr(15));
  EXPECT_GE(slope, 0.45);
  EXPECT_LE(slope, 0.55);
  const std::string manifest = slurp(out / "MANIFEST");
  for (const char* key : {"command = rate", "config_hash = ", "seed = 1", "version = ", "status = ok"})
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
}

TEST(Cli, ProjectCauchyOntoGaussianPair) {
  const auto out = scratch("project");
  ASSERT_EQ(run_cli("project --family gauss-pair --alt cauchy --kmax 30 --out " + out.string()), 0);
  EXPECT_EQ(first_line(out / "trace.csv"), "k,alpha,theta_index,gain_value,gain_status,bound_over_k");
  EXPECT_EQ(first_line(out / "final.csv"), "index,label,weight,status");
  std::ifstream in(out / "final.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
  EXPECT_NEAR(std::stod(line.substr(c2 + 1, c3 - c2 - 1)), 0.5, 0.05);
  const std::string report = slurp(out / "report.jsonl");
  EXPECT_NE(report.find("\"alt_truncated\":true"), std::string::npos);
  EXPECT_NE(report.find("\"envelope_violations\":0"), std::string::npos);
}

TEST(Cli, DeterministicOutputs) {
  const auto cfg = scratch("det.conf");
  fs::create_directories(cfg.parent_path());
  {
    std::ofstream f(cfg);
    f << "command = sequential\nn = 2000\nruns = 20\ntype1_runs = 200\nseed = 42\n";
  }
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --out " + a.string()), 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "sequential.csv"), slurp(b / "sequential.csv"));
  EXPECT_EQ(slurp(a / "summary.jsonl"), slurp(b / "summary.jsonl"));
  EXPECT_EQ(slurp(a / "MANIFEST"), slurp(b / "MANIFEST"));
  EXPECT_EQ(first_line(a / "sequential.csv"), "run,n,log_ratio_sum,mean_rate");
  const auto c = scratch("det_c");
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --seed 43 --out " + c.string()), 0);
  EXPECT_NE(slurp(a / "sequential.csv"), slurp(c / "sequential.csv"));
}

TEST(Cli, SubprobReports) {
  const auto out = scratch("subprob");
  ASSERT_EQ(run_cli("subprob --out " + out.string()), 0);
  EXPECT_EQ(first_line(out / "countable.csv"), "n,divergence,mass,status");
  const std::string j = slurp(out / "subprob.jsonl");
  EXPECT_NE(j.find("\"record\":\"limit_check_control\""), std::string::npos);
  EXPECT_NE(j.find("\"limit_mass\":0.5"), std::string::npos);
}

TEST(Cli, EpowerBothConfigurations) {
  for (const char* ex : {"bernoulli", "gaussian"}) {
    const auto out = scratch(std::string("epower_") + ex);
    EXPECT_EQ(run_cli(std::string("epower --experiment ") + ex + " --kmax 50 --out " + out.string()), 0) << ex;
    EXPECT_EQ(first_line(out / "epower.csv"), "vertex,lhs,d_lower,rhs,status");
  }
}

TEST(Cli, StrengthAndEstat) {
  const auto out = scratch("strength");
  ASSERT_EQ(run_cli("strength --family gauss-pair --alt cauchy --kmax 20 --out " + out.string()), 0);
  EXPECT_NE(slurp(out / "strength.jsonl").find("first_stronger"), std::string::npos);
  const auto est = scratch("estat");
  ASSERT_EQ(run_cli("estat --family bernoulli --alt bernoulli:0.5 --kmax 20 --out " + est.string()), 0);
  EXPECT_EQ(first_line(est / "estat.csv"), "point,log_e,e_value,status");
}

TEST(Config, SectionsAndDefaults) {
  std::istringstream in("command = project\nkmax = 7\n[grid]\nlo = -10\nhi = 10\npoints = 2001\n"
                        "[family]\nkind = bernoulli\nrange = 0.2:0.8:7\n[alt]\nname = bernoulli:0.5\n");
  const RunConfig c = read_config(in);
  EXPECT_EQ(c.command, "project");
  EXPECT_EQ(c.k_max, 7);
  EXPECT_EQ(c.grid.points, 2001u);
  EXPECT_EQ(c.family, "bernoulli:0.2:0.8:7");
  EXPECT_EQ(c.alt, "bernoulli:0.5");
  EXPECT_EQ(c.seed, 1u);
  std::istringstream bad("kmax = seven\n");
  EXPECT_THROW(read_config(bad), usage_error);
}

TEST(Config, HashTracksContent) {
  RunConfig a, b;
  a.command = b.command = "rate";
  EXPECT_EQ(fnv1a(a.canonical()), fnv1a(b.canonical()));
  b.seed = 2;
  EXPECT_NE(fnv1a(a.canonical()), fnv1a(b.canonical()));
}
