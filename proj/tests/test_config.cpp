#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fracvisc/app.hpp"
#include "fracvisc/config.hpp"
#include <nlohmann/json.hpp>

using namespace fracvisc;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fracvisc_cfg_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write(const std::filesystem::path& dir, const std::string& text) {
  const auto p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

int line_of(const std::string& text) {
  try {
    (void)ExperimentConfig::parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(Config, Defaults) {
  const ExperimentConfig c = ExperimentConfig::parse("");
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.n_points, 0);
  ASSERT_EQ(c.epsilon_list.size(), 7u);
  EXPECT_EQ(c.epsilon_list.front(), 0.0625);
  EXPECT_EQ(c.epsilon_list.back(), 0.0625 / 64);
  EXPECT_EQ(c.reference, "hopf_lax");
}

TEST(Config, ParsesEveryKey) {
  const ExperimentConfig c = ExperimentConfig::parse(
      "# comment line\n"
      "dim = 2\n"
      "n_points = 128   # trailing comment\n"
      "s_list = 0.25, 0.5\n"
      "epsilon_list = geometric:0.1,2,5\n"
      "hamiltonian = anisotropic_quadratic:1,2\n"
      "u0 = cos2d\n"
      "forcing = zero\n"
      "T = 1.5\n"
      "p_list = 2, inf\n"
      "snapshot_count = 8\n"
      "dt_cfl = 0.25\n"
      "reference = monotone:8\n"
      "output_dir = results\n"
      "seed = 42\n"
      "scheme = ifrk4\n"
      "splitting_dt = 0.01\n"
      "q_list = 2, 3\n"
      "pairs = 0.2:0.1\n"
      "eta_list = 0.1, 0.2\n");
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.n_points, 128);
  EXPECT_EQ(c.s_list, (std::vector<double>{0.25, 0.5}));
  EXPECT_DOUBLE_EQ(c.epsilon_list[4], 0.1 / 16);
  EXPECT_EQ(c.make_hamiltonian().Theta(), 2.0);
  EXPECT_TRUE(std::isinf(c.p_list[1]));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].second, 0.1);
  EXPECT_EQ(c.solver_options().scheme, Scheme::integrating_factor_rk4);
  EXPECT_EQ(c.snapshot_times().back(), 1.5);
  EXPECT_EQ(c.problem(0.5, 0.1).grid.n_points(), 128);
}

TEST(Config, GeometricRatioBelowOne) {
  const ExperimentConfig c = ExperimentConfig::parse("epsilon_list = geometric:0.1,0.5,5\n");
  EXPECT_DOUBLE_EQ(c.epsilon_list[1], 0.05);
}

TEST(Config, ErrorsCarryKeyAndLine) {
  try {
    (void)ExperimentConfig::parse("s_list = 0.5\n\nepsilon_lst = 0.1\n", "bench.cfg");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "epsilon_lst");
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("bench.cfg:3"), std::string::npos);
  }
  EXPECT_EQ(line_of("dim = 3\n"), 1);
  EXPECT_EQ(line_of("T = 1\ns_list = 0.5, 1.5\n"), 2);
  EXPECT_EQ(line_of("n_points = 100\n"), 1);
  EXPECT_EQ(line_of("epsilon_list = 0.1, 0.2\n"), 1);
  EXPECT_EQ(line_of("T = -1\n"), 1);
  EXPECT_EQ(line_of("T = abc\n"), 1);
  EXPECT_EQ(line_of("p_list = 0.5\n"), 1);
  EXPECT_EQ(line_of("dt_cfl = 2\n"), 1);
  EXPECT_EQ(line_of("hamiltonian = cubic\n"), 1);
  EXPECT_EQ(line_of("u0 = cos2d\n"), 1);
  EXPECT_EQ(line_of("reference = exact\n"), 1);
  EXPECT_EQ(line_of("scheme = euler\n"), 1);
  EXPECT_EQ(line_of("q_list = 1\n"), 1);
  EXPECT_EQ(line_of("pairs = 0.1:0.1\n"), 1);
  EXPECT_EQ(line_of("just words\n"), 1);
  EXPECT_EQ(line_of("T = 1\nT = 2\n"), 2);
  EXPECT_EQ(line_of("T =\n"), 1);
  EXPECT_EQ(line_of("forcing = cos:1\n"), 1);  // hopf_lax reference needs f = 0
}

TEST(Config, TextRoundTrip) {
  const ExperimentConfig c = ExperimentConfig::parse("s_list = 0.25, 0.75\nepsilon_list = geometric:0.1,3,6\n"
                                                     "p_list = 1.5, inf\npairs = 0.1:0.05\n");
  const ExperimentConfig back = ExperimentConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.echo(), c.echo());
  EXPECT_EQ(back.epsilon_list, c.epsilon_list);
}

TEST(Config, KeyListIsComplete) {
  const ExperimentConfig c;
  std::istringstream in(c.to_text());
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) ++count;
  EXPECT_EQ(count, config_keys().size());
}

TEST(Cli, SelftestPasses) {
  const auto dir = scratch("selftest");
  std::ostringstream out, err;
  EXPECT_EQ(run_command({"selftest", write(dir, "seed = 3\n")}, out, err), kExitOk) << out.str();
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}

TEST(Cli, UnknownKeyExitsTwoNamingKey) {
  const auto dir = scratch("unknown");
  std::ostringstream out, err;
  EXPECT_EQ(run_command({"solve", write(dir, "epsilon_lst = 0.1\n")}, out, err), kExitConfigError);
  EXPECT_NE(err.str().find("epsilon_lst"), std::string::npos);
}

TEST(Cli, MissingConfigAndBadCommand) {
  std::ostringstream out, err;
  EXPECT_EQ(run_command({"solve", "/nonexistent/x.cfg"}, out, err), kExitConfigError);
  EXPECT_EQ(run_command({"launch", "/nonexistent/x.cfg"}, out, err), kExitConfigError);
}

TEST(Cli, ShortSweepIsConfigErrorAtSweepTime) {
  const auto dir = scratch("short");
  std::ostringstream out, err;
  EXPECT_EQ(run_command({"sweep", write(dir, "epsilon_list = 0.1, 0.05\n"), dir}, out, err), kExitConfigError);
}

TEST(Cli, SolveWritesSnapshots) {
  const auto dir = scratch("solve");
  std::ostringstream out, err;
  const auto cfg = write(dir, "s_list = 0.5\nepsilon_list = 0.1\nT = 1\nsnapshot_count = 4\n");
  EXPECT_EQ(run_command({"solve", cfg, dir / "out"}, out, err), kExitOk) << err.str();
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "u_s0.5_eps0.1_t1.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "solve.json"));
}

TEST(Cli, SweepThenReportReproduces) {
  const auto dir = scratch("sweep");
  const std::string text =
      "s_list = 0.5\nepsilon_list = geometric:0.25,2,5\nn_points = 256\np_list = 2, inf\n"
      "snapshot_count = 4\n";
  std::ostringstream out, err;
  const int code = run_command({"sweep", write(dir, text), dir / "a"}, out, err);
  EXPECT_NE(code, kExitConfigError) << err.str();
  std::ifstream rates(dir / "a" / "rates.csv");
  std::string first;
  std::getline(rates, first);
  EXPECT_EQ(first, "s,p,epsilon,error,norm,ref_kind");

  // Re-running from the echoed config reproduces rates.csv byte for byte.
  const auto report = nlohmann::json::parse(std::ifstream(dir / "a" / "report.json"));
  ExperimentConfig echoed = ExperimentConfig::parse(text);
  EXPECT_EQ(report["config"], echoed.echo());
  std::ofstream(dir / "echo.cfg") << echoed.to_text();
  EXPECT_EQ(run_command({"sweep", dir / "echo.cfg", dir / "b"}, out, err), code);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(dir / "a" / "rates.csv"), slurp(dir / "b" / "rates.csv"));

  const std::string before = slurp(dir / "a" / "report.json");
  EXPECT_EQ(run_command({"report", write(dir, text), dir / "a"}, out, err), code);
  EXPECT_EQ(slurp(dir / "a" / "report.json"), before);
}
