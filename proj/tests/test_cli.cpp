#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "stap/stap.hpp"

namespace fs = std::filesystem;
using namespace stap;

namespace {

const std::string kCli = STAP_CLI_PATH;

int run(const std::string& args) {
  const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() / ("stap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path put(const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    return dir / name;
  }

  // Two-state simulation and a short run config.
  fs::path simulate() {
    const auto cfg = put("sim.txt",
                         "model = hmm\nK = 2\nT = 150\nseed = 3\n"
                         "pi = 0.9 0.1 0.1 0.9\n"
                         "mu.1 = -3 0\neta.1 = 0 0\nsigma.1 = 0.3 0 0.3\ntau.1 = 0.5\nrho.1 = 0\n"
                         "mu.2 = 3 3\neta.2 = 1 0\nsigma.2 = 0.2 0 0.2\ntau.2 = 0.2\nrho.2 = 0.7\n");
    EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir / "sim").string()), 0);
    return dir / "sim";
  }
  fs::path fit_config() {
    return put("fit.txt", "L = 6\ndomain = -6 6 -6 6\niterations = 300\nburnin = 100\nthin = 4\nseed = 9\n"
                          "log_every = 0\n");
  }
  int fit(const fs::path& out, const std::string& extra = "") {
    return run("fit --data " + (dir / "sim" / "path.csv").string() + " --config " + fit_config().string() +
               " --out " + out.string() + extra);
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("fit --data x.csv"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, UnknownConfigKeyExitsOne) {
  simulate();
  const auto cfg = put("bad.txt", "L = 5\nwarp_factor = 9\n");
  EXPECT_EQ(run("fit --data " + (dir / "sim" / "path.csv").string() + " --config " + cfg.string() + " --out " +
                (dir / "o").string()),
            1);
}

TEST_F(Cli, MalformedDataExitsTwo) {
  const auto data = put("bad.csv", "time,x,y\n0,1,2\n1,oops,3\n2,1,1\n");
  EXPECT_EQ(run("fit --data " + data.string() + " --config " + fit_config().string() + " --out " +
                (dir / "o").string()),
            2);
  EXPECT_EQ(run("fit --data " + (dir / "absent.csv").string() + " --config " + fit_config().string() + " --out " +
                (dir / "o").string()),
            2);
}

TEST_F(Cli, SimulateWritesPathAndStates) {
  const auto out = simulate();
  const RawTrack t = load_track((out / "path.csv").string());
  EXPECT_EQ(t.size(), 150u);
  const std::string states = read_file(out / "states.csv");
  EXPECT_EQ(states.rfind("index,state\n", 0), 0u);
  EXPECT_EQ(std::count(states.begin(), states.end(), '\n'), 150);  // header + 149 steps
}

TEST_F(Cli, FitIsDeterministic) {
  simulate();
  ASSERT_EQ(fit(dir / "a"), 0);
  ASSERT_EQ(fit(dir / "b"), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    ++files;
    EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / e.path().filename())) << e.path().filename();
  }
  EXPECT_GE(files, draw_families().size() + 3);
  // A different seed changes the draws.
  ASSERT_EQ(fit(dir / "c", " --seed 10"), 0);
  EXPECT_NE(read_file(dir / "a" / "z.csv"), read_file(dir / "c" / "z.csv"));
}

TEST_F(Cli, VariantsPinRho) {
  simulate();
  ASSERT_EQ(fit(dir / "crw", " --variant crw_only"), 0);
  ASSERT_EQ(fit(dir / "brw", " --variant brw_only"), 0);
  for (const auto& [name, want] : {std::pair<const char*, double>{"crw", 1.0}, {"brw", 0.0}}) {
    const PosteriorDraws d = read_draws(dir / name);
    ASSERT_FALSE(d.empty());
    for (const auto& r : d.records)
      for (const auto& p : r.params) ASSERT_EQ(p.rho, want) << name << " sweep " << r.sweep;
  }
  EXPECT_EQ(run("fit --data x --config y --out z --variant both"), 1);
}

TEST_F(Cli, SummarizeWritesReport) {
  const auto sim = simulate();
  ASSERT_EQ(fit(dir / "d"), 0);
  EXPECT_EQ(run("summarize --draws " + (dir / "d").string() + " --out " + (dir / "r").string() + " --truth " +
                (sim / "states.csv").string() + " --samples 200"),
            0);
  for (const char* f : {"summary.txt", "table2.csv", "summary.csv", "k_distribution.csv", "scores.csv",
                        "map_states.csv", "ellipses.csv", "arrows.csv", "predictive.csv"})
    EXPECT_TRUE(fs::exists(dir / "r" / f)) << f;
  EXPECT_NE(read_file(dir / "r" / "summary.txt").find("accuracy"), std::string::npos);
  // Tampered draws are refused as a data error.
  write_file(dir / "d" / "tau.csv", read_file(dir / "d" / "tau.csv") + "\n");
  EXPECT_EQ(run("summarize --draws " + (dir / "d").string() + " --out " + (dir / "r2").string()), 2);
}

TEST_F(Cli, SubsampleKeepsEveryDth) {
  const auto data = put("t.csv", "time,x,y\n0,0,0\n1,1,0\n2,2,0\n3,,\n4,4,0\n5,5,0\n6,6,0\n");
  ASSERT_EQ(run("subsample --data " + data.string() + " --d 3 --out " + (dir / "s.csv").string()), 0);
  EXPECT_EQ(read_file(dir / "s.csv"), "time,x,y\n2,2,0\n5,5,0\n");
  ASSERT_EQ(run("subsample --data " + data.string() + " --d 2 --out " + (dir / "s2.csv").string()), 0);
  EXPECT_EQ(read_file(dir / "s2.csv"), "time,x,y\n1,1,0\n3,,\n5,5,0\n");
  EXPECT_EQ(run("subsample --data " + data.string() + " --d 0 --out " + (dir / "s3.csv").string()), 1);
}
