#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd = std::string(PARTFILTER_CLI) + " " + args + " > " + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("partfilter_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, KestenPassesNonStabilityCheck) {
  ASSERT_EQ(run("gallery kesten --out " + path("k.json")), 0);
  EXPECT_EQ(run("check --model " + path("k.json") + " --condition thm11 --subset 1,2,3,4", path("v.json")), 0);
  EXPECT_NE(slurp(path("v.json")).find("\"verdict\": \"pass\""), std::string::npos);
}

TEST_F(Cli, SimulateIsDeterministic) {
  ASSERT_EQ(run("gallery kesten --out " + path("k.json")), 0);
  ASSERT_EQ(run("simulate --model " + path("k.json") + " --steps 100 --seed 7", path("a.csv")), 0);
  ASSERT_EQ(run("simulate --model " + path("k.json") + " --steps 100 --seed 7 --threads 4", path("b.csv")), 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 102);
}

TEST_F(Cli, TrivialModelHasZeroEntropy) {
  write("trivial.json", R"({"states": 2, "P": [[0,0,0.3],[0,1,0.7],[1,0,0.6],[1,1,0.4]],
    "partition": {"lumping": ["x", "x"]}})");
  ASSERT_EQ(run("entropy --model " + path("trivial.json") + " --horizon 5", path("e.csv")), 0);
  std::istringstream in(slurp(path("e.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,H_n,H_R_n,L_n,U_n,pruned_mass");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line, std::to_string(rows) + ",0,0,0,0,0");
  }
  EXPECT_EQ(rows, 5);
}

TEST_F(Cli, UndecidedExitCode) {
  ASSERT_EQ(run("gallery kesten --out " + path("k.json")), 0);
  EXPECT_EQ(run("check --model " + path("k.json") + " --condition a --max-word-len 6"), 2);
  EXPECT_EQ(run("check --model " + path("k.json") + " --condition b1 --max-word-len 8"), 2);
}

TEST_F(Cli, RandomWalkB1Converges) {
  write("p.json", R"({"case": "a", "n": 16})");
  ASSERT_EQ(run("gallery random-walk --params " + path("p.json") + " --out " + path("rw.json")), 0);
  EXPECT_EQ(run("check --model " + path("rw.json") + " --condition b1", path("v.json")), 0);
  EXPECT_NE(slurp(path("v.json")).find("b1_converged"), std::string::npos);
}

TEST_F(Cli, DistanceAndPlan) {
  write("mu.json", R"({"atoms": [{"w": 1.0, "x": [1, 0]}]})");
  write("nu.json", R"({"atoms": [{"w": 0.5, "x": [1, 0]}, {"w": 0.5, "x": [0, 1]}]})");
  ASSERT_EQ(run("distance --mu " + path("mu.json") + " --nu " + path("nu.json") + " --plan " + path("plan.json"),
                path("d.txt")),
            0);
  EXPECT_EQ(slurp(path("d.txt")), "1\n");
  EXPECT_NE(slurp(path("plan.json")).find("\"plan\""), std::string::npos);
}

TEST_F(Cli, InvalidInputsExitOne) {
  write("bad.json", "{\"states\": ");
  EXPECT_EQ(run("evolve --model " + path("bad.json")), 1);
  write("sub.json", R"({"states": 1, "P": [[0,0,0.5]], "partition": {"lumping": ["a"]}})");
  EXPECT_EQ(run("evolve --model " + path("sub.json")), 1);
  EXPECT_EQ(run("simulate --model " + path("missing.json") + " --steps 3"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("gallery kesten --no-such-flag"), 1);
  EXPECT_EQ(run("check --model x.json --condition zz"), 1);
}

TEST_F(Cli, GalleryModelsLoadBack) {
  write("bk.json", R"({"matrix": [[0.7, 0.3], [0.3, 0.7]]})");
  ASSERT_EQ(run("gallery birkhoff --params " + path("bk.json") + " --out " + path("b.json")), 0);
  EXPECT_EQ(run("check --model " + path("b.json") + " --condition thm11 --subset 1,2 --max-word-len 4"), 0);
  ASSERT_EQ(run("gallery perm-family --out " + path("pf.json")), 0);
  EXPECT_EQ(run("evolve --model " + path("pf.json") + " --steps 3 --x0 0.15,0.35,0.15,0.35,0,0,0,0"), 0);
}
