#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome run(const std::string& args, const std::string& stdin_file = "") {
  std::string cmd = std::string(DIVFLOW_CLI_PATH) + " " + args;
  if (!stdin_file.empty()) cmd += " < " + stdin_file;
  cmd += " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  Outcome o;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), got);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("divflow_cli_" + name);
  std::ofstream(path) << text;
  return path.string();
}

const std::string kSingleEdge = "p max 2 1\nn 1 s\nn 2 t\na 1 2 5\n";

TEST(Cli, ReferenceModePrintsValue) {
  const Outcome o = run("solve --mode reference " + write_temp("edge.max", kSingleEdge));
  EXPECT_EQ(o.status, 0);
  EXPECT_EQ(o.out, "5\n");
}

TEST(Cli, IpmReadsStdin) {
  const Outcome o = run("solve -", write_temp("edge_stdin.max", kSingleEdge));
  EXPECT_EQ(o.status, 0);
  EXPECT_EQ(o.out, "5\n");
}

TEST(Cli, VerifyGeneratedInstance) {
  const Outcome o = run("verify --seed 7 --n 20 --m 50 --U 8");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("match"), std::string::npos);
  EXPECT_EQ(o.out.find("MISMATCH"), std::string::npos);
}

TEST(Cli, JsonReportIsDeterministicAndPasses) {
  const std::string file = write_temp("gen.max", run("gen --seed 3 --n 10 --m 24 --U 5").out);
  const Outcome a = run("solve --json " + file);
  const Outcome b = run("solve --json " + file);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("\"steps\""), std::string::npos);
  EXPECT_NE(a.out.find("\"pass\""), std::string::npos);
  EXPECT_EQ(a.out.find("\"fail\""), std::string::npos);
  EXPECT_EQ(a.out.find("\"phases\""), std::string::npos);
  EXPECT_NE(run("solve --json --timings " + file).out.find("\"phases\""), std::string::npos);
}

TEST(Cli, GeneratedInstanceRoundTrips) {
  const std::string text = run("gen --seed 11 --n 8 --m 14 --U 4 --undirected").out;
  const std::string file = write_temp("rt.max", text);
  const Outcome ref = run("solve --mode reference " + file);
  const Outcome ipm = run("solve " + file);
  EXPECT_EQ(ref.status, 0);
  EXPECT_EQ(ref.out, ipm.out);
  EXPECT_EQ(run("gen --seed 11 --n 8 --m 14 --U 4 --undirected").out, text);
}

TEST(Cli, BadInputsExitWithTwo) {
  EXPECT_EQ(run("solve " + write_temp("bad.max", "p max 2 1\nn 1 s\nn 2 t\na 1 x 5\n")).status, 2);
  EXPECT_EQ(run("solve --no-such-flag -").status, 2);
  EXPECT_EQ(run("solve --mode magic -").status, 2);
  EXPECT_EQ(run("solve --timings -").status, 2);
  EXPECT_EQ(run("solve --center-tol 0 " + write_temp("edge2.max", kSingleEdge)).status, 2);
  EXPECT_EQ(run("").status, 2);
}

TEST(Cli, CheckLemmasSmallCorpus) {
  const Outcome o = run("check-lemmas --seed 2 --count 3");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("divergence"), std::string::npos);
  EXPECT_EQ(o.out.find("FAIL"), std::string::npos);
}

TEST(Cli, AssertedViolationExitsWithThree) {
  const std::string file = write_temp("gen2.max", run("gen --seed 5 --n 8 --m 16 --U 4").out);
  EXPECT_EQ(run("solve --checks assert --delta-constant 1e-3 " + file).status, 3);
}

}  // namespace
