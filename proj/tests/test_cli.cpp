#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef STTMIN_CLI_PATH
#error "STTMIN_CLI_PATH must point at the command line binary"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

// Runs the binary with stderr folded into stdout.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(STTMIN_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
  ASSERT_TRUE(f.good());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST(Cli, MinimizeWritesQuotientAndMap) {
  const std::string in = temp_path("loop.ks");
  const std::string out = temp_path("loop.min.ks");
  write_file(in, "ks 2 2\nl 0 a\nl 1 a\nt 0 1\nt 1 0\n");
  RunResult r = run_cli("minimize " + in + " --out " + out);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(read_file(out), "ks 1 1\nl 0 a\nt 0 0\n");
  const std::string map = read_file(out + ".map");
  EXPECT_EQ(map, "map 2 1\n0\n0\n");
}

TEST(Cli, RejectsMismatchedFormatAndEquivalence) {
  const std::string ks = temp_path("fmt.ks");
  write_file(ks, "ks 1 0\nl 0 a\n");
  EXPECT_NE(run_cli("minimize " + ks + " --format ks --equiv branching").exit_code, 0);
  EXPECT_NE(run_cli("minimize " + ks + " --format aut --equiv dbse").exit_code, 0);
}

TEST(Cli, SlowVariantRequiresAudit) {
  const std::string ks = temp_path("var.ks");
  write_file(ks, "ks 1 0\nl 0 a\n");
  RunResult r = run_cli("minimize " + ks + " --variant slow-trysplit");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(run_cli("minimize " + ks + " --variant slow-trysplit --audit").exit_code, 0);
}

TEST(Cli, ParseErrorsReportLineAndFail) {
  const std::string bad = temp_path("bad.ks");
  write_file(bad, "ks 2 1\nl 0 a\nl 1 b\nt 0 7\n");
  RunResult r = run_cli("minimize " + bad);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("4"), std::string::npos) << r.output;
}

TEST(Cli, AuditWritesLedgerCsv) {
  const std::string in = temp_path("aud.ks");
  const std::string csv = temp_path("aud.csv");
  write_file(in, "ks 3 3\nl 0 a\nl 1 b\nl 2 b\nt 0 1\nt 1 2\nt 2 0\n");
  RunResult r = run_cli("minimize " + in + " --audit --csv " + csv);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const std::string body = read_file(csv);
  EXPECT_EQ(body.rfind("# sttmin-audit-v1", 0), 0u);
  EXPECT_NE(body.find("GLOBAL_OK"), std::string::npos);
  EXPECT_NE(body.find("TOTAL_EXCL_INIT"), std::string::npos);
}

TEST(Cli, BudgetViolationSetsExitCode) {
  const std::string in = temp_path("slow.ks");
  RunResult g = run_cli("gen random --n 800 --m 3200 --labels 3 --seed 1 --out " + in);
  ASSERT_EQ(g.exit_code, 0) << g.output;
  const std::string out = temp_path("slow.min.ks");
  RunResult r = run_cli("minimize " + in + " --variant slow-trysplit --audit --out " + out);
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("budget"), std::string::npos) << r.output;
}

TEST(Cli, GenFig1EmitsFrozenHeader) {
  const std::string out = temp_path("f1.ksx");
  RunResult r = run_cli("gen fig1 --k 3 --d 4 --out " + out);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const std::string body = read_file(out);
  EXPECT_EQ(body.rfind("ks 13 18", 0), 0u) << body.substr(0, 40);
}

TEST(Cli, GenRandomIsDeterministic) {
  const std::string a = temp_path("r1.ks");
  const std::string b = temp_path("r2.ks");
  EXPECT_EQ(run_cli("gen random --n 30 --m 90 --labels 3 --seed 9 --out " + a).exit_code, 0);
  EXPECT_EQ(run_cli("gen random --n 30 --m 90 --labels 3 --seed 9 --out " + b).exit_code, 0);
  const std::string body = read_file(a);
  EXPECT_EQ(body, read_file(b));
  EXPECT_EQ(body.rfind("ks 30 90", 0), 0u);
}

TEST(Cli, GenRejectsZeroParameter) {
  EXPECT_EQ(run_cli("gen fig3 --n 0 --out " + temp_path("z.ksx")).exit_code, 1);
}

TEST(Cli, CheckReportsMatch) {
  const std::string in = temp_path("chk.ks");
  RunResult g = run_cli("gen random --n 25 --m 80 --labels 2 --seed 3 --out " + in);
  ASSERT_EQ(g.exit_code, 0);
  RunResult r = run_cli("check " + in);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("match"), std::string::npos);
}

TEST(Cli, CheckGuardsAgainstLargeInputs) {
  const std::string in = temp_path("big.ks");
  RunResult g = run_cli("gen random --n 50 --m 100 --labels 2 --seed 1 --out " + in);
  ASSERT_EQ(g.exit_code, 0);
  RunResult r = run_cli("check " + in + " --limit 10");
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST(Cli, BranchingPipelineEmitsAutAndMap) {
  const std::string in = temp_path("sys.aut");
  const std::string out = temp_path("sys.min.aut");
  write_file(in,
             "des (0,4,4)\n(0,\"tau\",1)\n(1,\"send\",2)\n(0,\"send\",3)\n(2,\"tau\",2)\n");
  RunResult r = run_cli("minimize " + in + " --format aut --equiv branching --out " + out +
                        " --map " + out + ".map");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const std::string body = read_file(out);
  EXPECT_EQ(body.rfind("des (", 0), 0u);
  // The map covers only the original states, not embedding helpers.
  std::istringstream map(read_file(out + ".map"));
  std::string header;
  std::getline(map, header);
  EXPECT_EQ(header.rfind("map 4 ", 0), 0u);
  int lines = 0;
  for (std::string line; std::getline(map, line);)
    if (!line.empty()) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST(Cli, BenchEmitsRatioRows) {
  const std::string csv = temp_path("bench.csv");
  RunResult r = run_cli("bench fig2 --sizes 8,16 --variant corrected --csv " + csv);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const std::string body = read_file(csv);
  EXPECT_NE(body.find("RATIO"), std::string::npos);
  EXPECT_NE(body.find("fig2"), std::string::npos);
}

}  // namespace
