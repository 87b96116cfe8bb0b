#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell with stderr folded into stdout.
CliRun cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + CONVEXCERT_CLI + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(Cli, CertifyConvex) {
  CliRun r = cli("certify 'x*log(x)' --assume 'x>0'");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("verdict: convex"), std::string::npos);
  EXPECT_NE(r.out.find("hessian: 1/x"), std::string::npos);
}

TEST(Cli, CertifyTemplate) {
  CliRun r = cli("certify 'log(sum(exp(x)))' --dims 'x:n' --wrt x");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("template:variance"), std::string::npos) << r.out;
}

TEST(Cli, ConcaveAndUnknown) {
  EXPECT_EQ(cli("certify 'log(x)'").code, 1);
  CliRun r = cli("certify 'x^3'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("unknown (not certified)"), std::string::npos);
  EXPECT_NE(r.out.find(">>"), std::string::npos);
}

TEST(Cli, FalsifyWitness) {
  CliRun r = cli("certify 'x^3' --falsify");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("witness: eigenvalue -6 at x = -1"), std::string::npos) << r.out;
}

TEST(Cli, InputErrors) {
  CliRun r = cli("certify 'x +'");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("^"), std::string::npos);
  EXPECT_EQ(cli("certify 'w^2'").code, 4);
  EXPECT_EQ(cli("certify 'x' --assume 'x>1, x<0'").code, 4);
  EXPECT_EQ(cli("certify 'x' --method bogus").code, 4);
  EXPECT_EQ(cli("frobnicate").code, 4);
  EXPECT_EQ(cli("certify 'abs(x)'").code, 4);
}

TEST(Cli, JsonOutput) {
  CliRun r = cli("certify 'log(1+exp(x))' --json --dump-dag");
  EXPECT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["verdict"], "convex");
  EXPECT_EQ(j["method"], "hessian");
  EXPECT_TRUE(j["trace"].is_array());
  EXPECT_TRUE(j.contains("dag"));
  CliRun both = cli("certify 'log(1+exp(x))' --json --method both");
  auto a = nlohmann::json::parse(both.out);
  ASSERT_TRUE(a.is_array());
  EXPECT_EQ(a[1]["verdict"], "unknown");
  EXPECT_EQ(both.code, 0);
}

TEST(Cli, Dcp) {
  CliRun r = cli("dcp '(X*w-y)'\"'\"'*(X*w-y)' --dims 'X:m*n,w:n,y:m' --wrt w");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("X*w - y  affine"), std::string::npos) << r.out;
  EXPECT_EQ(cli("dcp 'log(1+exp(x))' --dcp-extended-atoms").code, 0);
  CliRun h = cli("dcp 'exp(x)' --dump-hessian");
  EXPECT_NE(h.out.find("hessian: exp(x)"), std::string::npos);
}

TEST(Cli, HessianSubcommand) {
  CliRun r = cli("hessian 'x^4'");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("hessian: 12*x^2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("gradient: 4*x^3"), std::string::npos) << r.out;
}

TEST(Cli, Check) {
  CliRun r = cli("check 'sum(exp(x))' --dims x:n --trials 20");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("sampling: "), std::string::npos);
  EXPECT_EQ(cli("check 'x^3' --trials 5").code, 3);
  EXPECT_EQ(cli("check 'sum(exp(x))' --dims x:n --trials 5", "CONVEXCERT_SEED=42").code, 0);
  EXPECT_EQ(cli("check 'x^2' --trials 5", "CONVEXCERT_SEED=abc").code, 4);
}

TEST(Cli, Batch) {
  EXPECT_EQ(cli("batch " + temp_file("empty.txt", "")).code, 0);
  std::string good = temp_file("good.txt",
                               "# comment\n"
                               "x*log(x) ; x>0 ; ; x ; convex\n"
                               "log(x) ; ; ; x ; concave\n"
                               "(X*w-y)'*(X*w-y) ; ; X:m*n,w:n,y:m ; w ; convex\n");
  CliRun r = cli("batch " + good + " --compare-dcp");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("summary: 3 lines"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("dcp    : convex 0 concave 1 affine 0 unknown 2"), std::string::npos) << r.out;
  // output order follows the file
  EXPECT_LT(r.out.find("line 2:"), r.out.find("line 3:"));
  EXPECT_LT(r.out.find("line 3:"), r.out.find("line 4:"));
  std::string bad = temp_file("bad.txt", "x^3 ; ; ; x ; convex\n");
  EXPECT_EQ(cli("batch " + bad).code, 2);
  std::string broken = temp_file("broken.txt", "x^3 ; ; ; x ; unknown\nx + ; ; ; x ; convex\n");
  CliRun b = cli("batch " + broken);
  EXPECT_EQ(b.code, 4);
  EXPECT_NE(b.out.find(":2: error"), std::string::npos) << b.out;
  CliRun j = cli("batch " + good + " --json");
  auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc["lines"].size(), 3u);
}
