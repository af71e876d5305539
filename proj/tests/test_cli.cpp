#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(TXCAP_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("txcap_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CliBounds, EmptyNetwork) {
  const auto r = run("bounds --lambda 0 --L 2");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["pout_lower"].get<double>(), 0.0);
  EXPECT_EQ(j["pout_upper"].get<double>(), 0.0);
  EXPECT_TRUE(j.contains("kappa1"));
  EXPECT_TRUE(j.contains("derived"));
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j["params"]["L"].get<int>(), 2);
}

TEST(CliBounds, KeysAndSandwich) {
  const auto r = run("bounds --lambda 0.01 --L 2 --seed 3");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::ordered_json::parse(r.out);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys.front(), "version");
  EXPECT_LE(j["pout_lower"].get<double>(), j["pout_upper"].get<double>());
  EXPECT_TRUE(j["kappa3"].is_null());
  EXPECT_EQ(j["regime"], "L_le_alpha");
  EXPECT_EQ(j["seed"].get<int>(), 3);
}

TEST(CliSimulate, ByteIdenticalReruns) {
  const std::string args = "simulate --mode effective --trials 5000 --seed 17 --streams 3";
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["estimate"]["trials"].get<int>(), 5000);
  EXPECT_EQ(j["estimate"]["seed"].get<int>(), 17);
  EXPECT_EQ(j["config"]["stream_count"].get<int>(), 3);
  const auto other = run("simulate --mode effective --trials 5000 --seed 18 --streams 3");
  EXPECT_NE(a.out, other.out);
}

TEST(CliSimulate, CsvFormat) {
  const auto r = run("simulate --trials 1000 --seed 2 --streams 1 --format csv");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_NE(header.find("estimate.p_hat"), std::string::npos);
}

TEST(CliConfig, FlagsOverrideAndEcho) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "run.cfg") << "lambda = 0.02\nL = 3\ntrials = 1000\nseed = 4\nstream_count = 1\n";
  const auto r = run("simulate --config " + (dir / "run.cfg").string() + " --L 2");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["params"]["lambda"].get<double>(), 0.02);
  EXPECT_EQ(j["params"]["L"].get<int>(), 2);
  EXPECT_EQ(j["config"]["trials"].get<int>(), 1000);
}

TEST(CliConfig, UnknownKeyIsUsageError) {
  const auto dir = scratch("badcfg");
  std::ofstream(dir / "bad.cfg") << "lambda = 0.02\nlamda = 0.03\n";
  EXPECT_EQ(run("bounds --config " + (dir / "bad.cfg").string()).code, 2);
}

TEST(CliErrors, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bounds --nope 1").code, 2);
  EXPECT_EQ(run("bounds --alpha 2").code, 2);
  EXPECT_EQ(run("simulate --mode warp").code, 2);
  EXPECT_EQ(run("capacity --method sideways").code, 2);
  EXPECT_EQ(run("figures --id fig9").code, 2);
  // the lower-bound curve never reaches epsilon within the bracket search
  EXPECT_EQ(run("capacity --method lower --epsilon 0.5 --theta 1e-300").code, 3);
  EXPECT_EQ(run("--version").code, 0);
}

TEST(CliCapacity, MethodsOrdered) {
  auto cap = [](const std::string& method) {
    const auto r = run("capacity --epsilon 0.01 --L 2 --method " + method);
    EXPECT_EQ(r.code, 0) << method;
    return nlohmann::json::parse(r.out)["result"]["capacity"].get<double>();
  };
  const double lo = cap("lower");
  const double up = cap("upper");
  EXPECT_GE(lo, up);
  const auto a = nlohmann::json::parse(run("capacity --epsilon 0.01 --method asymptotic").out);
  EXPECT_LT(a["envelope"]["low"].get<double>(), a["envelope"]["high"].get<double>());
  const auto s = nlohmann::json::parse(run("capacity --epsilon 0.05 --method simulation --trials 5000 --streams 1").out);
  EXPECT_EQ(s["result"]["method"], "simulation");
  EXPECT_GT(s["result"]["capacity"].get<double>(), 0.0);
}

TEST(CliFigures, DatasetAndMetadataReproducible) {
  const auto dir = scratch("figs");
  std::ofstream(dir / "fig2.cfg") << "L_set = 1, 2\nepsilons = 0.1\ntrials = 2000\nseed = 8\n";
  const std::string args = "figures --id fig2 --config " + (dir / "fig2.cfg").string() + " --out ";
  ASSERT_EQ(run(args + (dir / "a").string()).code, 0);
  ASSERT_EQ(run(args + (dir / "b").string()).code, 0);
  const auto csv = slurp(dir / "a" / "fig2.csv");
  EXPECT_EQ(csv, slurp(dir / "b" / "fig2.csv"));
  EXPECT_EQ(slurp(dir / "a" / "fig2.csv.meta.json"), slurp(dir / "b" / "fig2.csv.meta.json"));
  EXPECT_EQ(csv.rfind("L,epsilon,lambda_eps,", 0), 0u);
  const auto meta = nlohmann::json::parse(slurp(dir / "a" / "fig2.csv.meta.json"));
  EXPECT_EQ(meta["experiment"]["sim"]["seed"].get<int>(), 8);
  EXPECT_EQ(meta["experiment"]["base"]["alpha"].get<double>(), 4.0);
  EXPECT_TRUE(meta.contains("build_id"));
  EXPECT_EQ(run("figures --id fig2 --format json --config " + (dir / "fig2.cfg").string()).code, 2);
}
