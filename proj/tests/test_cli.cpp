#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cookiezeta/cli.hpp"

namespace fs = std::filesystem;
using cookiezeta::ErrorKind;
using cookiezeta::cli::json;

namespace {

class Workspace {
 public:
  Workspace() {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() /
           ("cookiezeta-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path config(const std::string& name, const json& j) const {
    const auto p = dir_ / (name + ".json");
    std::ofstream(p) << j.dump();
    return p;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " '" + std::string(COOKIEZETA_CLI) + "' " + args + " 2> '" +
                            (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string stderr_text() const { return read(dir_ / "stderr.txt"); }

  static std::string read(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  }

 private:
  fs::path dir_;
};

json cantor_config(double p) {
  return {{"map", "cantor"}, {"potential", {{"bernoulli", {p, 1.0 - p}}}}, {"depth", 10}, {"levels", 14}};
}

json moebius_config() {
  return {{"map",
           {{{"moebius", {0.3, 0.0, 0.2, 1.0}}, {"image", {0.0, 0.25}}},
            {{"moebius", {0.5, 0.6, 0.1, 1.0}}, {"image", {0.6, 1.0}}}}},
          {"potential", {{"bernoulli", {0.4, 0.6}}}},
          {"depth", 8},
          {"levels", 12},
          {"alpha", 0.5},
          {"a", 0.1},
          {"b", 10.0},
          {"strategy", "enumerate"}};
}

// last data row of a CSV as doubles
std::vector<double> last_row(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') last = line;
  }
  std::vector<double> out;
  std::istringstream row(last);
  std::string cell;
  while (std::getline(row, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

TEST(Cli, DimOnCantor) {
  Workspace ws;
  const auto cfg = ws.config("dim", {{"map", "cantor"}, {"depth", 10}});
  ASSERT_EQ(ws.run("dim --config '" + cfg.string() + "' --out '" + ws.path("out").string() + "'"), 0);
  const auto csv = Workspace::read(ws.path("out/dim.csv"));
  EXPECT_NE(csv.find("# config_hash "), std::string::npos);
  EXPECT_NE(csv.find("depth,delta"), std::string::npos);
  const auto row = last_row(csv);
  EXPECT_EQ(row[0], 10.0);
  EXPECT_NEAR(row[1], std::log(2.0) / std::log(3.0), 1e-8);
  EXPECT_NEAR(row[1], 0.630930, 1e-6);
  const auto summary = json::parse(Workspace::read(ws.path("out/dim.json")));
  EXPECT_NEAR(summary["delta"].get<double>(), 0.630930, 1e-6);
}

TEST(Cli, ValidationErrorsExitTwo) {
  Workspace ws;
  const auto bad = ws.config("bad", {{"map", {{{"affine", {0.5, 0.0}}}, {{"affine", {0.5, 0.4}}}}}});
  EXPECT_EQ(ws.run("dim --config '" + bad.string() + "' --out '" + ws.path("o").string() + "'"), 2);
  EXPECT_NE(ws.stderr_text().find("OverlappingBranches"), std::string::npos);

  const auto missing = ws.config("missing", {{"depth", 4}});
  EXPECT_EQ(ws.run("dim --config '" + missing.string() + "'"), 2);
  EXPECT_NE(ws.stderr_text().find("ConfigError"), std::string::npos);

  EXPECT_EQ(ws.run("dim --config '" + ws.path("nope.json").string() + "'"), 2);
  EXPECT_EQ(ws.run("frobnicate --config x"), 2);
  EXPECT_EQ(ws.run("dim"), 2);

  auto unnormalized = cantor_config(0.3);
  unnormalized["potential"] = {{"weights", {0.1, 0.2}}};
  unnormalized["alpha"] = 0.7;
  const auto un = ws.config("un", unnormalized);
  EXPECT_EQ(ws.run("zeta --config '" + un.string() + "' --out '" + ws.path("o").string() + "'"), 2);
  EXPECT_NE(ws.stderr_text().find("NotNormalized"), std::string::npos);
}

TEST(Cli, NumericFailureExitsThree) {
  Workspace ws;
  auto j = cantor_config(0.5);
  j["alpha"] = std::log(2.0) / std::log(3.0);
  j["a"] = 0.5;
  j["b"] = 2.0;
  j["sigma_offsets"] = {0.0005, 0.1};
  j["growth_levels"] = 100;
  j["delta"] = std::log(2.0) / std::log(3.0);  // xi_alpha rejects p = 1/2 (Condition A)
  const auto cfg = ws.config("g", j);
  EXPECT_EQ(ws.run("growth --config '" + cfg.string() + "' --out '" + ws.path("o").string() + "'"), 3);
  EXPECT_NE(ws.stderr_text().find("TailNotConverged"), std::string::npos);
}

TEST(Cli, ZetaEntireRegime) {
  Workspace ws;
  auto j = cantor_config(0.3);
  j["alpha"] = 1.2;
  j["a"] = 0.37;
  j["b"] = 2.72;
  j["levels"] = 22;
  const auto cfg = ws.config("z", j);
  ASSERT_EQ(ws.run("zeta --config '" + cfg.string() + "' --out '" + ws.path("o").string() + "'"), 0);
  const auto summary = json::parse(Workspace::read(ws.path("o/zeta.json")));
  EXPECT_EQ(summary["regime"], "entire regime");
  EXPECT_NE(summary["note"].get<std::string>().find("entire regime"), std::string::npos);
  EXPECT_LE(summary["last_hit_level"].get<int>(), 10);
  const auto hits = Workspace::read(ws.path("o/zeta_hits.csv"));
  EXPECT_EQ(last_row(hits), (std::vector<double>{22.0, 0.0}));
}

TEST(Cli, CacheReuseAndRecovery) {
  Workspace ws;
  auto j = moebius_config();
  const auto cfg = ws.config("m", j);
  const std::string cache = ws.path("cache").string();
  auto run = [&](const std::string& out) {
    return ws.run("zeta --config '" + cfg.string() + "' --out '" + ws.path(out).string() + "' --cache '" + cache +
                  "'");
  };
  ASSERT_EQ(run("a"), 0);
  EXPECT_EQ(json::parse(Workspace::read(ws.path("a/zeta.json")))["cache"], "miss");
  ASSERT_EQ(run("b"), 0);
  EXPECT_EQ(json::parse(Workspace::read(ws.path("b/zeta.json")))["cache"], "hit");
  EXPECT_EQ(Workspace::read(ws.path("a/zeta.csv")), Workspace::read(ws.path("b/zeta.csv")));
  EXPECT_EQ(Workspace::read(ws.path("a/zeta_hits.csv")), Workspace::read(ws.path("b/zeta_hits.csv")));

  // truncate the cached table
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cache)) files.push_back(e.path());
  ASSERT_EQ(files.size(), 1u);
  const auto size = fs::file_size(files[0]);
  fs::resize_file(files[0], size / 2);
  ASSERT_EQ(run("c"), 0);
  const auto status = json::parse(Workspace::read(ws.path("c/zeta.json")))["cache"].get<std::string>();
  EXPECT_NE(status.find("CacheCorrupt"), std::string::npos);
  EXPECT_EQ(Workspace::read(ws.path("a/zeta.csv")), Workspace::read(ws.path("c/zeta.csv")));
  EXPECT_EQ(fs::file_size(files[0]), size);

  // a different potential gets its own entry
  j["potential"] = {{"bernoulli", {0.45, 0.55}}};
  const auto other = ws.config("m2", j);
  ASSERT_EQ(ws.run("zeta --config '" + other.string() + "' --out '" + ws.path("d").string() + "' --cache '" + cache +
                   "'"),
            0);
  EXPECT_EQ(json::parse(Workspace::read(ws.path("d/zeta.json")))["cache"], "miss");
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(cache)) ++count;
  EXPECT_EQ(count, 2u);
}

TEST(Cli, CacheEnvironmentOverride) {
  Workspace ws;
  const auto cfg = ws.config("m", moebius_config());
  const auto env_dir = ws.path("envcache");
  ASSERT_EQ(ws.run("zeta --config '" + cfg.string() + "' --out '" + ws.path("o").string() + "' --cache '" +
                       ws.path("ignored").string() + "'",
                   "COOKIEZETA_CACHE='" + env_dir.string() + "'"),
            0);
  EXPECT_TRUE(fs::exists(env_dir));
  EXPECT_FALSE(fs::exists(ws.path("ignored")));
}

TEST(Cli, DeterministicAcrossThreads) {
  Workspace ws;
  const auto cfg = ws.config("m", moebius_config());
  for (const std::string cmd : {"zeta", "spectrum", "verify"}) {
    ASSERT_EQ(ws.run(cmd + " --config '" + cfg.string() + "' --out '" + ws.path("t1").string() + "' --threads 1"), 0);
    ASSERT_EQ(ws.run(cmd + " --config '" + cfg.string() + "' --out '" + ws.path("t4").string() + "' --threads 4"), 0);
    EXPECT_EQ(Workspace::read(ws.path("t1/" + cmd + ".csv")), Workspace::read(ws.path("t4/" + cmd + ".csv"))) << cmd;
  }
}

TEST(Cli, VerifyChecksHashes) {
  Workspace ws;
  const auto cfg = ws.config("c", cantor_config(0.3));
  const std::string out = ws.path("o").string();
  ASSERT_EQ(ws.run("pressure --config '" + cfg.string() + "' --out '" + out + "'"), 0);
  ASSERT_EQ(ws.run("verify --config '" + cfg.string() + "' --out '" + out + "'"), 0);
  EXPECT_NE(Workspace::read(ws.path("o/verify.csv")).find("(1 files)"), std::string::npos);

  // a CSV from another config in the same directory fails the hash check
  const auto other = ws.config("d", cantor_config(0.4));
  ASSERT_EQ(ws.run("dim --config '" + other.string() + "' --out '" + out + "'"), 0);
  EXPECT_EQ(ws.run("verify --config '" + cfg.string() + "' --out '" + out + "'"), 3);
  const auto summary = json::parse(Workspace::read(ws.path("o/verify.json")));
  EXPECT_FALSE(summary["passed"].get<bool>());
}

TEST(Cli, TauAndSpectrum) {
  Workspace ws;
  auto j = cantor_config(0.3);
  j["q"] = {-1.0, 0.0, 2.0};
  j["tau_levels"] = {10, 12};
  j["alpha_points"] = 5;
  const auto cfg = ws.config("c", j);
  const std::string out = ws.path("o").string();
  ASSERT_EQ(ws.run("tau --config '" + cfg.string() + "' --out '" + out + "'"), 0);
  const auto row = last_row(Workspace::read(ws.path("o/tau.csv")));
  EXPECT_EQ(row[0], 2.0);
  EXPECT_NEAR(row[1], std::log(0.58) / std::log(3.0), 1e-8);
  EXPECT_LT(std::abs(row[3]), 5e-3);
  ASSERT_EQ(ws.run("spectrum --config '" + cfg.string() + "' --out '" + out + "'"), 0);
  const auto s = json::parse(Workspace::read(ws.path("o/spectrum.json")));
  EXPECT_TRUE(s["concave"].get<bool>());
  EXPECT_LE(s["max_delta"].get<double>(), std::log(2.0) / std::log(3.0) + 1e-6);
}

TEST(CliUnit, CacheRoundTrip) {
  cookiezeta::LevelTable t;
  t.levels = {{{-1.0, -2.0, 0.0}}, {{-2.5, -3.0, 0.5}, {-2.0, -1.0, 0.0}}};
  const auto p = fs::temp_directory_path() / ("cookiezeta-rt-" + std::to_string(::getpid())) / "t.bin";
  cookiezeta::cli::save_levels(p, t);
  const auto back = cookiezeta::cli::load_levels(p);
  ASSERT_EQ(back.levels.size(), 2u);
  EXPECT_EQ(back.levels[1][0].log_mult, 0.5);
  EXPECT_EQ(back.levels[1][1].log_mu, -1.0);
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.put('\x7f');
  }
  try {
    cookiezeta::cli::load_levels(p);
    ADD_FAILURE() << "corruption not detected";
  } catch (const cookiezeta::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CacheCorrupt);
  }
  fs::remove_all(p.parent_path());
}

TEST(CliUnit, ConfigHashIsKeyOrderFree) {
  const auto a = json::parse(R"({"map":"cantor","depth":10})");
  const auto b = json::parse(R"({"depth":10,"map":"cantor"})");
  EXPECT_EQ(cookiezeta::cli::config_hash(a), cookiezeta::cli::config_hash(b));
  EXPECT_NE(cookiezeta::cli::config_hash(a), cookiezeta::cli::config_hash(json::parse(R"({"map":"cantor"})")));
}
