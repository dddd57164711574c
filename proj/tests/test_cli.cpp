#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "config.hpp"
#include "kamscar/errors.hpp"
#include "pipeline.hpp"

namespace {

using namespace kamscar;
using namespace kamscar::cli;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(KAMSCAR_TEST_DIR) / "cli_scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KAMSCAR_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig ini(const std::string& text) {
  std::istringstream in(text);
  return from_json(parse_ini(in));
}

}  // namespace

TEST(Config, IniNestsDottedKeysAndSplitsLists) {
  const auto c = ini(
      "# comment\n[section]\ndim = 1\nh = 0.025, 0.0125\ndelta.tau = 5\ndelta.kind = power\n"
      "band = [0.3, 0.7]\n; another\nmodel = pendulum1d\nseed = 7\n");
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.h, (std::vector<double>{0.025, 0.0125}));
  EXPECT_EQ(c.delta.tau, 5.0);
  EXPECT_EQ(c.delta.kind, "power");
  EXPECT_EQ(c.band_lo, 0.3);
  EXPECT_EQ(c.band_hi, 0.7);
  EXPECT_EQ(c.seed, 7u);
}

TEST(Config, MalformedIniLineIsConfigError) {
  std::istringstream in("dim = 1\nnot a pair\n");
  EXPECT_THROW(parse_ini(in), ConfigError);
}

TEST(Config, JsonRoundTripIsStable) {
  for (int d : {1, 2, 3}) {
    const auto j = to_json(default_config(d));
    EXPECT_EQ(to_json(from_json(j)), j) << "dim " << d;
  }
}

TEST(Config, LoadsJsonAndIniFiles) {
  const auto dir = scratch("load");
  dump(dir / "a.json", "  {\"dim\": 2, \"t\": 1e-5}");
  dump(dir / "b.ini", "dim = 2\nt = 1e-5\n");
  EXPECT_EQ(to_json(load_config((dir / "a.json").string())), to_json(load_config((dir / "b.ini").string())));
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
  dump(dir / "bad.json", "{\"dim\": ");
  EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
}

TEST(Config, DefaultsValidate) {
  for (int d : {1, 2, 3}) EXPECT_NO_THROW(validate(default_config(d))) << "dim " << d;
}

TEST(Config, WindowExponentMustExceedThreshold) {
  auto c = default_config(2);
  EXPECT_EQ(c.window_exponent(), 6.0);
  c.gamma = 2.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.gamma = 5.75;
  EXPECT_THROW(validate(c), ConfigError);
  c.gamma = 5.76;
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsBadValues) {
  const auto base = default_config(1);
  auto c = base;
  c.h = {1.0 / 80, 1.0 / 40};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.h = {1.0 / 40, 1.0 / 40};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.band_lo = c.band_hi;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.lambda = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.t = 2.0 * c.t0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.torus_box.hi = {c.base_point[0] + 2.0 * c.radius};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.delta.kind = "linear";
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(2);
  c.amplitudes.push_back(c.amplitudes[0]);
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, ZeroMeanAmplitudeIsRejected) {
  auto c = default_config(2);
  c.amplitudes[0].mean = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, ModelsHaveRequestedStructure) {
  const auto c = default_config(2);
  const auto H = build_model(c);
  EXPECT_EQ(H.dim(), 2);
  const auto Hs = spectral_model(c, H);
  for (int j = 0; j < 2; ++j) EXPECT_GE(Hs.layout().radius[j], 2.2 + 1.0);
  const RealVec theta = {0.3, -0.4}, I = {1.01, 1.6};
  EXPECT_NEAR(eval(Hs, theta, I, 1e-3), eval(H, theta, I, 1e-3), 1e-12);
}

TEST(ExitCodes, ErrorClassesMapToCodes) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kConfig);
  EXPECT_EQ(exit_code_for(DivisorTooSmall("x")), kNumeric);
  EXPECT_EQ(exit_code_for(PhaseTooLarge("x")), kNumeric);
  EXPECT_EQ(exit_code_for(OutOfBox("m", "x")), kNumeric);
  EXPECT_EQ(exit_code_for(DomainError("m", "x")), kNumeric);
  EXPECT_EQ(exit_code_for(WindowsOverlap("x")), kInvariant);
}

TEST(Manifest, HashesMatchContent) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, TimeZeroIsIntegrable) {
  auto c = default_config(1);
  c.t = 0.0;
  const auto dir = scratch("t0");
  const auto res = run_pipeline(c, dir.string());
  EXPECT_EQ(res.exit_code, kOk);
  EXPECT_TRUE(res.findings.empty());
  ASSERT_EQ(res.runs.size(), 3u);
  for (const auto& r : res.runs) {
    EXPECT_TRUE(r.separation.violations.empty());
    ASSERT_TRUE(r.windows.has_value());
    EXPECT_GT(r.windows->reports.size(), 0u);
    for (const auto& w : r.windows->reports) {
      EXPECT_EQ(w.count, 1);
      EXPECT_NEAR(w.best_overlap, 1.0, 1e-12);
      EXPECT_NEAR(w.best_energy, w.mu, 1e-12);
    }
    EXPECT_EQ(r.bad_t, 0.0);
  }
}

TEST(Pipeline, RunsAreByteIdentical) {
  const auto c = default_config(1);
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_pipeline(c, a.string());
  const auto rb = run_pipeline(c, b.string());
  EXPECT_EQ(ra.artifacts, rb.artifacts);
  for (const auto& f : ra.artifacts) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
  EXPECT_EQ(ma.at("artifacts"), mb.at("artifacts"));
  EXPECT_EQ(ma.at("status"), "complete");
  for (const auto& art : ma.at("artifacts")) EXPECT_EQ(sha256_file((a / art.at("file").get<std::string>()).string()), art.at("sha256"));
}

TEST(Pipeline, SeedChangesOnlyControl) {
  auto c = default_config(1);
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  run_pipeline(c, a.string());
  c.seed = 12345;
  run_pipeline(c, b.string());
  EXPECT_EQ(slurp(a / "windows.csv"), slurp(b / "windows.csv"));
  EXPECT_EQ(slurp(a / "separation.csv"), slurp(b / "separation.csv"));
  EXPECT_NE(nlohmann::json::parse(slurp(a / "manifest.json")).at("config_hash"),
            nlohmann::json::parse(slurp(b / "manifest.json")).at("config_hash"));
}

TEST(Pipeline, EmptyWindowsAreFindings) {
  auto c = default_config(1);
  c.t = 0.05;
  c.gamma = 4.0;
  const auto dir = scratch("findings");
  const auto res = run_pipeline(c, dir.string());
  EXPECT_EQ(res.exit_code, kInvariant);
  EXPECT_FALSE(res.findings.empty());
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("findings").size(), res.findings.size());
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli(out + " nonres scan"), 0);
  EXPECT_EQ(run_cli(out + " spectrum --band 0.6,0.4"), 2);
  EXPECT_EQ(run_cli(out + " --no-such-flag nonres scan"), 2);
  EXPECT_EQ(run_cli(out), 2);
  dump(dir / "bad.json", "{\"dim\": 2, \"gamma\": 2}");
  EXPECT_EQ(run_cli(out + " --config " + (dir / "bad.json").string() + " scar run"), 2);

  // omega = (1, 1) is orthogonal to the mode (1, -1).
  dump(dir / "f.jsonl",
       "{\"record\":\"fourier_taylor\",\"dim\":2,\"base_point\":[1.0,1.0],\"k_angle\":4,\"k_action\":0,"
       "\"radius\":[0.1,0.1]}\n{\"g\":[1,-1],\"a\":[0,0],\"re\":0.5,\"im\":0}\n"
       "{\"g\":[-1,1],\"a\":[0,0],\"re\":0.5,\"im\":0}\n{\"record\":\"end\"}\n");
  const std::string solve = out + " homological solve --series " + (dir / "f.jsonl").string();
  EXPECT_EQ(run_cli(solve + " --omega 1,1"), 3);
  EXPECT_EQ(run_cli(solve + " --omega 1,1.618033988749895"), 0);
  EXPECT_TRUE(fs::exists(dir / "homological.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "homological.csv"));

  EXPECT_EQ(run_cli(out + " scar run"), 0);
  EXPECT_EQ(run_cli(out + " report"), 0);
  dump(dir / "windows.csv", "tampered\n");
  EXPECT_EQ(run_cli(out + " report"), 4);
}

TEST(Pipeline, PlaneSmokeRun) {
  const auto c = default_config(2);
  const auto dir = scratch("plane");
  const auto res = run_pipeline(c, dir.string());
  EXPECT_EQ(res.exit_code, kOk);
  EXPECT_TRUE(res.complete);
  EXPECT_GE(res.artifacts.size(), 6u);
  for (const auto& f : res.artifacts) EXPECT_TRUE(fs::exists(dir / f)) << f;
  ASSERT_EQ(res.runs.size(), 1u);
  const auto& r = res.runs[0];
  EXPECT_GT(r.eigenvalues, 0u);
  ASSERT_TRUE(r.windows.has_value());
  ASSERT_GT(r.windows->reports.size(), 0u);
  for (const auto& w : r.windows->reports) {
    EXPECT_EQ(w.count, 1);
    EXPECT_GT(w.best_overlap, r.overlap_bound);
  }
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("status"), "complete");
}
