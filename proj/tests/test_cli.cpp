#include <gtest/gtest.h>

#include <sstream>

#include "pairsafe/cli.hpp"
#include "pairsafe/orchestrator.hpp"
#include "support.hpp"

using namespace pairsafe;
using nlohmann::json;
namespace T = pairsafe::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Canned replies for every agent; sessions s1 and s3 get judged poorly.
json script() {
  const auto themes = json::parse(T::ScriptedWorld().themes());
  auto loop = [](json replies) { return json{{"responses", std::move(replies)}, {"loop", true}}; };
  json good = json::parse(T::judge_reply(T::good_audit()));
  json bad = json::parse(T::judge_reply(T::bad_audit()));
  return {{"sessions",
           {{"*",
             {{"extractor", loop({themes})},
              {"seeker", loop({"C: I keep thinking about it.", "C: Maybe I could cut back on weekdays."})},
              {"responder", loop({"T: You are weighing it.", "T: Part of you wants a change."})},
              {"judge", loop({good})}}},
            {"s1", {{"judge", loop({bad})}}},
            {"s3", {{"judge", loop({bad})}}}}}};
}

struct CliFixture : ::testing::Test {
  T::TempDir dir;
  fs::path manifest;
  std::string backend;

  void SetUp() override {
    manifest = T::write_corpus(dir.path(), 4);
    T::write_file(dir / "script.json", script().dump(2));
    backend = "scripted:" + (dir / "script.json").string();
  }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  Result calibrate() {
    return run({"calibrate", "--manifest", manifest.string(), "--out", p("profile.json"), "--backend", backend,
                "--created-at", "2026-01-01T00:00:00Z"});
  }

  Result simulate(const std::string& mode, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"simulate", "--manifest", manifest.string(), "--out", p("runs"), "--mode", mode,
                                  "--max-turns", "4", "--backend", backend};
    if (mode == "supervised") {
      args.push_back("--profile");
      args.push_back(p("profile.json"));
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path run_dir(const std::string& mode) const {
    for (const auto& e : fs::directory_iterator(dir / "runs")) {
      if (e.path().filename().string().starts_with(mode + "-")) return e.path();
    }
    return {};
  }
};

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("simulate"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--manifest", "m.csv"}).code, 1);
}

TEST_F(CliFixture, CalibrateWritesProfileAndReport) {
  const auto r = calibrate();
  ASSERT_EQ(r.code, 0) << r.err;
  const auto profile = supervisor::CalibrationProfile::load(p("profile.json"));
  EXPECT_EQ(profile.n_high, 2u);
  EXPECT_EQ(profile.n_low, 2u);
  EXPECT_EQ(profile.created_at, "2026-01-01T00:00:00Z");
  EXPECT_EQ(profile.corpus_id, "manifest");
  EXPECT_TRUE(fs::exists(dir / "profile.report.txt"));
  EXPECT_TRUE(fs::exists(dir / "profile.report.csv"));
  EXPECT_NE(r.out.find("Thresholds"), std::string::npos);
}

TEST_F(CliFixture, DryRunTouchesNothing) {
  const auto r = run({"calibrate", "--manifest", manifest.string(), "--out", p("profile.json"), "--backend", backend,
                      "--dry-run"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("plan: calibrate"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "profile.json"));

  const auto s = simulate("baseline", {"--dry-run"});
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("0 already persisted"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "runs"));
}

TEST_F(CliFixture, SupervisedWithoutProfileIsUsageError) {
  const auto r = run({"simulate", "--manifest", manifest.string(), "--out", p("runs"), "--mode", "supervised",
                      "--backend", backend});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--profile"), std::string::npos);
}

TEST_F(CliFixture, BadArguments) {
  EXPECT_EQ(simulate("baseline", {"--rounds", "5"}).code, 1);
  EXPECT_EQ(simulate("sideways").code, 1);
  EXPECT_EQ(run({"simulate", "--manifest", manifest.string(), "--out", p("runs"), "--mode", "baseline"}).code, 1);
  EXPECT_EQ(run({"simulate", "--manifest", p("nope.csv"), "--out", p("runs"), "--mode", "baseline", "--backend",
                 backend})
                .code,
            1);
  T::write_file(dir / "dup.csv", "id,path\ns0,transcripts/s0.txt\ns0,transcripts/s1.txt\n");
  const auto dup = run({"simulate", "--manifest", p("dup.csv"), "--out", p("runs"), "--mode", "baseline",
                        "--backend", backend});
  EXPECT_EQ(dup.code, 2);
  EXPECT_NE(dup.err.find("duplicate"), std::string::npos);
}

TEST_F(CliFixture, BudgetExhaustionIsBackendError) {
  const auto r = simulate("baseline", {"--budget-tokens", "0"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("budget"), std::string::npos);
}

TEST_F(CliFixture, FailedRecordsGiveBackendExitCode) {
  T::write_file(dir / "empty.json", R"({"sessions": {}})");
  const auto r = run({"simulate", "--manifest", manifest.string(), "--out", p("runs"), "--mode", "baseline",
                      "--backend", "scripted:" + p("empty.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("4 record(s) failed"), std::string::npos);
}

TEST_F(CliFixture, FullPipeline) {
  ASSERT_EQ(calibrate().code, 0);

  const auto base = simulate("baseline");
  ASSERT_EQ(base.code, 0) << base.err;
  EXPECT_NE(base.out.find("executed: 4"), std::string::npos);
  const auto sup = simulate("supervised", {"--rounds", "2", "--parallel", "2"});
  ASSERT_EQ(sup.code, 0) << sup.err;

  const auto base_dir = run_dir("baseline");
  const auto sup_dir = run_dir("supervised");
  EXPECT_TRUE(fs::exists(sup_dir / "requests.ndjson"));
  const auto records = orchestrator::load_records(sup_dir);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].generated_turns.size(), 4u);
  EXPECT_EQ(records[1].turn_traces[0].trace.audits(), 3);

  // resume: nothing left to do
  const auto again = simulate("baseline");
  EXPECT_NE(again.out.find("executed: 0, skipped (already persisted): 4"), std::string::npos);

  const auto cmp = run({"compare", "--baseline", base_dir.string(), "--supervised", sup_dir.string(), "--profile",
                        p("profile.json"), "--out", p("cmp")});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_NE(cmp.out.find("baseline 2/4, supervised 2/4"), std::string::npos) << cmp.out;
  EXPECT_TRUE(fs::exists(dir / "cmp/comparison.csv"));

  const auto sat = run({"saturate", "--run", base_dir.string(), "--profile", p("profile.json"), "--backend", backend,
                        "--out", p("sat")});
  ASSERT_EQ(sat.code, 0) << sat.err;
  const auto csv = T::read_file(dir / "sat/saturation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);

  const auto val = run({"validate-seeker", "--manifest", manifest.string(), "--run", base_dir.string(), "--backend",
                        backend, "--out", p("val"), "--seed", "3"});
  ASSERT_EQ(val.code, 0) << val.err;
  EXPECT_TRUE(fs::exists(dir / "val/seeker_validation.txt"));
  EXPECT_NE(val.out.find("derangement seed: 3"), std::string::npos);
}

TEST_F(CliFixture, CompareNeedsProfileAndScores) {
  ASSERT_EQ(calibrate().code, 0);
  ASSERT_EQ(simulate("baseline", {"--no-score"}).code, 0);
  ASSERT_EQ(simulate("supervised").code, 0);
  const auto base_dir = run_dir("baseline").string();
  const auto sup_dir = run_dir("supervised").string();
  EXPECT_EQ(run({"compare", "--baseline", base_dir, "--supervised", sup_dir}).code, 1);
  const auto r = run({"compare", "--baseline", base_dir, "--supervised", sup_dir, "--profile", p("profile.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unscored"), std::string::npos);
}

TEST_F(CliFixture, StrictPairingMismatch) {
  ASSERT_EQ(calibrate().code, 0);
  ASSERT_EQ(simulate("baseline").code, 0);
  ASSERT_EQ(simulate("supervised").code, 0);
  fs::remove(orchestrator::record_path(run_dir("baseline"), "s2"));
  const std::vector<std::string> args{"compare",   "--baseline", run_dir("baseline").string(), "--supervised",
                                      run_dir("supervised").string(), "--profile", p("profile.json")};
  const auto loose = run(args);
  EXPECT_EQ(loose.code, 0);
  EXPECT_NE(loose.out.find("Welch"), std::string::npos);
  auto strict = args;
  strict.push_back("--strict-pairing");
  const auto r = run(strict);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("s2"), std::string::npos);
}
