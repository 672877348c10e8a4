#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "dermo/ensemble.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured to a file and stderr discarded.
Result run_cli(const std::string& args, const testutil::TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const std::string cmd = std::string(DERMO_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testutil::read_file(out)};
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  testutil::TempDir dir("cli");
  EXPECT_EQ(run_cli("--help", dir).code, 0);
  EXPECT_EQ(run_cli("", dir).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("net-info --bogus", dir).code, 2);
  EXPECT_EQ(run_cli("fuse", dir).code, 2);
}

TEST(Cli, NetInfo) {
  testutil::TempDir dir("cli");
  const auto r = run_cli("net-info --row 1", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("545148705"), std::string::npos);
  EXPECT_NE(r.out.find("543888390"), std::string::npos);
  const auto j = run_cli("net-info --json --input-size 64", dir);
  EXPECT_EQ(j.code, 0);
  EXPECT_TRUE(nlohmann::json::accept(j.out));
  EXPECT_EQ(run_cli("net-info --row 11", dir).code, 2);
  EXPECT_EQ(run_cli("net-info --input-size 100", dir).code, 2);
}

TEST(Cli, EvaluateClassification) {
  testutil::TempDir dir("cli");
  testutil::write_file(dir / "s.csv", "sample_id,label,score\na,1,0.9\nb,0,0.2\nc,1,0.6\nd,0,0.7\n");
  const auto r = run_cli("evaluate-cls --scores " + (dir / "s.csv").string() + " --roc " + (dir / "roc.csv").string(), dir);
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(j.at("auc").get<double>(), 0.75);
  EXPECT_TRUE(fs::exists(dir / "roc.csv"));
  EXPECT_EQ(run_cli("evaluate-cls --scores " + (dir / "missing.csv").string(), dir).code, 1);
  testutil::write_file(dir / "bad.csv", "sample_id,label,score\na,1,oops\n");
  EXPECT_EQ(run_cli("evaluate-cls --scores " + (dir / "bad.csv").string(), dir).code, 2);
}

TEST(Cli, SelectAndFuse) {
  testutil::TempDir dir("cli");
  std::string csv = "sample_id,label,WI:good,WI:noise\n";
  dermo::Rng rng(4);
  for (int i = 0; i < 30; ++i)
    csv += "s" + std::to_string(i) + "," + std::to_string(i % 2) + "," + std::to_string(i % 2 ? 0.8 : 0.2) + "," +
           std::to_string(rng.uniform()) + "\n";
  testutil::write_file(dir / "t.csv", csv);
  const auto sel = run_cli("select --scores " + (dir / "t.csv").string() + " --method forward --trace " +
                               (dir / "trace.csv").string(),
                           dir);
  EXPECT_EQ(sel.code, 0);
  EXPECT_NE(sel.out.find("WI:good"), std::string::npos);
  EXPECT_EQ(testutil::read_file(dir / "trace.csv").substr(0, 9), "iteration");
  const auto fused = run_cli("fuse --scores " + (dir / "t.csv").string() + " --mode vote --components WI:good", dir);
  EXPECT_EQ(fused.code, 0);
  EXPECT_EQ(fused.out.substr(0, fused.out.find('\n')), "sample_id,label,score");
  EXPECT_EQ(run_cli("fuse --scores " + (dir / "t.csv").string() + " --mode median", dir).code, 2);
}

TEST(Cli, EvaluateSegmentation) {
  testutil::TempDir dir("cli");
  dermo::write_mask_png(dir / "p.png", testutil::square_mask(4, 4, 0, 0, 2));
  dermo::write_mask_png(dir / "g.png", testutil::square_mask(4, 4, 0, 0, 2));
  const auto r = run_cli("evaluate-seg --pred " + (dir / "p.png").string() + " --gt " + (dir / "g.png").string(), dir);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("jaccard"), std::string::npos);
  dermo::write_mask_png(dir / "small.png", dermo::MaskImage(3, 3));
  EXPECT_EQ(run_cli("evaluate-seg --pred " + (dir / "small.png").string() + " --gt " + (dir / "g.png").string(), dir).code, 2);
}

TEST(Cli, SegmentFuseAndAugmentPreview) {
  testutil::TempDir dir("cli");
  fs::create_directories(dir / "m");
  dermo::write_mask_png(dir / "m" / "a_0.png", dermo::MaskImage(5, 5, 255));
  dermo::write_mask_png(dir / "m" / "a_1.png", dermo::MaskImage(5, 5, 0));
  EXPECT_EQ(run_cli("segment-fuse --masks " + (dir / "m").string() + " --out " + (dir / "o").string(), dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "a.png"));

  dermo::Rng rng(2);
  dermo::write_image_png(dir / "i.png", testutil::random_rgb8(rng, 12, 10));
  EXPECT_EQ(run_cli("augment-preview --image " + (dir / "i.png").string() + " --mask " + (dir / "m" / "a_0.png").string() +
                        " --count 3 --out " + (dir / "aug").string(),
                    dir)
                .code,
            2);  // mask size differs from the image
  EXPECT_EQ(run_cli("augment-preview --image " + (dir / "i.png").string() + " --count 3 --out " + (dir / "aug").string(),
                    dir)
                .code,
            0);
  EXPECT_FALSE(fs::is_empty(dir / "aug"));
}

TEST(Cli, RunEndToEnd) {
  testutil::TempDir dir("cli");
  const auto d = synthetic::make(dir.path(), 30);
  const std::string common =
      " --manifest " + d.manifest.string() + " --store " + d.store.string() + " --config " + d.config.string();
  EXPECT_EQ(run_cli("run" + common + " --out " + (dir / "bundle").string(), dir).code, 0);
  const auto report = nlohmann::json::parse(testutil::read_file(dir / "bundle" / "report.json"));
  EXPECT_EQ(report.at("format"), "dermo-experiment/1");

  EXPECT_EQ(run_cli("train" + common + " --out " + (dir / "models").string(), dir).code, 0);
  const auto pred = run_cli("predict" + common + " --models " + (dir / "models").string() + " --split test", dir);
  EXPECT_EQ(pred.code, 0);
  EXPECT_NE(pred.out.find("WI:color_hist"), std::string::npos);

  testutil::write_file(dir / "bad.csv", "sample_id,image\n");
  EXPECT_EQ(run_cli("run --manifest " + (dir / "bad.csv").string() + " --store " + d.store.string() + " --config " +
                        d.config.string() + " --out " + (dir / "b2").string(),
                    dir)
                .code,
            2);
}
