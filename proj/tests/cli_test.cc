#include "pixsr/cli.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pixsr/io.h"
#include "pixsr/metrics.h"
#include "pixsr/synthdata.h"
#include "test_util.h"

namespace pixsr {
namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun RunPixsr(std::vector<std::string> args) {
  args.insert(args.begin(), "pixsr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) fields.push_back(f);
  return fields;
}

class CliTest : public ::testing::Test {
 protected:
  // 64 x 64 two_tone scene at D = 8.
  void Synth(const std::string& name, const std::string& kind = "two_tone",
             int size = 64, int factor = 8) {
    const CliRun r = RunPixsr({"synth", "--kind", kind, "--size", std::to_string(size),
                          "--factor", std::to_string(factor), "--prefix",
                          dir_ / name});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  test::TempDir dir_{"cli"};
};

TEST_F(CliTest, SynthWritesConsistentTriplet) {
  Synth("a");
  const Image guide = ReadImage(dir_ / "a_guide.png");
  const Image target = ReadImage(dir_ / "a_target.pfm");
  const Image source = ReadImage(dir_ / "a_source.pfm");
  EXPECT_EQ(guide.height(), 64);
  EXPECT_EQ(guide.channels(), 3);
  EXPECT_EQ(source.height(), 8);
  EXPECT_EQ(source, BlockDownsample(target, UpsamplingFactor(8)));

  SceneSpec spec;
  spec.size = 64;
  const Scene scene = GenerateScene(spec);
  EXPECT_EQ(guide, scene.guide);
  EXPECT_EQ(target, scene.target);
}

TEST_F(CliTest, SynthIsDeterministicAndValidatesKind) {
  Synth("a", "textured_confuser", 32, 4);
  Synth("b", "textured_confuser", 32, 4);
  for (const char* suffix : {"_guide.png", "_target.pfm", "_source.pfm"}) {
    EXPECT_EQ(test::ReadBytes(dir_.path() / (std::string("a") + suffix)),
              test::ReadBytes(dir_.path() / (std::string("b") + suffix)));
  }
  EXPECT_NE(RunPixsr({"synth", "--kind", "checkerboard", "--prefix", dir_ / "c"}).code,
            0);
}

TEST_F(CliTest, UpsampleReportMatchesLibrary) {
  Synth("s");
  const CliRun r = RunPixsr({"upsample", "--source", dir_ / "s_source.pfm",
                        "--guide", dir_ / "s_guide.png", "--truth",
                        dir_ / "s_target.pfm", "--out", dir_ / "out.pfm",
                        "--trace", dir_ / "trace.csv", "--model-out",
                        dir_ / "m.pxsr", "--iters", "200", "--baseline",
                        "bicubic", "--baseline", "guided_filter", "--delta",
                        "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = Lines(r.out);
  ASSERT_EQ(lines.size(), 5u) << r.out;
  EXPECT_EQ(lines[0].rfind("factor=8 ", 0), 0u);
  EXPECT_EQ(lines[1], "method,mse,mae,pbp,delta");

  const Image source = ReadImage(dir_ / "s_source.pfm");
  const Image guide = ReadImage(dir_ / "s_guide.png");
  const Image truth = ReadImage(dir_ / "s_target.pfm");
  ModelConfig model;
  TrainConfig train;
  train.iterations = 200;
  const FitResult fit = Fit(source, guide, model, train);
  const EvalReport expected = Evaluate(fit.prediction, truth, 2.0);
  const auto fields = Split(lines[2]);
  ASSERT_EQ(fields.size(), 5u);
  EXPECT_EQ(fields[0], "pixel_mlp");
  EXPECT_EQ(std::stod(fields[1]), expected.mse);
  EXPECT_EQ(std::stod(fields[2]), expected.mae);
  EXPECT_EQ(std::stod(fields[3]), expected.pbp);

  const auto bicubic = Split(lines[3]);
  EXPECT_EQ(bicubic[0], "bicubic");
  EXPECT_EQ(std::stod(bicubic[1]),
            Mse(BicubicUpsample(source, UpsamplingFactor(8)), truth));
  EXPECT_EQ(Split(lines[4])[0], "guided_filter");

  Image written = fit.prediction;
  for (double& v : written.data()) v = static_cast<float>(v);
  EXPECT_EQ(ReadImage(dir_ / "out.pfm"), written);
  EXPECT_EQ(FlattenParameters(LoadModel(dir_ / "m.pxsr")),
            FlattenParameters(fit.params));
  std::ifstream trace(dir_ / "trace.csv");
  std::string header;
  std::getline(trace, header);
  EXPECT_EQ(header, "iteration,data_loss,penalty,total");
}

TEST_F(CliTest, UpsampleIsByteReproducible) {
  Synth("s", "stripes", 32, 4);
  for (const char* name : {"a.pfm", "b.pfm"}) {
    const CliRun r = RunPixsr({"upsample", "--source", dir_ / "s_source.pfm",
                          "--guide", dir_ / "s_guide.png", "--out", dir_ / name,
                          "--iters", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(test::ReadBytes(dir_.path() / "a.pfm"),
            test::ReadBytes(dir_.path() / "b.pfm"));
}

TEST_F(CliTest, UpsampleErrors) {
  Synth("s");
  const CliRun missing = RunPixsr({"upsample", "--source", dir_ / "s_source.pfm",
                              "--out", dir_ / "o.pfm"});
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(missing.err.find("--guide"), std::string::npos);

  const CliRun mismatch =
      RunPixsr({"upsample", "--source", dir_ / "s_source.pfm", "--guide",
           dir_ / "s_guide.png", "--out", dir_ / "o.pfm", "--factor", "4"});
  EXPECT_NE(mismatch.code, 0);
  EXPECT_NE(mismatch.err.find("dimension mismatch"), std::string::npos);

  Synth("t", "two_tone", 60, 4);
  const CliRun sizes =
      RunPixsr({"upsample", "--source", dir_ / "t_source.pfm", "--guide",
           dir_ / "s_guide.png", "--out", dir_ / "o.pfm"});
  EXPECT_NE(sizes.code, 0);
  EXPECT_NE(sizes.err.find("dimension mismatch"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir_.path() / "o.pfm"));
}

TEST_F(CliTest, BaselineCommand) {
  WriteImage(dir_ / "flat.pfm", Image(4, 4, 1, 3.0));
  const CliRun r = RunPixsr({"baseline", "--source", dir_ / "flat.pfm", "--factor",
                        "4", "--out", dir_ / "b.pfm"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Image up = ReadImage(dir_ / "b.pfm");
  EXPECT_EQ(up.height(), 16);
  for (double v : up.data()) EXPECT_NEAR(v, 3.0, 1e-6);

  EXPECT_NE(RunPixsr({"baseline", "--source", dir_ / "flat.pfm", "--baseline",
                 "guided_filter", "--factor", "4", "--out", dir_ / "g.pfm"})
                .code,
            0);

  Synth("s");
  const CliRun gf = RunPixsr({"baseline", "--source", dir_ / "s_source.pfm",
                         "--guide", dir_ / "s_guide.png", "--baseline",
                         "guided_filter", "--truth", dir_ / "s_target.pfm",
                         "--out", dir_ / "g.pfm"});
  ASSERT_EQ(gf.code, 0) << gf.err;
  const auto fields = Split(Lines(gf.out)[1]);
  const Image expected = GuidedFilterBaseline(ReadImage(dir_ / "s_source.pfm"),
                                              ReadImage(dir_ / "s_guide.png"));
  EXPECT_EQ(std::stod(fields[2]),
            Mae(expected, ReadImage(dir_ / "s_target.pfm")));
}

TEST_F(CliTest, BenchReportsEveryTripletAndAggregates) {
  const auto bench = dir_.path() / "bench";
  std::filesystem::create_directories(bench);
  Synth("bench/a", "two_tone", 32, 4);
  Synth("bench/b", "stripes", 32, 4);
  Synth("bench/c", "gradient_ramp", 32, 4);
  {
    std::ofstream broken(bench / "d_guide.png");
    broken << "not a png";
  }
  const CliRun r = RunPixsr({"bench", "--dir", bench.string(), "--iters", "50",
                        "--csv", dir_ / "r.csv", "--table", dir_ / "t.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv_in(dir_ / "r.csv");
  std::stringstream csv;
  csv << csv_in.rdbuf();
  const auto lines = Lines(csv.str());
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0], "image,factor,method,mse,mae,pbp,delta,status");
  int ok = 0, skipped = 0, aggregate = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].ends_with(",ok")) ++ok;
    if (lines[i].find("skipped") != std::string::npos) ++skipped;
    if (lines[i].ends_with(",aggregate")) ++aggregate;
  }
  EXPECT_EQ(ok, 9);  // 3 triplets x {bicubic, guided_filter, pixel_mlp}
  EXPECT_EQ(skipped, 1);
  EXPECT_EQ(aggregate, 6);
  EXPECT_NE(r.out.find("pixel_mlp"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "t.txt"));
}

TEST_F(CliTest, BenchFailsOnEmptyDirectory) {
  std::filesystem::create_directories(dir_.path() / "empty");
  EXPECT_NE(RunPixsr({"bench", "--dir", dir_ / "empty"}).code, 0);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  Synth("s", "two_tone", 32, 4);
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "iters=30\nlog-every=10\n";
  }
  const CliRun r = RunPixsr({"--config", dir_ / "run.cfg", "upsample", "--source",
                        dir_ / "s_source.pfm", "--guide", dir_ / "s_guide.png",
                        "--out", dir_ / "o.pfm", "--trace", dir_ / "t.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream trace(dir_ / "t.csv");
  std::stringstream text;
  text << trace.rdbuf();
  const auto lines = Lines(text.str());
  EXPECT_EQ(lines.back().rfind("29,", 0), 0u);
  EXPECT_EQ(lines.size(), 1u + 4u);  // 0, 10, 20, 29

  const CliRun over = RunPixsr({"--config", dir_ / "run.cfg", "upsample", "--source",
                           dir_ / "s_source.pfm", "--guide", dir_ / "s_guide.png",
                           "--out", dir_ / "o.pfm", "--trace", dir_ / "t.csv",
                           "--iters", "12"});
  ASSERT_EQ(over.code, 0) << over.err;
  std::ifstream trace2(dir_ / "t.csv");
  std::stringstream text2;
  text2 << trace2.rdbuf();
  EXPECT_EQ(Lines(text2.str()).back().rfind("11,", 0), 0u);
}

TEST_F(CliTest, CheckGradPasses) {
  const CliRun r = RunPixsr({"check-grad", "--width", "8", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

}  // namespace
}  // namespace pixsr
