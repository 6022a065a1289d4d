#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "crossaug/cli.h"

namespace crossaug {
namespace {

namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "crossaug");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("crossaug_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Config, ParsesFlatKeyValueText) {
  const auto kv = parse_config_text("# comment\n\nseed = 7\nembed_dim=16\n");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_EQ(kv.at("embed_dim"), "16");
  EXPECT_THROW(parse_config_text("colour=blue\n"), ConfigError);
  EXPECT_THROW(parse_config_text("seed 7\n"), ConfigError);
}

TEST(Config, FlagsOverrideFileOverridesProfile) {
  const auto c = resolve_config({{"profile", "desk"}, {"embed_dim", "16"}, {"batch_size", "4"}},
                                {{"embed_dim", "24"}, {"seed", "9"}});
  EXPECT_EQ(c.profile, "desk");
  EXPECT_EQ(c.run.model.embed_dim, 24u);
  EXPECT_EQ(c.run.train.batch_size, 4u);
  EXPECT_EQ(c.run.model.encoder_hidden, 64u);  // from the desk profile
  EXPECT_EQ(c.run.train.seed, 9u);
  EXPECT_EQ(c.tagger.seed, 9u);
  EXPECT_EQ(c.synth.seed, 9u);
  const auto paper = resolve_config({}, {});
  EXPECT_EQ(paper.run.model.embed_dim, 512u);
}

TEST(Config, BadValuesRejected) {
  RunConfig c;
  EXPECT_THROW(c.set("embed_dim", "-3"), ConfigError);
  EXPECT_THROW(c.set("p_drop", "lots"), ConfigError);
  EXPECT_THROW(c.set("profile", "huge"), ConfigError);
  EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
  c.set("types", "PERSON, GPE");
  EXPECT_EQ(c.entity_types().names(), (std::vector<std::string>{"PERSON", "GPE"}));
}

TEST(Config, DumpRoundTrips) {
  auto c = resolve_config({{"profile", "desk"}}, {{"p_mask", "0.25"}, {"out", "/tmp/x"}});
  const auto again = resolve_config(parse_config_text(c.dump()), {});
  EXPECT_EQ(again.dump(), c.dump());
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"similarity", "--no-such-flag"}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({}), 2);
}

TEST(Cli, ValidationErrorsExitOne) {
  TempDir d;
  EXPECT_EQ(run({"similarity", "--train", d / "missing.conll", "--test", d / "missing.conll"}), 1);
  write(d / "cfg", "bogus_key=1\n");
  EXPECT_EQ(run({"gradcheck", "--config", d / "cfg"}), 1);
  EXPECT_EQ(run({"train", "--profile", "desk", "--embed-dim", "0"}), 1);
}

TEST(Cli, SimilarityPrintsCounts) {
  TempDir d;
  write(d / "a.conll", "Paris\tB-GPE\nis\tO\n\nJim\tB-PERSON\n\n");
  write(d / "b.conll", "Paris\tB-GPE\n\n");
  ::testing::internal::CaptureStdout();
  const int rc = run({"similarity", "--train", d / "a.conll", "--test", d / "b.conll"});
  const auto out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_EQ(out, "non_overlap\t1\noverlap\t1\nsimilarity_pct\t50.00\n");
}

TEST(Cli, GradcheckPasses) {
  ::testing::internal::CaptureStdout();
  const int rc = run({"gradcheck", "--profile", "desk"});
  const auto out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_NE(out.find("max_relative_error"), std::string::npos);
}

TEST(Cli, ConfigFileFromEnvironment) {
  TempDir d;
  write(d / "cfg", "not_a_key=1\n");
  ::setenv(kConfigEnv, (d / "cfg").c_str(), 1);
  const int rc = run({"gradcheck"});
  ::unsetenv(kConfigEnv);
  EXPECT_EQ(rc, 1);
}

TEST(Cli, PipelineSmallRun) {
  TempDir d;
  const std::vector<std::string> small{"--profile", "desk", "--embed-dim", "8", "--encoder-hidden", "8",
                                       "--decoder-hidden", "8", "--discriminator-hidden", "8",
                                       "--phase1-epochs", "1", "--phase2-epochs", "1",
                                       "--tagger-epochs", "1", "--seed", "3"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), small.begin(), small.end());
    return a;
  };
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run(with({"synth", "--out", d / "data", "--synth-train-size", "40", "--synth-dev-size",
                      "10", "--synth-test-size", "10"})),
            0);
  EXPECT_EQ(run(with({"vocab", "--input", d / "data/formal_train.conll", "--output", d / "v.txt"})), 0);
  EXPECT_EQ(run(with({"train", "--src-train", d / "data/formal_train.conll", "--tgt-train",
                      d / "data/noisy_train.conll", "--src-dev", d / "data/formal_dev.conll",
                      "--tgt-dev", d / "data/noisy_dev.conll", "--out", d / "model"})),
            0);
  for (const char* f : {"model.ckpt", "model.ckpt.manifest", "src.vocab", "tgt.vocab", "train.log"}) {
    EXPECT_TRUE(fs::exists(d / ("model/" + std::string(f)))) << f;
  }
  EXPECT_EQ(run(with({"ppl", "--model", d / "model", "--input", d / "data/noisy_dev.conll",
                      "--domain", "tgt", "--mode", "detransform"})),
            0);
  EXPECT_EQ(run(with({"augment", "--model", d / "model", "--input", d / "data/formal_train.conll",
                      "--direction", "src2tgt", "--output", d / "gen.conll"})),
            0);
  EXPECT_TRUE(fs::exists(d / "gen.conll.report"));
  EXPECT_EQ(run(with({"ner-train", "--train", d / "data/noisy_train.conll", "--dev",
                      d / "data/noisy_dev.conll", "--out", d / "tagger/t.ckpt"})),
            0);
  EXPECT_EQ(run(with({"ner-eval", "--model", d / "tagger/t.ckpt", "--test",
                      d / "data/noisy_test.conll"})),
            0);
  EXPECT_EQ(run(with({"experiment", "--src-train", d / "data/formal_train.conll", "--tgt-train",
                      d / "data/noisy_train.conll", "--gen", d / "gen.conll", "--tgt-dev",
                      d / "data/noisy_dev.conll", "--test", d / "data/noisy_test.conll"})),
            0);
  const auto out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("perplexity\t"), std::string::npos);
  EXPECT_NE(out.find("accepted\t"), std::string::npos);
  EXPECT_NE(out.find("f1\t"), std::string::npos);
  EXPECT_NE(out.find("Source+Gen\t"), std::string::npos);
}

}  // namespace
}  // namespace crossaug
