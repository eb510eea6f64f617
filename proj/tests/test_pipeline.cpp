#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "codemap/error.hpp"
#include "codemap/pipeline.hpp"
#include "codemap/retrieve.hpp"
#include "codemap/text_io.hpp"

namespace fs = std::filesystem;
using namespace codemap;
using namespace codemap::pipeline;

namespace {

const fs::path kFixture = CODEMAP_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("codemap_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(CODEMAP_CLI) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, ParsesKeysAndResolvesPaths) {
  auto cfg = parse_config("# c\ntrain.dim=7\nretrieve.ks=1,3\nretrieve.truth=t.tsv\n", "x.conf", "/base");
  EXPECT_EQ(cfg.train.dim, 7u);
  EXPECT_EQ(cfg.ks, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(cfg.truth, fs::path("/base/t.tsv"));
  EXPECT_EQ(cfg.ranking_depth(), 3u);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    parse_config("train.dim=7\n\ntrain.bogus=1\n", "x.conf");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_config("no equals sign\n"), ParseError);
  EXPECT_THROW(parse_config("align.symmetrization=grow\n"), ParseError);
}

TEST(Config, HashTracksModelSettingsOnly) {
  auto a = parse_config("train.seed=1\n");
  auto b = parse_config("train.seed=2\n");
  EXPECT_NE(a.hash(), b.hash());
  auto c = a;
  c.threads = 8;
  EXPECT_EQ(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Pipeline, StageWithoutInputsNamesTheMissingStage) {
  auto out = scratch("missing");
  std::ostringstream log;
  Pipeline p(load_config(kFixture / "codemap.conf"), out, log);
  p.pair();
  try {
    p.align();
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("run normalize first"), std::string::npos) << e.what();
  }
  fs::remove_all(out);
}

TEST(Pipeline, RunAllOnFixture) {
  auto out = scratch("runall");
  std::ostringstream log;
  Pipeline p(load_config(kFixture / "codemap.conf"), out, log);
  p.run_all();
  const auto& l = p.layout();
  for (const auto& f : {l.pairs(), l.stream_index(), l.table(true), l.table(false), l.alignments(), l.embeddings(),
                        l.element_embeddings(), l.rankings(), l.report(), l.diff()})
    EXPECT_TRUE(fs::exists(f)) << f;

  auto pairs = read_file(l.pairs());
  EXPECT_EQ(pairs.rfind("## ", 0), 0u) << "artifacts start with provenance";
  EXPECT_NE(pairs.find(p.config().hash()), std::string::npos);

  auto rankings = retrieve::parse_rankings(read_file(l.rankings()));
  EXPECT_EQ(rankings.size(), 22u);
  auto report = read_file(l.report());
  EXPECT_NE(report.find("# MAP@1:"), std::string::npos);
  EXPECT_NE(report.find("# reference:"), std::string::npos);
  auto diff = read_file(l.diff());
  EXPECT_NE(diff.find("conflicting\tdemo.Point.getX()"), std::string::npos);
  fs::remove_all(out);
}

TEST(Cli, ExitCodes) {
  auto out = scratch("cli");
  auto conf = (kFixture / "codemap.conf").string();
  EXPECT_EQ(run_cli("--config " + conf + " --out-dir " + out.string() + " bogus-stage"), 1);
  EXPECT_EQ(run_cli("pair"), 1);
  EXPECT_EQ(run_cli("--config /nonexistent/x.conf --out-dir " + out.string() + " pair"), 2);
  EXPECT_NE(run_cli("--config " + conf + " --out-dir " + out.string() + " align"), 0);
  EXPECT_EQ(run_cli("--config " + conf + " --out-dir " + out.string() + " pair"), 0);
  EXPECT_EQ(run_cli("--config " + conf + " --out-dir " + out.string() + " normalize"), 0);
  EXPECT_EQ(run_cli("--config " + conf + " --out-dir " + out.string() + " align"), 0);

  auto bad = out / "bad.conf";
  std::ofstream(bad) << "train.dim=abc\n";
  EXPECT_EQ(run_cli("--config " + bad.string() + " --out-dir " + out.string() + " pair"), 3);
  fs::remove_all(out);
}
