#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "codemap/embed.hpp"
#include "codemap/error.hpp"
#include "codemap/retrieve.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace codemap;
using namespace codemap::embed;

namespace {

EmbeddingTable random_table(std::mt19937_64& rng, std::size_t rows, std::size_t dim, double scale) {
  EmbeddingTable t(rows, dim);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (auto& x : t.input(r)) x = u(rng);
    for (auto& x : t.output(r)) x = u(rng);
  }
  return t;
}

std::vector<double> row(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Vocab, CountsAndMinCount) {
  std::vector<std::vector<std::string>> a{{"x", "x", "y"}}, b{};
  auto v = build_vocab(a, b, 1);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.count(static_cast<std::uint32_t>(v.find("a:x"))), 2);
  EXPECT_EQ(v.count(static_cast<std::uint32_t>(v.find("a:y"))), 1);
  EXPECT_EQ(v.total_count(), 3);

  auto v2 = build_vocab(a, b, 2);
  ASSERT_EQ(v2.size(), 1u);
  EXPECT_EQ(v2.token(0), "a:x");
  EXPECT_THROW(build_vocab(a, b, 5), ArgumentError);
}

TEST(Vocab, NoiseDistribution) {
  std::vector<std::vector<std::string>> a{{"x", "x", "y"}}, b{};
  auto v = build_vocab(a, b, 1);
  double expected = std::pow(2.0, 0.75) / (std::pow(2.0, 0.75) + 1.0);
  EXPECT_NEAR(v.noise_dist()[static_cast<std::size_t>(v.find("a:x"))], expected, 1e-12);
  double sum = 0.0;
  for (double p : v.noise_dist()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Vocab, SidesTaggedSeparately) {
  std::vector<std::vector<std::string>> a{{"int"}}, b{{"int"}};
  auto v = build_vocab(a, b, 1);
  EXPECT_GE(v.find("a:int"), 0);
  EXPECT_GE(v.find("b:int"), 0);
  EXPECT_EQ(v.find("int"), -1);
}

TEST(Vocab, KeepProbabilityIsAProbability) {
  auto corpus = testsupport::dictionary_corpus(30, 100, 3.0, 2);
  auto v = build_vocab(corpus.bitext, 1);
  for (std::uint32_t id = 0; id < v.size(); ++id) {
    double p = v.keep_probability(id, 1e-3);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_EQ(v.keep_probability(id, 0.0), 1.0);
  }
}

TEST(Vocab, NoiseSamplingFollowsDistribution) {
  auto v = Vocabulary::from_counts({{"a", 16}, {"b", 1}});
  std::mt19937_64 rng(3);
  int hits = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) hits += v.sample_noise(rng) == 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, v.noise_dist()[0], 0.005);
}

TEST(Sgns, ZeroVectorsLoss) {
  EmbeddingTable t(3, 4);
  std::vector<std::uint32_t> neg{2};
  EXPECT_NEAR(sgns_pair_loss(0, 1, neg, t), -2.0 * std::log(0.5), 1e-12);
  EXPECT_NEAR(sgns_pair_loss(0, 1, neg, t), 1.3863, 1e-4);
}

TEST(Sgns, SaturationDrivesPositiveTermToZero) {
  EmbeddingTable t(2, 1);
  t.input(0)[0] = 100.0;
  t.output(1)[0] = 100.0;
  EXPECT_LT(sgns_pair_loss(0, 1, {}, t), 1e-12);
  EXPECT_TRUE(std::isfinite(sgns_pair_loss(0, 1, std::vector<std::uint32_t>{1}, t)));
}

TEST(Sgns, MatchesStraightLineOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = random_table(rng, 8, 5, 0.8);
    std::vector<std::uint32_t> neg;
    for (int k = 0; k < 3; ++k) neg.push_back(static_cast<std::uint32_t>(rng() % 8));
    std::vector<std::vector<double>> un;
    for (auto n : neg) un.push_back(row(t.output(n)));
    EXPECT_NEAR(sgns_pair_loss(1, 2, neg, t), testsupport::ref_sgns_loss(row(t.input(1)), row(t.output(2)), un),
                1e-12);
  }
}

TEST(Sgns, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  const double eps = 1e-5;
  for (int trial = 0; trial < 30; ++trial) {
    auto t = random_table(rng, 6, 4, 1.0);
    std::vector<std::uint32_t> neg{static_cast<std::uint32_t>(rng() % 6), static_cast<std::uint32_t>(rng() % 6)};
    auto g = sgns_pair_gradient(0, 1, neg, t);
    for (std::size_t k = 0; k < 4; ++k) {
      double keep = t.input(0)[k];
      t.input(0)[k] = keep + eps;
      double up = sgns_pair_loss(0, 1, neg, t);
      t.input(0)[k] = keep - eps;
      double down = sgns_pair_loss(0, 1, neg, t);
      t.input(0)[k] = keep;
      EXPECT_NEAR(g.center[k], (up - down) / (2 * eps), 1e-6);
    }
    for (const auto& [id, grad] : g.outputs)
      for (std::size_t k = 0; k < 4; ++k) {
        double keep = t.output(id)[k];
        t.output(id)[k] = keep + eps;
        double up = sgns_pair_loss(0, 1, neg, t);
        t.output(id)[k] = keep - eps;
        double down = sgns_pair_loss(0, 1, neg, t);
        t.output(id)[k] = keep;
        EXPECT_NEAR(grad[k], (up - down) / (2 * eps), 1e-6);
      }
  }
}

TEST(Table, InitializationScheme) {
  EmbeddingTable t(10, 8);
  t.initialize(5);
  for (std::uint32_t r = 0; r < 10; ++r) {
    for (double x : t.input(r)) {
      EXPECT_LE(std::abs(x), 0.5 / 8);
    }
    for (double x : t.output(r)) EXPECT_EQ(x, 0.0);
  }
}

TEST(Train, EmptyBitextLeavesInitialization) {
  auto v = Vocabulary::from_counts({{"a:x", 1}, {"b:y", 1}});
  TrainConfig cfg;
  cfg.dim = 6;
  cfg.epochs = 1;
  auto trained = train_biskip(align::Bitext{}, {}, v, cfg);
  EmbeddingTable init(2, 6);
  init.initialize(cfg.seed);
  EXPECT_EQ(trained, init);
}

TEST(Train, DeterministicSingleThread) {
  auto corpus = testsupport::dictionary_corpus(20, 80, 3.0, 4);
  auto v = build_vocab(corpus.bitext, 1);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 3;
  cfg.seed = 99;
  auto a = train_biskip(corpus.bitext, corpus.truth, v, cfg);
  auto b = train_biskip(corpus.bitext, corpus.truth, v, cfg);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.all_finite());
  cfg.seed = 100;
  EXPECT_NE(train_biskip(corpus.bitext, corpus.truth, v, cfg), a);
}

TEST(Train, ParallelModeStaysFinite) {
  auto corpus = testsupport::dictionary_corpus(20, 80, 3.0, 4);
  auto v = build_vocab(corpus.bitext, 1);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 3;
  TrainOptions opts;
  opts.threads = 4;
  EXPECT_TRUE(train_biskip(corpus.bitext, corpus.truth, v, cfg, opts).all_finite());
}

TEST(Train, MissingLinksWarnAndTrainMonolingually) {
  auto corpus = testsupport::dictionary_corpus(15, 20, 3.0, 4);
  auto v = build_vocab(corpus.bitext, 1);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 1;
  std::vector<std::string> warnings;
  TrainOptions opts;
  opts.warn = [&](const std::string& m) { warnings.push_back(m); };
  auto t = train_biskip(corpus.bitext, {}, v, cfg, opts);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_TRUE(t.all_finite());
}

TEST(Train, LinksMustMatchPairs) {
  auto corpus = testsupport::dictionary_corpus(15, 5, 3.0, 4);
  auto v = build_vocab(corpus.bitext, 1);
  TrainConfig cfg;
  cfg.dim = 4;
  std::vector<align::AlignmentLinkSet> bad{{"nope", {{0, 0}}}};
  EXPECT_THROW(train_biskip(corpus.bitext, bad, v, cfg), ArgumentError);
  bad = {{"p0", {{99, 0}}}};
  EXPECT_THROW(train_biskip(corpus.bitext, bad, v, cfg), ArgumentError);
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.dim = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.window = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.negatives = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.lr0 = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Train, FinalPredictsItsDeclarationContext) {
  // a:final always sits in `private static final int ...`; readonly mirrors it.
  align::Bitext bt;
  std::vector<align::AlignmentLinkSet> links;
  std::mt19937_64 rng(1);
  const char* names[] = {"foo", "bar", "baz", "qux", "run", "get", "set", "put"};
  for (int p = 0; p < 120; ++p) {
    align::BitextPair pair;
    pair.id = "p" + std::to_string(p);
    std::vector<std::string> tail{names[rng() % 8], names[rng() % 8], names[rng() % 8]};
    pair.source = {"private", "static", "final", "int", "int_id", tail[0], tail[1], tail[2]};
    pair.target = {"private", "static", "readonly", "int", "int_id", tail[0], tail[1], tail[2]};
    align::AlignmentLinkSet l{pair.id, {}};
    for (std::uint32_t i = 0; i < 8; ++i) l.links.emplace_back(i, i);
    bt.pairs.push_back(pair);
    links.push_back(l);
  }
  auto v = build_vocab(bt, 1);
  TrainConfig cfg;
  cfg.dim = 20;
  cfg.window = 2;
  cfg.subsample = 0;
  auto t = train_biskip(bt, links, v, cfg);
  auto id = [&](const std::string& s) { return static_cast<std::uint32_t>(v.find(s)); };
  auto score = [&](const std::string& ctx) {
    double d = 0.0;
    for (std::size_t k = 0; k < t.dim(); ++k) d += t.input(id("a:final"))[k] * t.output(id(ctx))[k];
    return sigmoid(d);
  };
  EXPECT_GT(score("a:int"), score("a:foo"));
  EXPECT_GT(score("a:static"), score("a:qux"));

  retrieve::CandidateSet b_side;
  for (std::uint32_t r = 0; r < v.size(); ++r)
    if (v.token(r).rfind("b:", 0) == 0) b_side.add(v.token(r), row(t.input(r)));
  auto hits = retrieve::nearest(t.input(id("a:final")), b_side, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "b:readonly");
}

TEST(Format, RoundTripPreservesRanking) {
  auto corpus = testsupport::dictionary_corpus(15, 60, 3.0, 8);
  auto v = build_vocab(corpus.bitext, 1);
  TrainConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 2;
  auto t = train_biskip(corpus.bitext, corpus.truth, v, cfg);
  auto loaded = parse_embeddings(format_embeddings(t, v));
  ASSERT_EQ(loaded.vocab.size(), v.size());
  auto pool = [](const EmbeddingTable& table, const Vocabulary& voc) {
    retrieve::CandidateSet cs;
    for (std::uint32_t r = 0; r < voc.size(); ++r) cs.add(voc.token(r), row(table.input(r)));
    return cs;
  };
  auto before = pool(t, v), after = pool(loaded.table, loaded.vocab);
  for (std::uint32_t r = 0; r < v.size(); ++r) {
    auto id = static_cast<std::uint32_t>(loaded.vocab.find(v.token(r)));
    auto h1 = retrieve::nearest(t.input(r), before, 5);
    auto h2 = retrieve::nearest(loaded.table.input(id), after, 5);
    ASSERT_EQ(h1.size(), h2.size());
    for (std::size_t k = 0; k < h1.size(); ++k) EXPECT_EQ(h1[k].id, h2[k].id);
  }
}

TEST(Format, SmallAndEmptyTables) {
  auto v = Vocabulary::from_counts({{"a:x", 1}});
  EmbeddingTable t(1, 2);
  t.input(0)[0] = 0.5;
  t.input(0)[1] = -1.25;
  auto text = format_embeddings(t, v);
  EXPECT_EQ(text, "1 2\na:x 0.5 -1.25\n");
  EXPECT_EQ(format_embeddings(EmbeddingTable(0, 3), Vocabulary{}), "0 3\n");
  EXPECT_EQ(parse_embeddings("0 3\n").table.size(), 0u);
}

TEST(Format, ParseErrorsCarryLineNumbers) {
  auto expect_line = [](const std::string& text, int line) {
    try {
      parse_embeddings(text);
      FAIL() << "expected ParseError for: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line("two 2\n", 1);
  expect_line("1 2\na:x 0.5\n", 2);
  expect_line("2 2\na:x 0.5 0.5\na:y 0.5 nan-ish\n", 3);
}
