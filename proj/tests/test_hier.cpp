#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "codemap/hier.hpp"
#include "support/oracles.hpp"

using namespace codemap;
using namespace codemap::hier;
using syntax::Granularity;

namespace {

struct Space {
  embed::Vocabulary vocab;
  embed::EmbeddingTable table;
};

Space make_space(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::vector<std::pair<std::string, std::int64_t>> tokens;
  for (const auto& r : rows) tokens.emplace_back(r.first, 1);
  Space s{embed::Vocabulary::from_ordered(tokens), embed::EmbeddingTable(rows.size(), rows.front().second.size())};
  for (std::uint32_t n = 0; n < rows.size(); ++n) std::copy(rows[n].second.begin(), rows[n].second.end(), s.table.input(n).begin());
  return s;
}

ElementRef el(std::string id, std::vector<std::string> tokens, Granularity g = Granularity::statement) {
  return {std::move(id), g, std::move(tokens)};
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(Compose, SingletonIsTheTokenVector) {
  auto s = make_space({{"a:x", {1.5, -2.0}}});
  auto e = compose_element(el("e", {"a:x"}), s.table, s.vocab, Weighting::uniform);
  EXPECT_EQ(e.vector, (std::vector<double>{1.5, -2.0}));
  EXPECT_DOUBLE_EQ(e.coverage, 1.0);
}

TEST(Compose, IdenticalVectorsGiveThatVector) {
  auto s = make_space({{"a:x", {0.3, 0.7}}, {"a:y", {0.3, 0.7}}});
  auto e = compose_element(el("e", {"a:x", "a:y", "a:x"}), s.table, s.vocab, Weighting::uniform);
  EXPECT_NEAR(e.vector[0], 0.3, 1e-12);
  EXPECT_NEAR(e.vector[1], 0.7, 1e-12);
}

TEST(Compose, OovTokensAreSkippedAndCoverageReported) {
  auto s = make_space({{"a:x", {1.0, 0.0}}, {"a:y", {0.0, 1.0}}});
  auto e = compose_element(el("e", {"a:x", "a:zzz", "a:y", "a:qqq"}), s.table, s.vocab, Weighting::uniform);
  EXPECT_EQ(e.vector, (std::vector<double>{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(e.coverage, 0.5);
  EXPECT_THROW(compose_element(el("gone", {"a:zzz"}), s.table, s.vocab, Weighting::uniform), CoverageZero);
  try {
    compose_element(el("gone", {}), s.table, s.vocab, Weighting::uniform);
    FAIL();
  } catch (const CoverageZero& c) {
    EXPECT_EQ(c.element_id(), "gone");
  }
}

TEST(Compose, TfidfWeightsOccurrences) {
  auto s = make_space({{"a:x", {1.0, 0.0}}, {"a:y", {0.0, 1.0}}});
  IdfTable idf;
  idf.n_docs = 1;
  idf.idf = {{"a:x", 3.0}, {"a:y", 1.0}};
  auto e = compose_element(el("e", {"a:x", "a:y"}), s.table, s.vocab, Weighting::tfidf, &idf);
  EXPECT_NEAR(e.vector[0], 0.75, 1e-12);
  EXPECT_NEAR(e.vector[1], 0.25, 1e-12);
}

TEST(Compose, TfidfAllZeroWeightsFallsBackToMean) {
  auto s = make_space({{"a:x", {1.0, 0.0}}, {"a:y", {0.0, 1.0}}});
  IdfTable idf;
  idf.n_docs = 2;
  idf.idf = {{"a:x", 0.0}, {"a:y", 0.0}};
  auto e = compose_element(el("e", {"a:x", "a:y"}), s.table, s.vocab, Weighting::tfidf, &idf);
  EXPECT_EQ(e.vector, (std::vector<double>{0.5, 0.5}));
}

TEST(Idf, Values) {
  std::vector<ElementRef> docs{el("1", {"a:x", "a:y"}), el("2", {"a:x"})};
  auto idf = build_idf(docs);
  EXPECT_EQ(idf.n_docs, 2u);
  EXPECT_DOUBLE_EQ(idf.get("a:x"), 0.0);
  EXPECT_DOUBLE_EQ(idf.get("a:y"), std::log(2.0));
  EXPECT_DOUBLE_EQ(idf.get("a:never"), 0.0);
  EXPECT_THROW(build_idf({}), ArgumentError);
}

TEST(Idf, MatchesBruteForceDocumentFrequency) {
  std::mt19937_64 rng(4);
  std::vector<ElementRef> docs;
  for (int d = 0; d < 60; ++d) {
    std::vector<std::string> toks;
    int len = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < len; ++k) toks.push_back("a:t" + std::to_string(rng() % 15));
    docs.push_back(el("d" + std::to_string(d), toks));
  }
  std::vector<std::vector<std::string>> raw;
  for (const auto& d : docs) raw.push_back(d.tokens);
  auto df = testsupport::ref_document_frequency(raw);
  auto idf = build_idf(docs);
  for (const auto& [tok, n] : df) EXPECT_NEAR(idf.get(tok), std::log(60.0 / n), 1e-12) << tok;
}

TEST(Compose, FlatMeanDiffersFromMeanOfMeans) {
  // Statement {x, x, x} and statement {y}: the method mean counts tokens, not children.
  auto s = make_space({{"a:x", {1.0, 0.0}}, {"a:y", {0.0, 1.0}}});
  auto method = compose_element(el("m", {"a:x", "a:x", "a:x", "a:y"}, Granularity::method), s.table, s.vocab,
                                Weighting::uniform);
  EXPECT_NEAR(method.vector[0], 0.75, 1e-12);
  EXPECT_NEAR(method.vector[1], 0.25, 1e-12);
}

TEST(Compose, CorpusSkipsUncoveredElementsAndKeepsOrder) {
  auto s = make_space({{"a:x", {1.0, 0.0}}, {"a:y", {0.0, 1.0}}, {"a:z", {1.0, 1.0}}});
  std::vector<ElementRef> els{el("e1", {"a:x"}, Granularity::expression), el("e2", {"a:oov"}),
                              el("e3", {"a:y", "a:z"}, Granularity::method)};
  auto r = compose_corpus(els, s.table, s.vocab, Weighting::uniform);
  ASSERT_EQ(r.embeddings.size(), 2u);
  EXPECT_EQ(r.embeddings[0].id, "e1");
  EXPECT_EQ(r.embeddings[1].id, "e3");
  EXPECT_EQ(r.embeddings[1].granularity, Granularity::method);
  EXPECT_EQ(r.skipped, (std::vector<std::string>{"e2"}));

  auto all_oov = compose_corpus({el("q", {"a:nope"})}, s.table, s.vocab, Weighting::uniform);
  EXPECT_TRUE(all_oov.embeddings.empty());
  EXPECT_EQ(all_oov.skipped.size(), 1u);
}

TEST(Compose, RandomElementProperties) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(6);
    for (auto& x : v) x = g(rng);
    rows.emplace_back("a:t" + std::to_string(t), v);
  }
  auto s = make_space(rows);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> toks;
    int len = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < len; ++k) toks.push_back("a:t" + std::to_string(rng() % 20));
    auto e = compose_element(el("e", toks), s.table, s.vocab, Weighting::uniform);
    auto shuffled = toks;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto p = compose_element(el("e", shuffled), s.table, s.vocab, Weighting::uniform);
    double max_norm = 0.0;
    for (const auto& t : toks) max_norm = std::max(max_norm, norm(rows[std::stoul(t.substr(3))].second));
    EXPECT_LE(norm(e.vector), max_norm + 1e-9);
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_NEAR(e.vector[k], p.vector[k], 1e-9);
      double lo = 1e300, hi = -1e300;
      for (const auto& t : toks) {
        double x = rows[std::stoul(t.substr(3))].second[k];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      EXPECT_GE(e.vector[k], lo - 1e-9);
      EXPECT_LE(e.vector[k], hi + 1e-9);
    }
  }
}

TEST(ElementIds, FormatAndGranularity) {
  auto id = element_id("a", Granularity::method, "src/Foo.java", "demo.Foo.bar(int, int)");
  EXPECT_EQ(id, "a:method:src/Foo.java#demo.Foo.bar(int,_int)");
  EXPECT_EQ(element_granularity(id), Granularity::method);
  EXPECT_THROW(element_granularity("a:nonsense:x#y"), ArgumentError);
  EXPECT_THROW(element_granularity("no-colons"), ArgumentError);
}

TEST(Weightings, Names) {
  EXPECT_EQ(parse_weighting("tfidf"), Weighting::tfidf);
  EXPECT_EQ(weighting_name(Weighting::uniform), "uniform");
  EXPECT_THROW(parse_weighting("idf"), ArgumentError);
}

TEST(Format, ElementEmbeddingsRoundTrip) {
  std::vector<ElementEmbedding> es{{"a:method:F.java#m()", Granularity::method, {0.25, -1.0}, 0.5},
                                   {"a:expression:F.java#x", Granularity::expression, {1.0, 2.0}, 1.0}};
  auto text = format_element_embeddings(es, 2, Weighting::tfidf);
  auto back = parse_element_embeddings(text);
  EXPECT_EQ(back.dim, 2u);
  EXPECT_EQ(back.weighting, Weighting::tfidf);
  ASSERT_EQ(back.embeddings.size(), 2u);
  EXPECT_EQ(back.embeddings[0].id, es[0].id);
  EXPECT_EQ(back.embeddings[0].granularity, Granularity::method);
  EXPECT_EQ(back.embeddings[0].vector, es[0].vector);
  EXPECT_EQ(back.embeddings[1].coverage, 1.0);
  EXPECT_THROW(parse_element_embeddings("1 2 uniform\nid 1.0\n"), ParseError);
}
