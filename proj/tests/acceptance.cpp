// Acceptance checks. Prints one PASS/FAIL line per criterion; exits 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "codemap/align.hpp"
#include "codemap/embed.hpp"
#include "codemap/hier.hpp"
#include "codemap/retrieve.hpp"
#include "codemap/syntax.hpp"
#include "codemap/text_io.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace codemap;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---- 1 ----
Outcome golden_normalization() {
  using namespace syntax;
  std::vector<std::string> bad;
  auto decl = normalize(parse("int i;", Language::java)).signature_tokens();
  if (decl != std::vector<std::string>{"int", "int_id"}) bad.push_back("int int_id");

  SymbolTable imports(Language::csharp);
  imports.add_import("CommonTree", "Antlr.Runtime.Tree.CommonTree");
  if (resolve_signature("CommonTree", imports) != "Antlr.Runtime.Tree.CommonTree") bad.push_back("CommonTree");

  SymbolTable locals(Language::csharp);
  locals.declare("lexer", "Antlr.Runtime.SlimLexer");
  auto emit = normalize(parse("lexer.Emit();", Language::csharp), locals).texts();
  if (std::find(emit.begin(), emit.end(), "Antlr.Runtime.SlimLexer.Emit()") == emit.end()) bad.push_back("Emit");

  SymbolTable sys(Language::csharp);
  sys.add_namespace_import("System");
  auto call = normalize(parse("Console.WriteLine(\"out\");", Language::csharp), sys).texts();
  std::vector<std::string> want{"expr_stmt", "expr",        "func_call", "System.Console.WriteLine(String)",
                                "argument",  "literal_type", "string"};
  if (call != want) bad.push_back("WriteLine");

  std::string d = bad.empty() ? "3 listings match" : "mismatch:";
  for (const auto& b : bad) d += " " + b;
  return {bad.empty(), d};
}

// ---- 2 ----
Outcome em_correctness() {
  std::mt19937_64 rng(2024);
  double worst_drop = 0.0, worst_row = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int vocab = 2 + static_cast<int>(rng() % 19);
    int pairs = 1 + static_cast<int>(rng() % 30);
    auto bt = testsupport::random_bitext(rng, vocab, pairs, 8);
    std::vector<double> ll;
    align::Model1Options opts;
    opts.log_likelihood = &ll;
    auto table = align::train_model1(bt, 10, opts);
    for (std::size_t r = 1; r < ll.size(); ++r) worst_drop = std::max(worst_drop, ll[r - 1] - ll[r]);
    for (const auto& s : table.sources()) worst_row = std::max(worst_row, std::abs(table.row_sum(s) - 1.0));
  }
  return {worst_drop <= 1e-9 && worst_row <= 1e-9,
          "max LL drop " + fmt("%.3g", worst_drop) + ", max |row sum - 1| " + fmt("%.3g", worst_row)};
}

// ---- 3 / 5 share the corpus ----
const testsupport::DictionaryCorpus& dictionary() {
  static auto corpus = testsupport::dictionary_corpus(50, 500, 3.0, 7);
  return corpus;
}

Outcome alignment_recovery() {
  const auto& c = dictionary();
  auto rev = c.bitext.reversed();
  auto fwd = align::train_model1(c.bitext, 10);
  auto bwd = align::train_model1(rev, 10);
  std::size_t predicted = 0, correct = 0;
  for (std::size_t p = 0; p < c.bitext.pairs.size(); ++p) {
    auto links = align::symmetrize(align::viterbi_align(fwd, c.bitext.pairs[p]), align::viterbi_align(bwd, rev.pairs[p]),
                                   align::Symmetrization::intersection);
    const auto& truth = c.truth[p].links;
    predicted += links.links.size();
    for (auto l : links.links) correct += std::binary_search(truth.begin(), truth.end(), l);
  }
  double precision = predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
  return {precision >= 0.95, "precision " + fmt("%.4f", precision) + " over " + std::to_string(predicted) + " links"};
}

// ---- 4 ----
double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - n[k]) * (a[k] - n[k]);
    scale += a[k] * a[k] + n[k] * n[k];
  }
  diff = std::sqrt(diff);
  scale = std::sqrt(scale);
  return scale < 1e-12 ? diff : diff / scale;
}

Outcome gradient_check() {
  std::mt19937_64 rng(404);
  const double eps = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t rows = 3 + rng() % 8, dim = 1 + rng() % 16, nneg = 1 + rng() % 6;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    embed::EmbeddingTable t(rows, dim);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (auto& x : t.input(r)) x = u(rng);
      for (auto& x : t.output(r)) x = u(rng);
    }
    auto center = static_cast<std::uint32_t>(rng() % rows), ctx = static_cast<std::uint32_t>(rng() % rows);
    std::vector<std::uint32_t> neg;
    for (std::size_t k = 0; k < nneg; ++k) neg.push_back(static_cast<std::uint32_t>(rng() % rows));
    auto g = embed::sgns_pair_gradient(center, ctx, neg, t);

    auto numeric = [&](std::span<double> row) {
      std::vector<double> out(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        double keep = row[k];
        row[k] = keep + eps;
        double up = embed::sgns_pair_loss(center, ctx, neg, t);
        row[k] = keep - eps;
        double down = embed::sgns_pair_loss(center, ctx, neg, t);
        row[k] = keep;
        out[k] = (up - down) / (2 * eps);
      }
      return out;
    };
    worst = std::max(worst, rel_error(g.center, numeric(t.input(center))));
    for (const auto& [id, grad] : g.outputs) worst = std::max(worst, rel_error(grad, numeric(t.output(id))));
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.3g", worst)};
}

// ---- 5 ----
Outcome dictionary_recovery() {
  const auto& c = dictionary();
  auto vocab = embed::build_vocab(c.bitext, 1);
  embed::TrainConfig cfg;
  cfg.dim = 50;
  cfg.epochs = 10;
  cfg.seed = 5;
  auto table = embed::train_biskip(c.bitext, c.truth, vocab, cfg);
  retrieve::CandidateSet targets;
  for (std::uint32_t r = 0; r < vocab.size(); ++r)
    if (vocab.token(r).rfind("b:", 0) == 0) {
      auto v = table.input(r);
      targets.add(vocab.token(r), {v.begin(), v.end()});
    }
  int hits = 0, total = 0;
  for (int k = 0; k < 50; ++k) {
    auto id = vocab.find("a:s" + std::to_string(k));
    if (id < 0) continue;
    ++total;
    auto top = retrieve::nearest(table.input(static_cast<std::uint32_t>(id)), targets, 1);
    hits += !top.empty() && top[0].id == "b:t" + std::to_string(k);
  }
  double acc = static_cast<double>(hits) / 50.0;
  return {total == 50 && acc >= 0.90, "top-1 accuracy " + fmt("%.2f", acc) + " (" + std::to_string(hits) + "/50)"};
}

// ---- 6 ----
Outcome map_oracle() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0.0, 1.0);
  int exact = 0, close = 0, off = 0;
  for (int inst = 0; inst < 200; ++inst) {
    std::size_t dim = 2 + rng() % 6, ncand = 5 + rng() % 30, nq = 1 + rng() % 8;
    std::vector<std::pair<std::string, std::vector<double>>> raw;
    retrieve::CandidateSet pool;
    for (std::size_t c = 0; c < ncand; ++c) {
      std::vector<double> v(dim);
      for (auto& x : v) x = g(rng);
      raw.emplace_back("c" + std::to_string(c), v);
      pool.add(raw.back().first, v);
    }
    std::vector<retrieve::Query> queries;
    retrieve::GroundTruth truth;
    for (std::size_t q = 0; q < nq; ++q) {
      retrieve::Query query{"q" + std::to_string(q), "i", "g", std::vector<double>(dim), &pool};
      for (auto& x : query.vector) x = g(rng);
      std::set<std::string> rel;
      std::size_t nrel = 1 + rng() % 4;
      while (rel.size() < nrel) rel.insert("c" + std::to_string(rng() % (ncand + 3)));
      truth[query.id] = rel;
      queries.push_back(std::move(query));
    }
    std::vector<std::size_t> ks{1, 5, 10};
    auto report = retrieve::evaluate_map(queries, truth, ks);
    for (std::size_t n = 0; n < ks.size(); ++n) {
      double sum = 0.0;
      for (const auto& q : queries) {
        std::vector<std::string> ids;
        for (const auto& [id, s] : testsupport::ref_nearest(q.vector, raw, 10)) ids.push_back(id);
        sum += testsupport::ref_average_precision(ids, truth[q.id], ks[n]);
      }
      double want = sum / static_cast<double>(queries.size());
      if (report.map_at_k[n] == want)
        ++exact;
      else if (std::abs(report.map_at_k[n] - want) <= 1e-12)
        ++close;
      else
        ++off;
    }
  }
  return {off == 0, std::to_string(exact) + " bitwise equal, " + std::to_string(close) + " within 1e-12, " +
                        std::to_string(off) + " off"};
}

// ---- 7 / 9 ----
int run_all(const fs::path& out) {
  fs::remove_all(out);
  std::string cmd = std::string(CODEMAP_CLI) + " --config " + (fs::path(CODEMAP_FIXTURE_DIR) / "codemap.conf").string() +
                    " --out-dir " + out.string() + " --threads 1 run-all >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& tag) {
  return fs::temp_directory_path() / ("codemap_accept_" + tag + "_" + std::to_string(::getpid()));
}

Outcome fixture_end_to_end() {
  auto out = scratch("fixture");
  int rc = run_all(out);
  if (rc != 0) return {false, "run-all exit " + std::to_string(rc)};
  auto loaded = embed::parse_embeddings(read_file(out / "embeddings.txt"));
  fs::remove_all(out);
  retrieve::CandidateSet b_side;
  for (std::uint32_t r = 0; r < loaded.vocab.size(); ++r)
    if (loaded.vocab.token(r).rfind("b:", 0) == 0) {
      auto v = loaded.table.input(r);
      b_side.add(loaded.vocab.token(r), {v.begin(), v.end()});
    }
  auto id = loaded.vocab.find("a:final");
  if (id < 0) return {false, "a:final not in vocabulary"};
  auto top = retrieve::nearest(loaded.table.input(static_cast<std::uint32_t>(id)), b_side, 5);
  for (std::size_t r = 0; r < top.size(); ++r)
    if (top[r].id == "b:readonly") return {true, "exit 0, b:readonly at rank " + std::to_string(r + 1)};
  return {false, "exit 0, b:readonly not in top 5"};
}

// ---- 8 ----
Outcome composition_properties() {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dim = 8, ntok = 40;
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::int64_t>> counts;
  for (std::size_t t = 0; t < ntok; ++t) {
    names.push_back("a:t" + std::to_string(t));
    counts.emplace_back(names.back(), 1);
  }
  auto vocab = embed::Vocabulary::from_ordered(counts);
  embed::EmbeddingTable table(ntok, dim);
  for (std::uint32_t r = 0; r < ntok; ++r)
    for (auto& x : table.input(r)) x = g(rng);
  auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };

  int failures = 0, oov_elements = 0;
  for (int e = 0; e < 1000; ++e) {
    hier::ElementRef el{"e" + std::to_string(e), syntax::Granularity::statement, {}};
    std::size_t len = 1 + rng() % 12;
    bool all_oov = rng() % 10 == 0;
    bool any_in = false;
    for (std::size_t k = 0; k < len; ++k) {
      if (all_oov || rng() % 5 == 0) {
        el.tokens.push_back("a:oov" + std::to_string(rng() % 5));
      } else {
        el.tokens.push_back(names[rng() % ntok]);
        any_in = true;
      }
    }
    if (!any_in) {
      ++oov_elements;
      try {
        hier::compose_element(el, table, vocab, hier::Weighting::uniform);
        ++failures;
      } catch (const hier::CoverageZero&) {
      }
      continue;
    }
    hier::ElementEmbedding got;
    try {
      got = hier::compose_element(el, table, vocab, hier::Weighting::uniform);
    } catch (const hier::CoverageZero&) {
      ++failures;
      continue;
    }
    auto shuffled = el;
    std::shuffle(shuffled.tokens.begin(), shuffled.tokens.end(), rng);
    auto perm = hier::compose_element(shuffled, table, vocab, hier::Weighting::uniform);
    double max_norm = 0.0;
    std::vector<double> lo(dim, 1e300), hi(dim, -1e300);
    for (const auto& t : el.tokens) {
      auto id = vocab.find(t);
      if (id < 0) continue;
      auto v = table.input(static_cast<std::uint32_t>(id));
      max_norm = std::max(max_norm, norm(v));
      for (std::size_t k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    }
    bool ok = norm(got.vector) <= max_norm + 1e-9;
    for (std::size_t k = 0; k < dim; ++k) {
      ok = ok && std::abs(got.vector[k] - perm.vector[k]) <= 1e-9;
      ok = ok && got.vector[k] >= lo[k] - 1e-9 && got.vector[k] <= hi[k] + 1e-9;
    }
    failures += !ok;
  }
  return {failures == 0, std::to_string(failures) + " violations over 1000 elements (" + std::to_string(oov_elements) +
                             " all-OOV)"};
}

// ---- 9 ----
Outcome determinism() {
  auto one = scratch("det1"), two = scratch("det2");
  int rc1 = run_all(one), rc2 = run_all(two);
  if (rc1 != 0 || rc2 != 0) return {false, "run-all exits " + std::to_string(rc1) + ", " + std::to_string(rc2)};
  std::vector<std::string> differ;
  for (const char* f : {"embeddings.txt", "element_embeddings.txt", "mappings.tsv", "report.tsv"})
    if (read_file(one / f) != read_file(two / f)) differ.push_back(f);
  fs::remove_all(one);
  fs::remove_all(two);
  std::string d = differ.empty() ? "4 artifacts byte-identical" : "differ:";
  for (const auto& f : differ) d += " " + f;
  return {differ.empty(), d};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "golden normalization", 1.0, golden_normalization},
      {2, "EM likelihood and row sums", 10.0, em_correctness},
      {3, "alignment recovery", 30.0, alignment_recovery},
      {4, "SGNS gradient check", 10.0, gradient_check},
      {5, "bilingual dictionary recovery", 120.0, dictionary_recovery},
      {6, "MAP oracle equivalence", 5.0, map_oracle},
      {7, "end-to-end fixture", 120.0, fixture_end_to_end},
      {8, "composition properties", 5.0, composition_properties},
      {9, "determinism", 240.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = secs <= c.budget_s;
    if (!in_time) o.detail += ", over time budget";
    bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d: %s: %s (%.2fs / %.0fs)\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
