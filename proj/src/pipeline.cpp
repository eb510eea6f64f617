#include "codemap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>

#include "codemap/error.hpp"
#include "codemap/retrieve.hpp"
#include "codemap/syntax.hpp"
#include "codemap/text_io.hpp"

namespace codemap::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  std::string v(trim(value));
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
      out = parse_real(v);
      used = v.size();
    } else if constexpr (std::is_signed_v<T>) {
      out = static_cast<T>(std::stoll(v, &used));
    } else {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      out = static_cast<T>(std::stoull(v, &used));
    }
    if (used != v.size() || v.empty()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ArgumentError("bad value for " + std::string(key) + ": '" + v + "'");
  }
}

fs::path resolve(const fs::path& base, std::string_view value) {
  fs::path p{std::string(trim(value))};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

std::string join_ks(const std::vector<std::size_t>& ks) {
  std::string out;
  for (std::size_t n = 0; n < ks.size(); ++n) out += (n ? "," : "") + std::to_string(ks[n]);
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

std::string rel_path(const fs::path& file, const fs::path& root) {
  std::error_code ec;
  auto rel = fs::relative(file, root, ec);
  if (ec || rel.empty()) return file.filename().generic_string();
  return rel.generic_string();
}

struct IndexRow {
  std::string pair_id;
  std::string rel_a;
  std::string rel_b;
};

std::vector<IndexRow> parse_index(std::string_view text, const std::string& source) {
  std::vector<IndexRow> rows;
  auto lines = split_lines(text);
  for (std::size_t n = skip_provenance(lines); n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    auto cols = split(lines[n], '\t');
    if (cols.size() != 3) throw ParseError(source, static_cast<int>(n + 1), 0, "expected 3 fields");
    rows.push_back({cols[0], cols[1], cols[2]});
  }
  return rows;
}

std::vector<std::string> tagged(const syntax::EnrichedTokenStream& s, const std::vector<std::size_t>& idx,
                                char side) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(side == 'a' ? embed::tag_a(s.tokens.at(i).text) : embed::tag_b(s.tokens.at(i).text));
  return out;
}

std::string strip_tag(const std::string& id) {
  if (id.rfind(embed::kSideA, 0) == 0 || id.rfind(embed::kSideB, 0) == 0) return id.substr(2);
  return id;
}

}  // namespace

// ---- config ------------------------------------------------------------------------

void PipelineConfig::validate() const {
  if (!(pairing_threshold > 0.0 && pairing_threshold <= 1.0))
    throw ArgumentError("pairing.threshold must be in (0,1]");
  if (align_iterations < 1) throw ArgumentError("align.iterations must be >= 1");
  if (max_len < 1) throw ArgumentError("align.max_len must be >= 1");
  train.validate();
  if (ks.empty()) throw ArgumentError("retrieve.ks must not be empty");
  for (auto k : ks)
    if (k < 1) throw ArgumentError("retrieve.ks entries must be >= 1");
  if (threads < 1) throw ArgumentError("threads must be >= 1");
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"manifest.name", manifest.name},
      {"manifest.lang_a_root", manifest.lang_a_root.generic_string()},
      {"manifest.lang_b_root", manifest.lang_b_root.generic_string()},
      {"manifest.lang_a", manifest.lang_a},
      {"manifest.lang_b", manifest.lang_b},
      {"pairing.threshold", format_real(pairing_threshold, 17)},
      {"align.iterations", std::to_string(align_iterations)},
      {"align.symmetrization", std::string(align::symmetrization_name(symmetrization))},
      {"align.max_len", std::to_string(max_len)},
      {"train.dim", std::to_string(train.dim)},
      {"train.window", std::to_string(train.window)},
      {"train.negatives", std::to_string(train.negatives)},
      {"train.epochs", std::to_string(train.epochs)},
      {"train.lr0", format_real(train.lr0, 17)},
      {"train.min_count", std::to_string(train.min_count)},
      {"train.subsample", format_real(train.subsample, 17)},
      {"train.seed", std::to_string(train.seed)},
      {"train.cross_weight", format_real(train.cross_weight, 17)},
      {"compose.weighting", std::string(hier::weighting_name(weighting))},
      {"retrieve.ks", join_ks(ks)},
      {"retrieve.queries", queries.generic_string()},
      {"retrieve.truth", truth.generic_string()},
      {"retrieve.reference", reference.generic_string()},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + '=' + v + '\n';
  return out;
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::size_t PipelineConfig::ranking_depth() const {
  if (depth > 0) return depth;
  return *std::max_element(ks.begin(), ks.end());
}

void set_key(PipelineConfig& cfg, std::string_view key, std::string_view value, const fs::path& base_dir) {
  std::string v(trim(value));
  if (key == "manifest.name") cfg.manifest.name = v;
  else if (key == "manifest.lang_a_root") cfg.manifest.lang_a_root = resolve(base_dir, v);
  else if (key == "manifest.lang_b_root") cfg.manifest.lang_b_root = resolve(base_dir, v);
  else if (key == "manifest.lang_a") cfg.manifest.lang_a = v;
  else if (key == "manifest.lang_b") cfg.manifest.lang_b = v;
  else if (key == "pairing.threshold") cfg.pairing_threshold = parse_number<double>(key, v);
  else if (key == "align.iterations") cfg.align_iterations = parse_number<int>(key, v);
  else if (key == "align.symmetrization") cfg.symmetrization = align::parse_symmetrization(v);
  else if (key == "align.max_len") cfg.max_len = parse_number<std::size_t>(key, v);
  else if (key == "train.dim") cfg.train.dim = parse_number<int>(key, v);
  else if (key == "train.window") cfg.train.window = parse_number<int>(key, v);
  else if (key == "train.negatives") cfg.train.negatives = parse_number<int>(key, v);
  else if (key == "train.epochs") cfg.train.epochs = parse_number<int>(key, v);
  else if (key == "train.lr0") cfg.train.lr0 = parse_number<double>(key, v);
  else if (key == "train.min_count") cfg.train.min_count = parse_number<std::int64_t>(key, v);
  else if (key == "train.subsample") cfg.train.subsample = parse_number<double>(key, v);
  else if (key == "train.seed") cfg.train.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "train.cross_weight") cfg.train.cross_weight = parse_number<double>(key, v);
  else if (key == "compose.weighting") cfg.weighting = hier::parse_weighting(v);
  else if (key == "retrieve.ks") {
    std::vector<std::size_t> ks;
    for (const auto& part : split(v, ',')) ks.push_back(parse_number<std::size_t>(key, part));
    cfg.ks = std::move(ks);
  } else if (key == "retrieve.queries") cfg.queries = resolve(base_dir, v);
  else if (key == "retrieve.truth") cfg.truth = resolve(base_dir, v);
  else if (key == "retrieve.reference") cfg.reference = resolve(base_dir, v);
  else throw ArgumentError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text, const std::string& source, const fs::path& base_dir) {
  PipelineConfig cfg;
  auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto line = trim(lines[n]);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    int lineno = static_cast<int>(n + 1);
    if (eq == std::string_view::npos) throw ParseError(source, lineno, 0, "expected key=value");
    try {
      set_key(cfg, trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
    } catch (const ArgumentError& e) {
      throw ParseError(source, lineno, 0, e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_file(path), path.string(), fs::absolute(path).parent_path());
}

// ---- layout ----------------------------------------------------------------------

fs::path Layout::stream(char side, const std::string& rel) const {
  return root / "streams" / std::string(1, side) / (rel + ".stream");
}

fs::path Layout::elements(char side, const std::string& rel) const {
  return root / "streams" / std::string(1, side) / (rel + ".elements");
}

fs::path Layout::table(bool forward) const {
  return root / (forward ? "ttable.a-b.tsv" : "ttable.b-a.tsv");
}

// ---- stages ----------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig cfg, fs::path out_dir, std::ostream& log)
    : cfg_(std::move(cfg)), layout_{std::move(out_dir)}, log_(log) {
  cfg_.validate();
}

std::string Pipeline::provenance() const {
  return provenance_block(std::string(kToolVersion) + "\nconfig " + cfg_.hash() + "\nseed " +
                          std::to_string(cfg_.train.seed));
}

void Pipeline::write(const fs::path& path, std::string_view body) const {
  write_file(path, provenance() + std::string(body));
}

std::string Pipeline::read_artifact(const fs::path& path, std::string_view stage) const {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("missing " + path.string() + ": run " + std::string(stage) + " first");
  return read_file(path);
}

void Pipeline::pair() {
  Stopwatch sw;
  cfg_.manifest.validate();
  auto pairs = corpus::pair_files(cfg_.manifest, cfg_.pairing_threshold);
  write(layout_.pairs(), corpus::format_pair_manifest(pairs));
  log_ << "pair: " << pairs.size() << " file pairs (" << secs(sw.seconds()) << ")\n";
}

void Pipeline::normalize() {
  Stopwatch sw;
  auto pairs = corpus::parse_pair_manifest(read_artifact(layout_.pairs(), "pair"), layout_.pairs().string());
  auto lang_a = syntax::parse_language(cfg_.manifest.lang_a);
  auto lang_b = syntax::parse_language(cfg_.manifest.lang_b);

  std::string index;
  std::set<std::string> ids;
  std::size_t tokens = 0, elements = 0, failed = 0;
  for (const auto& p : pairs) {
    struct Side {
      char tag;
      fs::path file;
      fs::path root;
      syntax::Language lang;
    };
    Side sides[2] = {{'a', p.path_a, cfg_.manifest.lang_a_root, lang_a}, {'b', p.path_b, cfg_.manifest.lang_b_root, lang_b}};
    std::string rels[2];
    std::string bodies[2][2];
    bool ok = true;
    for (int s = 0; s < 2 && ok; ++s) {
      rels[s] = rel_path(sides[s].file, sides[s].root);
      try {
        auto tree = syntax::parse(read_file(sides[s].file), sides[s].lang, sides[s].file.string());
        auto stream = syntax::normalize(tree, rels[s]);
        auto elems = syntax::extract_elements(tree, stream);
        bodies[s][0] = syntax::format_stream(stream);
        bodies[s][1] = syntax::format_elements(elems);
        tokens += stream.tokens.size();
        elements += elems.size();
      } catch (const ParseError& e) {
        log_ << "normalize: skipping pair '" << p.stem << "': " << e.what() << '\n';
        ok = false;
      }
    }
    if (!ok) {
      ++failed;
      continue;
    }
    for (int s = 0; s < 2; ++s) {
      write(layout_.stream(sides[s].tag, rels[s]), bodies[s][0]);
      write(layout_.elements(sides[s].tag, rels[s]), bodies[s][1]);
    }
    std::string id = p.stem;
    for (int n = 2; !ids.insert(id).second; ++n) id = p.stem + "~" + std::to_string(n);
    index += id + '\t' + rels[0] + '\t' + rels[1] + '\n';
  }
  write(layout_.stream_index(), index);
  log_ << "normalize: " << ids.size() << " pairs, " << tokens << " tokens, " << elements << " elements, "
       << failed << " skipped (" << secs(sw.seconds()) << ")\n";
}

align::Bitext Pipeline::load_bitext() const {
  auto rows = parse_index(read_artifact(layout_.stream_index(), "normalize"), layout_.stream_index().string());
  align::Bitext bitext;
  for (const auto& row : rows) {
    std::vector<std::string> toks[2];
    std::vector<std::size_t> starts[2];
    const std::string* rels[2] = {&row.rel_a, &row.rel_b};
    for (int s = 0; s < 2; ++s) {
      char tag = s == 0 ? 'a' : 'b';
      auto sp = layout_.stream(tag, *rels[s]);
      auto ep = layout_.elements(tag, *rels[s]);
      toks[s] = syntax::parse_stream(read_artifact(sp, "normalize"), sp.string()).texts();
      for (const auto& e : syntax::parse_elements(read_artifact(ep, "normalize"), ep.string()))
        if (e.granularity == syntax::Granularity::method && !e.token_indices.empty())
          starts[s].push_back(e.token_indices.front());
    }
    if (toks[0].empty() || toks[1].empty()) continue;
    align::BitextPair pair{row.pair_id, std::move(toks[0]), std::move(toks[1])};
    for (auto& c : align::chunk_pair(pair, starts[0], starts[1], cfg_.max_len))
      if (!c.pair.source.empty() && !c.pair.target.empty()) bitext.pairs.push_back(std::move(c.pair));
  }
  return bitext;
}

void Pipeline::align() {
  Stopwatch sw;
  auto bitext = load_bitext();
  if (bitext.pairs.empty()) throw ArgumentError("align: no non-empty stream pairs");
  align::Model1Options opts;
  opts.threads = cfg_.threads;
  auto reversed = bitext.reversed();
  auto forward = align::train_model1(bitext, cfg_.align_iterations, opts);
  auto backward = align::train_model1(reversed, cfg_.align_iterations, opts);
  std::vector<align::AlignmentLinkSet> links;
  std::size_t n_links = 0;
  for (std::size_t p = 0; p < bitext.pairs.size(); ++p) {
    links.push_back(align::symmetrize(align::viterbi_align(forward, bitext.pairs[p]),
                                      align::viterbi_align(backward, reversed.pairs[p]), cfg_.symmetrization));
    n_links += links.back().links.size();
  }
  write(layout_.table(true), align::format_table(forward));
  write(layout_.table(false), align::format_table(backward));
  write(layout_.alignments(), align::format_pharaoh(links));
  log_ << "align: " << bitext.pairs.size() << " pairs, " << n_links << " links ("
       << align::symmetrization_name(cfg_.symmetrization) << ", " << secs(sw.seconds()) << ")\n";
}

void Pipeline::train() {
  Stopwatch sw;
  auto bitext = load_bitext();
  auto links = align::parse_pharaoh(read_artifact(layout_.alignments(), "align"), layout_.alignments().string());
  auto vocab = embed::build_vocab(bitext, cfg_.train.min_count);
  embed::TrainOptions opts;
  opts.threads = cfg_.threads;
  opts.warn = [this](const std::string& msg) { log_ << "train: warning: " << msg << '\n'; };
  auto table = embed::train_biskip(bitext, links, vocab, cfg_.train, opts);
  write(layout_.embeddings(), embed::format_embeddings(table, vocab));
  log_ << "train: " << vocab.size() << " tokens, dim " << cfg_.train.dim << ", " << cfg_.train.epochs << " epochs ("
       << secs(sw.seconds()) << ")\n";
}

void Pipeline::compose() {
  Stopwatch sw;
  auto loaded = embed::parse_embeddings(read_artifact(layout_.embeddings(), "train"), layout_.embeddings().string());
  auto rows = parse_index(read_artifact(layout_.stream_index(), "normalize"), layout_.stream_index().string());
  std::vector<hier::ElementRef> refs;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    for (char tag : {'a', 'b'}) {
      const auto& rel = tag == 'a' ? row.rel_a : row.rel_b;
      auto sp = layout_.stream(tag, rel);
      auto ep = layout_.elements(tag, rel);
      auto stream = syntax::parse_stream(read_artifact(sp, "normalize"), sp.string());
      for (const auto& e : syntax::parse_elements(read_artifact(ep, "normalize"), ep.string())) {
        auto base = hier::element_id(std::string(1, tag), e.granularity, rel, e.label);
        auto id = base;
        for (int n = 2; !seen.insert(id).second; ++n) id = base + "~" + std::to_string(n);
        refs.push_back({id, e.granularity, tagged(stream, e.token_indices, tag)});
      }
    }
  }
  auto result = hier::compose_corpus(refs, loaded.table, loaded.vocab, cfg_.weighting);
  write(layout_.element_embeddings(),
        hier::format_element_embeddings(result.embeddings, loaded.table.dim(), cfg_.weighting));
  std::string skipped;
  for (const auto& id : result.skipped) skipped += id + '\n';
  write(layout_.skipped_elements(), skipped);
  log_ << "compose: " << result.embeddings.size() << " elements (" << hier::weighting_name(cfg_.weighting) << "), "
       << result.skipped.size() << " skipped with zero coverage (" << secs(sw.seconds()) << ")\n";
}

void Pipeline::map() {
  Stopwatch sw;
  auto tokens = embed::parse_embeddings(read_artifact(layout_.embeddings(), "train"), layout_.embeddings().string());
  auto elements = hier::parse_element_embeddings(read_artifact(layout_.element_embeddings(), "compose"),
                                                 layout_.element_embeddings().string());

  // Pools: tokens per side, elements per side and granularity.
  std::map<std::string, retrieve::CandidateSet> pools;
  std::map<std::string, std::pair<std::string, std::vector<double>>> lookup;  // item -> (pool key, vector)
  auto nonzero = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
  };
  for (std::uint32_t id = 0; id < tokens.vocab.size(); ++id) {
    const auto& tok = tokens.vocab.token(id);
    std::vector<double> v(tokens.table.input(id).begin(), tokens.table.input(id).end());
    if (!nonzero(v)) continue;
    auto key = std::string(1, tok[0]) + ":token";
    pools[key].add(tok, v);
    lookup.emplace(tok, std::make_pair(key, std::move(v)));
  }
  for (auto& e : elements.embeddings) {
    if (!nonzero(e.vector)) continue;
    auto key = std::string(1, e.id[0]) + ":" + std::string(syntax::granularity_name(e.granularity));
    pools[key].add(e.id, e.vector);
    lookup.emplace(e.id, std::make_pair(key, e.vector));
  }

  std::vector<retrieve::QuerySpec> specs;
  if (!cfg_.queries.empty()) {
    specs = retrieve::parse_queries(read_file(cfg_.queries), cfg_.queries.string());
  } else {
    for (const auto& e : elements.embeddings)
      if (e.id[0] == 'a' && e.granularity == syntax::Granularity::method) specs.push_back({e.id, 'a', e.id});
  }

  std::vector<retrieve::Query> queries;
  std::vector<retrieve::Ranking> missing;
  static const retrieve::CandidateSet empty_pool;
  for (const auto& s : specs) {
    std::string item = s.item;
    std::string prefix = std::string(1, s.side) + ":";
    if (item.rfind(prefix, 0) != 0) item = prefix + item;
    auto it = lookup.find(item);
    if (it == lookup.end()) {
      missing.push_back({s.id, item, "unknown", {}});
      continue;
    }
    auto key = it->second.first;
    std::string group = key.substr(2);
    key[0] = s.side == 'a' ? 'b' : 'a';
    auto pool = pools.find(key);
    queries.push_back({s.id, item, group, it->second.second, pool == pools.end() ? &empty_pool : &pool->second});
  }
  auto rankings = retrieve::rank_queries(queries, cfg_.ranking_depth());
  rankings.insert(rankings.end(), missing.begin(), missing.end());
  std::stable_sort(rankings.begin(), rankings.end(),
                   [](const auto& x, const auto& y) { return x.query_id < y.query_id; });
  write(layout_.rankings(), retrieve::format_rankings(rankings));
  log_ << "map: " << queries.size() << " queries ranked, " << missing.size() << " unknown items, depth "
       << cfg_.ranking_depth() << " (" << secs(sw.seconds()) << ")\n";
}

namespace {

std::map<std::string, std::string> found_mappings(const std::vector<retrieve::Ranking>& rankings) {
  std::map<std::string, std::string> found;
  for (const auto& r : rankings)
    if (!r.hits.empty()) found.emplace(strip_tag(r.item), strip_tag(r.hits.front().id));
  return found;
}

}  // namespace

void Pipeline::eval() {
  Stopwatch sw;
  auto rankings = retrieve::parse_rankings(read_artifact(layout_.rankings(), "map"), layout_.rankings().string());
  retrieve::GroundTruth truth;
  if (!cfg_.truth.empty()) truth = retrieve::parse_truth(read_file(cfg_.truth), cfg_.truth.string());
  auto report = retrieve::evaluate_rankings(rankings, truth, cfg_.ks);
  std::optional<retrieve::MappingDiff> diff;
  if (!cfg_.reference.empty())
    diff = retrieve::diff_reference(found_mappings(rankings),
                                    retrieve::parse_reference(read_file(cfg_.reference), cfg_.reference.string()));
  write(layout_.report(), retrieve::format_report(report, diff ? &*diff : nullptr));
  log_ << "eval: " << report.evaluated << " queries, " << report.skipped.size() << " without truth";
  for (std::size_t n = 0; n < report.ks.size(); ++n)
    log_ << ", MAP@" << report.ks[n] << " " << format_real(report.map_at_k[n], 4);
  log_ << ", P@1 " << format_real(report.precision_at_1, 4) << " (" << secs(sw.seconds()) << ")\n";
}

void Pipeline::diff_ref() {
  Stopwatch sw;
  if (cfg_.reference.empty()) throw UsageError("diff-ref needs retrieve.reference in the config");
  auto rankings = retrieve::parse_rankings(read_artifact(layout_.rankings(), "map"), layout_.rankings().string());
  auto diff = retrieve::diff_reference(found_mappings(rankings),
                                       retrieve::parse_reference(read_file(cfg_.reference), cfg_.reference.string()));
  write(layout_.diff(), retrieve::format_diff(diff));
  log_ << "diff-ref: " << diff.new_mappings.size() << " new, " << diff.agreeing.size() << " agreeing, "
       << diff.conflicting.size() << " conflicting (" << secs(sw.seconds()) << ")\n";
}

void Pipeline::run_all() {
  pair();
  normalize();
  align();
  train();
  compose();
  map();
  eval();
  if (!cfg_.reference.empty()) diff_ref();
}

}  // namespace codemap::pipeline
