#include "codemap/hier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "codemap/text_io.hpp"

namespace codemap::hier {

Weighting parse_weighting(std::string_view name) {
  if (name == "uniform") return Weighting::uniform;
  if (name == "tfidf") return Weighting::tfidf;
  throw ArgumentError("unknown weighting: " + std::string(name));
}

std::string_view weighting_name(Weighting w) { return w == Weighting::uniform ? "uniform" : "tfidf"; }

std::string element_id(std::string_view side, syntax::Granularity g, std::string_view path, std::string_view label) {
  std::string id;
  id += side;
  if (id.empty() || id.back() != ':') id += ':';
  id += syntax::granularity_name(g);
  id += ':';
  id += path;
  id += '#';
  id += label;
  std::replace(id.begin(), id.end(), ' ', '_');
  std::replace(id.begin(), id.end(), '\t', '_');
  return id;
}

syntax::Granularity element_granularity(std::string_view id) {
  auto first = id.find(':');
  auto second = first == std::string_view::npos ? first : id.find(':', first + 1);
  if (second == std::string_view::npos) throw ArgumentError("malformed element id '" + std::string(id) + "'");
  return syntax::parse_granularity(id.substr(first + 1, second - first - 1));
}

double IdfTable::get(const std::string& token) const {
  auto it = idf.find(token);
  return it == idf.end() ? 0.0 : it->second;
}

IdfTable build_idf(const std::vector<ElementRef>& elements) {
  if (elements.empty()) throw ArgumentError("build_idf: no elements");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& e : elements) {
    std::set<std::string_view> seen(e.tokens.begin(), e.tokens.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  IdfTable table;
  table.n_docs = elements.size();
  for (const auto& [token, n] : df)
    table.idf[token] = std::log(static_cast<double>(table.n_docs) / static_cast<double>(n));
  return table;
}

ElementEmbedding compose_element(const ElementRef& element, const embed::EmbeddingTable& table,
                                 const embed::Vocabulary& vocab, Weighting weighting, const IdfTable* idf) {
  if (weighting == Weighting::tfidf && !idf) throw ArgumentError("tfidf weighting needs an idf table");
  const std::size_t d = table.dim();
  std::vector<std::uint32_t> ids;
  std::vector<double> weights;
  for (const auto& t : element.tokens) {
    auto id = vocab.find(t);
    if (id < 0) continue;
    ids.push_back(static_cast<std::uint32_t>(id));
    weights.push_back(weighting == Weighting::tfidf ? idf->get(t) : 1.0);
  }
  if (ids.empty()) throw CoverageZero(element.id);

  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) {
    std::fill(weights.begin(), weights.end(), 1.0);
    total = static_cast<double>(weights.size());
  }

  ElementEmbedding out;
  out.id = element.id;
  out.granularity = element.granularity;
  out.coverage = static_cast<double>(ids.size()) / static_cast<double>(element.tokens.size());
  out.vector.assign(d, 0.0);
  for (std::size_t n = 0; n < ids.size(); ++n) {
    auto v = table.input(ids[n]);
    for (std::size_t k = 0; k < d; ++k) out.vector[k] += weights[n] * v[k];
  }
  for (auto& x : out.vector) x /= total;
  return out;
}

ComposeResult compose_corpus(const std::vector<ElementRef>& elements, const embed::EmbeddingTable& table,
                             const embed::Vocabulary& vocab, Weighting weighting, const IdfTable* idf) {
  std::map<syntax::Granularity, IdfTable> per_level;
  if (weighting == Weighting::tfidf && !idf) {
    std::map<syntax::Granularity, std::vector<ElementRef>> groups;
    for (const auto& e : elements) groups[e.granularity].push_back(e);
    for (const auto& [g, group] : groups) per_level.emplace(g, build_idf(group));
  }
  ComposeResult result;
  for (const auto& e : elements) {
    const IdfTable* use = idf;
    if (weighting == Weighting::tfidf && !idf) use = &per_level.at(e.granularity);
    try {
      result.embeddings.push_back(compose_element(e, table, vocab, weighting, use));
    } catch (const CoverageZero&) {
      result.skipped.push_back(e.id);
    }
  }
  return result;
}

std::string format_element_embeddings(const std::vector<ElementEmbedding>& embeddings, std::size_t dim,
                                      Weighting weighting) {
  std::string out = std::to_string(embeddings.size()) + ' ' + std::to_string(dim) + ' ' +
                    std::string(weighting_name(weighting)) + '\n';
  for (const auto& e : embeddings) {
    if (e.vector.size() != dim) throw ArgumentError("element '" + e.id + "' has the wrong dimension");
    out += e.id;
    for (double x : e.vector) {
      out += ' ';
      out += format_real(x, 9);
    }
    out += ' ';
    out += format_real(e.coverage, 9);
    out += '\n';
  }
  return out;
}

LoadedElements parse_element_embeddings(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::size_t n = skip_provenance(lines);
  if (n >= lines.size()) throw ParseError(source, static_cast<int>(n + 1), 0, "missing header");
  LoadedElements out;
  std::size_t rows = 0;
  {
    auto header = split_ws(lines[n]);
    try {
      if (header.size() != 3) throw std::invalid_argument("header");
      rows = std::stoul(header[0]);
      out.dim = std::stoul(header[1]);
      out.weighting = parse_weighting(header[2]);
      if (out.dim == 0) throw std::invalid_argument("dim");
    } catch (const std::exception&) {
      throw ParseError(source, static_cast<int>(n + 1), 0, "bad header, expected '<n> <d> <weighting>'");
    }
  }
  for (++n; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    int line = static_cast<int>(n + 1);
    auto cols = split_ws(lines[n]);
    if (cols.size() != out.dim + 2)
      throw ParseError(source, line, 0, "expected id, " + std::to_string(out.dim) + " values and coverage");
    ElementEmbedding e;
    e.id = cols[0];
    try {
      e.granularity = element_granularity(e.id);
      for (std::size_t k = 0; k < out.dim; ++k) e.vector.push_back(parse_real(cols[k + 1]));
      e.coverage = parse_real(cols.back());
    } catch (const std::exception& ex) {
      throw ParseError(source, line, 0, ex.what());
    }
    out.embeddings.push_back(std::move(e));
  }
  if (out.embeddings.size() != rows)
    throw ParseError(source, static_cast<int>(lines.size()), 0,
                     "header declares " + std::to_string(rows) + " rows, found " +
                         std::to_string(out.embeddings.size()));
  return out;
}

}  // namespace codemap::hier
