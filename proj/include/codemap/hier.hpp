#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codemap/embed.hpp"
#include "codemap/error.hpp"
#include "codemap/syntax.hpp"

namespace codemap::hier {

enum class Weighting { uniform, tfidf };

Weighting parse_weighting(std::string_view name);
std::string_view weighting_name(Weighting w);

// A code element resolved to its (language-tagged) vocabulary tokens.
struct ElementRef {
  std::string id;
  syntax::Granularity granularity = syntax::Granularity::expression;
  std::vector<std::string> tokens;
};

// Element id: `<side>:<granularity>:<path>#<label>`, spaces replaced by '_'.
std::string element_id(std::string_view side, syntax::Granularity g, std::string_view path, std::string_view label);
// Granularity encoded in an element id; throws ArgumentError when malformed.
syntax::Granularity element_granularity(std::string_view id);

struct IdfTable {
  std::unordered_map<std::string, double> idf;
  std::size_t n_docs = 0;

  // 0 for tokens that never occur.
  double get(const std::string& token) const;
};

// Every element is one document; idf(t) = ln(n / df(t)). Throws ArgumentError
// for an empty element list.
IdfTable build_idf(const std::vector<ElementRef>& elements);

struct ElementEmbedding {
  std::string id;
  syntax::Granularity granularity = syntax::Granularity::expression;
  std::vector<double> vector;
  double coverage = 0.0;
};

class CoverageZero : public ArgumentError {
 public:
  explicit CoverageZero(const std::string& element_id)
      : ArgumentError("no in-vocabulary tokens in element '" + element_id + "'"), element_id_(element_id) {}
  const std::string& element_id() const noexcept { return element_id_; }

 private:
  std::string element_id_;
};

// Mean of the in-vocabulary token vectors (OOV tokens are skipped). With
// tfidf each occurrence is weighted by idf(t); when every weight is zero the
// uniform mean is used. Throws CoverageZero when no token is in vocabulary.
ElementEmbedding compose_element(const ElementRef& element, const embed::EmbeddingTable& table,
                                 const embed::Vocabulary& vocab, Weighting weighting,
                                 const IdfTable* idf = nullptr);

struct ComposeResult {
  std::vector<ElementEmbedding> embeddings;
  std::vector<std::string> skipped;  // ids of CoverageZero elements
};

// With tfidf and no explicit table, idf is built per granularity.
ComposeResult compose_corpus(const std::vector<ElementRef>& elements, const embed::EmbeddingTable& table,
                             const embed::Vocabulary& vocab, Weighting weighting, const IdfTable* idf = nullptr);

// `<n> <d> <weighting>` then `id v1 ... vd coverage`.
std::string format_element_embeddings(const std::vector<ElementEmbedding>& embeddings, std::size_t dim,
                                      Weighting weighting);

struct LoadedElements {
  std::size_t dim = 0;
  Weighting weighting = Weighting::uniform;
  std::vector<ElementEmbedding> embeddings;
};
LoadedElements parse_element_embeddings(std::string_view text, const std::string& source = {});

}  // namespace codemap::hier
