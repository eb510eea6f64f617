#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "codemap/align.hpp"

namespace codemap::embed {

// Tag prefixes for the two sides of a bitext in the shared vocabulary.
inline constexpr std::string_view kSideA = "a:";
inline constexpr std::string_view kSideB = "b:";

std::string tag_a(std::string_view token);
std::string tag_b(std::string_view token);

class Vocabulary {
 public:
  Vocabulary() = default;
  // Ids are assigned by descending count, then token text.
  static Vocabulary from_counts(std::vector<std::pair<std::string, std::int64_t>> counts);
  // Ids follow the given order. Throws ArgumentError on duplicate tokens.
  static Vocabulary from_ordered(std::vector<std::pair<std::string, std::int64_t>> counts);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::int64_t count(std::uint32_t id) const { return counts_[id]; }
  std::int64_t total_count() const { return total_; }
  // -1 when absent.
  std::int64_t find(std::string_view token) const;

  // Unigram^0.75 noise distribution; sums to 1.
  const std::vector<double>& noise_dist() const { return noise_; }
  std::uint32_t sample_noise(std::mt19937_64& rng) const;

  // word2vec keep probability min(1, (sqrt(f/t) + 1) * t/f), f = count/total.
  double keep_probability(std::uint32_t id, double subsample) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::int64_t total_ = 0;
  std::vector<double> noise_;
  std::vector<double> noise_cdf_;
};

// Counts tokens of the two sides (tagged a:/b:) and drops those below
// min_count. Throws ArgumentError when nothing survives.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& side_a,
                       const std::vector<std::vector<std::string>>& side_b, std::int64_t min_count);
Vocabulary build_vocab(const align::Bitext& bitext, std::int64_t min_count);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim);

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<double> input(std::uint32_t id) { return {in_.data() + id * dim_, dim_}; }
  std::span<const double> input(std::uint32_t id) const { return {in_.data() + id * dim_, dim_}; }
  std::span<double> output(std::uint32_t id) { return {out_.data() + id * dim_, dim_}; }
  std::span<const double> output(std::uint32_t id) const { return {out_.data() + id * dim_, dim_}; }

  // Input uniform in [-0.5/d, 0.5/d], output zero.
  void initialize(std::uint64_t seed);
  bool all_finite() const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> in_;
  std::vector<double> out_;
};

struct TrainConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 10;
  double lr0 = 0.025;
  std::int64_t min_count = 1;
  double subsample = 1e-3;
  std::uint64_t seed = 1;
  // Learning-rate multiplier for the two cross-language directions.
  double cross_weight = 1.0;

  // Throws ArgumentError naming the offending field.
  void validate() const;
};

// Exact logistic with the argument clamped to [-30, 30].
double sigmoid(double x);

// -log s(u_ctx . v_cen) - sum_neg log s(-u_neg . v_cen)
double sgns_pair_loss(std::uint32_t center, std::uint32_t context, std::span<const std::uint32_t> negatives,
                      const EmbeddingTable& table);

struct SgnsGradient {
  std::vector<double> center;  // d loss / d input(center)
  // d loss / d output(id), one entry per distinct id, sorted by id.
  std::vector<std::pair<std::uint32_t, std::vector<double>>> outputs;
};

SgnsGradient sgns_pair_gradient(std::uint32_t center, std::uint32_t context,
                                std::span<const std::uint32_t> negatives, const EmbeddingTable& table);

struct TrainOptions {
  // 1 is deterministic. More threads update vectors without synchronization.
  unsigned threads = 1;
  std::function<void(const std::string&)> warn;
};

// Bilingual skip-gram over aligned pairs. `links` are matched to pairs by id;
// pairs without a link set train monolingually.
EmbeddingTable train_biskip(const align::Bitext& bitext, const std::vector<align::AlignmentLinkSet>& links,
                            const Vocabulary& vocab, const TrainConfig& cfg, const TrainOptions& options = {});

// Text format: `<|V|> <d>` then `token v1 ... vd` (input vectors, 9 digits).
std::string format_embeddings(const EmbeddingTable& table, const Vocabulary& vocab);

struct LoadedEmbeddings {
  EmbeddingTable table;
  Vocabulary vocab;  // counts are not persisted; every entry loads with count 1
};
LoadedEmbeddings parse_embeddings(std::string_view text, const std::string& source = {});

}  // namespace codemap::embed
