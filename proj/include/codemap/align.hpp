#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace codemap::align {

struct BitextPair {
  std::string id;
  std::vector<std::string> source;
  std::vector<std::string> target;
};

struct Bitext {
  std::vector<BitextPair> pairs;

  // Same pairs with source and target swapped.
  Bitext reversed() const;
};

// Lexical translation table t(target | source). Source id 0 is the NULL word.
class TranslationTable {
 public:
  static constexpr std::string_view kNull = "<NULL>";

  struct Entry {
    std::string source;
    std::string target;
    double prob;
  };

  double prob(std::string_view target, std::string_view source) const;
  // Sum of t(. | source) over all targets; 0 for unknown sources.
  double row_sum(std::string_view source) const;
  std::vector<std::string> sources() const;
  // Entries sorted by (source, target).
  std::vector<Entry> entries() const;
  std::size_t size() const { return probs_.size(); }

  // Interning, used by the trainer.
  std::uint32_t source_id(std::string_view s);
  std::uint32_t target_id(std::string_view t);
  std::int64_t find_source(std::string_view s) const;
  std::int64_t find_target(std::string_view t) const;
  std::uint32_t slot(std::uint32_t s, std::uint32_t t);
  std::int64_t find_slot(std::uint32_t s, std::uint32_t t) const;

  std::vector<double>& prob_values() { return probs_; }
  const std::vector<double>& prob_values() const { return probs_; }
  const std::vector<std::uint32_t>& slot_sources() const { return slot_source_; }
  std::size_t source_count() const { return source_names_.size(); }

  static TranslationTable from_entries(const std::vector<Entry>& entries);

 private:
  static std::uint64_t key(std::uint32_t s, std::uint32_t t) {
    return (static_cast<std::uint64_t>(s) << 32) | t;
  }
  std::vector<std::string> source_names_;
  std::vector<std::string> target_names_;
  std::unordered_map<std::string, std::uint32_t> source_index_;
  std::unordered_map<std::string, std::uint32_t> target_index_;
  std::unordered_map<std::uint64_t, std::uint32_t> slots_;
  std::vector<std::uint32_t> slot_source_;
  std::vector<std::uint32_t> slot_target_;
  std::vector<double> probs_;
};

struct Model1Options {
  unsigned threads = 1;
  // When set, receives the corpus log-likelihood before the first round and
  // after every round (iterations + 1 values).
  std::vector<double>* log_likelihood = nullptr;
};

// Uniform over co-occurring targets for each source (NULL co-occurs with all).
TranslationTable initial_table(const Bitext& bitext);

// IBM Model 1 EM from uniform initialization. Throws ArgumentError for an
// empty bitext or iterations < 1.
TranslationTable train_model1(const Bitext& bitext, int iterations, const Model1Options& options = {});

// sum over pairs and target positions of log( sum_i t(b_j|a_i) / (|a|+1) ),
// with probabilities floored at 1e-12 inside the log.
double corpus_log_likelihood(const Bitext& bitext, const TranslationTable& table);

struct AlignmentLinkSet {
  std::string pair_id;
  // (index into source stream, index into target stream), sorted, unique.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> links;

  friend bool operator==(const AlignmentLinkSet&, const AlignmentLinkSet&) = default;
};

// Each target position links to argmax_i t(b_j | a_i); NULL wins ties and
// leaves the position unlinked. Ties among source positions go to smallest i.
AlignmentLinkSet viterbi_align(const TranslationTable& table, const BitextPair& pair);

enum class Symmetrization { intersection, union_ };

Symmetrization parse_symmetrization(std::string_view name);
std::string_view symmetrization_name(Symmetrization mode);

// `backward` is in (target-stream index, source-stream index) orientation and
// is transposed before the set operation. Throws ArgumentError on pair-id mismatch.
AlignmentLinkSet symmetrize(const AlignmentLinkSet& forward, const AlignmentLinkSet& backward,
                            Symmetrization mode);

// Splits a long pair at method boundaries (token indices where methods
// start). The k-th segment of each side pairs with the k-th of the other;
// surplus segments on the longer side merge into the last pair.
struct Chunk {
  BitextPair pair;
  std::size_t source_offset = 0;
  std::size_t target_offset = 0;
};
std::vector<Chunk> chunk_pair(const BitextPair& pair, std::span<const std::size_t> source_starts,
                              std::span<const std::size_t> target_starts, std::size_t max_len);

// Pharaoh lines: `pair-id\ti-j i-j ...`.
std::string format_pharaoh(const std::vector<AlignmentLinkSet>& sets);
std::vector<AlignmentLinkSet> parse_pharaoh(std::string_view text, const std::string& source = {});

// TSV `source\ttarget\tprob`; rows with prob < 1e-6 omitted.
std::string format_table(const TranslationTable& table);
TranslationTable parse_table(std::string_view text, const std::string& source = {});

}  // namespace codemap::align
