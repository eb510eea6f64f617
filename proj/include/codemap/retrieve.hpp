#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace codemap::retrieve {

// Throws ArgumentError when either vector is zero or the sizes differ.
double cosine(std::span<const double> u, std::span<const double> v);

struct Hit {
  std::string id;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

// Candidate pool with cached norms. Zero vectors are rejected on insert.
class CandidateSet {
 public:
  void add(std::string id, std::vector<double> vec);
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t n) const { return ids_[n]; }
  std::span<const double> vector(std::size_t n) const { return vecs_[n]; }
  double norm(std::size_t n) const { return norms_[n]; }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> vecs_;
  std::vector<double> norms_;
};

// Exact top-k by cosine; ties broken by ascending id.
std::vector<Hit> nearest(std::span<const double> query, const CandidateSet& candidates, std::size_t k);

// AP@k = sum of precision@r over relevant hits at r <= k, divided by
// min(|relevant|, k). Throws ArgumentError for k < 1 or an empty relevant set.
double average_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant, std::size_t k);

using GroundTruth = std::map<std::string, std::set<std::string>>;

// A ranked answer for one query. `group` is the breakdown bucket
// (element granularity, or "token").
struct Ranking {
  std::string query_id;
  std::string item;
  std::string group;
  std::vector<Hit> hits;
};

struct Query {
  std::string id;
  std::string item;
  std::string group;
  std::vector<double> vector;
  const CandidateSet* pool = nullptr;
};

struct MappingReport {
  std::vector<std::size_t> ks;
  std::vector<double> map_at_k;  // parallel to ks
  double precision_at_1 = 0.0;
  std::size_t evaluated = 0;
  // Per query, AP at each k (parallel to ks).
  std::vector<std::pair<std::string, std::vector<double>>> per_query;
  std::map<std::string, std::vector<double>> map_by_group;
  std::vector<std::string> skipped;  // queries without a truth entry
};

std::vector<Ranking> rank_queries(const std::vector<Query>& queries, std::size_t k);

// MAP@k for every k over the rankings that have a truth entry.
MappingReport evaluate_rankings(const std::vector<Ranking>& rankings, const GroundTruth& truth,
                                const std::vector<std::size_t>& ks);
MappingReport evaluate_map(const std::vector<Query>& queries, const GroundTruth& truth,
                           const std::vector<std::size_t>& ks);

// Fraction of queries (with truth) whose rank-1 candidate is relevant.
double evaluate_api_precision(const std::vector<Ranking>& rankings, const GroundTruth& truth);
double evaluate_api_precision(const std::vector<Query>& queries, const GroundTruth& truth);

struct MappingDiff {
  std::vector<std::pair<std::string, std::string>> new_mappings;
  std::vector<std::pair<std::string, std::string>> agreeing;
  // (query, found, reference)
  std::vector<std::tuple<std::string, std::string, std::string>> conflicting;
};

MappingDiff diff_reference(const std::map<std::string, std::string>& found,
                           const std::map<std::string, std::string>& reference);

// ---- file formats ----

// Query TSV `id side item`; side is `a`, `b`, `a->b` or `b->a` and names the query side.
struct QuerySpec {
  std::string id;
  char side = 'a';
  std::string item;
};
std::vector<QuerySpec> parse_queries(std::string_view text, const std::string& source = {});

// Truth TSV `query-id relevant[,relevant...]`.
GroundTruth parse_truth(std::string_view text, const std::string& source = {});

// Reference TSV `a-signature b-signature`.
std::map<std::string, std::string> parse_reference(std::string_view text, const std::string& source = {});

// Ranking TSV `query-id item group rank candidate cosine`.
std::string format_rankings(const std::vector<Ranking>& rankings);
std::vector<Ranking> parse_rankings(std::string_view text, const std::string& source = {});

// Per-query AP lines followed by a `#`-prefixed summary block.
std::string format_report(const MappingReport& report, const MappingDiff* diff = nullptr);

std::string format_diff(const MappingDiff& diff);

}  // namespace codemap::retrieve
