#include "codemap/retrieve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "codemap/error.hpp"
#include "codemap/text_io.hpp"

namespace codemap::retrieve {

namespace {

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

bool better(const Hit& x, const Hit& y) { return x.score != y.score ? x.score > y.score : x.id < y.id; }

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ArgumentError("cosine: dimension mismatch");
  double nu = norm_of(u), nv = norm_of(v);
  if (nu == 0.0 || nv == 0.0) throw ArgumentError("cosine: zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

void CandidateSet::add(std::string id, std::vector<double> vec) {
  double n = norm_of(vec);
  if (n == 0.0) throw ArgumentError("candidate '" + id + "' has a zero vector");
  if (!vecs_.empty() && vec.size() != vecs_.front().size())
    throw ArgumentError("candidate '" + id + "' has the wrong dimension");
  ids_.push_back(std::move(id));
  vecs_.push_back(std::move(vec));
  norms_.push_back(n);
}

std::vector<Hit> nearest(std::span<const double> query, const CandidateSet& candidates, std::size_t k) {
  if (candidates.empty() || k == 0) return {};
  if (query.size() != candidates.vector(0).size()) throw ArgumentError("query has the wrong dimension");
  double nq = norm_of(query);
  if (nq == 0.0) throw ArgumentError("query has a zero vector");
  std::vector<Hit> all;
  all.reserve(candidates.size());
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    double c = std::clamp(dot(query, candidates.vector(n)) / (nq * candidates.norm(n)), -1.0, 1.0);
    all.push_back({candidates.id(n), c});
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

double average_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant, std::size_t k) {
  if (k < 1) throw ArgumentError("average_precision: k must be >= 1");
  if (relevant.empty()) throw ArgumentError("average_precision: empty relevant set");
  double sum = 0.0;
  std::size_t found = 0;
  std::size_t limit = std::min(k, ranked.size());
  for (std::size_t r = 0; r < limit; ++r) {
    if (!relevant.count(ranked[r])) continue;
    ++found;
    sum += static_cast<double>(found) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

std::vector<Ranking> rank_queries(const std::vector<Query>& queries, std::size_t k) {
  std::vector<Ranking> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (!q.pool) throw ArgumentError("query '" + q.id + "' has no candidate pool");
    out.push_back({q.id, q.item, q.group, nearest(q.vector, *q.pool, k)});
  }
  return out;
}

MappingReport evaluate_rankings(const std::vector<Ranking>& rankings, const GroundTruth& truth,
                                const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw ArgumentError("evaluate_map: no cutoffs");
  MappingReport report;
  report.ks = ks;
  report.map_at_k.assign(ks.size(), 0.0);
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> groups;
  std::size_t correct_at_1 = 0;
  for (const auto& r : rankings) {
    auto it = truth.find(r.query_id);
    if (it == truth.end()) {
      report.skipped.push_back(r.query_id);
      continue;
    }
    std::vector<std::string> ids;
    for (const auto& h : r.hits) ids.push_back(h.id);
    std::vector<double> aps;
    for (auto k : ks) aps.push_back(average_precision(ids, it->second, k));
    for (std::size_t n = 0; n < ks.size(); ++n) report.map_at_k[n] += aps[n];
    auto& g = groups[r.group];
    g.first.resize(ks.size(), 0.0);
    for (std::size_t n = 0; n < ks.size(); ++n) g.first[n] += aps[n];
    ++g.second;
    if (!ids.empty() && it->second.count(ids.front())) ++correct_at_1;
    report.per_query.emplace_back(r.query_id, std::move(aps));
    ++report.evaluated;
  }
  if (report.evaluated > 0) {
    for (auto& m : report.map_at_k) m /= static_cast<double>(report.evaluated);
    report.precision_at_1 = static_cast<double>(correct_at_1) / static_cast<double>(report.evaluated);
  }
  for (auto& [name, g] : groups) {
    for (auto& m : g.first) m /= static_cast<double>(g.second);
    report.map_by_group[name] = g.first;
  }
  return report;
}

MappingReport evaluate_map(const std::vector<Query>& queries, const GroundTruth& truth,
                           const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw ArgumentError("evaluate_map: no cutoffs");
  return evaluate_rankings(rank_queries(queries, *std::max_element(ks.begin(), ks.end())), truth, ks);
}

double evaluate_api_precision(const std::vector<Ranking>& rankings, const GroundTruth& truth) {
  return evaluate_rankings(rankings, truth, {1}).precision_at_1;
}

double evaluate_api_precision(const std::vector<Query>& queries, const GroundTruth& truth) {
  return evaluate_api_precision(rank_queries(queries, 1), truth);
}

MappingDiff diff_reference(const std::map<std::string, std::string>& found,
                           const std::map<std::string, std::string>& reference) {
  MappingDiff diff;
  for (const auto& [query, candidate] : found) {
    auto it = reference.find(query);
    if (it == reference.end())
      diff.new_mappings.emplace_back(query, candidate);
    else if (it->second == candidate)
      diff.agreeing.emplace_back(query, candidate);
    else
      diff.conflicting.emplace_back(query, candidate, it->second);
  }
  return diff;
}

// ---- file formats ----------------------------------------------------------------

namespace {

template <typename F>
void for_each_row(std::string_view text, const std::string& source, std::size_t min_cols, F&& f) {
  auto lines = split_lines(text);
  for (std::size_t n = skip_provenance(lines); n < lines.size(); ++n) {
    if (trim(lines[n]).empty() || lines[n][0] == '#') continue;
    auto cols = split(lines[n], '\t');
    int line = static_cast<int>(n + 1);
    if (cols.size() < min_cols)
      throw ParseError(source, line, 0,
                       "expected " + std::to_string(min_cols) + " tab-separated fields, got " +
                           std::to_string(cols.size()));
    f(cols, line);
  }
}

}  // namespace

std::vector<QuerySpec> parse_queries(std::string_view text, const std::string& source) {
  std::vector<QuerySpec> out;
  std::set<std::string> seen;
  for_each_row(text, source, 3, [&](const std::vector<std::string>& cols, int line) {
    QuerySpec q;
    q.id = cols[0];
    auto side = std::string(trim(cols[1]));
    if (side == "a" || side == "a->b")
      q.side = 'a';
    else if (side == "b" || side == "b->a")
      q.side = 'b';
    else
      throw ParseError(source, line, 0, "bad side '" + side + "'");
    q.item = std::string(trim(cols[2]));
    if (!seen.insert(q.id).second) throw ParseError(source, line, 0, "duplicate query id '" + q.id + "'");
    out.push_back(std::move(q));
  });
  return out;
}

GroundTruth parse_truth(std::string_view text, const std::string& source) {
  GroundTruth out;
  for_each_row(text, source, 2, [&](const std::vector<std::string>& cols, int line) {
    std::set<std::string> rel;
    for (const auto& r : split(cols[1], ','))
      if (!trim(r).empty()) rel.emplace(trim(r));
    if (rel.empty()) throw ParseError(source, line, 0, "empty relevant set");
    if (!out.emplace(cols[0], std::move(rel)).second)
      throw ParseError(source, line, 0, "duplicate query id '" + cols[0] + "'");
  });
  return out;
}

std::map<std::string, std::string> parse_reference(std::string_view text, const std::string& source) {
  std::map<std::string, std::string> out;
  for_each_row(text, source, 2, [&](const std::vector<std::string>& cols, int line) {
    if (!out.emplace(std::string(trim(cols[0])), std::string(trim(cols[1]))).second)
      throw ParseError(source, line, 0, "duplicate reference key '" + cols[0] + "'");
  });
  return out;
}

std::string format_rankings(const std::vector<Ranking>& rankings) {
  std::string out;
  for (const auto& r : rankings) {
    std::string head = r.query_id + '\t' + r.item + '\t' + r.group + '\t';
    if (r.hits.empty()) out += head + "0\t-\t0\n";
    for (std::size_t n = 0; n < r.hits.size(); ++n)
      out += head + std::to_string(n + 1) + '\t' + r.hits[n].id + '\t' + format_real(r.hits[n].score, 9) + '\n';
  }
  return out;
}

std::vector<Ranking> parse_rankings(std::string_view text, const std::string& source) {
  std::vector<Ranking> out;
  for_each_row(text, source, 6, [&](const std::vector<std::string>& cols, int line) {
    if (out.empty() || out.back().query_id != cols[0]) out.push_back({cols[0], cols[1], cols[2], {}});
    std::size_t rank = 0;
    double score = 0.0;
    try {
      rank = std::stoul(cols[3]);
      score = parse_real(cols[5]);
    } catch (const std::exception&) {
      throw ParseError(source, line, 0, "bad rank or score");
    }
    if (rank == 0) return;
    if (rank != out.back().hits.size() + 1) throw ParseError(source, line, 0, "ranks out of order");
    out.back().hits.push_back({cols[4], score});
  });
  return out;
}

std::string format_report(const MappingReport& report, const MappingDiff* diff) {
  std::string out = "query";
  for (auto k : report.ks) out += "\tAP@" + std::to_string(k);
  out += '\n';
  for (const auto& [id, aps] : report.per_query) {
    out += id;
    for (double ap : aps) out += '\t' + format_real(ap, 9);
    out += '\n';
  }
  out += "# queries evaluated: " + std::to_string(report.evaluated) + '\n';
  out += "# queries skipped (no truth): " + std::to_string(report.skipped.size());
  for (const auto& s : report.skipped) out += ' ' + s;
  out += '\n';
  for (std::size_t n = 0; n < report.ks.size(); ++n)
    out += "# MAP@" + std::to_string(report.ks[n]) + ": " + format_real(report.map_at_k[n], 9) + '\n';
  out += "# P@1: " + format_real(report.precision_at_1, 9) + '\n';
  for (const auto& [group, maps] : report.map_by_group) {
    out += "# " + group;
    for (std::size_t n = 0; n < report.ks.size(); ++n)
      out += " MAP@" + std::to_string(report.ks[n]) + "=" + format_real(maps[n], 9);
    out += '\n';
  }
  if (diff)
    out += "# reference: new " + std::to_string(diff->new_mappings.size()) + ", agreeing " +
           std::to_string(diff->agreeing.size()) + ", conflicting " + std::to_string(diff->conflicting.size()) + '\n';
  return out;
}

std::string format_diff(const MappingDiff& diff) {
  std::string out;
  for (const auto& [q, c] : diff.new_mappings) out += "new\t" + q + '\t' + c + '\n';
  for (const auto& [q, c] : diff.agreeing) out += "agreeing\t" + q + '\t' + c + '\n';
  for (const auto& [q, c, r] : diff.conflicting) out += "conflicting\t" + q + '\t' + c + '\t' + r + '\n';
  out += "# new " + std::to_string(diff.new_mappings.size()) + ", agreeing " + std::to_string(diff.agreeing.size()) +
         ", conflicting " + std::to_string(diff.conflicting.size()) + '\n';
  return out;
}

}  // namespace codemap::retrieve
