#include "codemap/align.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <tuple>
#include <thread>

#include "codemap/error.hpp"
#include "codemap/text_io.hpp"

namespace codemap::align {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kTableCutoff = 1e-6;

// Slot matrix for one pair: slots[j * (|a|+1) + i], i = 0 is NULL.
struct PairSlots {
  std::size_t ns = 0;
  std::size_t nt = 0;
  std::vector<std::uint32_t> slots;
};

std::vector<PairSlots> build_slots(const Bitext& bitext, TranslationTable& table) {
  std::vector<PairSlots> out;
  out.reserve(bitext.pairs.size());
  auto null_id = table.source_id(TranslationTable::kNull);
  for (const auto& p : bitext.pairs) {
    PairSlots ps;
    ps.ns = p.source.size() + 1;
    ps.nt = p.target.size();
    std::vector<std::uint32_t> src(ps.ns);
    src[0] = null_id;
    for (std::size_t i = 0; i < p.source.size(); ++i) src[i + 1] = table.source_id(p.source[i]);
    ps.slots.resize(ps.ns * ps.nt);
    for (std::size_t j = 0; j < ps.nt; ++j) {
      auto t = table.target_id(p.target[j]);
      for (std::size_t i = 0; i < ps.ns; ++i) ps.slots[j * ps.ns + i] = table.slot(src[i], t);
    }
    out.push_back(std::move(ps));
  }
  return out;
}

void normalize_rows(TranslationTable& table, const std::vector<double>& counts) {
  std::vector<double> totals(table.source_count(), 0.0);
  const auto& src = table.slot_sources();
  for (std::size_t k = 0; k < counts.size(); ++k) totals[src[k]] += counts[k];
  auto& probs = table.prob_values();
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (totals[src[k]] > 0.0) probs[k] = counts[k] / totals[src[k]];
}

// E-step over pairs [begin, end): accumulates expected counts and returns the
// log-likelihood of those pairs under the current table.
double expect(const std::vector<PairSlots>& slots, std::size_t begin, std::size_t end,
              const std::vector<double>& probs, std::vector<double>* counts) {
  double ll = 0.0;
  for (std::size_t p = begin; p < end; ++p) {
    const auto& ps = slots[p];
    for (std::size_t j = 0; j < ps.nt; ++j) {
      const std::uint32_t* row = ps.slots.data() + j * ps.ns;
      double denom = 0.0;
      for (std::size_t i = 0; i < ps.ns; ++i) denom += probs[row[i]];
      ll += std::log(std::max(denom / static_cast<double>(ps.ns), kProbFloor));
      if (counts && denom > 0.0)
        for (std::size_t i = 0; i < ps.ns; ++i) (*counts)[row[i]] += probs[row[i]] / denom;
    }
  }
  return ll;
}

}  // namespace

Bitext Bitext::reversed() const {
  Bitext out;
  out.pairs.reserve(pairs.size());
  for (const auto& p : pairs) out.pairs.push_back({p.id, p.target, p.source});
  return out;
}

// ---- TranslationTable ---------------------------------------------------------

std::uint32_t TranslationTable::source_id(std::string_view s) {
  auto [it, inserted] =
      source_index_.try_emplace(std::string(s), static_cast<std::uint32_t>(source_names_.size()));
  if (inserted) source_names_.emplace_back(s);
  return it->second;
}

std::uint32_t TranslationTable::target_id(std::string_view t) {
  auto [it, inserted] =
      target_index_.try_emplace(std::string(t), static_cast<std::uint32_t>(target_names_.size()));
  if (inserted) target_names_.emplace_back(t);
  return it->second;
}

std::int64_t TranslationTable::find_source(std::string_view s) const {
  auto it = source_index_.find(std::string(s));
  return it == source_index_.end() ? std::int64_t{-1} : std::int64_t{it->second};
}

std::int64_t TranslationTable::find_target(std::string_view t) const {
  auto it = target_index_.find(std::string(t));
  return it == target_index_.end() ? std::int64_t{-1} : std::int64_t{it->second};
}

std::uint32_t TranslationTable::slot(std::uint32_t s, std::uint32_t t) {
  auto [it, inserted] = slots_.try_emplace(key(s, t), static_cast<std::uint32_t>(probs_.size()));
  if (inserted) {
    probs_.push_back(0.0);
    slot_source_.push_back(s);
    slot_target_.push_back(t);
  }
  return it->second;
}

std::int64_t TranslationTable::find_slot(std::uint32_t s, std::uint32_t t) const {
  auto it = slots_.find(key(s, t));
  return it == slots_.end() ? std::int64_t{-1} : std::int64_t{it->second};
}

double TranslationTable::prob(std::string_view target, std::string_view source) const {
  auto s = find_source(source);
  auto t = find_target(target);
  if (s < 0 || t < 0) return 0.0;
  auto k = find_slot(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t));
  return k < 0 ? 0.0 : probs_[static_cast<std::size_t>(k)];
}

double TranslationTable::row_sum(std::string_view source) const {
  auto s = find_source(source);
  if (s < 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k)
    if (slot_source_[k] == static_cast<std::uint32_t>(s)) sum += probs_[k];
  return sum;
}

std::vector<std::string> TranslationTable::sources() const { return source_names_; }

std::vector<TranslationTable::Entry> TranslationTable::entries() const {
  std::vector<Entry> out;
  out.reserve(probs_.size());
  for (std::size_t k = 0; k < probs_.size(); ++k)
    out.push_back({source_names_[slot_source_[k]], target_names_[slot_target_[k]], probs_[k]});
  std::sort(out.begin(), out.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.source, x.target) < std::tie(y.source, y.target);
  });
  return out;
}

TranslationTable TranslationTable::from_entries(const std::vector<Entry>& entries) {
  TranslationTable table;
  table.source_id(kNull);
  for (const auto& e : entries) {
    auto k = table.slot(table.source_id(e.source), table.target_id(e.target));
    table.probs_[k] = e.prob;
  }
  return table;
}

// ---- training -------------------------------------------------------------------

TranslationTable initial_table(const Bitext& bitext) {
  TranslationTable table;
  build_slots(bitext, table);
  std::vector<double> ones(table.size(), 1.0);
  normalize_rows(table, ones);
  return table;
}

TranslationTable train_model1(const Bitext& bitext, int iterations, const Model1Options& options) {
  if (bitext.pairs.empty()) throw ArgumentError("train_model1: empty bitext");
  if (iterations < 1) throw ArgumentError("train_model1: iterations must be >= 1");

  TranslationTable table;
  auto slots = build_slots(bitext, table);
  {
    std::vector<double> ones(table.size(), 1.0);
    normalize_rows(table, ones);
  }
  if (options.log_likelihood) options.log_likelihood->clear();

  const std::size_t n = bitext.pairs.size();
  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));

  for (int round = 0; round < iterations; ++round) {
    std::vector<double> counts(table.size(), 0.0);
    double ll = 0.0;
    if (workers == 1) {
      ll = expect(slots, 0, n, table.prob_values(), &counts);
    } else {
      std::vector<std::vector<double>> partial(workers, std::vector<double>(table.size(), 0.0));
      std::vector<double> partial_ll(workers, 0.0);
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        std::size_t b = n * w / workers, e = n * (w + 1) / workers;
        pool.emplace_back([&, w, b, e] {
          partial_ll[w] = expect(slots, b, e, table.prob_values(), &partial[w]);
        });
      }
      for (auto& t : pool) t.join();
      for (unsigned w = 0; w < workers; ++w) {
        ll += partial_ll[w];
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += partial[w][k];
      }
    }
    if (options.log_likelihood) options.log_likelihood->push_back(ll);
    normalize_rows(table, counts);
  }
  if (options.log_likelihood)
    options.log_likelihood->push_back(expect(slots, 0, n, table.prob_values(), nullptr));
  return table;
}

double corpus_log_likelihood(const Bitext& bitext, const TranslationTable& table) {
  double ll = 0.0;
  for (const auto& p : bitext.pairs) {
    double ns = static_cast<double>(p.source.size() + 1);
    for (const auto& t : p.target) {
      double denom = table.prob(t, TranslationTable::kNull);
      for (const auto& s : p.source) denom += table.prob(t, s);
      ll += std::log(std::max(denom / ns, kProbFloor));
    }
  }
  return ll;
}

// ---- alignment --------------------------------------------------------------------

AlignmentLinkSet viterbi_align(const TranslationTable& table, const BitextPair& pair) {
  AlignmentLinkSet out;
  out.pair_id = pair.id;
  for (std::size_t j = 0; j < pair.target.size(); ++j) {
    double best = table.prob(pair.target[j], TranslationTable::kNull);
    std::int64_t best_i = -1;
    for (std::size_t i = 0; i < pair.source.size(); ++i) {
      double p = table.prob(pair.target[j], pair.source[i]);
      if (p > best) {
        best = p;
        best_i = static_cast<std::int64_t>(i);
      }
    }
    if (best_i >= 0)
      out.links.emplace_back(static_cast<std::uint32_t>(best_i), static_cast<std::uint32_t>(j));
  }
  std::sort(out.links.begin(), out.links.end());
  return out;
}

Symmetrization parse_symmetrization(std::string_view name) {
  if (name == "intersection") return Symmetrization::intersection;
  if (name == "union") return Symmetrization::union_;
  throw ArgumentError("unknown symmetrization: " + std::string(name));
}

std::string_view symmetrization_name(Symmetrization mode) {
  return mode == Symmetrization::intersection ? "intersection" : "union";
}

AlignmentLinkSet symmetrize(const AlignmentLinkSet& forward, const AlignmentLinkSet& backward,
                            Symmetrization mode) {
  if (forward.pair_id != backward.pair_id)
    throw ArgumentError("symmetrize: pair ids differ ('" + forward.pair_id + "' vs '" +
                        backward.pair_id + "')");
  auto fwd = forward.links;
  std::sort(fwd.begin(), fwd.end());
  fwd.erase(std::unique(fwd.begin(), fwd.end()), fwd.end());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bwd;
  for (auto [j, i] : backward.links) bwd.emplace_back(i, j);
  std::sort(bwd.begin(), bwd.end());
  bwd.erase(std::unique(bwd.begin(), bwd.end()), bwd.end());

  AlignmentLinkSet out;
  out.pair_id = forward.pair_id;
  if (mode == Symmetrization::intersection)
    std::set_intersection(fwd.begin(), fwd.end(), bwd.begin(), bwd.end(), std::back_inserter(out.links));
  else
    std::set_union(fwd.begin(), fwd.end(), bwd.begin(), bwd.end(), std::back_inserter(out.links));
  return out;
}

std::vector<Chunk> chunk_pair(const BitextPair& pair, std::span<const std::size_t> source_starts,
                              std::span<const std::size_t> target_starts, std::size_t max_len) {
  if (pair.source.size() <= max_len && pair.target.size() <= max_len) return {{pair, 0, 0}};

  auto bounds = [](std::span<const std::size_t> starts, std::size_t n) {
    std::vector<std::size_t> b{0};
    for (auto s : starts)
      if (s > 0 && s < n) b.push_back(s);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    b.push_back(n);
    return b;
  };
  auto sb = bounds(source_starts, pair.source.size());
  auto tb = bounds(target_starts, pair.target.size());
  std::size_t segments = std::min(sb.size(), tb.size()) - 1;

  std::vector<Chunk> out;
  for (std::size_t k = 0; k < segments; ++k) {
    bool last = k + 1 == segments;
    std::size_t s0 = sb[k], s1 = last ? sb.back() : sb[k + 1];
    std::size_t t0 = tb[k], t1 = last ? tb.back() : tb[k + 1];
    Chunk c;
    c.pair.id = pair.id + "#" + std::to_string(k);
    c.pair.source.assign(pair.source.begin() + static_cast<std::ptrdiff_t>(s0),
                         pair.source.begin() + static_cast<std::ptrdiff_t>(s1));
    c.pair.target.assign(pair.target.begin() + static_cast<std::ptrdiff_t>(t0),
                         pair.target.begin() + static_cast<std::ptrdiff_t>(t1));
    c.source_offset = s0;
    c.target_offset = t0;
    out.push_back(std::move(c));
  }
  return out;
}

// ---- file formats -----------------------------------------------------------------

std::string format_pharaoh(const std::vector<AlignmentLinkSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    out += s.pair_id + '\t';
    for (std::size_t k = 0; k < s.links.size(); ++k) {
      if (k) out += ' ';
      out += std::to_string(s.links[k].first) + '-' + std::to_string(s.links[k].second);
    }
    out += '\n';
  }
  return out;
}

std::vector<AlignmentLinkSet> parse_pharaoh(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::vector<AlignmentLinkSet> out;
  for (std::size_t n = skip_provenance(lines); n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    int line = static_cast<int>(n + 1);
    auto tab = lines[n].find('\t');
    if (tab == std::string::npos) throw ParseError(source, line, 0, "expected 'pair-id<TAB>links'");
    AlignmentLinkSet s;
    s.pair_id = lines[n].substr(0, tab);
    for (const auto& link : split_ws(std::string_view(lines[n]).substr(tab + 1))) {
      auto dash = link.find('-');
      try {
        if (dash == std::string::npos) throw std::invalid_argument(link);
        std::size_t used = 0;
        auto i = std::stoul(link.substr(0, dash), &used);
        if (used != dash) throw std::invalid_argument(link);
        auto j = std::stoul(link.substr(dash + 1), &used);
        if (used != link.size() - dash - 1) throw std::invalid_argument(link);
        s.links.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      } catch (const std::exception&) {
        throw ParseError(source, line, 0, "bad link '" + link + "'");
      }
    }
    std::sort(s.links.begin(), s.links.end());
    s.links.erase(std::unique(s.links.begin(), s.links.end()), s.links.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_table(const TranslationTable& table) {
  std::string out;
  for (const auto& e : table.entries())
    if (e.prob >= kTableCutoff) out += e.source + '\t' + e.target + '\t' + format_real(e.prob, 9) + '\n';
  return out;
}

TranslationTable parse_table(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::vector<TranslationTable::Entry> entries;
  for (std::size_t n = skip_provenance(lines); n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    auto cols = split(lines[n], '\t');
    if (cols.size() != 3)
      throw ParseError(source, static_cast<int>(n + 1), 0, "expected 3 tab-separated fields");
    try {
      entries.push_back({cols[0], cols[1], parse_real(cols[2])});
    } catch (const std::exception&) {
      throw ParseError(source, static_cast<int>(n + 1), 0, "bad probability '" + cols[2] + "'");
    }
  }
  return TranslationTable::from_entries(entries);
}

}  // namespace codemap::align
