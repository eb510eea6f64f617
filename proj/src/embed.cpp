#include "codemap/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "codemap/error.hpp"
#include "codemap/text_io.hpp"

namespace codemap::embed {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

// Encoded pair ready for training: in-vocabulary ids (-1 for OOV) and link partners.
struct PreparedPair {
  std::vector<std::int64_t> ids[2];
  std::vector<std::vector<std::uint32_t>> partners[2];
};

class Trainer {
 public:
  Trainer(EmbeddingTable& table, const Vocabulary& vocab, const TrainConfig& cfg,
          std::atomic<std::int64_t>& processed, std::int64_t total_work)
      : table_(table), vocab_(vocab), cfg_(cfg), processed_(processed), total_work_(total_work),
        neu1e_(table.dim()) {}

  void run(const std::vector<PreparedPair>& pairs, std::size_t begin, std::size_t end, std::mt19937_64& rng) {
    std::vector<char> keep[2];
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      for (std::size_t p = begin; p < end; ++p) {
        const auto& pair = pairs[p];
        for (int side = 0; side < 2; ++side) {
          keep[side].assign(pair.ids[side].size(), 0);
          for (std::size_t i = 0; i < pair.ids[side].size(); ++i) {
            auto id = pair.ids[side][i];
            if (id < 0) continue;
            keep[side][i] = cfg_.subsample <= 0.0 ||
                            uniform01(rng) < vocab_.keep_probability(static_cast<std::uint32_t>(id), cfg_.subsample);
          }
        }
        for (int side = 0; side < 2; ++side) train_side(pair, side, keep, rng);
      }
    }
  }

 private:
  void train_side(const PreparedPair& pair, int side, const std::vector<char> (&keep)[2], std::mt19937_64& rng) {
    const int other = 1 - side;
    const auto& ids = pair.ids[side];
    const auto& other_ids = pair.ids[other];
    const auto w = static_cast<std::ptrdiff_t>(cfg_.window);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0) continue;
      std::int64_t done = processed_.fetch_add(1, std::memory_order_relaxed);
      if (!keep[side][i]) continue;
      double lr = cfg_.lr0 * std::max(1e-4, 1.0 - static_cast<double>(done) / static_cast<double>(total_work_));
      auto center = static_cast<std::uint32_t>(ids[i]);
      auto ii = static_cast<std::ptrdiff_t>(i);
      for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, ii - w);
           k <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(ids.size()) - 1, ii + w); ++k) {
        if (k == ii || !keep[side][static_cast<std::size_t>(k)]) continue;
        update(center, static_cast<std::uint32_t>(ids[static_cast<std::size_t>(k)]), lr, rng);
      }
      if (cfg_.cross_weight <= 0.0) continue;
      for (auto j : pair.partners[side][i]) {
        auto jj = static_cast<std::ptrdiff_t>(j);
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, jj - w);
             k <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(other_ids.size()) - 1, jj + w); ++k) {
          if (!keep[other][static_cast<std::size_t>(k)]) continue;
          update(center, static_cast<std::uint32_t>(other_ids[static_cast<std::size_t>(k)]),
                 lr * cfg_.cross_weight, rng);
        }
      }
    }
  }

  void update(std::uint32_t center, std::uint32_t context, double lr, std::mt19937_64& rng) {
    auto v = table_.input(center);
    std::fill(neu1e_.begin(), neu1e_.end(), 0.0);
    auto step = [&](std::uint32_t target, double label) {
      auto u = table_.output(target);
      double g = (label - sigmoid(dot(u, v))) * lr;
      for (std::size_t k = 0; k < v.size(); ++k) neu1e_[k] += g * u[k];
      for (std::size_t k = 0; k < v.size(); ++k) u[k] += g * v[k];
    };
    step(context, 1.0);
    for (int n = 0; n < cfg_.negatives; ++n) {
      auto neg = vocab_.sample_noise(rng);
      if (neg == context) continue;
      step(neg, 0.0);
    }
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += neu1e_[k];
  }

  EmbeddingTable& table_;
  const Vocabulary& vocab_;
  const TrainConfig& cfg_;
  std::atomic<std::int64_t>& processed_;
  std::int64_t total_work_;
  std::vector<double> neu1e_;
};

}  // namespace

std::string tag_a(std::string_view token) { return std::string(kSideA) + std::string(token); }
std::string tag_b(std::string_view token) { return std::string(kSideB) + std::string(token); }

// ---- Vocabulary ----------------------------------------------------------------

Vocabulary Vocabulary::from_counts(std::vector<std::pair<std::string, std::int64_t>> counts) {
  std::sort(counts.begin(), counts.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  return from_ordered(std::move(counts));
}

Vocabulary Vocabulary::from_ordered(std::vector<std::pair<std::string, std::int64_t>> counts) {
  Vocabulary v;
  for (auto& [token, count] : counts) {
    if (count < 0) throw ArgumentError("negative count for '" + token + "'");
    auto id = static_cast<std::uint32_t>(v.tokens_.size());
    if (!v.index_.emplace(token, id).second) throw ArgumentError("duplicate vocabulary token '" + token + "'");
    v.tokens_.push_back(std::move(token));
    v.counts_.push_back(count);
    v.total_ += count;
  }
  double z = 0.0;
  v.noise_.resize(v.counts_.size());
  for (std::size_t k = 0; k < v.counts_.size(); ++k) {
    v.noise_[k] = std::pow(static_cast<double>(v.counts_[k]), 0.75);
    z += v.noise_[k];
  }
  v.noise_cdf_.resize(v.noise_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < v.noise_.size(); ++k) {
    v.noise_[k] = z > 0.0 ? v.noise_[k] / z : 1.0 / static_cast<double>(v.noise_.size());
    acc += v.noise_[k];
    v.noise_cdf_[k] = acc;
  }
  return v;
}

std::int64_t Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? std::int64_t{-1} : std::int64_t{it->second};
}

std::uint32_t Vocabulary::sample_noise(std::mt19937_64& rng) const {
  double u = uniform01(rng) * noise_cdf_.back();
  auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
  auto id = static_cast<std::size_t>(it - noise_cdf_.begin());
  return static_cast<std::uint32_t>(std::min(id, noise_cdf_.size() - 1));
}

double Vocabulary::keep_probability(std::uint32_t id, double subsample) const {
  if (subsample <= 0.0 || total_ <= 0 || counts_[id] <= 0) return 1.0;
  double f = static_cast<double>(counts_[id]) / static_cast<double>(total_);
  return std::min(1.0, (std::sqrt(f / subsample) + 1.0) * subsample / f);
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& side_a,
                       const std::vector<std::vector<std::string>>& side_b, std::int64_t min_count) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& doc : side_a)
    for (const auto& t : doc) ++counts[tag_a(t)];
  for (const auto& doc : side_b)
    for (const auto& t : doc) ++counts[tag_b(t)];
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (auto& [token, count] : counts)
    if (count >= min_count) kept.emplace_back(token, count);
  if (kept.empty()) throw ArgumentError("empty vocabulary (min_count " + std::to_string(min_count) + ")");
  return Vocabulary::from_counts(std::move(kept));
}

Vocabulary build_vocab(const align::Bitext& bitext, std::int64_t min_count) {
  std::vector<std::vector<std::string>> a, b;
  for (const auto& p : bitext.pairs) {
    a.push_back(p.source);
    b.push_back(p.target);
  }
  return build_vocab(a, b, min_count);
}

// ---- EmbeddingTable ----------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), in_(rows * dim, 0.0), out_(rows * dim, 0.0) {}

void EmbeddingTable::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double half = 0.5 / static_cast<double>(dim_);
  for (auto& x : in_) x = (uniform01(rng) * 2.0 - 1.0) * half;
  std::fill(out_.begin(), out_.end(), 0.0);
}

bool EmbeddingTable::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(in_.begin(), in_.end(), finite) && std::all_of(out_.begin(), out_.end(), finite);
}

void TrainConfig::validate() const {
  if (dim < 1) throw ArgumentError("train.dim must be >= 1");
  if (window < 1) throw ArgumentError("train.window must be >= 1");
  if (negatives < 1) throw ArgumentError("train.negatives must be >= 1");
  if (epochs < 0) throw ArgumentError("train.epochs must be >= 0");
  if (!(lr0 > 0.0)) throw ArgumentError("train.lr0 must be > 0");
  if (min_count < 1) throw ArgumentError("train.min_count must be >= 1");
  if (subsample < 0.0) throw ArgumentError("train.subsample must be >= 0");
  if (cross_weight < 0.0) throw ArgumentError("train.cross_weight must be >= 0");
}

// ---- objective -------------------------------------------------------------------

double sigmoid(double x) {
  x = std::clamp(x, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-x));
}

double sgns_pair_loss(std::uint32_t center, std::uint32_t context, std::span<const std::uint32_t> negatives,
                      const EmbeddingTable& table) {
  auto v = table.input(center);
  double loss = -std::log(sigmoid(dot(table.output(context), v)));
  for (auto n : negatives) loss -= std::log(sigmoid(-dot(table.output(n), v)));
  return loss;
}

SgnsGradient sgns_pair_gradient(std::uint32_t center, std::uint32_t context,
                                std::span<const std::uint32_t> negatives, const EmbeddingTable& table) {
  const std::size_t d = table.dim();
  auto v = table.input(center);
  SgnsGradient g;
  g.center.assign(d, 0.0);
  std::map<std::uint32_t, std::vector<double>> outs;
  auto add = [&](std::uint32_t id, double coeff) {
    auto u = table.output(id);
    auto& go = outs.try_emplace(id, d, 0.0).first->second;
    for (std::size_t k = 0; k < d; ++k) {
      g.center[k] += coeff * u[k];
      go[k] += coeff * v[k];
    }
  };
  add(context, sigmoid(dot(table.output(context), v)) - 1.0);
  for (auto n : negatives) add(n, sigmoid(dot(table.output(n), v)));
  for (auto& [id, grad] : outs) g.outputs.emplace_back(id, std::move(grad));
  return g;
}

// ---- training ----------------------------------------------------------------------

EmbeddingTable train_biskip(const align::Bitext& bitext, const std::vector<align::AlignmentLinkSet>& links,
                            const Vocabulary& vocab, const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  EmbeddingTable table(vocab.size(), static_cast<std::size_t>(cfg.dim));
  table.initialize(cfg.seed);
  if (vocab.empty() || bitext.pairs.empty()) return table;

  std::unordered_map<std::string, const align::AlignmentLinkSet*> by_id;
  for (const auto& l : links) by_id[l.pair_id] = &l;
  if (links.empty() && cfg.cross_weight > 0.0 && options.warn)
    options.warn("no alignment links; training monolingually");

  std::vector<PreparedPair> pairs(bitext.pairs.size());
  std::int64_t per_epoch = 0;
  std::size_t matched = 0;
  for (std::size_t p = 0; p < bitext.pairs.size(); ++p) {
    const auto& src = bitext.pairs[p];
    auto& out = pairs[p];
    for (const auto& t : src.source) out.ids[0].push_back(vocab.find(tag_a(t)));
    for (const auto& t : src.target) out.ids[1].push_back(vocab.find(tag_b(t)));
    for (int side = 0; side < 2; ++side) {
      out.partners[side].resize(out.ids[side].size());
      per_epoch += std::count_if(out.ids[side].begin(), out.ids[side].end(), [](auto id) { return id >= 0; });
    }
    auto it = by_id.find(src.id);
    if (it == by_id.end()) continue;
    ++matched;
    for (auto [i, j] : it->second->links) {
      if (i >= src.source.size() || j >= src.target.size())
        throw ArgumentError("link " + std::to_string(i) + "-" + std::to_string(j) + " out of range for pair '" +
                            src.id + "'");
      out.partners[0][i].push_back(j);
      out.partners[1][j].push_back(i);
    }
  }
  if (matched != by_id.size()) throw ArgumentError("alignment links refer to pairs missing from the bitext");

  std::int64_t total_work = std::max<std::int64_t>(1, per_epoch * cfg.epochs);
  std::atomic<std::int64_t> processed{0};
  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(pairs.size())));
  if (workers == 1) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Trainer(table, vocab, cfg, processed, total_work).run(pairs, 0, pairs.size(), rng);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        std::mt19937_64 rng((cfg.seed ^ 0x9e3779b97f4a7c15ULL) + w);
        Trainer(table, vocab, cfg, processed, total_work)
            .run(pairs, pairs.size() * w / workers, pairs.size() * (w + 1) / workers, rng);
      });
    }
    for (auto& t : pool) t.join();
  }
  if (!table.all_finite()) throw ArgumentError("training produced non-finite vectors");
  return table;
}

// ---- file format ---------------------------------------------------------------------

std::string format_embeddings(const EmbeddingTable& table, const Vocabulary& vocab) {
  if (table.size() != vocab.size()) throw ArgumentError("embedding table and vocabulary sizes differ");
  std::string out = std::to_string(table.size()) + ' ' + std::to_string(table.dim()) + '\n';
  for (std::uint32_t id = 0; id < table.size(); ++id) {
    out += vocab.token(id);
    for (double x : table.input(id)) {
      out += ' ';
      out += format_real(x, 9);
    }
    out += '\n';
  }
  return out;
}

LoadedEmbeddings parse_embeddings(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::size_t n = skip_provenance(lines);
  if (n >= lines.size()) throw ParseError(source, static_cast<int>(n + 1), 0, "missing header '<|V|> <d>'");
  auto header = split_ws(lines[n]);
  std::size_t rows = 0, dim = 0;
  try {
    if (header.size() != 2) throw std::invalid_argument("header");
    std::size_t used = 0;
    rows = std::stoul(header[0], &used);
    if (used != header[0].size()) throw std::invalid_argument("rows");
    dim = std::stoul(header[1], &used);
    if (used != header[1].size() || dim == 0) throw std::invalid_argument("dim");
  } catch (const std::exception&) {
    throw ParseError(source, static_cast<int>(n + 1), 0, "bad header, expected '<|V|> <d>'");
  }
  std::vector<std::pair<std::string, std::int64_t>> tokens;
  std::vector<std::vector<double>> vecs;
  for (++n; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    int line = static_cast<int>(n + 1);
    auto cols = split_ws(lines[n]);
    if (cols.size() != dim + 1)
      throw ParseError(source, line, 0,
                       "expected token and " + std::to_string(dim) + " values, got " + std::to_string(cols.size()) +
                           " fields");
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      try {
        v[k] = parse_real(cols[k + 1]);
      } catch (const std::exception&) {
        throw ParseError(source, line, 0, "bad value '" + cols[k + 1] + "'");
      }
    }
    tokens.emplace_back(cols[0], 1);
    vecs.push_back(std::move(v));
  }
  if (tokens.size() != rows)
    throw ParseError(source, static_cast<int>(lines.size()), 0,
                     "header declares " + std::to_string(rows) + " rows, found " + std::to_string(tokens.size()));
  LoadedEmbeddings out;
  try {
    out.vocab = Vocabulary::from_ordered(std::move(tokens));
  } catch (const ArgumentError& e) {
    throw ParseError(source, 0, 0, e.what());
  }
  out.table = EmbeddingTable(rows, dim);
  for (std::uint32_t id = 0; id < rows; ++id) std::copy(vecs[id].begin(), vecs[id].end(), out.table.input(id).begin());
  return out;
}

}  // namespace codemap::embed
