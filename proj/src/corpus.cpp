#include "codemap/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <tuple>

#include "codemap/error.hpp"
#include "codemap/text_io.hpp"

namespace codemap::corpus {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct SourceFile {
  fs::path path;
  std::string rel;   // relative path, lowercased, extension stripped
  std::string stem;
};

std::vector<SourceFile> collect(const fs::path& root, std::string_view language) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("unreadable root: " + root.string());
  const auto& exts = language_extensions(language);
  std::vector<SourceFile> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError("unreadable root: " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IoError("error walking " + root.string() + ": " + ec.message());
    if (!it->is_regular_file(ec)) continue;
    auto ext = lower(it->path().extension().string());
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    SourceFile f;
    f.path = it->path();
    auto rel = fs::relative(it->path(), root, ec);
    rel.replace_extension();
    f.rel = lower(rel.generic_string());
    f.stem = normalize_stem(it->path());
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(),
            [](const SourceFile& x, const SourceFile& y) { return x.path < y.path; });
  return files;
}

}  // namespace

const std::vector<std::string>& language_extensions(std::string_view language) {
  static const std::vector<std::string> java{".java"};
  static const std::vector<std::string> csharp{".cs"};
  if (language == "java") return java;
  if (language == "csharp") return csharp;
  throw ArgumentError("unsupported language id: " + std::string(language));
}

bool is_supported_language(std::string_view language) {
  return language == "java" || language == "csharp";
}

void ProjectManifest::validate() const {
  if (!is_supported_language(lang_a)) throw ArgumentError("unsupported lang_a: " + lang_a);
  if (!is_supported_language(lang_b)) throw ArgumentError("unsupported lang_b: " + lang_b);
  if (lang_a == lang_b) throw ArgumentError("language ids must differ");
  std::error_code ec;
  if (!fs::is_directory(lang_a_root, ec)) throw IoError("unreadable root: " + lang_a_root.string());
  if (!fs::is_directory(lang_b_root, ec)) throw IoError("unreadable root: " + lang_b_root.string());
  if (fs::equivalent(lang_a_root, lang_b_root, ec))
    throw ArgumentError("lang_a_root and lang_b_root must be distinct");
}

std::string normalize_stem(const fs::path& file) {
  return lower(file.stem().string());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double stem_similarity(std::string_view a, std::string_view b) {
  if (a == b) return 1.0;
  auto longest = std::max(a.size(), b.size());
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::vector<FilePair> pair_files(const ProjectManifest& manifest, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ArgumentError("pairing threshold must be in (0,1]");
  auto files_a = collect(manifest.lang_a_root, manifest.lang_a);
  auto files_b = collect(manifest.lang_b_root, manifest.lang_b);

  struct Candidate {
    double sim;
    std::size_t path_dist;
    std::size_t a, b;
  };
  std::vector<Candidate> cands;
  if (threshold >= 1.0) {
    std::multimap<std::string, std::size_t> by_stem;
    for (std::size_t j = 0; j < files_b.size(); ++j) by_stem.emplace(files_b[j].stem, j);
    for (std::size_t i = 0; i < files_a.size(); ++i) {
      auto [lo, hi] = by_stem.equal_range(files_a[i].stem);
      for (auto it = lo; it != hi; ++it)
        cands.push_back({1.0, levenshtein(files_a[i].rel, files_b[it->second].rel), i, it->second});
    }
  } else {
    for (std::size_t i = 0; i < files_a.size(); ++i)
      for (std::size_t j = 0; j < files_b.size(); ++j) {
        double sim = stem_similarity(files_a[i].stem, files_b[j].stem);
        if (sim >= threshold)
          cands.push_back({sim, levenshtein(files_a[i].rel, files_b[j].rel), i, j});
      }
  }
  std::sort(cands.begin(), cands.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.path_dist != y.path_dist) return x.path_dist < y.path_dist;
    return std::tie(files_a[x.a].path, files_b[x.b].path) <
           std::tie(files_a[y.a].path, files_b[y.b].path);
  });

  std::vector<bool> used_a(files_a.size()), used_b(files_b.size());
  std::vector<FilePair> pairs;
  for (const auto& c : cands) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    pairs.push_back({files_a[c.a].path, files_b[c.b].path, files_a[c.a].stem, c.sim});
  }
  std::sort(pairs.begin(), pairs.end(), [](const FilePair& x, const FilePair& y) {
    return std::tie(x.stem, x.path_a) < std::tie(y.stem, y.path_a);
  });
  return pairs;
}

std::string format_pair_manifest(const std::vector<FilePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.stem + '\t' + p.path_a.generic_string() + '\t' + p.path_b.generic_string() + '\t' +
           format_real(p.similarity, 17) + '\n';
  }
  return out;
}

std::vector<FilePair> parse_pair_manifest(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::vector<FilePair> pairs;
  for (std::size_t i = skip_provenance(lines); i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split(lines[i], '\t');
    if (cols.size() != 4)
      throw ParseError(source, static_cast<int>(i + 1), 0, "expected 4 tab-separated fields");
    FilePair p{cols[1], cols[2], cols[0], 0.0};
    try {
      p.similarity = parse_real(cols[3]);
    } catch (const std::exception&) {
      throw ParseError(source, static_cast<int>(i + 1), 0, "bad similarity '" + cols[3] + "'");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_pair_manifest(const std::vector<FilePair>& pairs, const fs::path& out,
                         std::string_view provenance) {
  write_file(out, provenance_block(provenance) + format_pair_manifest(pairs));
}

std::vector<FilePair> read_pair_manifest(const fs::path& in) {
  return parse_pair_manifest(read_file(in), in.string());
}

}  // namespace codemap::corpus
