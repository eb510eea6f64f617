#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace codemap::corpus {

struct ProjectManifest {
  std::string name;
  std::filesystem::path lang_a_root;
  std::filesystem::path lang_b_root;
  std::string lang_a;
  std::string lang_b;

  // Throws IoError for missing roots, ArgumentError for broken invariants.
  void validate() const;
};

struct FilePair {
  std::filesystem::path path_a;
  std::filesystem::path path_b;
  std::string stem;
  double similarity = 0.0;

  friend bool operator==(const FilePair&, const FilePair&) = default;
};

// Source-file extensions registered for a language id ("java", "csharp").
const std::vector<std::string>& language_extensions(std::string_view language);
bool is_supported_language(std::string_view language);

// Lowercased file name with its extension stripped.
std::string normalize_stem(const std::filesystem::path& file);

std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - dist / max(len); byte-equal stems short-circuit to 1.
double stem_similarity(std::string_view a, std::string_view b);

// One-to-one pairing by stem similarity. Ties on similarity go to the
// smallest relative-path edit distance, then lexicographic path order.
// Output sorted by stem (then path_a).
std::vector<FilePair> pair_files(const ProjectManifest& manifest, double threshold = 1.0);

// TSV `stem\tpath_a\tpath_b\tsimilarity`, one pair per line, no header.
std::string format_pair_manifest(const std::vector<FilePair>& pairs);
std::vector<FilePair> parse_pair_manifest(std::string_view text, const std::string& source = {});

void write_pair_manifest(const std::vector<FilePair>& pairs, const std::filesystem::path& out,
                         std::string_view provenance = {});
std::vector<FilePair> read_pair_manifest(const std::filesystem::path& in);

}  // namespace codemap::corpus
