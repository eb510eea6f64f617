#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "codemap/align.hpp"
#include "codemap/corpus.hpp"
#include "codemap/embed.hpp"
#include "codemap/hier.hpp"

namespace codemap::pipeline {

inline constexpr std::string_view kToolVersion = "codemap 0.1.0";

struct PipelineConfig {
  corpus::ProjectManifest manifest;
  double pairing_threshold = 1.0;
  int align_iterations = 10;
  align::Symmetrization symmetrization = align::Symmetrization::intersection;
  std::size_t max_len = 2000;
  embed::TrainConfig train;
  hier::Weighting weighting = hier::Weighting::uniform;
  std::vector<std::size_t> ks{1, 5, 10};
  // Optional retrieval inputs; empty when not configured.
  std::filesystem::path queries;
  std::filesystem::path truth;
  std::filesystem::path reference;
  // Not part of the config hash: execution knobs.
  unsigned threads = 1;
  std::size_t depth = 0;  // ranking depth written by `map`; 0 means max(ks)

  // Throws ArgumentError for invalid values.
  void validate() const;
  // One `key=value` per line, sorted; the basis of the config hash.
  std::string canonical() const;
  // FNV-1a 64 of canonical(), hex.
  std::string hash() const;
  std::size_t ranking_depth() const;
};

// Sets one dotted key. Throws ArgumentError for unknown keys or bad values.
// Relative paths resolve against `base_dir`.
void set_key(PipelineConfig& cfg, std::string_view key, std::string_view value,
             const std::filesystem::path& base_dir = {});

// `key=value` lines; `#` starts a comment line. Errors carry the line number.
PipelineConfig parse_config(std::string_view text, const std::string& source = {},
                            const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// Artifact locations under the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path pairs() const { return root / "pairs.tsv"; }
  std::filesystem::path stream_index() const { return root / "streams" / "index.tsv"; }
  std::filesystem::path stream(char side, const std::string& rel) const;
  std::filesystem::path elements(char side, const std::string& rel) const;
  std::filesystem::path table(bool forward) const;
  std::filesystem::path alignments() const { return root / "alignments.pharaoh"; }
  std::filesystem::path embeddings() const { return root / "embeddings.txt"; }
  std::filesystem::path element_embeddings() const { return root / "element_embeddings.txt"; }
  std::filesystem::path skipped_elements() const { return root / "element_skipped.txt"; }
  std::filesystem::path rankings() const { return root / "mappings.tsv"; }
  std::filesystem::path report() const { return root / "report.tsv"; }
  std::filesystem::path diff() const { return root / "reference_diff.tsv"; }
};

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::filesystem::path out_dir, std::ostream& log);

  void pair();
  void normalize();
  void align();
  void train();
  void compose();
  void map();
  void eval();
  void diff_ref();
  // All stages in order; `diff-ref` only when a reference is configured.
  void run_all();

  const Layout& layout() const { return layout_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  std::string provenance() const;
  void write(const std::filesystem::path& path, std::string_view body) const;
  std::string read_artifact(const std::filesystem::path& path, std::string_view stage) const;
  align::Bitext load_bitext() const;

  PipelineConfig cfg_;
  Layout layout_;
  std::ostream& log_;
};

}  // namespace codemap::pipeline
