// codemap: cross-language code mapping pipeline.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "codemap/error.hpp"
#include "codemap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace codemap;

int main(int argc, char** argv) {
  CLI::App app{"Learn shared cross-language code embeddings and mine element/API mappings."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> depth;
  app.add_option("--config", config_path, "Pipeline config (key=value)")->required();
  app.add_option("--out-dir", out_dir, "Artifact directory")->capture_default_str();
  app.add_option("--seed", seed, "Override train.seed");
  app.add_option("--threads", threads, "Worker threads (>1 gives up bit-reproducible training)");
  app.add_option("--k", depth, "Ranking depth written by map (default max of retrieve.ks)");

  using Stage = void (pipeline::Pipeline::*)();
  const std::pair<const char*, Stage> stages[] = {
      {"pair", &pipeline::Pipeline::pair},
      {"normalize", &pipeline::Pipeline::normalize},
      {"align", &pipeline::Pipeline::align},
      {"train", &pipeline::Pipeline::train},
      {"compose", &pipeline::Pipeline::compose},
      {"map", &pipeline::Pipeline::map},
      {"eval", &pipeline::Pipeline::eval},
      {"diff-ref", &pipeline::Pipeline::diff_ref},
      {"run-all", &pipeline::Pipeline::run_all},
  };
  const char* help[] = {"Pair files across the two source trees",
                        "Parse and normalize paired files into enriched token streams",
                        "Train IBM Model 1 both ways and write symmetrized alignments",
                        "Train bilingual skip-gram embeddings",
                        "Compose element embeddings",
                        "Rank cross-language neighbors for the configured queries",
                        "Score rankings against ground truth (MAP@k, P@1)",
                        "Diff top-1 mappings against a reference mapping file",
                        "Run every stage in order"};
  std::vector<CLI::App*> subs;
  for (std::size_t n = 0; n < std::size(stages); ++n) subs.push_back(app.add_subcommand(stages[n].first, help[n]));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    auto cfg = pipeline::load_config(config_path);
    if (seed) cfg.train.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (depth) cfg.depth = *depth;
    pipeline::Pipeline pipe(std::move(cfg), fs::path(out_dir), std::cerr);
    for (std::size_t n = 0; n < subs.size(); ++n)
      if (subs[n]->parsed()) (pipe.*stages[n].second)();
    return 0;
  } catch (const Error& e) {
    std::cerr << "codemap: error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "codemap: error: " << e.what() << '\n';
    return 3;
  }
}
