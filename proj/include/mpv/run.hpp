#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/embedding.hpp"
#include "mpv/gateway.hpp"
#include "mpv/pipeline.hpp"

namespace mpv {

struct Thresholds {
  double match = 0.80;
  std::vector<double> sensitivity{0.70, 0.90};

  /// match plus sensitivity values, sorted ascending without duplicates.
  std::vector<double> sweep() const;
};

/// The single JSON configuration document. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path gold_dir;
  std::filesystem::path output_dir = "runs";
  std::vector<EndpointConfig> endpoints;
  DecodingParams decoding;
  EmbeddingProviderConfig embedding;
  PipelineConfig pipeline;
  int tcs_runs = 5;
  Thresholds thresholds;
  std::optional<std::filesystem::path> mock_script;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> ui_dir;

  /// Throws ConfigError for malformed documents or invalid values.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  /// Throws ConfigError when the corpus directory (and, with `need_gold`, the
  /// gold directory) does not exist.
  void check_paths(bool need_gold) const;
};

struct RunOptions {
  std::optional<std::string> run_id;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> mock_script;
};

struct RunOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  /// 0 on success, 3 when no endpoint request succeeded.
  int exit_code = 0;
  nlohmann::json manifest;
};

/// Default run id: "run-" followed by 12 hex digits of the SHA-256 of the
/// resolved config and the mock script, if any.
std::string default_run_id(const RunConfig& config);

/// Runs every transcript x endpoint x {before, after}, plus the repeated
/// analyses for consistency, and writes
///   <out>/<run_id>/{manifest.json, config.json, embeddings.jsonl}
///   <out>/<run_id>/<model>/<before|after>/<transcript>/...
RunOutcome cmd_run(const RunConfig& config, const RunOptions& options = {});

/// Embedder configured from `config`, primed with the run's cache file.
std::shared_ptr<Embedder> make_embedder(const EmbeddingProviderConfig& config);

}  // namespace mpv
