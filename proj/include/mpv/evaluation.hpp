#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"
#include "mpv/embedding.hpp"
#include "mpv/matching.hpp"
#include "mpv/pipeline.hpp"

namespace mpv {

inline constexpr const char* kMetricNames[] = {"f1", "sds", "hr", "tcs", "freq_r", "kor", "khr", "ari"};

/// What one phase of one transcript produced, as seen by the evaluator.
struct ModelOutput {
  ThemeSet themes;
  FrequencyReport frequencies;
  /// Outputs of the repeated runs (excluding `themes` itself).
  std::vector<ThemeSet> repeats;
  std::size_t failed_segments = 0;
  std::set<std::string> flags;
};

/// The eight metrics for one transcript; a metric is nullopt when undefined
/// and the reason is recorded in `flags`.
struct TranscriptMetrics {
  std::map<std::string, std::optional<double>> values;
  std::set<std::string> flags;
  nlohmann::json detail = nlohmann::json::object();

  std::optional<double> get(const std::string& metric) const;
  nlohmann::json to_json() const;
};

struct EvalSettings {
  double threshold = kDefaultSimilarityThreshold;
  NormalizationConfig normalization = NormalizationConfig::defaults();
};

/// All eight metrics of one model output against its gold standard.
TranscriptMetrics evaluate_transcript(const ModelOutput& output, const GoldStandard& gold,
                                      const Transcript& transcript, Embedder& embedder,
                                      const EvalSettings& settings);

/// Evaluator view of stored artifacts. `ablate_passes`, when set, truncates the
/// after-phase artifacts at that many verification passes; `before` supplies
/// the unverified counts.
ModelOutput output_from_artifacts(const RunArtifacts& artifacts);
ModelOutput ablated_output(const RunArtifacts& before, const RunArtifacts& after, int passes);

struct EvaluateOptions {
  std::optional<std::filesystem::path> gold_dir;
  std::optional<double> threshold;
  /// Replay a pass count instead of evaluating both phases.
  std::optional<int> ablate_passes;
};

/// Reads `<run_dir>/config.json`, the corpus, the gold files and every stored
/// artifact; never calls a chat endpoint. Output shape:
///   {rows: [ValidationRow], per_transcript: {...}, stats: {wilcoxon, cohens_d}, meta: {...}}
nlohmann::json evaluate_run(const std::filesystem::path& run_dir, const EvaluateOptions& options = {});

/// Writes `evaluation.json` (or `ablation_<p>.json`) into the run directory.
std::filesystem::path cmd_evaluate(const std::filesystem::path& run_dir,
                                   const EvaluateOptions& options = {});
std::filesystem::path cmd_ablate(const std::filesystem::path& run_dir, int passes,
                                 const EvaluateOptions& options = {});

/// F1, KOR and KHR at every threshold of the sweep, plus the stage-2 pair sets
/// and whether they nest. Writes `sensitivity.json` and `sensitivity.csv`.
nlohmann::json sensitivity_run(const std::filesystem::path& run_dir,
                               const std::vector<double>& thresholds,
                               std::optional<std::filesystem::path> gold_dir = std::nullopt);
std::filesystem::path cmd_sensitivity(const std::filesystem::path& run_dir,
                                      std::optional<std::filesystem::path> gold_dir = std::nullopt);

std::vector<ValidationRow> rows_from_evaluation(const nlohmann::json& evaluation);

}  // namespace mpv
