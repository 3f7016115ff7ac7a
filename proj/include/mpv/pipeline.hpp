#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"
#include "mpv/embedding.hpp"
#include "mpv/gateway.hpp"
#include "mpv/prompts.hpp"
#include "mpv/segmentation.hpp"

namespace mpv {

struct PipelineConfig {
  int max_verify_passes = 3;
  bool verification_enabled = true;
  std::optional<int> passes_override;  // ablation: 0..max_verify_passes
  std::size_t window = 4096;
  std::size_t overlap = 512;
  TokenizerConfig tokenizer;
  double merge_threshold = 0.80;
  int max_repairs = kDefaultMaxRepairs;

  void validate() const;
  /// Verification passes allowed per loop; 0 when verification is disabled.
  int pass_limit() const;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Everything a pipeline stage needs besides its inputs.
struct PipelineContext {
  Gateway& gateway;
  Embedder& embedder;
  const PipelineConfig& config;
  const PromptTemplates& prompts = PromptTemplates::defaults();
};

namespace flag {
inline constexpr const char* kSegmentFailed = "segment_failed";
inline constexpr const char* kAnalysisFailed = "analysis_failed";
inline constexpr const char* kThemeVerifyFailed = "theme_verify_failed";
inline constexpr const char* kFrequencyFailed = "frequency_failed";
inline constexpr const char* kFrequencyVerifyFailed = "frequency_verify_failed";
inline constexpr const char* kThemeCapReached = "cap_reached";
inline constexpr const char* kFrequencyCapReached = "frequency_cap_reached";
inline constexpr const char* kEndpointFailure = "endpoint_failure";
}  // namespace flag

struct StageTimings {
  long long analysis_ms = 0;
  long long theme_verify_ms = 0;
  long long frequency_ms = 0;
  long long frequency_verify_ms = 0;

  nlohmann::json to_json() const;
  static StageTimings from_json(const nlohmann::json& j);
};

struct AnalysisResult {
  std::string transcript_id;
  std::size_t segment_count = 0;
  std::vector<std::size_t> failed_segments;
  ThemeSet merged;
  std::set<std::string> flags;
  std::vector<std::string> warnings;
  long long elapsed_ms = 0;
};

struct RunArtifacts {
  std::string transcript_id;
  Phase phase = Phase::After;
  std::size_t segment_count = 0;
  std::vector<std::size_t> failed_segments;
  ThemeSet analysis;
  std::vector<ThemeSet> theme_passes;
  ThemeSet final_themes;
  FrequencyReport freq_raw;
  std::vector<FrequencyReport> freq_passes;
  FrequencyReport final_freq;
  std::set<std::string> flags;
  std::vector<std::string> warnings;
  StageTimings timings;
  /// Final theme sets of the repeated runs used for consistency (run 0 is
  /// `final_themes` itself and is not stored here).
  std::vector<ThemeSet> repeat_runs;
  /// Per repeat, the output of each theme-verification pass (empty when the
  /// phase does not verify).
  std::vector<std::vector<ThemeSet>> repeat_passes;

  int theme_pass_count() const { return static_cast<int>(theme_passes.size()); }
  int freq_pass_count() const { return static_cast<int>(freq_passes.size()); }
  nlohmann::json summary() const;
};

/// Mock/replay key for one transcript window: "<id>[@r<repeat>][#<window>]".
std::string window_key(const std::string& transcript_id, int repeat, std::size_t window,
                       std::size_t window_count);

/// Outcome of one guarded stage call.
template <typename T>
struct StageOutcome {
  T value;
  bool failed = false;
  std::vector<std::string> warnings;
  long long elapsed_ms = 0;
};

/// Theme extraction over one segment. Throws StructuredOutputFailure or
/// EndpointFailure; quotes are not checked against the segment here.
ThemeSet extract_themes(const Segment& segment, const PipelineContext& ctx,
                        const std::string& key_id);

/// Keeps only items of `current` that some verifier output retains, matched by
/// whitespace-collapsed description (themes, subthemes) and quote text.
/// Invented items are reported in `warnings`.
ThemeSet guard_theme_subset(const ThemeSet& current, const std::vector<ThemeSet>& verifier_outputs,
                            std::vector<std::string>* warnings = nullptr);

/// Output id set equals the input id set: additions dropped, deletions
/// restored with their input count; only counts change.
FrequencyReport guard_frequency_ids(const FrequencyReport& input, const FrequencyReport& model,
                                    std::vector<std::string>* warnings = nullptr);

/// One theme verification pass over the transcript windows. On failure the
/// input is returned unchanged with `failed` set.
StageOutcome<ThemeSet> verify_themes(const ThemeSet& current, const Transcript& transcript,
                                     const PipelineContext& ctx, int pass, int repeat = 0);

/// Counting over the stride partition of the transcript, summed. `scope_pass`
/// is the number of theme-verify passes that produced `verified`. On failure
/// an all-zero report with `failed` set.
StageOutcome<FrequencyReport> count_frequencies(const ThemeSet& verified,
                                                const Transcript& transcript,
                                                const PipelineContext& ctx, int scope_pass);

/// One frequency verification pass; `pieces` are the per-piece reports that
/// sum to the current report and are updated in place.
StageOutcome<FrequencyReport> verify_frequencies(std::vector<FrequencyReport>& pieces,
                                                 const Transcript& transcript,
                                                 const PipelineContext& ctx, int pass);

/// Steps 1-3: segment, extract per segment, union-merge.
AnalysisResult analyze(const Transcript& transcript, const PipelineContext& ctx, int repeat = 0);

/// Steps 4-7 on a finished analysis. Artifacts are written into `out_dir`
/// (when given) as soon as each pass completes.
RunArtifacts complete_pipeline(const AnalysisResult& analysis, const Transcript& transcript,
                               const PipelineContext& ctx,
                               const std::filesystem::path* out_dir = nullptr);

/// Full workflow. Only EmptyTranscript aborts; stage failures degrade to flags.
RunArtifacts run_pipeline(const Transcript& transcript, const PipelineContext& ctx,
                          const std::filesystem::path* out_dir = nullptr);

/// The theme-verification loop alone on a repeated analysis (used for the
/// consistency runs of the After phase). Returns every pass output; the final
/// set is the last one, or `start` when no pass ran.
std::vector<ThemeSet> verify_loop(const ThemeSet& start, const Transcript& transcript,
                     const PipelineContext& ctx, int repeat);

void write_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts);
RunArtifacts read_artifacts(const std::filesystem::path& dir);

}  // namespace mpv
