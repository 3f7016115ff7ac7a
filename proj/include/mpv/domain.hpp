#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpv {

using json = nlohmann::json;

enum class Condition { Expert, NonExpert };

std::string_view to_string(Condition c) noexcept;
Condition parse_condition(std::string_view s);

struct Transcript {
  std::string id;
  std::string text;
  Condition condition = Condition::Expert;
  std::map<std::string, std::string> metadata;
};

struct Subtheme {
  std::string subtheme_id;
  std::string description;
  std::vector<std::string> quotes;

  bool operator==(const Subtheme&) const = default;
};

struct Theme {
  std::string theme_id;
  std::string description;
  std::vector<Subtheme> subthemes;

  bool operator==(const Theme&) const = default;
  const Subtheme* find_subtheme(std::string_view id) const;
};

struct Provenance {
  enum class Kind { Analysis, Verified };
  Kind kind = Kind::Analysis;
  int pass = 0;  // 1-based for Verified

  static Provenance analysis() { return {}; }
  static Provenance verified(int pass) { return {Kind::Verified, pass}; }
  bool operator==(const Provenance&) const = default;
};

struct ThemeSet {
  std::vector<Theme> themes;
  Provenance provenance;

  bool empty() const { return themes.empty(); }
  const Theme* find(std::string_view theme_id) const;
  /// Structural equality on content; provenance is ignored.
  bool same_content(const ThemeSet& other) const { return themes == other.themes; }
};

struct SubthemeCount {
  std::string subtheme_id;
  std::int64_t count = 0;

  bool operator==(const SubthemeCount&) const = default;
};

struct ThemeCount {
  std::string theme_id;
  std::int64_t count = 0;
  std::vector<SubthemeCount> subthemes;

  bool operator==(const ThemeCount&) const = default;
  const SubthemeCount* find_subtheme(std::string_view id) const;
};

struct FrequencyReport {
  std::vector<ThemeCount> entries;

  bool operator==(const FrequencyReport&) const = default;
  const ThemeCount* find(std::string_view theme_id) const;
};

enum class StatementKind { ThemeAssertion, FrequencyClaim };

struct FrequencyClaim {
  std::string theme_id;
  std::optional<std::string> subtheme_id;
  std::int64_t claimed_count = 0;

  bool operator==(const FrequencyClaim&) const = default;
};

struct StatementSource {
  std::string transcript_id;
  std::string stage;

  bool operator==(const StatementSource&) const = default;
};

struct Statement {
  std::string id;
  StatementKind kind = StatementKind::ThemeAssertion;
  std::string text;
  StatementSource source;
  std::optional<FrequencyClaim> claim;

  bool operator==(const Statement&) const = default;
};

enum class SupportStatus { Supported, PartiallySupported, Unsupported };
enum class GroundingMethod { Containment, Embedding, FrequencyRule, Human };

std::string_view to_string(SupportStatus s) noexcept;
SupportStatus parse_support_status(std::string_view s);
std::string_view to_string(GroundingMethod m) noexcept;

/// Byte offsets into the transcript text.
struct SpanRef {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct GroundingStatus {
  SupportStatus status = SupportStatus::Unsupported;
  GroundingMethod method = GroundingMethod::Containment;
  std::optional<SpanRef> evidence;
  double similarity = 0.0;
};

struct GoldStandard {
  std::string transcript_id;
  std::vector<Theme> themes;
  std::vector<std::string> keywords;
  FrequencyReport counts;
  /// quote text -> gold theme id; empty means derive from `themes`.
  std::map<std::string, std::string> cluster_labels;
};

enum class Phase { Before, After };
std::string_view to_string(Phase p) noexcept;
Phase parse_phase(std::string_view s);

/// One validation-table row (model x condition x phase). A metric is nullopt when it was undefined for every
/// transcript in the cell (e.g. zero-variance Pearson everywhere).
struct ValidationRow {
  std::string model_label;
  Condition condition = Condition::Expert;
  Phase phase = Phase::Before;
  std::optional<double> f1, sds, hr, tcs, freq_r, kor, khr, ari;

  bool operator==(const ValidationRow&) const = default;
};

/// Throws InvalidArgument when a present metric falls outside its range.
void check_ranges(const ValidationRow& row);

// ---------------------------------------------------------------------------
// Parsing and serialization

/// Locates the outermost balanced `{...}` starting at the first `{`.
/// Throws NoJsonFound when there is no `{` or the braces never balance.
std::string_view extract_json_object(std::string_view text);

/// Parses model output against the theme schema. Prose around the object is
/// ignored. Errors: NoJsonFound, SchemaViolation, DuplicateId.
ThemeSet parse_theme_set(std::string_view text);

/// Schema-only parse of a frequency document; ids are not resolved.
FrequencyReport parse_frequency_payload(std::string_view text);

/// Full parse: schema plus every id must resolve in `scope` (UnknownId).
FrequencyReport parse_frequency_report(std::string_view text, const ThemeSet& scope);

/// Drops entries whose ids do not resolve in `scope`; dropped ids are appended
/// to `dropped` as "T1" or "T1/ST1".
FrequencyReport restrict_to_scope(const FrequencyReport& report, const ThemeSet& scope,
                                  std::vector<std::string>* dropped = nullptr);

json to_json(const ThemeSet& set);
json to_json(const std::vector<Theme>& themes);
json to_json(const FrequencyReport& report);
ThemeSet theme_set_from_json(const json& j);
FrequencyReport frequency_report_from_json(const json& j);

/// Pretty JSON in generation order, matching the prompt schema.
std::string serialize(const ThemeSet& set);
std::string serialize(const FrequencyReport& report);

/// Deterministic byte string used for fixpoint detection: keys sorted, text
/// trimmed with internal whitespace collapsed, themes/subthemes sorted by id,
/// quotes sorted.
std::string canonicalize(const ThemeSet& set);
std::string canonicalize(const FrequencyReport& report);

/// Trim plus collapse of internal whitespace runs to one space.
std::string collapse_whitespace(std::string_view s);

/// Zero counts over every theme/subtheme id in `scope`.
FrequencyReport zero_report(const ThemeSet& scope);

// ---------------------------------------------------------------------------
// Files

GoldStandard gold_from_json(const json& j);
json to_json(const GoldStandard& gold);
GoldStandard load_gold(const std::filesystem::path& file);

/// Reads `<dir>/<id>.txt` with its `<id>.meta.json` sidecar.
Transcript load_transcript(const std::filesystem::path& txt_file);
/// All transcripts in a corpus directory, sorted by id.
std::vector<Transcript> load_corpus(const std::filesystem::path& dir);

json to_json(const Statement& s);
Statement statement_from_json(const json& j);
std::string_view to_string(StatementKind k) noexcept;

json to_json(const ValidationRow& row);
ValidationRow validation_row_from_json(const json& j);

std::string read_file(const std::filesystem::path& p);
/// Writes via a temporary file and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& p, std::string_view content);

}  // namespace mpv
