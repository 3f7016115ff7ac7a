#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"
#include "mpv/gateway.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "mpv-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

mpv::Subtheme sub(std::string id, std::string description, std::vector<std::string> quotes = {});
mpv::Theme theme(std::string id, std::string description, std::vector<mpv::Subtheme> subthemes = {});
mpv::ThemeSet themes(std::vector<mpv::Theme> list);

struct Count {
  std::string theme_id;
  long long count;
  std::vector<std::pair<std::string, long long>> subthemes;
};
mpv::FrequencyReport counts(const std::vector<Count>& list);

void write_transcript(const fs::path& corpus_dir, const std::string& id, mpv::Condition condition,
                      const std::string& text);
void write_gold(const fs::path& gold_dir, const mpv::GoldStandard& gold);

/// Builds a mock script keyed the same way the pipeline tags its requests.
class MockScript {
 public:
  MockScript& analysis(const std::string& tid, const mpv::ThemeSet& reply);
  MockScript& theme_verify(const std::string& tid, int pass, const mpv::ThemeSet& reply);
  /// `scope_pass` is the number of theme-verification passes behind the scope.
  MockScript& frequency(const std::string& tid, int scope_pass, const mpv::FrequencyReport& reply);
  MockScript& frequency_verify(const std::string& tid, int pass, const mpv::FrequencyReport& reply);
  MockScript& raw(const std::string& stage, const std::string& tid, int pass, int attempt,
                  const std::string& response);
  MockScript& failing(const std::string& stage, const std::string& tid, int pass, int status,
                      int fail_times, const std::string& response = {});

  const std::vector<mpv::MockEntry>& entries() const { return entries_; }
  json to_json() const;
  void write(const fs::path& file) const;

 private:
  std::vector<mpv::MockEntry> entries_;
};

/// A corpus/gold/mock/config bundle on disk.
struct Scenario {
  fs::path root;
  fs::path corpus;
  fs::path gold;
  fs::path mock;
  fs::path config;
  fs::path runs;
  std::vector<std::string> transcript_ids;
};

/// Config document for a scenario; `overrides` are merged at top level.
json scenario_config(const Scenario& s, const std::vector<std::string>& model_labels,
                     const json& overrides = json::object());

/// Two transcripts (one per condition) of five items each. Analysis emits one
/// invented theme and one wrong subtheme count: 3 of 10 statements are
/// unsupported. Verification drops the theme on pass 1, corrects the count on
/// pass 1, and both loops reach a fixpoint on pass 2.
Scenario hallucination_scenario(const fs::path& root);

/// Verifiers that change their answer on every pass, so both loops hit the cap.
Scenario never_converging_scenario(const fs::path& root);

/// Model output equal to the gold standard in every stage.
Scenario perfect_scenario(const fs::path& root);

/// Model descriptions paraphrase the gold ones to varying degrees so the
/// embedding stage pairs differ across thresholds.
Scenario paraphrase_scenario(const fs::path& root);

/// Every file under `dir`, relative path -> bytes.
std::map<std::string, std::string> snapshot_tree(const fs::path& dir);

}  // namespace fixtures
