#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"

namespace mpv {

struct Judgment {
  std::string statement_id;
  std::string annotator_id;
  SupportStatus status = SupportStatus::Supported;
  std::optional<std::string> note;
  std::string timestamp;

  bool operator==(const Judgment&) const = default;
};

struct Adjudication {
  std::string statement_id;
  SupportStatus final_status = SupportStatus::Supported;
  std::string resolved_by;
  std::string rationale;
  std::string timestamp;

  bool operator==(const Adjudication&) const = default;
};

nlohmann::json to_json(const Judgment& j);
Judgment judgment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Adjudication& a);
Adjudication adjudication_from_json(const nlohmann::json& j);

struct Disagreement {
  Statement statement;
  Judgment judgment_a;
  Judgment judgment_b;
};

struct AnnotationStats {
  double kappa = 0.0;
  double percent_agreement = 0.0;
  /// Half-weighted rate over final statuses; nullopt when no statement has one.
  std::optional<double> hr_half_weighted;
  std::size_t statements = 0;
  std::size_t doubly_judged = 0;
  std::size_t finals = 0;
  std::size_t pending_final = 0;

  nlohmann::json to_json() const;
};

/// Per-statement view for one annotator. Only that annotator's own status is
/// ever included.
struct QueueItem {
  Statement statement;
  std::optional<SupportStatus> own_status;
  bool adjudicated = false;
};

/// Two-annotator judgment store. Each run keeps
/// `<runs_root>/<run_id>/annotations/journal.jsonl` (fsynced before a write is
/// acknowledged) plus a compacted `snapshot.json`. Thread-safe; one mutex
/// serializes all access.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  explicit AnnotationStore(std::filesystem::path runs_root,
                           std::array<std::string, 2> annotators = {"A", "B"},
                           Clock clock = {});
  ~AnnotationStore();

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  const std::array<std::string, 2>& annotators() const { return annotators_; }

  /// Run ids: directories under the runs root.
  std::vector<std::string> runs() const;
  bool has_run(const std::string& run_id) const;

  /// Registers statements; ids already present are left untouched. Returns
  /// the number of statements in the run afterwards. Throws UnknownRun.
  std::size_t enqueue_statements(const std::string& run_id, const std::vector<Statement>& statements);

  /// Statements in the run's fixed presentation order. With `pending_only`
  /// only those the annotator has not judged and that are not adjudicated.
  std::vector<QueueItem> queue(const std::string& run_id, const std::string& annotator_id,
                               bool pending_only) const;
  std::vector<Statement> statements(const std::string& run_id) const;

  /// Stores or overwrites a judgment. Throws UnknownRun, UnknownStatement,
  /// UnknownAnnotator, AlreadyAdjudicated.
  Judgment submit_judgment(const std::string& run_id, Judgment j);

  /// Statements judged by both annotators with differing statuses and no
  /// adjudication yet.
  std::vector<Disagreement> disagreements(const std::string& run_id) const;

  /// Throws NotADisagreement, AlreadyAdjudicated, InvalidArgument (empty
  /// rationale).
  Adjudication adjudicate(const std::string& run_id, Adjudication a);

  /// Throws NoCompleteJudgments when no statement has two judgments.
  AnnotationStats stats(const std::string& run_id) const;

  /// Adjudicated status, else the agreed status, else nullopt.
  std::optional<SupportStatus> final_status(const std::string& run_id,
                                            const std::string& statement_id) const;

  /// The two annotators' raw statuses over doubly judged statements, in
  /// presentation order.
  std::pair<std::vector<std::string>, std::vector<std::string>> exported_labels(
      const std::string& run_id) const;

  /// Writes the snapshot and truncates the journal.
  void compact(const std::string& run_id);
  /// Compacts every loaded run.
  void flush();

 private:
  struct RunState;

  RunState& load(const std::string& run_id) const;
  void append(RunState& state, const nlohmann::json& event);
  static void apply(RunState& state, const nlohmann::json& event, bool replay);
  std::vector<std::string> ordered_ids(const RunState& state) const;
  void compact_locked(RunState& state);
  std::size_t annotator_slot(const std::string& annotator_id) const;

  std::filesystem::path root_;
  std::array<std::string, 2> annotators_;
  Clock clock_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::unique_ptr<RunState>> runs_;
};

/// Default clock: current UTC time as ISO-8601.
std::string utc_timestamp();

}  // namespace mpv
