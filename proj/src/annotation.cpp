#include "mpv/annotation.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <sstream>

#include "mpv/error.hpp"
#include "mpv/metrics.hpp"
#include "mpv/util.hpp"

namespace mpv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kCompactEvery = 256;

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const Judgment& j) {
  return json{{"statement_id", j.statement_id},
              {"annotator_id", j.annotator_id},
              {"status", std::string(to_string(j.status))},
              {"note", j.note ? json(*j.note) : json(nullptr)},
              {"timestamp", j.timestamp}};
}

Judgment judgment_from_json(const json& j) {
  try {
    Judgment out;
    out.statement_id = j.at("statement_id").get<std::string>();
    out.annotator_id = j.value("annotator_id", std::string());
    out.status = parse_support_status(j.at("status").get<std::string>());
    out.note = optional_string(j, "note");
    out.timestamp = j.value("timestamp", std::string());
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("judgment: ") + e.what());
  }
}

json to_json(const Adjudication& a) {
  return json{{"statement_id", a.statement_id},
              {"final_status", std::string(to_string(a.final_status))},
              {"resolved_by", a.resolved_by},
              {"rationale", a.rationale},
              {"timestamp", a.timestamp}};
}

Adjudication adjudication_from_json(const json& j) {
  try {
    Adjudication out;
    out.statement_id = j.at("statement_id").get<std::string>();
    out.final_status = parse_support_status(j.at("final_status").get<std::string>());
    out.resolved_by = j.value("resolved_by", std::string());
    out.rationale = j.value("rationale", std::string());
    out.timestamp = j.value("timestamp", std::string());
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("adjudication: ") + e.what());
  }
}

json AnnotationStats::to_json() const {
  return json{{"kappa", kappa},
              {"percent_agreement", percent_agreement},
              {"hr_half_weighted", hr_half_weighted ? json(*hr_half_weighted) : json(nullptr)},
              {"statements", statements},
              {"doubly_judged", doubly_judged},
              {"finals", finals},
              {"pending_final", pending_final}};
}

struct AnnotationStore::RunState {
  std::string run_id;
  fs::path dir;
  std::map<std::string, Statement> statements;
  std::map<std::string, std::array<std::optional<Judgment>, 2>> judgments;
  std::map<std::string, Adjudication> adjudications;
  std::size_t journal_events = 0;
};

AnnotationStore::AnnotationStore(fs::path runs_root, std::array<std::string, 2> annotators,
                                 Clock clock)
    : root_(std::move(runs_root)), annotators_(std::move(annotators)), clock_(std::move(clock)) {
  if (annotators_[0].empty() || annotators_[1].empty() || annotators_[0] == annotators_[1])
    throw Error(Errc::ConfigError, "two distinct, non-empty annotator ids are required");
  if (!clock_) clock_ = utc_timestamp;
}

AnnotationStore::~AnnotationStore() {
  try {
    flush();
  } catch (...) {
  }
}

std::vector<std::string> AnnotationStore::runs() const {
  std::vector<std::string> out;
  if (!fs::is_directory(root_)) return out;
  for (const auto& entry : fs::directory_iterator(root_))
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

bool AnnotationStore::has_run(const std::string& run_id) const {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..")
    return false;
  return fs::is_directory(root_ / run_id);
}

std::size_t AnnotationStore::annotator_slot(const std::string& annotator_id) const {
  for (std::size_t i = 0; i < annotators_.size(); ++i)
    if (annotators_[i] == annotator_id) return i;
  throw Error(Errc::UnknownAnnotator, "annotator \"" + annotator_id + "\" is not configured");
}

void AnnotationStore::apply(RunState& state, const json& event, bool replay) {
  const auto type = event.at("type").get<std::string>();
  if (type == "enqueue") {
    auto s = statement_from_json(event.at("statement"));
    state.statements.emplace(s.id, std::move(s));
  } else if (type == "judgment") {
    const auto slot = event.at("slot").get<std::size_t>();
    auto j = judgment_from_json(event.at("judgment"));
    if (slot > 1) throw Error(Errc::SchemaViolation, "judgment slot out of range");
    if (replay && state.adjudications.contains(j.statement_id)) return;
    state.judgments[j.statement_id][slot] = std::move(j);
  } else if (type == "adjudication") {
    auto a = adjudication_from_json(event.at("adjudication"));
    state.adjudications.emplace(a.statement_id, std::move(a));
  } else {
    throw Error(Errc::SchemaViolation, "unknown journal event \"" + type + "\"");
  }
}

AnnotationStore::RunState& AnnotationStore::load(const std::string& run_id) const {
  if (auto it = runs_.find(run_id); it != runs_.end()) return *it->second;
  if (!has_run(run_id)) throw Error(Errc::UnknownRun, "run \"" + run_id + "\" does not exist");
  auto state = std::make_unique<RunState>();
  state->run_id = run_id;
  state->dir = root_ / run_id / "annotations";
  fs::create_directories(state->dir);

  const auto snapshot = state->dir / "snapshot.json";
  if (fs::exists(snapshot)) {
    const auto j = json::parse(read_file(snapshot));
    for (const auto& s : j.value("statements", json::array()))
      apply(*state, json{{"type", "enqueue"}, {"statement", s}}, true);
    for (const auto& e : j.value("judgments", json::array()))
      apply(*state, json{{"type", "judgment"}, {"slot", e.at("slot")}, {"judgment", e.at("judgment")}},
            true);
    for (const auto& a : j.value("adjudications", json::array()))
      apply(*state, json{{"type", "adjudication"}, {"adjudication", a}}, true);
  }
  const auto journal = state->dir / "journal.jsonl";
  if (fs::exists(journal)) {
    std::istringstream in(read_file(journal));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json event;
      try {
        event = json::parse(line);
      } catch (const json::exception&) {
        break;  // torn final write; it was never acknowledged
      }
      apply(*state, event, true);
      ++state->journal_events;
    }
  }
  auto& ref = *state;
  runs_.emplace(run_id, std::move(state));
  return ref;
}

void AnnotationStore::append(RunState& state, const json& event) {
  const auto path = state.dir / "journal.jsonl";
  const std::string line = event.dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = std::strerror(errno);
      ::close(fd);
      throw Error(Errc::IoError, "write to " + path.string() + " failed: " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(Errc::IoError, "fsync of " + path.string() + " failed");
  apply(state, event, false);
  if (++state.journal_events >= kCompactEvery) compact_locked(state);
}

void AnnotationStore::compact_locked(RunState& state) {
  json statements = json::array(), judgments = json::array(), adjudications = json::array();
  for (const auto& [id, s] : state.statements) statements.push_back(to_json(s));
  for (const auto& [id, slots] : state.judgments)
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (slots[i]) judgments.push_back(json{{"slot", i}, {"judgment", to_json(*slots[i])}});
  for (const auto& [id, a] : state.adjudications) adjudications.push_back(to_json(a));
  const json snapshot{{"run_id", state.run_id},
                      {"statements", statements},
                      {"judgments", judgments},
                      {"adjudications", adjudications}};
  write_file_atomic(state.dir / "snapshot.json", snapshot.dump(2) + "\n");
  write_file_atomic(state.dir / "journal.jsonl", "");
  state.journal_events = 0;
}

void AnnotationStore::compact(const std::string& run_id) {
  std::lock_guard lock(mutex_);
  compact_locked(load(run_id));
}

void AnnotationStore::flush() {
  std::lock_guard lock(mutex_);
  for (auto& [id, state] : runs_)
    if (state->journal_events > 0) compact_locked(*state);
}

std::vector<std::string> AnnotationStore::ordered_ids(const RunState& state) const {
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  for (const auto& [id, s] : state.statements)
    keyed.emplace_back(fnv1a64(state.run_id + '\x1f' + id), id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& [k, id] : keyed) out.push_back(std::move(id));
  return out;
}

std::size_t AnnotationStore::enqueue_statements(const std::string& run_id,
                                                const std::vector<Statement>& statements) {
  std::lock_guard lock(mutex_);
  auto& state = load(run_id);
  for (const auto& s : statements) {
    auto it = state.statements.find(s.id);
    if (it != state.statements.end()) continue;
    append(state, json{{"type", "enqueue"}, {"statement", to_json(s)}});
  }
  return state.statements.size();
}

std::vector<QueueItem> AnnotationStore::queue(const std::string& run_id,
                                              const std::string& annotator_id,
                                              bool pending_only) const {
  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  std::optional<std::size_t> slot;
  if (!annotator_id.empty()) slot = annotator_slot(annotator_id);
  std::vector<QueueItem> out;
  for (const auto& id : ordered_ids(state)) {
    QueueItem item{state.statements.at(id), std::nullopt, state.adjudications.contains(id)};
    if (slot) {
      if (auto it = state.judgments.find(id); it != state.judgments.end() && it->second[*slot])
        item.own_status = it->second[*slot]->status;
    }
    if (pending_only && (item.adjudicated || item.own_status)) continue;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<Statement> AnnotationStore::statements(const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  std::vector<Statement> out;
  for (const auto& id : ordered_ids(state)) out.push_back(state.statements.at(id));
  return out;
}

Judgment AnnotationStore::submit_judgment(const std::string& run_id, Judgment j) {
  std::lock_guard lock(mutex_);
  auto& state = load(run_id);
  const auto slot = annotator_slot(j.annotator_id);
  if (!state.statements.contains(j.statement_id))
    throw Error(Errc::UnknownStatement, "statement \"" + j.statement_id + "\" is not in run " + run_id);
  if (state.adjudications.contains(j.statement_id))
    throw Error(Errc::AlreadyAdjudicated, "statement \"" + j.statement_id + "\" is adjudicated");
  if (j.timestamp.empty()) j.timestamp = clock_();
  append(state, json{{"type", "judgment"}, {"slot", slot}, {"judgment", to_json(j)}});
  return j;
}

std::vector<Disagreement> AnnotationStore::disagreements(const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  std::vector<Disagreement> out;
  for (const auto& id : ordered_ids(state)) {
    if (state.adjudications.contains(id)) continue;
    auto it = state.judgments.find(id);
    if (it == state.judgments.end() || !it->second[0] || !it->second[1]) continue;
    if (it->second[0]->status == it->second[1]->status) continue;
    out.push_back({state.statements.at(id), *it->second[0], *it->second[1]});
  }
  return out;
}

Adjudication AnnotationStore::adjudicate(const std::string& run_id, Adjudication a) {
  std::lock_guard lock(mutex_);
  auto& state = load(run_id);
  if (!state.statements.contains(a.statement_id))
    throw Error(Errc::UnknownStatement, "statement \"" + a.statement_id + "\" is not in run " + run_id);
  if (state.adjudications.contains(a.statement_id))
    throw Error(Errc::AlreadyAdjudicated, "statement \"" + a.statement_id + "\" is adjudicated");
  auto it = state.judgments.find(a.statement_id);
  if (it == state.judgments.end() || !it->second[0] || !it->second[1] ||
      it->second[0]->status == it->second[1]->status)
    throw Error(Errc::NotADisagreement, "statement \"" + a.statement_id + "\" has no disagreement");
  if (collapse_whitespace(a.rationale).empty())
    throw Error(Errc::InvalidArgument, "adjudication rationale is required");
  if (a.timestamp.empty()) a.timestamp = clock_();
  append(state, json{{"type", "adjudication"}, {"adjudication", to_json(a)}});
  return a;
}

std::optional<SupportStatus> AnnotationStore::final_status(const std::string& run_id,
                                                           const std::string& statement_id) const {
  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  if (auto a = state.adjudications.find(statement_id); a != state.adjudications.end())
    return a->second.final_status;
  auto it = state.judgments.find(statement_id);
  if (it == state.judgments.end() || !it->second[0] || !it->second[1]) return std::nullopt;
  if (it->second[0]->status != it->second[1]->status) return std::nullopt;
  return it->second[0]->status;
}

std::pair<std::vector<std::string>, std::vector<std::string>> AnnotationStore::exported_labels(
    const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (const auto& id : ordered_ids(state)) {
    auto it = state.judgments.find(id);
    if (it == state.judgments.end() || !it->second[0] || !it->second[1]) continue;
    out.first.emplace_back(to_string(it->second[0]->status));
    out.second.emplace_back(to_string(it->second[1]->status));
  }
  return out;
}

AnnotationStats AnnotationStore::stats(const std::string& run_id) const {
  const auto [a, b] = exported_labels(run_id);
  if (a.empty()) throw Error(Errc::NoCompleteJudgments, "no statement has two judgments");
  AnnotationStats s;
  s.kappa = cohens_kappa(a, b);
  s.percent_agreement = percent_agreement(a, b);
  s.doubly_judged = a.size();

  std::lock_guard lock(mutex_);
  const auto& state = load(run_id);
  s.statements = state.statements.size();
  JudgmentTally tally;
  for (const auto& [id, st] : state.statements) {
    std::optional<SupportStatus> fin;
    if (auto adj = state.adjudications.find(id); adj != state.adjudications.end()) {
      fin = adj->second.final_status;
    } else if (auto it = state.judgments.find(id);
               it != state.judgments.end() && it->second[0] && it->second[1] &&
               it->second[0]->status == it->second[1]->status) {
      fin = it->second[0]->status;
    }
    if (!fin) {
      ++s.pending_final;
      continue;
    }
    ++tally.total;
    if (*fin == SupportStatus::Unsupported) ++tally.unsupported;
    if (*fin == SupportStatus::PartiallySupported) ++tally.partial;
  }
  s.finals = static_cast<std::size_t>(tally.total);
  if (tally.total > 0) s.hr_half_weighted = hallucination_rate(tally, HrMode::HalfWeighted);
  return s;
}

}  // namespace mpv
