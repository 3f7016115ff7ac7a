#include "mpv/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mpv/error.hpp"

namespace mpv {

namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
  if (max_verify_passes < 0) throw Error(Errc::ConfigError, "max_verify_passes must be >= 0");
  if (passes_override && (*passes_override < 0 || *passes_override > max_verify_passes))
    throw Error(Errc::ConfigError, "passes_override must be within [0, max_verify_passes]");
  if (window == 0 || overlap >= window)
    throw Error(Errc::InvalidWindow, "require 0 <= overlap < window");
  if (!(merge_threshold > 0.0 && merge_threshold <= 1.0))
    throw Error(Errc::ConfigError, "merge_threshold must be in (0, 1]");
  if (tokenizer.mode == TokenizerConfig::Mode::CharsPerToken && !(tokenizer.chars_per_token > 0.0))
    throw Error(Errc::ConfigError, "chars_per_token must be > 0");
  if (max_repairs < 0) throw Error(Errc::ConfigError, "max_repairs must be >= 0");
}

int PipelineConfig::pass_limit() const {
  if (!verification_enabled) return 0;
  return passes_override.value_or(max_verify_passes);
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  c.max_verify_passes = j.value("max_verify_passes", c.max_verify_passes);
  c.verification_enabled = j.value("verification_enabled", c.verification_enabled);
  if (j.contains("passes_override") && !j.at("passes_override").is_null())
    c.passes_override = j.at("passes_override").get<int>();
  c.window = j.value("window", c.window);
  c.overlap = j.value("overlap", c.overlap);
  c.merge_threshold = j.value("merge_threshold", c.merge_threshold);
  c.max_repairs = j.value("max_repairs", c.max_repairs);
  if (j.contains("tokenizer")) {
    const auto& tk = j.at("tokenizer");
    const auto mode = tk.value("mode", std::string("chars_per_token"));
    if (mode == "whitespace") {
      c.tokenizer = TokenizerConfig::whitespace();
    } else if (mode == "chars_per_token") {
      c.tokenizer = TokenizerConfig::chars(tk.value("k", 4.0));
    } else {
      throw Error(Errc::ConfigError, "tokenizer.mode must be \"whitespace\" or \"chars_per_token\"");
    }
  }
  c.validate();
  return c;
}

json PipelineConfig::to_json() const {
  json tk = tokenizer.mode == TokenizerConfig::Mode::Whitespace
                ? json{{"mode", "whitespace"}}
                : json{{"mode", "chars_per_token"}, {"k", tokenizer.chars_per_token}};
  return json{{"max_verify_passes", max_verify_passes},
              {"verification_enabled", verification_enabled},
              {"passes_override", passes_override ? json(*passes_override) : json(nullptr)},
              {"window", window},
              {"overlap", overlap},
              {"merge_threshold", merge_threshold},
              {"max_repairs", max_repairs},
              {"tokenizer", tk}};
}

json StageTimings::to_json() const {
  return json{{"analysis_ms", analysis_ms},
              {"theme_verify_ms", theme_verify_ms},
              {"frequency_ms", frequency_ms},
              {"frequency_verify_ms", frequency_verify_ms}};
}

StageTimings StageTimings::from_json(const json& j) {
  StageTimings t;
  t.analysis_ms = j.value("analysis_ms", 0LL);
  t.theme_verify_ms = j.value("theme_verify_ms", 0LL);
  t.frequency_ms = j.value("frequency_ms", 0LL);
  t.frequency_verify_ms = j.value("frequency_verify_ms", 0LL);
  return t;
}

json RunArtifacts::summary() const {
  return json{{"transcript_id", transcript_id},
              {"phase", std::string(to_string(phase))},
              {"segment_count", segment_count},
              {"failed_segments", failed_segments},
              {"theme_passes", theme_pass_count()},
              {"frequency_passes", freq_pass_count()},
              {"repeat_runs", repeat_runs.size()},
              {"flags", flags},
              {"warnings", warnings},
              {"timings", timings.to_json()}};
}

std::string window_key(const std::string& transcript_id, int repeat, std::size_t window,
                       std::size_t window_count) {
  std::string key = transcript_id;
  if (repeat > 0) key += "@r" + std::to_string(repeat);
  if (window_count > 1) key += "#" + std::to_string(window);
  return key;
}

namespace {

/// Wall-clock for a stage: measured, or the sum of scripted latencies when the
/// backend scripts them so mock runs stay byte-deterministic.
class StageTimer {
 public:
  explicit StageTimer(bool scripted) : scripted_(scripted), start_(std::chrono::steady_clock::now()) {}
  void add(std::chrono::milliseconds scripted) { scripted_ms_ += scripted.count(); }
  long long elapsed_ms() const {
    if (scripted_) return scripted_ms_;
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 start_)
        .count();
  }

 private:
  bool scripted_;
  std::chrono::steady_clock::time_point start_;
  long long scripted_ms_ = 0;
};

bool is_stage_failure(const Error& e) {
  return e.code() == Errc::StructuredOutputFailure || e.code() == Errc::EndpointFailure;
}

StructuredOutput extract_structured(const Segment& segment, const PipelineContext& ctx,
                                    const std::string& key_id) {
  if (collapse_whitespace(segment.text).empty())
    throw Error(Errc::EmptyTranscript, "segment " + std::to_string(segment.index) + " is empty");
  const auto user = render(ctx.prompts.theme_user, {{"transcript", segment.text}});
  return ctx.gateway.generate_structured(ctx.prompts.analysis_system, user,
                                         ExpectedSchema::ThemeSchema, nullptr,
                                         RequestTag{stage::kAnalysis, key_id, 0, 0},
                                         ctx.config.max_repairs);
}

/// Every id of `scope` in scope order, counts taken from `report` (0 when
/// absent).
FrequencyReport complete_ids(const FrequencyReport& report, const ThemeSet& scope,
                             std::vector<std::string>* warnings) {
  FrequencyReport out;
  for (const auto& theme : scope.themes) {
    const ThemeCount* tc = report.find(theme.theme_id);
    if (!tc && warnings) warnings->push_back("missing count for " + theme.theme_id + " set to 0");
    ThemeCount entry{theme.theme_id, tc ? tc->count : 0, {}};
    for (const auto& st : theme.subthemes) {
      const SubthemeCount* sc = tc ? tc->find_subtheme(st.subtheme_id) : nullptr;
      if (!sc && warnings)
        warnings->push_back("missing count for " + theme.theme_id + "/" + st.subtheme_id +
                            " set to 0");
      entry.subthemes.push_back({st.subtheme_id, sc ? sc->count : 0});
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

/// Element-wise sum of reports sharing the id layout of `pieces.front()`.
FrequencyReport sum_reports(const std::vector<FrequencyReport>& pieces) {
  if (pieces.empty()) return {};
  FrequencyReport out = pieces.front();
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    for (auto& e : out.entries) {
      const ThemeCount* other = pieces[i].find(e.theme_id);
      if (!other) continue;
      e.count += other->count;
      for (auto& s : e.subthemes)
        if (const auto* os = other->find_subtheme(s.subtheme_id)) s.count += os->count;
    }
  }
  return out;
}

void write_json(const fs::path* dir, const std::string& name, const std::string& body) {
  if (dir) write_file_atomic(*dir / name, body + "\n");
}

}  // namespace

ThemeSet extract_themes(const Segment& segment, const PipelineContext& ctx,
                        const std::string& key_id) {
  auto out = extract_structured(segment, ctx, key_id).themes();
  out.provenance = Provenance::analysis();
  return out;
}

// ---------------------------------------------------------------------------

ThemeSet guard_theme_subset(const ThemeSet& current, const std::vector<ThemeSet>& verifier_outputs,
                            std::vector<std::string>* warnings) {
  // description -> retained subtheme descriptions -> retained quotes
  std::map<std::string, std::map<std::string, std::set<std::string>>> kept;
  for (const auto& output : verifier_outputs) {
    for (const auto& theme : output.themes) {
      auto& subs = kept[collapse_whitespace(theme.description)];
      for (const auto& st : theme.subthemes) {
        auto& quotes = subs[collapse_whitespace(st.description)];
        for (const auto& q : st.quotes) quotes.insert(collapse_whitespace(q));
      }
    }
  }

  ThemeSet out;
  std::set<std::string> known_themes;
  std::map<std::string, std::set<std::string>> known_subs;
  for (const auto& theme : current.themes) {
    const auto tkey = collapse_whitespace(theme.description);
    known_themes.insert(tkey);
    auto it = kept.find(tkey);
    for (const auto& st : theme.subthemes) known_subs[tkey].insert(collapse_whitespace(st.description));
    if (it == kept.end()) continue;
    Theme t{theme.theme_id, theme.description, {}};
    for (const auto& st : theme.subthemes) {
      auto sit = it->second.find(collapse_whitespace(st.description));
      if (sit == it->second.end()) continue;
      Subtheme s{st.subtheme_id, st.description, {}};
      for (const auto& q : st.quotes)
        if (sit->second.contains(collapse_whitespace(q))) s.quotes.push_back(q);
      t.subthemes.push_back(std::move(s));
    }
    out.themes.push_back(std::move(t));
  }

  if (warnings) {
    for (const auto& [tkey, subs] : kept) {
      if (!known_themes.contains(tkey)) {
        warnings->push_back("stripped invented theme \"" + tkey + "\"");
        continue;
      }
      for (const auto& [skey, quotes] : subs)
        if (!known_subs[tkey].contains(skey))
          warnings->push_back("stripped invented subtheme \"" + skey + "\"");
    }
  }
  return out;
}

FrequencyReport guard_frequency_ids(const FrequencyReport& input, const FrequencyReport& model,
                                    std::vector<std::string>* warnings) {
  FrequencyReport out;
  for (const auto& e : input.entries) {
    const ThemeCount* m = model.find(e.theme_id);
    if (!m && warnings)
      warnings->push_back("restored " + e.theme_id + " with count " + std::to_string(e.count));
    ThemeCount entry{e.theme_id, m ? m->count : e.count, {}};
    for (const auto& s : e.subthemes) {
      const SubthemeCount* ms = m ? m->find_subtheme(s.subtheme_id) : nullptr;
      if (!ms && warnings)
        warnings->push_back("restored " + e.theme_id + "/" + s.subtheme_id + " with count " +
                            std::to_string(s.count));
      entry.subthemes.push_back({s.subtheme_id, ms ? ms->count : s.count});
    }
    out.entries.push_back(std::move(entry));
  }
  if (warnings) {
    for (const auto& m : model.entries) {
      const ThemeCount* e = input.find(m.theme_id);
      if (!e) {
        warnings->push_back("dropped added id " + m.theme_id);
        continue;
      }
      for (const auto& s : m.subthemes)
        if (!e->find_subtheme(s.subtheme_id))
          warnings->push_back("dropped added id " + m.theme_id + "/" + s.subtheme_id);
    }
  }
  return out;
}

StageOutcome<ThemeSet> verify_themes(const ThemeSet& current, const Transcript& transcript,
                                     const PipelineContext& ctx, int pass, int repeat) {
  const auto& cfg = ctx.config;
  StageTimer timer(ctx.gateway.scripted_timing());
  StageOutcome<ThemeSet> outcome;
  const auto windows = segment(transcript, cfg.window, cfg.overlap, cfg.tokenizer);
  const auto payload = serialize(current);
  std::vector<ThemeSet> outputs;
  try {
    for (const auto& w : windows) {
      const auto user =
          render(ctx.prompts.theme_verify_user, {{"json", payload}, {"transcript", w.text}});
      auto result = ctx.gateway.generate_structured(
          ctx.prompts.verification_system, user, ExpectedSchema::ThemeSchema, nullptr,
          RequestTag{stage::kThemeVerify,
                     window_key(transcript.id, repeat, w.index, windows.size()), pass, 0},
          cfg.max_repairs);
      timer.add(result.latency);
      outputs.push_back(result.themes());
    }
    outcome.value = guard_theme_subset(current, outputs, &outcome.warnings);
  } catch (const Error& e) {
    if (!is_stage_failure(e)) throw;
    outcome.value = current;
    outcome.failed = true;
    outcome.warnings.push_back("theme verification pass " + std::to_string(pass) +
                               " failed: " + e.what());
  }
  outcome.value.provenance = Provenance::verified(pass);
  outcome.elapsed_ms = timer.elapsed_ms();
  return outcome;
}

namespace {

StageOutcome<FrequencyReport> count_frequencies_impl(const ThemeSet& verified,
                                                     const Transcript& transcript,
                                                     const PipelineContext& ctx, int scope_pass,
                                                     std::vector<FrequencyReport>* pieces_out) {
  const auto& cfg = ctx.config;
  StageTimer timer(ctx.gateway.scripted_timing());
  StageOutcome<FrequencyReport> outcome;
  if (verified.empty()) return outcome;
  const auto pieces = stride_partition(transcript, cfg.window, cfg.overlap, cfg.tokenizer);
  const auto payload = serialize(verified);
  std::vector<FrequencyReport> reports;
  try {
    for (const auto& piece : pieces) {
      if (collapse_whitespace(piece.text).empty()) {
        reports.push_back(zero_report(verified));
        continue;
      }
      const auto user =
          render(ctx.prompts.frequency_user, {{"json", payload}, {"transcript", piece.text}});
      auto result = ctx.gateway.generate_structured(
          ctx.prompts.analysis_system, user, ExpectedSchema::FrequencySchema, &verified,
          RequestTag{stage::kFrequency,
                     window_key(transcript.id, 0, piece.index, pieces.size()), scope_pass, 0},
          cfg.max_repairs);
      timer.add(result.latency);
      for (auto& w : result.warnings) outcome.warnings.push_back(std::move(w));
      reports.push_back(complete_ids(result.frequencies(), verified, &outcome.warnings));
    }
    outcome.value = sum_reports(reports);
    if (pieces_out) *pieces_out = std::move(reports);
  } catch (const Error& e) {
    if (!is_stage_failure(e)) throw;
    outcome.value = zero_report(verified);
    outcome.failed = true;
    outcome.warnings.push_back(std::string("frequency counting failed: ") + e.what());
    if (pieces_out) pieces_out->clear();
  }
  outcome.elapsed_ms = timer.elapsed_ms();
  return outcome;
}

}  // namespace

StageOutcome<FrequencyReport> count_frequencies(const ThemeSet& verified,
                                                const Transcript& transcript,
                                                const PipelineContext& ctx, int scope_pass) {
  return count_frequencies_impl(verified, transcript, ctx, scope_pass, nullptr);
}

StageOutcome<FrequencyReport> verify_frequencies(std::vector<FrequencyReport>& pieces,
                                                 const Transcript& transcript,
                                                 const PipelineContext& ctx, int pass) {
  const auto& cfg = ctx.config;
  StageTimer timer(ctx.gateway.scripted_timing());
  StageOutcome<FrequencyReport> outcome;
  const auto windows = stride_partition(transcript, cfg.window, cfg.overlap, cfg.tokenizer);
  if (windows.size() != pieces.size())
    throw Error(Errc::InvalidArgument, "frequency pieces do not match transcript windows");
  std::vector<FrequencyReport> updated;
  try {
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      if (collapse_whitespace(windows[k].text).empty()) {
        updated.push_back(pieces[k]);
        continue;
      }
      const auto user = render(ctx.prompts.frequency_verify_user,
                               {{"json", serialize(pieces[k])}, {"transcript", windows[k].text}});
      auto result = ctx.gateway.generate_structured(
          ctx.prompts.verification_system, user, ExpectedSchema::FrequencySchema, nullptr,
          RequestTag{stage::kFrequencyVerify,
                     window_key(transcript.id, 0, k, pieces.size()), pass, 0},
          cfg.max_repairs);
      timer.add(result.latency);
      updated.push_back(guard_frequency_ids(pieces[k], result.frequencies(), &outcome.warnings));
    }
    pieces = std::move(updated);
  } catch (const Error& e) {
    if (!is_stage_failure(e)) throw;
    outcome.failed = true;
    outcome.warnings.push_back("frequency verification pass " + std::to_string(pass) +
                               " failed: " + e.what());
  }
  outcome.value = sum_reports(pieces);
  outcome.elapsed_ms = timer.elapsed_ms();
  return outcome;
}

// ---------------------------------------------------------------------------

AnalysisResult analyze(const Transcript& transcript, const PipelineContext& ctx, int repeat) {
  const auto& cfg = ctx.config;
  cfg.validate();
  StageTimer timer(ctx.gateway.scripted_timing());
  AnalysisResult result;
  result.transcript_id = transcript.id;
  const auto segments = segment(transcript, cfg.window, cfg.overlap, cfg.tokenizer);
  result.segment_count = segments.size();
  std::vector<ThemeSet> outputs;
  for (const auto& seg : segments) {
    try {
      auto out = extract_structured(seg, ctx, window_key(transcript.id, repeat, seg.index,
                                                         segments.size()));
      timer.add(out.latency);
      outputs.push_back(out.themes());
    } catch (const Error& e) {
      if (!is_stage_failure(e) && e.code() != Errc::EmptyTranscript) throw;
      result.failed_segments.push_back(seg.index);
      result.flags.insert(flag::kSegmentFailed);
      if (e.code() == Errc::EndpointFailure) result.flags.insert(flag::kEndpointFailure);
      result.warnings.push_back("segment " + std::to_string(seg.index) + " failed: " + e.what());
    }
  }
  if (outputs.empty()) result.flags.insert(flag::kAnalysisFailed);
  result.merged = merge_theme_sets(outputs, embed_fn(ctx.embedder), cfg.merge_threshold);
  result.merged.provenance = Provenance::analysis();
  result.elapsed_ms = timer.elapsed_ms();
  return result;
}

RunArtifacts complete_pipeline(const AnalysisResult& analysis, const Transcript& transcript,
                               const PipelineContext& ctx, const fs::path* out_dir) {
  const auto& cfg = ctx.config;
  RunArtifacts art;
  art.transcript_id = transcript.id;
  art.phase = cfg.verification_enabled ? Phase::After : Phase::Before;
  art.segment_count = analysis.segment_count;
  art.failed_segments = analysis.failed_segments;
  art.flags = analysis.flags;
  art.warnings = analysis.warnings;
  art.timings.analysis_ms = analysis.elapsed_ms;
  art.analysis = analysis.merged;
  write_json(out_dir, "analysis.json", serialize(art.analysis));

  const int limit = cfg.pass_limit();
  ThemeSet current = art.analysis;
  if (limit > 0 && !current.empty()) {
    for (int pass = 1; pass <= limit; ++pass) {
      auto outcome = verify_themes(current, transcript, ctx, pass);
      art.timings.theme_verify_ms += outcome.elapsed_ms;
      if (outcome.failed) art.flags.insert(flag::kThemeVerifyFailed);
      for (auto& w : outcome.warnings) art.warnings.push_back(std::move(w));
      const bool fixpoint = canonicalize(outcome.value) == canonicalize(current);
      art.theme_passes.push_back(outcome.value);
      write_json(out_dir, "verify_pass_" + std::to_string(pass) + ".json",
                 serialize(outcome.value));
      current = std::move(outcome.value);
      if (fixpoint) break;
      if (pass == limit) art.flags.insert(flag::kThemeCapReached);
    }
  }
  art.final_themes = current;
  write_json(out_dir, "final_themes.json", serialize(art.final_themes));

  std::vector<FrequencyReport> pieces;
  auto counted =
      count_frequencies_impl(current, transcript, ctx, art.theme_pass_count(), &pieces);
  art.timings.frequency_ms = counted.elapsed_ms;
  if (counted.failed) art.flags.insert(flag::kFrequencyFailed);
  for (auto& w : counted.warnings) art.warnings.push_back(std::move(w));
  art.freq_raw = counted.value;
  write_json(out_dir, "freq_raw.json", serialize(art.freq_raw));

  FrequencyReport report = art.freq_raw;
  if (limit > 0 && !current.empty() && !counted.failed) {
    for (int pass = 1; pass <= limit; ++pass) {
      auto outcome = verify_frequencies(pieces, transcript, ctx, pass);
      art.timings.frequency_verify_ms += outcome.elapsed_ms;
      if (outcome.failed) art.flags.insert(flag::kFrequencyVerifyFailed);
      for (auto& w : outcome.warnings) art.warnings.push_back(std::move(w));
      const bool fixpoint = canonicalize(outcome.value) == canonicalize(report);
      art.freq_passes.push_back(outcome.value);
      write_json(out_dir, "freq_verify_pass_" + std::to_string(pass) + ".json",
                 serialize(outcome.value));
      report = std::move(outcome.value);
      if (fixpoint) break;
      if (pass == limit) art.flags.insert(flag::kFrequencyCapReached);
    }
  }
  art.final_freq = report;
  write_json(out_dir, "final_freq.json", serialize(art.final_freq));
  for (const auto& w : art.warnings)
    if (w.find("EndpointFailure") != std::string::npos) art.flags.insert(flag::kEndpointFailure);
  write_json(out_dir, "artifacts.json", art.summary().dump(2));
  return art;
}

RunArtifacts run_pipeline(const Transcript& transcript, const PipelineContext& ctx,
                          const fs::path* out_dir) {
  return complete_pipeline(analyze(transcript, ctx), transcript, ctx, out_dir);
}

std::vector<ThemeSet> verify_loop(const ThemeSet& start, const Transcript& transcript,
                                  const PipelineContext& ctx, int repeat) {
  std::vector<ThemeSet> passes;
  const int limit = ctx.config.pass_limit();
  if (start.empty()) return passes;
  const ThemeSet* current = &start;
  for (int pass = 1; pass <= limit; ++pass) {
    auto outcome = verify_themes(*current, transcript, ctx, pass, repeat);
    const bool fixpoint = canonicalize(outcome.value) == canonicalize(*current);
    passes.push_back(std::move(outcome.value));
    current = &passes.back();
    if (fixpoint) break;
  }
  return passes;
}

// ---------------------------------------------------------------------------

void write_artifacts(const fs::path& dir, const RunArtifacts& art) {
  fs::create_directories(dir);
  write_json(&dir, "analysis.json", serialize(art.analysis));
  for (std::size_t i = 0; i < art.theme_passes.size(); ++i)
    write_json(&dir, "verify_pass_" + std::to_string(i + 1) + ".json",
               serialize(art.theme_passes[i]));
  write_json(&dir, "final_themes.json", serialize(art.final_themes));
  write_json(&dir, "freq_raw.json", serialize(art.freq_raw));
  for (std::size_t i = 0; i < art.freq_passes.size(); ++i)
    write_json(&dir, "freq_verify_pass_" + std::to_string(i + 1) + ".json",
               serialize(art.freq_passes[i]));
  write_json(&dir, "final_freq.json", serialize(art.final_freq));
  for (std::size_t i = 0; i < art.repeat_runs.size(); ++i)
    write_json(&dir, "repeat_run_" + std::to_string(i + 1) + ".json",
               serialize(art.repeat_runs[i]));
  for (std::size_t i = 0; i < art.repeat_passes.size(); ++i)
    for (std::size_t k = 0; k < art.repeat_passes[i].size(); ++k)
      write_json(&dir,
                 "repeat_run_" + std::to_string(i + 1) + "_pass_" + std::to_string(k + 1) + ".json",
                 serialize(art.repeat_passes[i][k]));
  write_json(&dir, "artifacts.json", art.summary().dump(2));
}

namespace {

ThemeSet read_themes(const fs::path& file, Provenance provenance) {
  auto set = theme_set_from_json(json::parse(read_file(file)));
  set.provenance = provenance;
  return set;
}

FrequencyReport read_report(const fs::path& file) {
  return frequency_report_from_json(json::parse(read_file(file)));
}

}  // namespace

RunArtifacts read_artifacts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, "no artifacts at " + dir.string());
  RunArtifacts art;
  try {
    const auto summary = json::parse(read_file(dir / "artifacts.json"));
    art.transcript_id = summary.at("transcript_id").get<std::string>();
    art.phase = parse_phase(summary.at("phase").get<std::string>());
    art.segment_count = summary.value("segment_count", std::size_t{0});
    art.failed_segments = summary.value("failed_segments", std::vector<std::size_t>{});
    for (const auto& f : summary.value("flags", std::vector<std::string>{})) art.flags.insert(f);
    art.warnings = summary.value("warnings", std::vector<std::string>{});
    art.timings = StageTimings::from_json(summary.value("timings", json::object()));

    art.analysis = read_themes(dir / "analysis.json", Provenance::analysis());
    for (int k = 1; fs::exists(dir / ("verify_pass_" + std::to_string(k) + ".json")); ++k)
      art.theme_passes.push_back(
          read_themes(dir / ("verify_pass_" + std::to_string(k) + ".json"), Provenance::verified(k)));
    art.final_themes = read_themes(dir / "final_themes.json",
                                   art.theme_passes.empty()
                                       ? Provenance::analysis()
                                       : Provenance::verified(art.theme_pass_count()));
    art.freq_raw = read_report(dir / "freq_raw.json");
    for (int k = 1; fs::exists(dir / ("freq_verify_pass_" + std::to_string(k) + ".json")); ++k)
      art.freq_passes.push_back(read_report(dir / ("freq_verify_pass_" + std::to_string(k) + ".json")));
    art.final_freq = read_report(dir / "final_freq.json");
    for (int k = 1; fs::exists(dir / ("repeat_run_" + std::to_string(k) + ".json")); ++k) {
      const auto stem = "repeat_run_" + std::to_string(k);
      art.repeat_runs.push_back(read_themes(dir / (stem + ".json"), Provenance::analysis()));
      std::vector<ThemeSet> passes;
      for (int p = 1; fs::exists(dir / (stem + "_pass_" + std::to_string(p) + ".json")); ++p)
        passes.push_back(read_themes(dir / (stem + "_pass_" + std::to_string(p) + ".json"),
                                     Provenance::verified(p)));
      art.repeat_passes.push_back(std::move(passes));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, dir.string() + ": " + e.what());
  }
  return art;
}

}  // namespace mpv
