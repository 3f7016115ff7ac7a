#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <random>

#include "mpv/error.hpp"

namespace fixtures {

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          (prefix + "-" + std::to_string(stamp) + "-" + std::to_string(rd()) + "-" +
           std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

mpv::Subtheme sub(std::string id, std::string description, std::vector<std::string> quotes) {
  return {std::move(id), std::move(description), std::move(quotes)};
}

mpv::Theme theme(std::string id, std::string description, std::vector<mpv::Subtheme> subthemes) {
  return {std::move(id), std::move(description), std::move(subthemes)};
}

mpv::ThemeSet themes(std::vector<mpv::Theme> list) { return mpv::ThemeSet{std::move(list), {}}; }

mpv::FrequencyReport counts(const std::vector<Count>& list) {
  mpv::FrequencyReport r;
  for (const auto& c : list) {
    mpv::ThemeCount tc{c.theme_id, c.count, {}};
    for (const auto& [id, n] : c.subthemes) tc.subthemes.push_back({id, n});
    r.entries.push_back(std::move(tc));
  }
  return r;
}

void write_transcript(const fs::path& corpus_dir, const std::string& id, mpv::Condition condition,
                      const std::string& text) {
  fs::create_directories(corpus_dir);
  mpv::write_file_atomic(corpus_dir / (id + ".txt"), text);
  const json meta{{"id", id}, {"condition", std::string(mpv::to_string(condition))}};
  mpv::write_file_atomic(corpus_dir / (id + ".meta.json"), meta.dump(2));
}

void write_gold(const fs::path& gold_dir, const mpv::GoldStandard& gold) {
  fs::create_directories(gold_dir);
  mpv::write_file_atomic(gold_dir / (gold.transcript_id + ".json"), mpv::to_json(gold).dump(2));
}

MockScript& MockScript::raw(const std::string& stage, const std::string& tid, int pass, int attempt,
                            const std::string& response) {
  mpv::MockEntry e;
  e.stage = stage;
  e.transcript_id = tid;
  e.pass = pass;
  e.attempt = attempt;
  e.response = response;
  entries_.push_back(std::move(e));
  return *this;
}

MockScript& MockScript::analysis(const std::string& tid, const mpv::ThemeSet& reply) {
  return raw(mpv::stage::kAnalysis, tid, 0, 0, mpv::serialize(reply));
}

MockScript& MockScript::theme_verify(const std::string& tid, int pass, const mpv::ThemeSet& reply) {
  return raw(mpv::stage::kThemeVerify, tid, pass, 0, mpv::serialize(reply));
}

MockScript& MockScript::frequency(const std::string& tid, int scope_pass, const mpv::FrequencyReport& reply) {
  return raw(mpv::stage::kFrequency, tid, scope_pass, 0, mpv::serialize(reply));
}

MockScript& MockScript::frequency_verify(const std::string& tid, int pass, const mpv::FrequencyReport& reply) {
  return raw(mpv::stage::kFrequencyVerify, tid, pass, 0, mpv::serialize(reply));
}

MockScript& MockScript::failing(const std::string& stage, const std::string& tid, int pass, int status,
                                int fail_times, const std::string& response) {
  raw(stage, tid, pass, 0, response);
  entries_.back().status = status;
  entries_.back().fail_times = fail_times;
  return *this;
}

json MockScript::to_json() const { return mpv::mock_script_to_json(entries_); }

void MockScript::write(const fs::path& file) const {
  fs::create_directories(file.parent_path());
  mpv::write_file_atomic(file, to_json().dump(2));
}

json scenario_config(const Scenario& s, const std::vector<std::string>& model_labels, const json& overrides) {
  json endpoints = json::array();
  for (const auto& label : model_labels)
    endpoints.push_back({{"model_label", label}, {"base_url", "http://127.0.0.1:9"}, {"backoff_ms", 1}});
  json j{{"corpus_dir", s.corpus.string()},
         {"gold_dir", s.gold.string()},
         {"output_dir", s.runs.string()},
         {"endpoints", endpoints},
         {"mock_script", s.mock.string()},
         {"embedding", {{"kind", "deterministic_test"}, {"dimension", 256}}},
         {"pipeline", {{"tokenizer", {{"mode", "whitespace"}}}}},
         {"tcs_runs", 3}};
  for (const auto& [k, v] : overrides.items()) j[k] = v;
  return j;
}

namespace {

const char* kInterview =
    "Interviewer: How do you look after your accounts online?\n"
    "Participant: Honestly the privacy settings are confusing and I never know what is shared. "
    "The menus keep changing after updates. "
    "I turn off location tracking on every new phone. "
    "I worry about data brokers selling my profile. "
    "The consent forms are too long to read. "
    "My bank app asks for my contacts for no reason.\n";

Scenario layout(const fs::path& root) {
  Scenario s;
  s.root = root;
  s.corpus = root / "corpus";
  s.gold = root / "gold";
  s.mock = root / "mock.json";
  s.config = root / "config.json";
  s.runs = root / "runs";
  return s;
}

void finish(Scenario& s, const MockScript& script, const std::vector<std::string>& labels) {
  script.write(s.mock);
  mpv::write_file_atomic(s.config, scenario_config(s, labels).dump(2));
}

mpv::Theme settings_theme() {
  return theme("T1", "the privacy settings are confusing",
               {sub("ST1", "The menus keep changing after updates", {"The menus keep changing after updates"})});
}

mpv::Theme brokers_theme() {
  return theme("T2", "worry about data brokers selling my profile",
               {sub("ST1", "The consent forms are too long to read", {"The consent forms are too long to read"})});
}

mpv::GoldStandard two_theme_gold(const std::string& tid) {
  mpv::GoldStandard g;
  g.transcript_id = tid;
  g.themes = {settings_theme(), brokers_theme()};
  g.keywords = {"privacy settings", "data brokers"};
  g.counts = counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 3}}}});
  return g;
}

void two_transcripts(Scenario& s) {
  s.transcript_ids = {"P01", "P02"};
  write_transcript(s.corpus, "P01", mpv::Condition::Expert, kInterview);
  write_transcript(s.corpus, "P02", mpv::Condition::NonExpert, kInterview);
}

}  // namespace

Scenario hallucination_scenario(const fs::path& root) {
  Scenario s = layout(root);
  two_transcripts(s);
  const auto invented = theme("T3", "quantum telescope maintenance schedules");
  const auto grounded = themes({settings_theme(), brokers_theme()});
  auto with_invented = grounded;
  with_invented.themes.push_back(invented);

  MockScript script;
  for (const auto& tid : s.transcript_ids) {
    write_gold(s.gold, two_theme_gold(tid));
    script.analysis(tid, with_invented)
        .theme_verify(tid, 1, grounded)
        .theme_verify(tid, 2, grounded)
        // Before: no verification, so the scope still holds the invented theme.
        .frequency(tid, 0, counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 5}}}, {"T3", 2, {}}}))
        .frequency(tid, 2, counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 5}}}}))
        .frequency_verify(tid, 1, counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 3}}}}))
        .frequency_verify(tid, 2, counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 3}}}}));
  }
  finish(s, script, {"model-a"});
  return s;
}

Scenario never_converging_scenario(const fs::path& root) {
  Scenario s = layout(root);
  s.transcript_ids = {"P01"};
  write_transcript(s.corpus, "P01", mpv::Condition::Expert, kInterview);
  write_gold(s.gold, two_theme_gold("P01"));

  const auto t3 = theme("T3", "I turn off location tracking on every new phone");
  const auto t4 = theme("T4", "My bank app asks for my contacts");
  const auto all = themes({settings_theme(), brokers_theme(), t3, t4});
  MockScript script;
  script.analysis("P01", all)
      .theme_verify("P01", 1, themes({settings_theme(), brokers_theme(), t3}))
      .theme_verify("P01", 2, themes({settings_theme(), brokers_theme()}))
      .theme_verify("P01", 3, themes({settings_theme()}))
      .frequency("P01", 0, counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 3}}}, {"T3", 1, {}}, {"T4", 1, {}}}))
      .frequency("P01", 3, counts({{"T1", 5, {{"ST1", 4}}}}))
      .frequency_verify("P01", 1, counts({{"T1", 6, {{"ST1", 4}}}}))
      .frequency_verify("P01", 2, counts({{"T1", 7, {{"ST1", 4}}}}))
      .frequency_verify("P01", 3, counts({{"T1", 8, {{"ST1", 4}}}}))
      // Never reached: the loops stop at the cap.
      .theme_verify("P01", 4, themes({}))
      .frequency_verify("P01", 4, counts({{"T1", 9, {{"ST1", 4}}}}));
  finish(s, script, {"model-a"});
  return s;
}

Scenario perfect_scenario(const fs::path& root) {
  Scenario s = layout(root);
  two_transcripts(s);
  MockScript script;
  for (const auto& tid : s.transcript_ids) {
    mpv::GoldStandard g;
    g.transcript_id = tid;
    g.themes = {theme("T1", "the privacy settings are confusing",
                      {sub("ST1", "The menus keep changing after updates",
                           {"the privacy settings are confusing", "The menus keep changing after updates"})}),
                theme("T2", "worry about data brokers selling my profile",
                      {sub("ST1", "The consent forms are too long to read",
                           {"I worry about data brokers selling my profile",
                            "The consent forms are too long to read"})})};
    g.keywords = {"the privacy settings are confusing", "The menus keep changing after updates",
                  "worry about data brokers selling my profile", "The consent forms are too long to read"};
    g.counts = counts({{"T1", 5, {{"ST1", 4}}}, {"T2", 6, {{"ST1", 3}}}});
    write_gold(s.gold, g);
    const mpv::ThemeSet out{g.themes, {}};
    script.analysis(tid, out)
        .theme_verify(tid, 1, out)
        .frequency(tid, 0, g.counts)
        .frequency(tid, 1, g.counts)
        .frequency_verify(tid, 1, g.counts);
  }
  finish(s, script, {"model-a"});
  return s;
}

Scenario paraphrase_scenario(const fs::path& root) {
  Scenario s = layout(root);
  two_transcripts(s);
  const auto gold_themes = std::vector<mpv::Theme>{
      theme("T1", "the privacy settings are confusing"),
      theme("T2", "worry about data brokers selling my profile"),
      theme("T3", "turning off location tracking on phones"),
      theme("T4", "consent forms are too long to read"),
  };
  // Cosine to the paired gold description (256-dim trigram embedder) in the
  // comments: 3, 2 and 1 pairs survive at 0.70, 0.80 and 0.90.
  const auto model = themes({
      theme("M1", "privacy setting is confusing"),                  // 0.77
      theme("M2", "worries about data brokers selling profiles"),   // 0.83
      theme("M3", "location tracking switched off"),                // 0.64
      theme("M4", "consent forms are much too long to read"),       // 0.94
  });
  MockScript script;
  for (const auto& tid : s.transcript_ids) {
    mpv::GoldStandard g;
    g.transcript_id = tid;
    g.themes = gold_themes;
    g.keywords = {"privacy settings", "data brokers", "location tracking", "consent forms"};
    g.counts = counts({{"T1", 3, {}}, {"T2", 2, {}}, {"T3", 4, {}}, {"T4", 1, {}}});
    write_gold(s.gold, g);
    const auto c = counts({{"M1", 3, {}}, {"M2", 2, {}}, {"M3", 4, {}}, {"M4", 1, {}}});
    script.analysis(tid, model).theme_verify(tid, 1, model).frequency(tid, 0, c).frequency(tid, 1, c)
        .frequency_verify(tid, 1, c);
  }
  finish(s, script, {"model-a"});
  return s;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), dir).string()] = mpv::read_file(entry.path());
  return out;
}

}  // namespace fixtures
