#include "mpv/domain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "mpv/error.hpp"

namespace mpv {

namespace fs = std::filesystem;

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownId: return "UnknownId";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::EmptyTranscript: return "EmptyTranscript";
    case Errc::EmbeddingUnavailable: return "EmbeddingUnavailable";
    case Errc::EmptyText: return "EmptyText";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::Timeout: return "Timeout";
    case Errc::HttpError: return "HttpError";
    case Errc::ConnectionRefused: return "ConnectionRefused";
    case Errc::EndpointFailure: return "EndpointFailure";
    case Errc::StructuredOutputFailure: return "StructuredOutputFailure";
    case Errc::MockScriptMiss: return "MockScriptMiss";
    case Errc::AllZeroCounts: return "AllZeroCounts";
    case Errc::EmptyTally: return "EmptyTally";
    case Errc::TooFewRuns: return "TooFewRuns";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::EmptyGold: return "EmptyGold";
    case Errc::EmptyModel: return "EmptyModel";
    case Errc::TooFewItems: return "TooFewItems";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::AllZeroDifferences: return "AllZeroDifferences";
    case Errc::ZeroPooledSd: return "ZeroPooledSd";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::UnknownStatement: return "UnknownStatement";
    case Errc::UnknownAnnotator: return "UnknownAnnotator";
    case Errc::AlreadyAdjudicated: return "AlreadyAdjudicated";
    case Errc::NotADisagreement: return "NotADisagreement";
    case Errc::NoCompleteJudgments: return "NoCompleteJudgments";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MissingGold: return "MissingGold";
    case Errc::PortInUse: return "PortInUse";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view to_string(Condition c) noexcept {
  return c == Condition::Expert ? "expert" : "nonexpert";
}

Condition parse_condition(std::string_view s) {
  if (s == "expert") return Condition::Expert;
  if (s == "nonexpert") return Condition::NonExpert;
  throw Error(Errc::SchemaViolation, "condition must be \"expert\" or \"nonexpert\", got \"" +
                                         std::string(s) + "\"");
}

std::string_view to_string(SupportStatus s) noexcept {
  switch (s) {
    case SupportStatus::Supported: return "supported";
    case SupportStatus::PartiallySupported: return "partially_supported";
    case SupportStatus::Unsupported: return "unsupported";
  }
  return "unsupported";
}

SupportStatus parse_support_status(std::string_view s) {
  if (s == "supported") return SupportStatus::Supported;
  if (s == "partially_supported" || s == "partial") return SupportStatus::PartiallySupported;
  if (s == "unsupported") return SupportStatus::Unsupported;
  throw Error(Errc::InvalidArgument, "unknown support status \"" + std::string(s) + "\"");
}

std::string_view to_string(GroundingMethod m) noexcept {
  switch (m) {
    case GroundingMethod::Containment: return "containment";
    case GroundingMethod::Embedding: return "embedding";
    case GroundingMethod::FrequencyRule: return "frequency_rule";
    case GroundingMethod::Human: return "human";
  }
  return "containment";
}

std::string_view to_string(Phase p) noexcept { return p == Phase::Before ? "before" : "after"; }

Phase parse_phase(std::string_view s) {
  if (s == "before") return Phase::Before;
  if (s == "after") return Phase::After;
  throw Error(Errc::SchemaViolation, "phase must be \"before\" or \"after\"");
}

const Subtheme* Theme::find_subtheme(std::string_view id) const {
  for (const auto& st : subthemes)
    if (st.subtheme_id == id) return &st;
  return nullptr;
}

const Theme* ThemeSet::find(std::string_view theme_id) const {
  for (const auto& t : themes)
    if (t.theme_id == theme_id) return &t;
  return nullptr;
}

const SubthemeCount* ThemeCount::find_subtheme(std::string_view id) const {
  for (const auto& s : subthemes)
    if (s.subtheme_id == id) return &s;
  return nullptr;
}

const ThemeCount* FrequencyReport::find(std::string_view theme_id) const {
  for (const auto& e : entries)
    if (e.theme_id == theme_id) return &e;
  return nullptr;
}

void check_ranges(const ValidationRow& row) {
  auto check = [&](const std::optional<double>& v, double lo, double hi, const char* name) {
    if (v && !(*v >= lo - 1e-12 && *v <= hi + 1e-12))
      throw Error(Errc::InvalidArgument, std::string(name) + " out of range: " +
                                             std::to_string(*v));
  };
  check(row.f1, 0, 1, "f1");
  check(row.sds, 0, 2, "sds");
  check(row.hr, 0, 1, "hr");
  check(row.tcs, -1, 1, "tcs");
  check(row.freq_r, -1, 1, "freq_r");
  check(row.kor, 0, 1, "kor");
  check(row.khr, 0, 1, "khr");
  check(row.ari, -1, 1, "ari");
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view extract_json_object(std::string_view text) {
  const auto start = text.find('{');
  if (start == std::string_view::npos) throw Error(Errc::NoJsonFound, "no '{' in model output");
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  throw Error(Errc::NoJsonFound, "unbalanced braces in model output");
}

namespace {

json parse_object(std::string_view text) {
  const auto body = extract_json_object(text);
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaViolation, std::string("malformed JSON: ") + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw Error(Errc::SchemaViolation, where + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw Error(Errc::SchemaViolation, where + " is missing required key \"" + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where,
                           bool non_empty) {
  const auto& v = require(obj, key, where);
  if (!v.is_string())
    throw Error(Errc::SchemaViolation, where + "." + key + " must be a string");
  auto s = v.get<std::string>();
  if (non_empty && collapse_whitespace(s).empty())
    throw Error(Errc::SchemaViolation, where + "." + key + " must be non-empty");
  return s;
}

const json& require_array(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_array()) throw Error(Errc::SchemaViolation, where + "." + key + " must be an array");
  return v;
}

std::int64_t require_count(const json& obj, const std::string& where) {
  const auto& v = require(obj, "count", where);
  if (!v.is_number_integer())
    throw Error(Errc::SchemaViolation, where + ".count must be an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX))
      throw Error(Errc::SchemaViolation, where + ".count too large");
    return static_cast<std::int64_t>(u);
  }
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw Error(Errc::SchemaViolation, where + ".count must be non-negative");
  return n;
}

std::string trimmed(std::string_view s) { return collapse_whitespace(s); }

std::vector<Theme> themes_from_array(const json& arr) {
  std::vector<Theme> themes;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "themes[" + std::to_string(i) + "]";
    const auto& t = arr[i];
    Theme theme;
    theme.theme_id = trimmed(require_string(t, "theme_id", where, true));
    theme.description = require_string(t, "description", where, true);
    if (!seen.insert(theme.theme_id).second)
      throw Error(Errc::DuplicateId, "duplicate theme_id \"" + theme.theme_id + "\"");
    const auto& subs = require_array(t, "subthemes", where);
    std::set<std::string> seen_sub;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const std::string swhere = where + ".subthemes[" + std::to_string(k) + "]";
      Subtheme st;
      st.subtheme_id = trimmed(require_string(subs[k], "subtheme_id", swhere, true));
      st.description = require_string(subs[k], "description", swhere, true);
      if (!seen_sub.insert(st.subtheme_id).second)
        throw Error(Errc::DuplicateId, "duplicate subtheme_id \"" + st.subtheme_id +
                                           "\" in theme \"" + theme.theme_id + "\"");
      const auto& quotes = require_array(subs[k], "quotes", swhere);
      for (const auto& q : quotes) {
        if (!q.is_string()) throw Error(Errc::SchemaViolation, swhere + ".quotes must be strings");
        st.quotes.push_back(q.get<std::string>());
      }
      theme.subthemes.push_back(std::move(st));
    }
    themes.push_back(std::move(theme));
  }
  return themes;
}

}  // namespace

ThemeSet theme_set_from_json(const json& j) {
  ThemeSet set;
  set.themes = themes_from_array(require_array(j, "themes", "document"));
  return set;
}

ThemeSet parse_theme_set(std::string_view text) { return theme_set_from_json(parse_object(text)); }

FrequencyReport frequency_report_from_json(const json& j) {
  FrequencyReport report;
  const auto& arr = require_array(j, "theme_frequencies", "document");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "theme_frequencies[" + std::to_string(i) + "]";
    ThemeCount tc;
    tc.theme_id = trimmed(require_string(arr[i], "theme_id", where, true));
    tc.count = require_count(arr[i], where);
    if (!seen.insert(tc.theme_id).second)
      throw Error(Errc::DuplicateId, "duplicate theme_id \"" + tc.theme_id + "\" in frequencies");
    if (auto it = arr[i].find("subthemes"); it != arr[i].end()) {
      if (!it->is_array()) throw Error(Errc::SchemaViolation, where + ".subthemes must be an array");
      std::set<std::string> seen_sub;
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string swhere = where + ".subthemes[" + std::to_string(k) + "]";
        SubthemeCount sc;
        sc.subtheme_id = trimmed(require_string((*it)[k], "subtheme_id", swhere, true));
        sc.count = require_count((*it)[k], swhere);
        if (!seen_sub.insert(sc.subtheme_id).second)
          throw Error(Errc::DuplicateId, "duplicate subtheme_id \"" + sc.subtheme_id + "\"");
        tc.subthemes.push_back(std::move(sc));
      }
    }
    report.entries.push_back(std::move(tc));
  }
  return report;
}

FrequencyReport parse_frequency_payload(std::string_view text) {
  return frequency_report_from_json(parse_object(text));
}

FrequencyReport parse_frequency_report(std::string_view text, const ThemeSet& scope) {
  auto report = parse_frequency_payload(text);
  std::vector<std::string> dropped;
  restrict_to_scope(report, scope, &dropped);
  if (!dropped.empty())
    throw Error(Errc::UnknownId, "id \"" + dropped.front() + "\" not present in theme scope");
  return report;
}

FrequencyReport restrict_to_scope(const FrequencyReport& report, const ThemeSet& scope,
                                  std::vector<std::string>* dropped) {
  FrequencyReport out;
  for (const auto& e : report.entries) {
    const Theme* theme = scope.find(e.theme_id);
    if (!theme) {
      if (dropped) dropped->push_back(e.theme_id);
      continue;
    }
    ThemeCount kept{e.theme_id, e.count, {}};
    for (const auto& s : e.subthemes) {
      if (theme->find_subtheme(s.subtheme_id)) {
        kept.subthemes.push_back(s);
      } else if (dropped) {
        dropped->push_back(e.theme_id + "/" + s.subtheme_id);
      }
    }
    out.entries.push_back(std::move(kept));
  }
  return out;
}

json to_json(const std::vector<Theme>& themes) {
  json arr = json::array();
  for (const auto& t : themes) {
    json subs = json::array();
    for (const auto& st : t.subthemes)
      subs.push_back({{"subtheme_id", st.subtheme_id},
                      {"description", st.description},
                      {"quotes", st.quotes}});
    arr.push_back({{"theme_id", t.theme_id}, {"description", t.description}, {"subthemes", subs}});
  }
  return arr;
}

json to_json(const ThemeSet& set) { return json{{"themes", to_json(set.themes)}}; }

json to_json(const FrequencyReport& report) {
  json arr = json::array();
  for (const auto& e : report.entries) {
    json subs = json::array();
    for (const auto& s : e.subthemes)
      subs.push_back({{"subtheme_id", s.subtheme_id}, {"count", s.count}});
    arr.push_back({{"theme_id", e.theme_id}, {"count", e.count}, {"subthemes", subs}});
  }
  return json{{"theme_frequencies", arr}};
}

std::string serialize(const ThemeSet& set) { return to_json(set).dump(2); }
std::string serialize(const FrequencyReport& report) { return to_json(report).dump(2); }

std::string canonicalize(const ThemeSet& set) {
  std::vector<json> themes;
  for (const auto& t : set.themes) {
    std::vector<json> subs;
    for (const auto& st : t.subthemes) {
      std::vector<std::string> quotes;
      for (const auto& q : st.quotes) quotes.push_back(collapse_whitespace(q));
      std::sort(quotes.begin(), quotes.end());
      subs.push_back({{"subtheme_id", collapse_whitespace(st.subtheme_id)},
                      {"description", collapse_whitespace(st.description)},
                      {"quotes", quotes}});
    }
    std::sort(subs.begin(), subs.end(), [](const json& a, const json& b) {
      return a["subtheme_id"].get_ref<const std::string&>() <
             b["subtheme_id"].get_ref<const std::string&>();
    });
    themes.push_back({{"theme_id", collapse_whitespace(t.theme_id)},
                      {"description", collapse_whitespace(t.description)},
                      {"subthemes", subs}});
  }
  std::sort(themes.begin(), themes.end(), [](const json& a, const json& b) {
    return a["theme_id"].get_ref<const std::string&>() < b["theme_id"].get_ref<const std::string&>();
  });
  return json{{"themes", themes}}.dump();
}

std::string canonicalize(const FrequencyReport& report) {
  std::vector<json> entries;
  for (const auto& e : report.entries) {
    std::vector<json> subs;
    for (const auto& s : e.subthemes)
      subs.push_back({{"subtheme_id", collapse_whitespace(s.subtheme_id)}, {"count", s.count}});
    std::sort(subs.begin(), subs.end(), [](const json& a, const json& b) {
      return a["subtheme_id"].get_ref<const std::string&>() <
             b["subtheme_id"].get_ref<const std::string&>();
    });
    entries.push_back(
        {{"theme_id", collapse_whitespace(e.theme_id)}, {"count", e.count}, {"subthemes", subs}});
  }
  std::sort(entries.begin(), entries.end(), [](const json& a, const json& b) {
    return a["theme_id"].get_ref<const std::string&>() < b["theme_id"].get_ref<const std::string&>();
  });
  return json{{"theme_frequencies", entries}}.dump();
}

FrequencyReport zero_report(const ThemeSet& scope) {
  FrequencyReport r;
  for (const auto& t : scope.themes) {
    ThemeCount tc{t.theme_id, 0, {}};
    for (const auto& st : t.subthemes) tc.subthemes.push_back({st.subtheme_id, 0});
    r.entries.push_back(std::move(tc));
  }
  return r;
}

// ---------------------------------------------------------------------------

GoldStandard gold_from_json(const json& j) {
  GoldStandard g;
  g.transcript_id = require_string(j, "transcript_id", "gold", true);
  const auto& themes = require(j, "themes", "gold");
  if (!themes.is_array() && !themes.is_object())
    throw Error(Errc::SchemaViolation, "gold.themes must be an array or theme document");
  g.themes = themes_from_array(themes.is_object() ? require_array(themes, "themes", "gold.themes")
                                                  : themes);
  for (const auto& k : require_array(j, "keywords", "gold")) {
    if (!k.is_string()) throw Error(Errc::SchemaViolation, "gold.keywords must be strings");
    g.keywords.push_back(k.get<std::string>());
  }
  const auto& counts = require(j, "counts", "gold");
  g.counts = counts.is_array() ? frequency_report_from_json(json{{"theme_frequencies", counts}})
                               : frequency_report_from_json(counts);
  ThemeSet scope{g.themes, {}};
  std::vector<std::string> dropped;
  restrict_to_scope(g.counts, scope, &dropped);
  if (!dropped.empty())
    throw Error(Errc::UnknownId, "gold counts reference unknown id \"" + dropped.front() + "\"");
  if (auto it = j.find("cluster_labels"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::SchemaViolation, "gold.cluster_labels must be an object");
    for (const auto& [quote, theme] : it->items()) {
      if (!theme.is_string() || !scope.find(theme.get<std::string>()))
        throw Error(Errc::UnknownId, "cluster label for \"" + quote + "\" is not a gold theme id");
      g.cluster_labels[quote] = theme.get<std::string>();
    }
  }
  return g;
}

json to_json(const GoldStandard& gold) {
  return json{{"transcript_id", gold.transcript_id},
              {"themes", to_json(gold.themes)},
              {"keywords", gold.keywords},
              {"counts", to_json(gold.counts)},
              {"cluster_labels", gold.cluster_labels}};
}

GoldStandard load_gold(const fs::path& file) {
  try {
    return gold_from_json(json::parse(read_file(file)));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, file.string() + ": " + e.what());
  }
}

Transcript load_transcript(const fs::path& txt_file) {
  Transcript t;
  t.text = read_file(txt_file);
  const auto stem = txt_file.stem().string();
  const auto meta_path = txt_file.parent_path() / (stem + ".meta.json");
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, meta_path.string() + ": " + e.what());
  }
  t.id = require_string(meta, "id", meta_path.string(), true);
  t.condition = parse_condition(require_string(meta, "condition", meta_path.string(), true));
  for (const auto& [k, v] : meta.items()) {
    if (k == "id" || k == "condition") continue;
    t.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (collapse_whitespace(t.text).empty())
    throw Error(Errc::EmptyTranscript, "transcript \"" + t.id + "\" is empty");
  return t;
}

std::vector<Transcript> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::ConfigError, "corpus dir not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Transcript> out;
  std::set<std::string> ids;
  for (const auto& f : files) {
    out.push_back(load_transcript(f));
    if (!ids.insert(out.back().id).second)
      throw Error(Errc::DuplicateId, "transcript id \"" + out.back().id + "\" appears twice");
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::string_view to_string(StatementKind k) noexcept {
  return k == StatementKind::ThemeAssertion ? "theme_assertion" : "frequency_claim";
}

json to_json(const Statement& s) {
  json j{{"id", s.id},
         {"kind", std::string(to_string(s.kind))},
         {"text", s.text},
         {"source", {{"transcript_id", s.source.transcript_id}, {"stage", s.source.stage}}}};
  if (s.claim) {
    j["claim"] = {{"theme_id", s.claim->theme_id},
                  {"subtheme_id", s.claim->subtheme_id ? json(*s.claim->subtheme_id) : json(nullptr)},
                  {"claimed_count", s.claim->claimed_count}};
  } else {
    j["claim"] = nullptr;
  }
  return j;
}

Statement statement_from_json(const json& j) {
  try {
    Statement s;
    s.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "theme_assertion") {
      s.kind = StatementKind::ThemeAssertion;
    } else if (kind == "frequency_claim") {
      s.kind = StatementKind::FrequencyClaim;
    } else {
      throw Error(Errc::SchemaViolation, "unknown statement kind \"" + kind + "\"");
    }
    s.text = j.value("text", std::string());
    if (j.contains("source")) {
      s.source.transcript_id = j.at("source").value("transcript_id", std::string());
      s.source.stage = j.at("source").value("stage", std::string());
    }
    if (j.contains("claim") && !j.at("claim").is_null()) {
      const auto& c = j.at("claim");
      FrequencyClaim claim;
      claim.theme_id = c.at("theme_id").get<std::string>();
      if (c.contains("subtheme_id") && !c.at("subtheme_id").is_null())
        claim.subtheme_id = c.at("subtheme_id").get<std::string>();
      claim.claimed_count = c.at("claimed_count").get<std::int64_t>();
      s.claim = claim;
    }
    if (s.id.empty()) throw Error(Errc::SchemaViolation, "statement id is empty");
    if (s.kind == StatementKind::FrequencyClaim && !s.claim)
      throw Error(Errc::SchemaViolation, "frequency claim " + s.id + " has no claim");
    if (s.kind == StatementKind::ThemeAssertion && collapse_whitespace(s.text).empty())
      throw Error(Errc::SchemaViolation, "theme assertion " + s.id + " has no text");
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("statement: ") + e.what());
  }
}

namespace {
json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> number_or_null(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}
}  // namespace

json to_json(const ValidationRow& row) {
  return json{{"model", row.model_label},
              {"condition", to_string(row.condition)},
              {"phase", to_string(row.phase)},
              {"f1", optional_number(row.f1)},
              {"sds", optional_number(row.sds)},
              {"hr", optional_number(row.hr)},
              {"tcs", optional_number(row.tcs)},
              {"freq_r", optional_number(row.freq_r)},
              {"kor", optional_number(row.kor)},
              {"khr", optional_number(row.khr)},
              {"ari", optional_number(row.ari)}};
}

ValidationRow validation_row_from_json(const json& j) {
  ValidationRow r;
  r.model_label = j.at("model").get<std::string>();
  r.condition = parse_condition(j.at("condition").get<std::string>());
  r.phase = parse_phase(j.at("phase").get<std::string>());
  r.f1 = number_or_null(j, "f1");
  r.sds = number_or_null(j, "sds");
  r.hr = number_or_null(j, "hr");
  r.tcs = number_or_null(j, "tcs");
  r.freq_r = number_or_null(j, "freq_r");
  r.kor = number_or_null(j, "kor");
  r.khr = number_or_null(j, "khr");
  r.ari = number_or_null(j, "ari");
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace mpv
