#include "mpv/report.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>
#include <map>
#include <sstream>

#include "mpv/error.hpp"

namespace mpv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Getter = std::optional<double> ValidationRow::*;

struct MetricColumn {
  const char* name;
  const char* table_name;
  Getter field;
};

constexpr MetricColumn kColumns[] = {
    {"f1", "F1", &ValidationRow::f1},         {"sds", "SDS", &ValidationRow::sds},
    {"hr", "HR", &ValidationRow::hr},         {"tcs", "TCS", &ValidationRow::tcs},
    {"freq_r", "FREQ_R", &ValidationRow::freq_r}, {"kor", "KOR", &ValidationRow::kor},
    {"khr", "KHR", &ValidationRow::khr},      {"ari", "ARI", &ValidationRow::ari},
};

std::string exact(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::string fixed4(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string phase_label(Phase p) { return p == Phase::Before ? "Before" : "After"; }

}  // namespace

std::string report_csv(const std::vector<ValidationRow>& rows) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.model_label) + "," + std::string(to_string(r.condition)) + "," +
           std::string(to_string(r.phase));
    for (const auto& c : kColumns) out += "," + exact(r.*c.field);
    out += "\n";
  }
  return out;
}

std::vector<ValidationRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader)
    throw Error(Errc::SchemaViolation, "report CSV header mismatch");
  std::vector<ValidationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 11)
      throw Error(Errc::SchemaViolation, "report CSV row has " + std::to_string(cells.size()) + " cells");
    ValidationRow r;
    r.model_label = cells[0];
    r.condition = parse_condition(cells[1]);
    r.phase = parse_phase(cells[2]);
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
      const auto& cell = cells[3 + i];
      if (cell.empty()) continue;
      try {
        std::size_t used = 0;
        r.*kColumns[i].field = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(Errc::SchemaViolation, "bad number \"" + cell + "\" in report CSV");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> table1_header() {
  std::vector<std::string> h{"model"};
  for (const auto& c : kColumns) {
    h.push_back(std::string(c.table_name) + "_E");
    h.push_back(std::string(c.table_name) + "_N");
  }
  return h;
}

std::string table1_csv(const std::vector<ValidationRow>& rows) {
  std::string out;
  const auto header = table1_header();
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  // (model, phase) in first-appearance order
  std::vector<std::pair<std::string, Phase>> keys;
  std::map<std::pair<std::string, Phase>, std::map<Condition, const ValidationRow*>> cells;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.model_label, r.phase);
    if (!cells.contains(key)) keys.push_back(key);
    cells[key][r.condition] = &r;
  }
  for (const auto& key : keys) {
    const auto& by_cond = cells.at(key);
    out += csv_field(key.first + " (" + phase_label(key.second) + ")");
    for (const auto& c : kColumns)
      for (const auto cond : {Condition::Expert, Condition::NonExpert}) {
        auto it = by_cond.find(cond);
        out += "," + (it == by_cond.end() ? std::string() : exact(it->second->*c.field));
      }
    out += "\n";
  }
  return out;
}

std::string report_text(const json& evaluation) {
  const auto rows = [&] {
    std::vector<ValidationRow> out;
    for (const auto& r : evaluation.at("rows")) out.push_back(validation_row_from_json(r));
    return out;
  }();
  const json stats = evaluation.contains("stats") ? evaluation.at("stats") : json::object();

  std::ostringstream out;
  char buf[64];
  auto cell = [&](const std::string& s) {
    std::snprintf(buf, sizeof buf, "%10s", s.c_str());
    out << buf;
  };
  auto line = [&](const std::string& label) {
    std::snprintf(buf, sizeof buf, "%-28s", label.c_str());
    out << buf;
  };

  line("model / condition / phase");
  for (const auto& c : kColumns) cell(c.table_name);
  out << "\n";

  std::map<std::tuple<std::string, Condition, Phase>, const ValidationRow*> index;
  std::vector<std::pair<std::string, Condition>> groups;
  for (const auto& r : rows) {
    if (index.emplace(std::make_tuple(r.model_label, r.condition, r.phase), &r).second) {
      const auto g = std::make_pair(r.model_label, r.condition);
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
  }
  for (const auto& [model, cond] : groups) {
    const ValidationRow* before = nullptr;
    const ValidationRow* after = nullptr;
    if (auto it = index.find({model, cond, Phase::Before}); it != index.end()) before = it->second;
    if (auto it = index.find({model, cond, Phase::After}); it != index.end()) after = it->second;
    for (const auto* r : {before, after}) {
      if (!r) continue;
      line(model + " / " + std::string(to_string(cond)) + " / " + phase_label(r->phase));
      for (const auto& c : kColumns) cell(fixed4(r->*c.field));
      out << "\n";
    }
    if (before && after) {
      line(model + " / " + std::string(to_string(cond)) + " / delta");
      for (const auto& c : kColumns) {
        const auto b = before->*c.field;
        const auto a = after->*c.field;
        if (!a || !b) {
          cell("-");
          continue;
        }
        std::string marker;
        const json* node = &stats;
        for (const std::string key : {std::string("wilcoxon"), model, std::string(to_string(cond)),
                                      std::string(c.name)}) {
          if (!node->is_object() || !node->contains(key)) {
            node = nullptr;
            break;
          }
          node = &node->at(key);
        }
        if (node && node->value("significant", false)) marker = "*";
        std::snprintf(buf, sizeof buf, "%+.4f", *a - *b);
        cell(buf + marker);
      }
      out << "\n";
    }
  }
  out << "\n* paired Wilcoxon signed-rank p < 0.05 (Before vs After, per transcript)\n";
  if (evaluation.contains("meta")) {
    const auto& meta = evaluation.at("meta");
    out << "aggregation: " << meta.value("aggregation", std::string("mean"))
        << ", threshold: " << fixed4(meta.value("threshold", 0.0)) << "\n";
  }
  return out.str();
}

std::vector<fs::path> cmd_report(const fs::path& evaluation_file, const fs::path& out_dir) {
  if (!fs::exists(evaluation_file))
    throw Error(Errc::IoError, "evaluation file not found: " + evaluation_file.string());
  json evaluation;
  try {
    evaluation = json::parse(read_file(evaluation_file));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, evaluation_file.string() + ": " + e.what());
  }
  std::vector<ValidationRow> rows;
  for (const auto& r : evaluation.at("rows")) rows.push_back(validation_row_from_json(r));
  const fs::path dir = out_dir.empty() ? evaluation_file.parent_path() : out_dir;
  fs::create_directories(dir);
  const std::vector<fs::path> files{dir / "report.csv", dir / "table1.csv", dir / "report.txt"};
  write_file_atomic(files[0], report_csv(rows));
  write_file_atomic(files[1], table1_csv(rows));
  write_file_atomic(files[2], report_text(evaluation));
  return files;
}

}  // namespace mpv
