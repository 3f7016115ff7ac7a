#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"

namespace mpv {

inline constexpr const char* kReportCsvHeader = "model,condition,phase,f1,sds,hr,tcs,freq_r,kor,khr,ari";

/// One ValidationRow per line under `kReportCsvHeader`; undefined metrics are
/// empty cells. Numbers use 17 significant digits so the file reparses
/// exactly.
std::string report_csv(const std::vector<ValidationRow>& rows);
std::vector<ValidationRow> parse_report_csv(const std::string& text);

/// Wide layout: a "model (phase)" label followed by the eight metrics for
/// the expert and non-expert conditions, 17 columns in all.
std::string table1_csv(const std::vector<ValidationRow>& rows);
std::vector<std::string> table1_header();

/// Fixed-width text table with Before/After deltas per model and condition;
/// deltas carry '*' where the paired Wilcoxon test gives p < 0.05.
std::string report_text(const nlohmann::json& evaluation);

/// Writes report.csv, table1.csv and report.txt next to the evaluation file
/// (or into `out_dir`). Returns the written paths.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& evaluation_file,
                                              const std::filesystem::path& out_dir = {});

}  // namespace mpv
