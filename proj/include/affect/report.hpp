#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "affect/evaluation.hpp"

namespace affect {

struct NamedReport {
  std::string name;
  EvalReport report;
};

// Loads a report JSON file; the name is the policy recorded in the report
// metadata, else the file stem. Throws SchemaMismatch.
NamedReport load_report(const std::filesystem::path& path);
void save_report(const EvalReport& report, const std::filesystem::path& path);

// Per-protocol accuracy CSVs (one row per class plus an overall row per
// report), a precision@K CSV when any report carries retrieval numbers,
// and grouped bar charts as SVG. Returns the files written. Throws
// SchemaMismatch on an empty list.
std::vector<std::filesystem::path> render_reports(const std::vector<NamedReport>& reports,
                                                  const std::filesystem::path& out_dir);

// Bar chart with one group per category and one bar per series.
std::string grouped_bar_svg(const std::string& title, const std::vector<std::string>& categories,
                            const std::vector<std::string>& series, const std::vector<std::vector<double>>& values);

}  // namespace affect
