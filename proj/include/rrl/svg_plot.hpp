#pragma once

#include <string>
#include <vector>

namespace rrl {

// Minimal CSV with one header row; '#' lines before the header are kept as
// comments. Every data row must match the header's field count.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable parse_csv_text(const std::string& text);  // errors name the line number
CsvTable load_csv_file(const std::string& path);
std::string csv_to_text(const CsvTable& table);

struct PlotOptions {
  std::string x_col = "perturb_value";
  std::string y_col = "mean_return";
  std::string std_col = "std_return";  // optional; bands dropped when absent
  std::string group_col = "algo";      // empty: single unnamed series
  std::string title;
  std::string x_label;  // defaults to x_col
  std::string y_label;  // defaults to y_col
  int width = 760;
  int height = 460;
  double band_scale = 0.5;  // shaded region = mean +- band_scale * std
};

// Renders a self-contained SVG line chart: one polyline per group plus a
// shaded +-band_scale*std band when the std column is present. Deterministic
// for identical input. Warnings (e.g. missing std column) are appended to
// *warnings when given.
std::string render_line_chart(const CsvTable& table, const PlotOptions& options,
                              std::vector<std::string>* warnings = nullptr);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rrl
