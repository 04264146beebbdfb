#include "rrl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rrl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& raw, std::size_t row_no, const std::string& col) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::invalid_argument("plot: data row " + std::to_string(row_no) + " column '" +
                                col + "': expected a number, got '" + raw + "'");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct Point {
  double x, y, band;
};

struct Series {
  std::string name;
  std::vector<Point> points;
};

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv_text(const std::string& text) {
  CsvTable out;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(stream, line)) {
    line_no += 1;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (!have_header) out.comments.push_back(t);
      continue;
    }
    std::vector<std::string> fields = split_fields(t);
    if (!have_header) {
      out.columns = fields;
      have_header = true;
      continue;
    }
    if (fields.size() != out.columns.size())
      throw std::invalid_argument("csv: line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(out.columns.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    out.rows.push_back(std::move(fields));
  }
  if (!have_header) throw std::invalid_argument("csv: no header row found");
  return out;
}

CsvTable load_csv_file(const std::string& path) {
  return parse_csv_text(read_text_file(path));
}

std::string csv_to_text(const CsvTable& table) {
  std::ostringstream out;
  for (const std::string& c : table.comments) out << c << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

std::string render_line_chart(const CsvTable& table, const PlotOptions& options,
                              std::vector<std::string>* warnings) {
  int xi = table.column_index(options.x_col);
  int yi = table.column_index(options.y_col);
  if (xi < 0)
    throw std::invalid_argument("plot: x column '" + options.x_col + "' not found");
  if (yi < 0)
    throw std::invalid_argument("plot: y column '" + options.y_col + "' not found");
  int si = options.std_col.empty() ? -1 : table.column_index(options.std_col);
  if (!options.std_col.empty() && si < 0 && warnings)
    warnings->push_back("plot: std column '" + options.std_col +
                        "' not found; bands omitted");
  int gi = options.group_col.empty() ? -1 : table.column_index(options.group_col);
  if (!options.group_col.empty() && gi < 0)
    throw std::invalid_argument("plot: group column '" + options.group_col +
                                "' not found");
  if (table.rows.empty()) throw std::invalid_argument("plot: no data rows");

  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string name = gi < 0 ? "" : row[gi];
    auto it = index.find(name);
    if (it == index.end()) {
      index.emplace(name, series.size());
      series.push_back({name, {}});
      it = index.find(name);
    }
    Point p;
    p.x = parse_cell(row[xi], r + 1, options.x_col);
    p.y = parse_cell(row[yi], r + 1, options.y_col);
    p.band = si < 0 ? 0.0
                    : options.band_scale * parse_cell(row[si], r + 1, options.std_col);
    series[it->second].points.push_back(p);
  }
  for (Series& s : series)
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const Point& a, const Point& b) { return a.x < b.x; });

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series)
    for (const Point& p : s.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y - p.band);
      ymax = std::max(ymax, p.y + p.band);
    }
  if (xmax - xmin < 1e-12) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double W = options.width, H = options.height;
  const double ml = 64, mr = 16, mt = options.title.empty() ? 16 : 40, mb = 48;
  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width
      << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << " "
      << options.height << "\">\n";
  svg << "<rect width=\"" << options.width << "\" height=\"" << options.height
      << "\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg << "<text x=\"" << fmt(W / 2) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << escape_xml(options.title) << "</text>\n";

  // grid and axis ticks
  const int ticks = 5;
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
  for (int i = 0; i <= ticks; ++i) {
    double xv = xmin + (xmax - xmin) * i / ticks;
    double yv = ymin + (ymax - ymin) * i / ticks;
    svg << "<line x1=\"" << fmt(X(xv)) << "\" y1=\"" << fmt(Y(ymin)) << "\" x2=\""
        << fmt(X(xv)) << "\" y2=\"" << fmt(Y(ymax))
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << fmt(X(xmin)) << "\" y1=\"" << fmt(Y(yv)) << "\" x2=\""
        << fmt(X(xmax)) << "\" y2=\"" << fmt(Y(yv))
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(X(xv)) << "\" y=\"" << fmt(H - mb + 16)
        << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    svg << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(Y(yv) + 4)
        << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\""
      << fmt(W - ml - mr) << "\" height=\"" << fmt(H - mt - mb)
      << "\" fill=\"none\" stroke=\"#888\"/>\n";

  // axis labels
  std::string xl = options.x_label.empty() ? options.x_col : options.x_label;
  std::string yl = options.y_label.empty() ? options.y_col : options.y_label;
  svg << "<text x=\"" << fmt(ml + (W - ml - mr) / 2) << "\" y=\"" << fmt(H - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape_xml(xl) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << fmt(mt + (H - mt - mb) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 14 "
      << fmt(mt + (H - mt - mb) / 2) << ")\">" << escape_xml(yl) << "</text>\n";

  // bands first so every line stays visible
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (si < 0 || series[s].points.size() < 2) continue;
    const char* color = kPalette[s % kPaletteSize];
    std::ostringstream d;
    const auto& pts = series[s].points;
    for (std::size_t i = 0; i < pts.size(); ++i)
      d << (i ? " L " : "M ") << fmt(X(pts[i].x)) << " " << fmt(Y(pts[i].y + pts[i].band));
    for (std::size_t i = pts.size(); i-- > 0;)
      d << " L " << fmt(X(pts[i].x)) << " " << fmt(Y(pts[i].y - pts[i].band));
    d << " Z";
    svg << "<path class=\"band\" d=\"" << d.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].points.size(); ++i) {
      const Point& p = series[s].points[i];
      svg << (i ? " " : "") << fmt(X(p.x)) << "," << fmt(Y(p.y));
    }
    svg << "\"/>\n";
    for (const Point& p : series[s].points)
      svg << "<circle cx=\"" << fmt(X(p.x)) << "\" cy=\"" << fmt(Y(p.y))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
  }

  // legend
  if (gi >= 0) {
    double lx = ml + 12, ly = mt + 14;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % kPaletteSize];
      svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
          << fmt(lx + 20) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly)
          << "\" font-family=\"sans-serif\" font-size=\"12\">"
          << escape_xml(series[s].name) << "</text>\n";
      ly += 16;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace rrl
