#include "affect/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "affect/error.hpp"

namespace affect {

namespace {

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string fmt(double v, int digits = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
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

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

NamedReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open report '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  NamedReport r{path.stem().string(), EvalReport::from_json(j)};
  if (r.report.metadata.contains("policy") && r.report.metadata["policy"].is_string())
    r.name = r.report.metadata["policy"].get<std::string>();
  return r;
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  write_text(path, report.to_json().dump(2) + "\n");
}

std::string grouped_bar_svg(const std::string& title, const std::vector<std::string>& categories,
                            const std::vector<std::string>& series, const std::vector<std::vector<double>>& values) {
  const double bar_w = 18.0, group_gap = 24.0, plot_h = 240.0, left = 60.0, top = 40.0, bottom = 120.0;
  const double group_w = bar_w * static_cast<double>(series.size()) + group_gap;
  const double width = left + group_w * static_cast<double>(categories.size()) + 160.0;
  const double height = top + plot_h + bottom;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0) << "\" height=\"" << fmt(height, 0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(left, 0) << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    const double y = top + plot_h * (1.0 - v);
    svg << "<line x1=\"" << fmt(left, 0) << "\" x2=\"" << fmt(width - 160.0, 0) << "\" y1=\"" << fmt(y, 1) << "\" y2=\""
        << fmt(y, 1) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt(left - 8.0, 0) << "\" y=\"" << fmt(y + 4.0, 1) << "\" text-anchor=\"end\">" << fmt(v, 2)
        << "</text>\n";
  }
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = left + group_gap / 2.0 + group_w * static_cast<double>(c);
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = std::clamp(values[s][c], 0.0, 1.0);
      const double h = plot_h * v;
      svg << "<rect class=\"bar\" x=\"" << fmt(gx + bar_w * static_cast<double>(s), 1) << "\" y=\"" << fmt(top + plot_h - h, 1)
          << "\" width=\"" << fmt(bar_w - 2.0, 1) << "\" height=\"" << fmt(h, 1) << "\" fill=\""
          << kPalette[s % std::size(kPalette)] << "\"><title>" << xml_escape(series[s]) << " / "
          << xml_escape(categories[c]) << ": " << fmt(values[s][c], 4) << "</title></rect>\n";
    }
    const double lx = gx + bar_w * static_cast<double>(series.size()) / 2.0;
    const double ly = top + plot_h + 12.0;
    svg << "<text x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ly, 1) << "\" text-anchor=\"end\" transform=\"rotate(-40 "
        << fmt(lx, 1) << ' ' << fmt(ly, 1) << ")\">" << xml_escape(categories[c]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = top + 14.0 * static_cast<double>(s);
    const double x = width - 150.0;
    svg << "<rect x=\"" << fmt(x, 0) << "\" y=\"" << fmt(y, 0) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[s % std::size(kPalette)] << "\"/>\n";
    svg << "<text x=\"" << fmt(x + 14.0, 0) << "\" y=\"" << fmt(y + 9.0, 0) << "\">" << xml_escape(series[s]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> render_reports(const std::vector<NamedReport>& reports,
                                                  const std::filesystem::path& out_dir) {
  if (reports.empty()) throw Error(ErrorCode::SchemaMismatch, "no reports to render");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir.string() + "'");

  std::vector<std::filesystem::path> written;
  std::map<std::string, std::vector<const NamedReport*>> by_protocol;
  for (const auto& r : reports) by_protocol[r.report.protocol].push_back(&r);

  for (const auto& [protocol, group] : by_protocol) {
    std::ostringstream csv;
    csv << "report,class,support,correct,accuracy\n";
    for (const auto* r : group) {
      for (const auto& [label, s] : r->report.per_class)
        csv << csv_field(r->name) << ',' << csv_field(label) << ',' << s.support << ',' << s.correct << ','
            << fmt(s.accuracy()) << '\n';
      csv << csv_field(r->name) << ",overall," << r->report.total << ',' << r->report.correct << ','
          << fmt(r->report.accuracy) << '\n';
    }
    const auto path = out_dir / (protocol + "_accuracy.csv");
    write_text(path, csv.str());
    written.push_back(path);

    // Accuracy per report: the prompt-comparison shape.
    std::vector<std::string> names;
    std::vector<std::vector<double>> values(1);
    for (const auto* r : group) {
      names.push_back(r->name);
      values[0].push_back(r->report.accuracy);
    }
    const auto svg_path = out_dir / (protocol + "_accuracy.svg");
    write_text(svg_path, grouped_bar_svg(protocol + " accuracy", names, {"accuracy"}, values));
    written.push_back(svg_path);
  }

  // Precision@K: queries x models, one chart per K.
  std::set<std::size_t> ks;
  for (const auto& r : reports)
    for (const auto& e : r.report.precision_at_k) ks.insert(e.k);
  if (!ks.empty()) {
    std::ostringstream csv;
    csv << "report,query,k,relevant,precision\n";
    for (const auto& r : reports)
      for (const auto& e : r.report.precision_at_k)
        csv << csv_field(r.name) << ',' << csv_field(e.query) << ',' << e.k << ',' << e.relevant << ','
            << fmt(e.precision) << '\n';
    const auto path = out_dir / "precision_at_k.csv";
    write_text(path, csv.str());
    written.push_back(path);

    for (std::size_t k : ks) {
      std::set<std::string> query_set;
      for (const auto& r : reports)
        for (const auto& e : r.report.precision_at_k)
          if (e.k == k) query_set.insert(e.query);
      const std::vector<std::string> queries(query_set.begin(), query_set.end());
      std::vector<std::string> series;
      std::vector<std::vector<double>> values;
      for (const auto& r : reports) {
        std::map<std::string, double> by_query;
        for (const auto& e : r.report.precision_at_k)
          if (e.k == k) by_query[e.query] = e.precision;
        if (by_query.empty()) continue;
        series.push_back(r.name);
        std::vector<double> row;
        for (const auto& q : queries) row.push_back(by_query.count(q) ? by_query[q] : 0.0);
        values.push_back(std::move(row));
      }
      const auto svg_path = out_dir / ("precision_at_" + std::to_string(k) + ".svg");
      write_text(svg_path, grouped_bar_svg("precision@" + std::to_string(k), queries, series, values));
      written.push_back(svg_path);
    }
  }
  return written;
}

}  // namespace affect
