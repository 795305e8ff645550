#include "gradepred/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradepred/error.hpp"

namespace gradepred {

using nlohmann::json;

namespace {

json histogram_json(const std::map<std::size_t, std::size_t>& hist) {
  json out = json::array();
  for (const auto& [degree, count] : hist) out.push_back({degree, count});
  return out;
}

std::string fixed(double v, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"};

}  // namespace

json graph_stats_json(const GraphStats& stats) {
  return {{"students", stats.students},
          {"challenges", stats.challenges},
          {"nodes", stats.nodes},
          {"edges", stats.edges},
          {"density", stats.density},
          {"degree_histogram",
           {{"students", histogram_json(stats.student_degree_histogram)},
            {"challenges", histogram_json(stats.challenge_degree_histogram)}}}};
}

json confusion_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.counts) rows.push_back(row);
  return rows;
}

json classification_report_json(const ClassificationReport& report) {
  json per_class = json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    per_class.push_back({{"class", c},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  auto avg = [](const AveragedMetrics& m) {
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  return {{"per_class", per_class},
          {"accuracy", report.accuracy},
          {"macro_avg", avg(report.macro_avg)},
          {"weighted_avg", avg(report.weighted_avg)}};
}

json roc_json(const RocCurve& curve) {
  json points = json::array();
  for (const auto& [fpr, tpr] : curve.points) points.push_back({fpr, tpr});
  return {{"defined", true}, {"auc", curve.auc}, {"points", points}};
}

json categories_json(const std::map<StudentCategory, CategoryResult>& categories) {
  json out = json::object();
  for (const auto& [cat, r] : categories) {
    out[to_string(cat)] = {
        {"weighted_f1", r.weighted_f1}, {"students", r.students}, {"examples", r.examples}};
  }
  return out;
}

std::string roc_csv(int grade_class, const json& roc_entry) {
  std::ostringstream out;
  out << "class,fpr,tpr\n";
  for (const auto& p : roc_entry.at("points")) {
    out << grade_class << ',' << p.at(0).dump() << ',' << p.at(1).dump() << '\n';
  }
  return out.str();
}

std::string importance_csv(const json& importances) {
  std::ostringstream out;
  out << "view,feature,importance\n";
  for (const char* view : {"flat", "grouped"}) {
    for (const auto& [name, value] : importances.at(view).items()) {
      out << view << ',' << name << ',' << value.dump() << '\n';
    }
  }
  return out.str();
}

std::string roc_svg(const json& roc) {
  constexpr double kSize = 360.0;
  constexpr double kPad = 40.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 2 * kPad + 140
      << "\" height=\"" << kSize + 2 * kPad << "\">\n";
  svg << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kSize << "\" height=\""
      << kSize << "\" fill=\"none\" stroke=\"#333\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad + kSize << "\" x2=\"" << kPad + kSize
      << "\" y2=\"" << kPad << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  svg << "<text x=\"" << kPad + kSize / 2 << "\" y=\"" << kSize + 2 * kPad - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">False positive rate</text>\n";
  svg << "<text x=\"12\" y=\"" << kPad + kSize / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 "
      << kPad + kSize / 2 << ")\" text-anchor=\"middle\">True positive rate</text>\n";
  for (std::size_t c = 0; c < roc.size(); ++c) {
    const auto& entry = roc.at(c);
    const char* color = kPalette[c % 5];
    if (entry.at("defined").get<bool>()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : entry.at("points")) {
        svg << fixed(kPad + p.at(0).get<double>() * kSize, 2) << ','
            << fixed(kPad + (1.0 - p.at(1).get<double>()) * kSize, 2) << ' ';
      }
      svg << "\"/>\n";
    }
    const auto label = "class " + std::to_string(c) + " (AUC " +
                       (entry.at("defined").get<bool>() ? fixed(entry.at("auc").get<double>(), 2)
                                                        : std::string("n/a")) +
                       ")";
    svg << "<text x=\"" << kPad + kSize + 10 << "\" y=\"" << kPad + 16 + 18 * static_cast<double>(c)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string importance_svg(const json& importances) {
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& [name, value] : importances.at("grouped").items()) {
    bars.emplace_back(name, value.get<double>());
  }
  std::stable_sort(bars.begin(), bars.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  constexpr double kBarWidth = 300.0;
  constexpr double kRow = 22.0;
  constexpr double kLabel = 160.0;
  const double height = kRow * static_cast<double>(bars.size()) + 20.0;
  const double top = bars.empty() ? 1.0 : std::max(bars.front().second, 1e-12);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLabel + kBarWidth + 70
      << "\" height=\"" << height << "\">\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double y = 10.0 + kRow * static_cast<double>(i);
    svg << "<text x=\"" << kLabel - 6 << "\" y=\"" << y + 14
        << "\" text-anchor=\"end\" font-size=\"12\">" << bars[i].first << "</text>\n";
    svg << "<rect x=\"" << kLabel << "\" y=\"" << y + 3 << "\" width=\""
        << fixed(kBarWidth * bars[i].second / top, 2) << "\" height=\"" << kRow - 6
        << "\" fill=\"#4e79a7\"/>\n";
    svg << "<text x=\"" << kLabel + kBarWidth * bars[i].second / top + 4 << "\" y=\"" << y + 14
        << "\" font-size=\"11\">" << fixed(bars[i].second, 3) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string metrics_row(const json& report) {
  const auto& r = report.at("report");
  const auto& macro = r.at("macro_avg");
  std::ostringstream out;
  out << "accuracy precision recall f1\n"
      << fixed(r.at("accuracy").get<double>(), 2) << ' '
      << fixed(macro.at("precision").get<double>(), 2) << ' '
      << fixed(macro.at("recall").get<double>(), 2) << ' ' << fixed(macro.at("f1").get<double>(), 2)
      << '\n';
  return out.str();
}

void render_report_outputs(const json& report, const std::filesystem::path& dir, bool svg) {
  try {
    std::filesystem::create_directories(dir);
    const auto& roc = report.at("roc");
    for (std::size_t c = 0; c < roc.size(); ++c) {
      write_file(dir / ("roc_class" + std::to_string(c) + ".csv"),
                 roc_csv(static_cast<int>(c), roc.at(c)));
    }
    write_file(dir / "importance.csv", importance_csv(report.at("importances")));
    if (svg) {
      write_file(dir / "roc.svg", roc_svg(roc));
      write_file(dir / "importance.svg", importance_svg(report.at("importances")));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report document: ") + e.what());
  }
}

}  // namespace gradepred
