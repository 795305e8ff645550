#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "gradepred/eval.hpp"
#include "gradepred/graph.hpp"

namespace gradepred {

inline constexpr const char* kReportSchema = "gradepred-report/1";

/// students, challenges, nodes, edges, density, degree_histogram.
nlohmann::json graph_stats_json(const GraphStats& stats);

nlohmann::json confusion_json(const ConfusionMatrix& cm);
nlohmann::json classification_report_json(const ClassificationReport& report);
nlohmann::json roc_json(const RocCurve& curve);
nlohmann::json categories_json(const std::map<StudentCategory, CategoryResult>& categories);

/// CSV with columns class,fpr,tpr.
std::string roc_csv(int grade_class, const nlohmann::json& roc_entry);
/// CSV with columns view,feature,importance (view = flat | grouped).
std::string importance_csv(const nlohmann::json& importances);

/// Static SVG plots: one-vs-rest ROC staircases and grouped importance bars.
std::string roc_svg(const nlohmann::json& roc);
std::string importance_svg(const nlohmann::json& importances);

/// "accuracy precision recall f1" header plus one row of macro-averaged
/// values at two decimals.
std::string metrics_row(const nlohmann::json& report);

/// Writes roc_class{0..4}.csv and importance.csv (plus SVGs when asked) into
/// `dir` from a report document.
void render_report_outputs(const nlohmann::json& report, const std::filesystem::path& dir,
                           bool svg);

}  // namespace gradepred
