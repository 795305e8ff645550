#include "gradepred/eval.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "gradepred/error.hpp"

namespace gradepred {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t sum = 0;
  for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), std::int64_t{0});
  return sum;
}

std::int64_t ConfusionMatrix::support(int true_class) const {
  const auto& row = counts.at(static_cast<std::size_t>(true_class));
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const GradeClass> truth,
                                 std::span<const GradeClass> predicted) {
  if (truth.size() != predicted.size()) {
    throw PreconditionError("truth and prediction lengths differ");
  }
  if (truth.empty()) throw PreconditionError("confusion matrix needs at least one example");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(truth[i].value())]
               [static_cast<std::size_t>(predicted[i].value())];
  }
  return cm;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ClassificationReport classification_report(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total < 1) throw PreconditionError("classification report needs at least one example");
  ClassificationReport report;
  double trace = 0.0;
  for (std::size_t c = 0; c < kNumGradeClasses; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    double predicted = 0.0;
    for (std::size_t t = 0; t < kNumGradeClasses; ++t) predicted += static_cast<double>(cm.counts[t][c]);
    const auto support = cm.support(static_cast<int>(c));
    auto& m = report.per_class[c];
    m.support = support;
    m.precision = ratio(tp, predicted);
    m.recall = ratio(tp, static_cast<double>(support));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    trace += tp;
  }
  report.accuracy = trace / static_cast<double>(total);
  for (const auto& m : report.per_class) {
    const double w = static_cast<double>(m.support) / static_cast<double>(total);
    report.macro_avg.precision += m.precision / kNumGradeClasses;
    report.macro_avg.recall += m.recall / kNumGradeClasses;
    report.macro_avg.f1 += m.f1 / kNumGradeClasses;
    report.weighted_avg.precision += w * m.precision;
    report.weighted_avg.recall += w * m.recall;
    report.weighted_avg.f1 += w * m.f1;
  }
  return report;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw PreconditionError("scores and labels differ in length");
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const auto neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw PreconditionError("ROC curve is undefined unless both classes are present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (positive[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    const std::pair<double, double> point{fp / neg, tp / pos};
    const auto& prev = curve.points.back();
    curve.auc += (point.first - prev.first) * (point.second + prev.second) / 2.0;
    curve.points.push_back(point);
  }
  return curve;
}

RocCurve roc_ovr(const std::vector<std::vector<double>>& probabilities,
                 std::span<const GradeClass> truth, GradeClass positive_class) {
  if (probabilities.size() != truth.size()) {
    throw PreconditionError("probabilities and labels differ in length");
  }
  const auto k = static_cast<std::size_t>(positive_class.value());
  std::vector<double> scores;
  scores.reserve(truth.size());
  auto positive = std::make_unique<bool[]>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (probabilities[i].size() <= k) throw PreconditionError("probability vector too short");
    scores.push_back(probabilities[i][k]);
    positive[i] = truth[i] == positive_class;
  }
  return roc_curve(scores, std::span<const bool>(positive.get(), truth.size()));
}

std::string to_string(StudentCategory category) {
  switch (category) {
    case StudentCategory::ExtremelyLow:
      return "Extremely Low";
    case StudentCategory::VeryLow:
      return "Very Low";
    case StudentCategory::Low:
      return "Low";
    case StudentCategory::Average:
      return "Average";
    case StudentCategory::High:
      return "High";
  }
  return "High";
}

StudentCategory category_for_low_share(double r) {
  if (r > 0.9) return StudentCategory::ExtremelyLow;
  if (r > 0.8) return StudentCategory::VeryLow;
  if (r > 0.5) return StudentCategory::Low;
  if (r > 0.2) return StudentCategory::Average;
  return StudentCategory::High;
}

StudentCategory student_category(std::span<const GradeClass> train_labels) {
  if (train_labels.empty()) throw PreconditionError("student has no train labels");
  const auto low = std::count_if(train_labels.begin(), train_labels.end(),
                                 [](GradeClass g) { return g.value() <= 1; });
  return category_for_low_share(static_cast<double>(low) /
                                static_cast<double>(train_labels.size()));
}

std::map<StudentCategory, CategoryResult> per_category_report(
    const SplitDataset& split, std::span<const GradeClass> test_predictions) {
  const auto& test = split.test.records();
  if (test_predictions.size() != test.size()) {
    throw PreconditionError("predictions do not cover the test set");
  }
  std::map<UserId, StudentCategory> category;
  for (const auto& [user, rows] : split.train.student_index()) {
    std::vector<GradeClass> labels;
    for (auto i : rows) labels.push_back(discretize_grade(split.train.records()[i].final_score));
    category[user] = student_category(labels);
  }

  std::map<StudentCategory, std::vector<GradeClass>> truth;
  std::map<StudentCategory, std::vector<GradeClass>> predicted;
  std::map<StudentCategory, std::map<UserId, bool>> members;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto it = category.find(test[i].user_id);
    if (it == category.end()) {
      throw PreconditionError("test student " + std::to_string(test[i].user_id) +
                              " has no train records");
    }
    truth[it->second].push_back(discretize_grade(test[i].final_score));
    predicted[it->second].push_back(test_predictions[i]);
    members[it->second][test[i].user_id] = true;
  }

  std::map<StudentCategory, CategoryResult> out;
  for (const auto& [cat, labels] : truth) {
    const auto report = classification_report(confusion_matrix(labels, predicted[cat]));
    out[cat] = {report.weighted_avg.f1, members[cat].size(), labels.size()};
  }
  return out;
}

}  // namespace gradepred
