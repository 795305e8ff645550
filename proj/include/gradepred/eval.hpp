#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradepred/data.hpp"

namespace gradepred {

/// counts[t][p]: examples with true class t predicted as p.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumGradeClasses>, kNumGradeClasses> counts{};

  std::int64_t total() const;
  std::int64_t support(int true_class) const;
};

ConfusionMatrix confusion_matrix(std::span<const GradeClass> truth,
                                 std::span<const GradeClass> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  std::array<ClassMetrics, kNumGradeClasses> per_class{};
  double accuracy = 0.0;
  AveragedMetrics macro_avg;
  AveragedMetrics weighted_avg;
};

/// Zero denominators yield 0 for the affected metric.
ClassificationReport classification_report(const ConfusionMatrix& cm);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
};

/// ROC over `scores` with thresholds at the distinct scores (descending, ties
/// grouped); AUC by the trapezoid rule. Throws PreconditionError unless both
/// classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive);

/// One-vs-rest ROC for `positive_class`, ranking by that class's probability.
RocCurve roc_ovr(const std::vector<std::vector<double>>& probabilities,
                 std::span<const GradeClass> truth, GradeClass positive_class);

enum class StudentCategory { ExtremelyLow, VeryLow, Low, Average, High };

inline constexpr std::array<StudentCategory, 5> kStudentCategories = {
    StudentCategory::ExtremelyLow, StudentCategory::VeryLow, StudentCategory::Low,
    StudentCategory::Average, StudentCategory::High};

std::string to_string(StudentCategory category);

/// r = share of labels in classes {0, 1}: r > 0.9 ExtremelyLow, (0.8, 0.9]
/// VeryLow, (0.5, 0.8] Low, (0.2, 0.5] Average, <= 0.2 High.
StudentCategory category_for_low_share(double low_share);
StudentCategory student_category(std::span<const GradeClass> train_labels);

struct CategoryResult {
  double weighted_f1 = 0.0;
  std::size_t students = 0;
  std::size_t examples = 0;
};

/// Students are categorized from their train labels; test predictions (aligned
/// with split.test records) are grouped by category and scored with the
/// support-weighted F1. Categories without test examples are absent.
std::map<StudentCategory, CategoryResult> per_category_report(
    const SplitDataset& split, std::span<const GradeClass> test_predictions);

}  // namespace gradepred
