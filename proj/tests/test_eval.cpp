#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "gradepred/error.hpp"
#include "gradepred/eval.hpp"
#include "oracles.hpp"

using namespace gradepred;
using fixtures::record;
using oracles::Flags;
using oracles::mann_whitney_auc;

namespace {

std::vector<GradeClass> classes(std::initializer_list<int> v) {
  std::vector<GradeClass> out;
  for (int c : v) out.emplace_back(c);
  return out;
}

}  // namespace

TEST_CASE("confusion matrix counts true-by-predicted") {
  const auto cm = confusion_matrix(classes({0, 0, 1}), classes({0, 1, 1}));
  CHECK(cm.counts[0][0] == 1);
  CHECK(cm.counts[0][1] == 1);
  CHECK(cm.counts[1][1] == 1);
  CHECK(cm.counts[1][0] == 0);
  CHECK(cm.total() == 3);
  CHECK(cm.support(0) == 2);
  CHECK(cm.support(4) == 0);
  CHECK_THROWS_AS(confusion_matrix(classes({0}), classes({0, 1})), PreconditionError);
}

TEST_CASE("per-class metrics from TP, FP and FN") {
  // Class 2: TP 8, FP 2 (true 3 predicted 2), FN 5 (true 2 predicted 4).
  std::vector<GradeClass> truth, pred;
  auto add = [&](int t, int p, int n) {
    for (int i = 0; i < n; ++i) {
      truth.emplace_back(t);
      pred.emplace_back(p);
    }
  };
  add(2, 2, 8);
  add(3, 2, 2);
  add(2, 4, 5);
  const auto r = classification_report(confusion_matrix(truth, pred));
  CHECK(r.per_class[2].precision == doctest::Approx(0.8));
  CHECK(r.per_class[2].recall == doctest::Approx(8.0 / 13.0));
  CHECK(r.per_class[2].f1 == doctest::Approx(2 * 0.8 * (8.0 / 13.0) / (0.8 + 8.0 / 13.0)));
  CHECK(r.per_class[2].recall == doctest::Approx(0.61538).epsilon(1e-5));
  CHECK(r.per_class[2].f1 == doctest::Approx(0.69565).epsilon(1e-5));
  CHECK(r.per_class[2].support == 13);
  // Zero denominators: class 3 is never predicted correctly, class 4 has no support.
  CHECK(r.per_class[3].precision == 0.0);
  CHECK(r.per_class[3].f1 == 0.0);
  CHECK(r.per_class[4].recall == 0.0);
  CHECK(r.per_class[0].support == 0);
  CHECK(r.accuracy == doctest::Approx(8.0 / 15.0));
}

TEST_CASE("averages: macro is the plain mean, weighted uses support") {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GradeClass> truth, pred;
    for (int i = 0; i < 60; ++i) {
      truth.emplace_back(static_cast<int>(gen() % 5));
      pred.emplace_back(static_cast<int>(gen() % 5));
    }
    const auto r = classification_report(confusion_matrix(truth, pred));
    double macro = 0.0, weighted = 0.0, lo = 1.0, hi = 0.0, correct = 0.0;
    for (const auto& c : r.per_class) {
      macro += c.f1 / 5;
      weighted += c.f1 * static_cast<double>(c.support) / 60.0;
      if (c.support > 0) {
        lo = std::min(lo, c.f1);
        hi = std::max(hi, c.f1);
      }
      CHECK(c.f1 >= 0.0);
      CHECK(c.f1 <= 1.0);
    }
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i] ? 1.0 : 0.0;
    CHECK(r.macro_avg.f1 == doctest::Approx(macro));
    CHECK(r.weighted_avg.f1 == doctest::Approx(weighted));
    CHECK(r.weighted_avg.f1 >= lo - 1e-12);
    CHECK(r.weighted_avg.f1 <= hi + 1e-12);
    CHECK(r.accuracy == doctest::Approx(correct / 60.0));
  }
}

TEST_CASE("perfect predictions give unit metrics for present classes") {
  const auto t = classes({0, 1, 2, 3, 4, 4});
  const auto r = classification_report(confusion_matrix(t, t));
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_avg.f1 == 1.0);
  CHECK(r.weighted_avg.f1 == 1.0);
}

TEST_CASE("ROC staircase and AUC on a small ranking") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<bool> pos{true, false, true, false};
  const auto roc = roc_curve(s, Flags(pos));
  const std::vector<std::pair<double, double>> expected{
      {0.0, 0.0}, {0.0, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {1.0, 1.0}};
  CHECK(roc.points == expected);
  CHECK(roc.auc == 0.75);
  // Tied scores form one diagonal step.
  const auto tied = roc_curve(std::vector<double>{0.5, 0.5}, Flags({true, false}));
  CHECK(tied.points.size() == 2);
  CHECK(tied.auc == 0.5);
  CHECK_THROWS_AS(roc_curve(std::vector<double>{0.1, 0.2}, Flags({true, true})),
                  PreconditionError);
}

TEST_CASE("AUC agrees with the Mann-Whitney statistic") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 40;
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 10) / 10.0;  // ties are common
      pos[i] = gen() % 2 == 0;
    }
    pos[0] = true;
    pos[1] = false;
    const auto roc = roc_curve(s, Flags(pos));
    CHECK(roc.auc == doctest::Approx(mann_whitney_auc(s, pos)).epsilon(1e-12));
    CHECK(roc.points.front() == std::pair<double, double>{0.0, 0.0});
    CHECK(roc.points.back() == std::pair<double, double>{1.0, 1.0});
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      CHECK(roc.points[k].first >= roc.points[k - 1].first);
      CHECK(roc.points[k].second >= roc.points[k - 1].second);
    }
  }
}

TEST_CASE("one-vs-rest ROC ranks by the chosen class probability") {
  const std::vector<std::vector<double>> p{
      {0.1, 0.9, 0, 0, 0}, {0.8, 0.2, 0, 0, 0}, {0.3, 0.7, 0, 0, 0}, {0.6, 0.4, 0, 0, 0}};
  const auto truth = classes({1, 0, 1, 0});
  CHECK(roc_ovr(p, truth, GradeClass(1)).auc == 1.0);
  CHECK(roc_ovr(p, truth, GradeClass(0)).auc == 1.0);
  CHECK_THROWS_AS(roc_ovr(p, truth, GradeClass(3)), PreconditionError);
}

TEST_CASE("student category thresholds") {
  CHECK(category_for_low_share(1.0) == StudentCategory::ExtremelyLow);
  CHECK(category_for_low_share(0.91) == StudentCategory::ExtremelyLow);
  CHECK(category_for_low_share(0.9) == StudentCategory::VeryLow);
  CHECK(category_for_low_share(0.85) == StudentCategory::VeryLow);
  CHECK(category_for_low_share(0.8) == StudentCategory::Low);
  CHECK(category_for_low_share(0.5) == StudentCategory::Average);
  CHECK(category_for_low_share(0.2) == StudentCategory::High);
  CHECK(category_for_low_share(0.0) == StudentCategory::High);
  CHECK(student_category(classes({0, 1, 1, 0, 4})) == StudentCategory::Low);
  for (auto c : kStudentCategories) CHECK_FALSE(to_string(c).empty());
}

TEST_CASE("per-category report groups test predictions by the student's train labels") {
  SplitDataset split;
  // Student 1: all low in train -> ExtremelyLow. Student 2: all high -> High.
  // Student 3: half low -> Average.
  split.train = Dataset({record(1, 1, 1, 5), record(1, 2, 2, 30), record(2, 1, 1, 95),
                         record(2, 2, 2, 85), record(3, 1, 1, 10), record(3, 2, 2, 90)});
  split.test = Dataset({record(1, 3, 3, 10), record(2, 3, 3, 90), record(2, 4, 4, 50),
                        record(3, 3, 3, 50)});
  const auto pred = classes({0, 4, 4, 1});
  const auto r = per_category_report(split, pred);
  REQUIRE(r.size() == 3);
  CHECK(r.at(StudentCategory::ExtremelyLow).weighted_f1 == 1.0);
  CHECK(r.at(StudentCategory::ExtremelyLow).students == 1);
  CHECK(r.at(StudentCategory::ExtremelyLow).examples == 1);
  // High: truth {4, 2}, predicted {4, 4}: class 4 f1 = 2/3, class 2 f1 = 0.
  CHECK(r.at(StudentCategory::High).weighted_f1 == doctest::Approx(1.0 / 3.0));
  CHECK(r.at(StudentCategory::High).examples == 2);
  CHECK(r.at(StudentCategory::Average).weighted_f1 == 0.0);
  CHECK_FALSE(r.contains(StudentCategory::Low));
  CHECK_THROWS_AS(per_category_report(split, classes({0})), PreconditionError);
}
