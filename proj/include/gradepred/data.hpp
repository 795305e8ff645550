#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gradepred {

using UserId = std::int64_t;
using ChallengeId = std::int64_t;

inline constexpr int kNumGradeClasses = 5;

/// One student-challenge practice event.
struct InteractionRecord {
  UserId user_id = 0;
  ChallengeId challenge_id = 0;
  std::int64_t timestamp = 0;  // first-open time, seconds since epoch
  double final_score = 0.0;    // [0, 100]
  std::int64_t exercise_id = 0;
  std::int64_t course_id = 0;
  std::int64_t difficulty = 1;  // ordinal, >= 1
  std::int64_t retries = 0;
  double duration = 0.0;  // seconds

  bool operator==(const InteractionRecord&) const = default;
};

/// Discretized grade label in {0, ..., 4}.
class GradeClass {
 public:
  constexpr GradeClass() = default;
  explicit GradeClass(int value);

  constexpr int value() const noexcept { return value_; }
  constexpr auto operator<=>(const GradeClass&) const = default;

 private:
  int value_ = 0;
};

/// Score bins: [0,20) [20,40) [40,60) [60,80) [80,100]. Throws RangeError
/// outside [0, 100].
GradeClass discretize_grade(double score);

/// Immutable collection of interaction records with per-student and
/// per-challenge indices into `records()`.
class Dataset {
 public:
  using Index = std::map<std::int64_t, std::vector<std::size_t>>;

  Dataset() = default;
  explicit Dataset(std::vector<InteractionRecord> records);

  const std::vector<InteractionRecord>& records() const noexcept { return records_; }
  const Index& student_index() const noexcept { return students_; }
  const Index& challenge_index() const noexcept { return challenges_; }

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  bool operator==(const Dataset& other) const { return records_ == other.records_; }

 private:
  std::vector<InteractionRecord> records_;
  Index students_;
  Index challenges_;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// Column names of the interaction CSV, in serialization order.
const std::vector<std::string>& interaction_columns();

/// Parses CSV text with a mandatory header naming the nine interaction columns
/// (case-insensitive, any order; extra columns are ignored). Duplicate
/// (user_id, challenge_id) rows collapse to the one with the latest timestamp,
/// which takes the position of the pair's first occurrence.
Dataset parse_interactions(std::string_view text);

/// Inverse of parse_interactions: header plus one LF-terminated row per record.
std::string serialize_interactions(const Dataset& dataset);

/// Keeps only students with at least `min_challenges` distinct challenges.
Dataset filter_min_interactions(const Dataset& dataset, int min_challenges = 2);

/// Per-student temporal split. Each student's records are ordered by
/// (timestamp, challenge_id); the first clamp(floor(ratio * n), 1, n - 1) go to
/// train. Both halves keep the input record order.
SplitDataset temporal_split(const Dataset& dataset, double train_ratio = 0.8);

/// Number of records per grade class.
std::vector<std::size_t> grade_class_counts(const Dataset& dataset);

}  // namespace gradepred
