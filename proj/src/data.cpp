#include "gradepred/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>
#include <utility>

#include "gradepred/error.hpp"

namespace gradepred {

GradeClass::GradeClass(int value) : value_(value) {
  if (value < 0 || value >= kNumGradeClasses) {
    throw RangeError("grade class " + std::to_string(value) + " outside [0, 4]");
  }
}

GradeClass discretize_grade(double score) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw RangeError("score " + std::to_string(score) + " outside [0, 100]");
  }
  if (score < 20.0) return GradeClass(0);
  if (score < 40.0) return GradeClass(1);
  if (score < 60.0) return GradeClass(2);
  if (score < 80.0) return GradeClass(3);
  return GradeClass(4);
}

Dataset::Dataset(std::vector<InteractionRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    students_[records_[i].user_id].push_back(i);
    challenges_[records_[i].challenge_id].push_back(i);
  }
}

const std::vector<std::string>& interaction_columns() {
  static const std::vector<std::string> columns = {
      "user_id", "challenge_id", "timestamp", "final_score", "exercise_id",
      "course_id", "difficulty", "retries", "duration"};
  return columns;
}

namespace {

enum Column : std::size_t {
  kUser,
  kChallenge,
  kTimestamp,
  kScore,
  kExercise,
  kCourse,
  kDifficulty,
  kRetries,
  kDuration,
  kColumnCount
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::int64_t parse_int(std::string_view field, std::size_t line, std::size_t column) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw RowError(line, "cannot parse " + interaction_columns()[column] + " value '" +
                             std::string(field) + "' as integer");
  }
  return value;
}

double parse_real(std::string_view field, std::size_t line, std::size_t column) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw RowError(line, "cannot parse " + interaction_columns()[column] + " value '" +
                             std::string(field) + "' as number");
  }
  return value;
}

void validate(const InteractionRecord& r, std::size_t line) {
  const auto where = "line " + std::to_string(line) + ": ";
  if (!(r.final_score >= 0.0 && r.final_score <= 100.0)) {
    throw RangeError(where + "final_score " + std::to_string(r.final_score) +
                     " outside [0, 100]");
  }
  if (r.retries < 0) throw RangeError(where + "retries must be non-negative");
  if (r.duration < 0.0) throw RangeError(where + "duration must be non-negative");
  if (r.difficulty < 1) throw RangeError(where + "difficulty must be at least 1");
}

template <typename T>
void append_number(std::string& out, T value) {
  std::array<char, 64> buffer{};
  auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  (void)ec;
  out.append(buffer.data(), ptr);
}

}  // namespace

Dataset parse_interactions(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw SchemaError("missing header row");

  const auto header = split_fields(lines[header_line]);
  std::array<std::size_t, kColumnCount> position{};
  position.fill(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = lower(header[i]);
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (name == interaction_columns()[c]) {
        if (position[c] != header.size()) {
          throw SchemaError("duplicate column '" + interaction_columns()[c] + "'");
        }
        position[c] = i;
      }
    }
  }
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    if (position[c] == header.size()) {
      throw SchemaError("missing required column '" + interaction_columns()[c] + "'");
    }
  }

  std::vector<InteractionRecord> records;
  std::map<std::pair<UserId, ChallengeId>, std::size_t> seen;
  for (std::size_t l = header_line + 1; l < lines.size(); ++l) {
    if (trim(lines[l]).empty()) continue;
    const std::size_t line_no = l + 1;
    const auto fields = split_fields(lines[l]);
    if (fields.size() != header.size()) {
      throw RowError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    auto field = [&](Column c) { return fields[position[c]]; };
    InteractionRecord r;
    r.user_id = parse_int(field(kUser), line_no, kUser);
    r.challenge_id = parse_int(field(kChallenge), line_no, kChallenge);
    r.timestamp = parse_int(field(kTimestamp), line_no, kTimestamp);
    r.final_score = parse_real(field(kScore), line_no, kScore);
    r.exercise_id = parse_int(field(kExercise), line_no, kExercise);
    r.course_id = parse_int(field(kCourse), line_no, kCourse);
    r.difficulty = parse_int(field(kDifficulty), line_no, kDifficulty);
    r.retries = parse_int(field(kRetries), line_no, kRetries);
    r.duration = parse_real(field(kDuration), line_no, kDuration);
    validate(r, line_no);

    const auto key = std::make_pair(r.user_id, r.challenge_id);
    if (auto it = seen.find(key); it != seen.end()) {
      // Latest timestamp wins; on equal timestamps the later row wins.
      if (r.timestamp >= records[it->second].timestamp) records[it->second] = r;
    } else {
      seen.emplace(key, records.size());
      records.push_back(r);
    }
  }
  return Dataset(std::move(records));
}

std::string serialize_interactions(const Dataset& dataset) {
  std::string out;
  const auto& cols = interaction_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out += ',';
    out += cols[c];
  }
  out += '\n';
  for (const auto& r : dataset.records()) {
    append_number(out, r.user_id);
    out += ',';
    append_number(out, r.challenge_id);
    out += ',';
    append_number(out, r.timestamp);
    out += ',';
    append_number(out, r.final_score);
    out += ',';
    append_number(out, r.exercise_id);
    out += ',';
    append_number(out, r.course_id);
    out += ',';
    append_number(out, r.difficulty);
    out += ',';
    append_number(out, r.retries);
    out += ',';
    append_number(out, r.duration);
    out += '\n';
  }
  return out;
}

Dataset filter_min_interactions(const Dataset& dataset, int min_challenges) {
  if (min_challenges < 1) throw PreconditionError("min_challenges must be at least 1");
  std::set<UserId> keep;
  for (const auto& [user, rows] : dataset.student_index()) {
    std::set<ChallengeId> distinct;
    for (auto i : rows) distinct.insert(dataset.records()[i].challenge_id);
    if (distinct.size() >= static_cast<std::size_t>(min_challenges)) keep.insert(user);
  }
  std::vector<InteractionRecord> kept;
  kept.reserve(dataset.size());
  for (const auto& r : dataset.records()) {
    if (keep.count(r.user_id)) kept.push_back(r);
  }
  return Dataset(std::move(kept));
}

SplitDataset temporal_split(const Dataset& dataset, double train_ratio) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw PreconditionError("train_ratio must lie strictly between 0 and 1");
  }
  const auto& records = dataset.records();
  std::vector<bool> in_train(records.size(), false);
  for (const auto& [user, rows] : dataset.student_index()) {
    const auto n = rows.size();
    if (n < 2) {
      throw PreconditionError("student " + std::to_string(user) +
                              " has fewer than 2 records; cannot split");
    }
    std::vector<std::size_t> order = rows;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = records[a];
      const auto& rb = records[b];
      if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
      return ra.challenge_id < rb.challenge_id;
    });
    // The epsilon absorbs products such as 0.29 * 100 = 28.999999999999996.
    auto k = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n) + 1e-9));
    k = std::clamp<std::size_t>(k, 1, n - 1);
    for (std::size_t i = 0; i < k; ++i) in_train[order[i]] = true;
  }
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> test;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_train[i] ? train : test).push_back(records[i]);
  }
  return {Dataset(std::move(train)), Dataset(std::move(test))};
}

std::vector<std::size_t> grade_class_counts(const Dataset& dataset) {
  std::vector<std::size_t> counts(kNumGradeClasses, 0);
  for (const auto& r : dataset.records()) ++counts[discretize_grade(r.final_score).value()];
  return counts;
}

}  // namespace gradepred
