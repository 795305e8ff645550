#include "gradepred/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gradepred/error.hpp"
#include "gradepred/rng.hpp"

namespace gradepred {

void validate(const SynthConfig& c) {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.students, "students");
  positive(c.challenges, "challenges");
  positive(c.cohorts, "cohorts");
  positive(c.courses_per_cohort, "courses_per_cohort");
  positive(c.exercises_per_course, "exercises_per_course");
  if (!(c.in_cohort_probability >= 0.0 && c.in_cohort_probability <= 1.0)) {
    throw ConfigError("in_cohort_probability must lie in [0, 1]");
  }
  if (!(c.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (!(c.cohort_spread >= 0.0)) throw ConfigError("cohort_spread must be non-negative");
  if (c.min_interactions < 2) throw ConfigError("min_interactions must be at least 2");
  if (c.max_interactions < c.min_interactions) {
    throw ConfigError("max_interactions must be at least min_interactions");
  }
  if (c.min_interactions > c.challenges) {
    throw ConfigError("min_interactions exceeds the number of challenges");
  }
}

double latent_score(double ability, double difficulty, double noise) {
  return std::clamp(50.0 + 25.0 * (ability - difficulty) + noise, 0.0, 100.0);
}

Dataset generate_synthetic(const SynthConfig& c, std::uint64_t seed) {
  validate(c);
  Rng rng(derive_seed(seed, 0x5EED));

  const int num_courses = c.cohorts * c.courses_per_cohort;
  const auto num_challenges = static_cast<std::size_t>(c.challenges);

  // Random challenge-to-course assignment so challenge ids carry no block order.
  std::vector<int> course_of(num_challenges);
  for (std::size_t j = 0; j < num_challenges; ++j) course_of[j] = static_cast<int>(j) % num_courses;
  for (std::size_t j = num_challenges; j > 1; --j) {
    std::swap(course_of[j - 1], course_of[rng.uniform_index(j)]);
  }
  std::vector<double> difficulty(num_challenges);
  std::vector<std::int64_t> difficulty_level(num_challenges);
  std::vector<std::int64_t> exercise_of(num_challenges);
  std::vector<int> slot_in_course(static_cast<std::size_t>(num_courses), 0);
  std::vector<std::vector<std::size_t>> block(static_cast<std::size_t>(c.cohorts));
  for (std::size_t j = 0; j < num_challenges; ++j) {
    difficulty[j] = rng.normal();
    difficulty_level[j] = std::clamp<std::int64_t>(std::llround(difficulty[j] + 3.0), 1, 5);
    const int course = course_of[j];
    const int slot = slot_in_course[static_cast<std::size_t>(course)]++;
    exercise_of[j] = static_cast<std::int64_t>(course) * 100 + slot % c.exercises_per_course;
    block[static_cast<std::size_t>(course / c.courses_per_cohort)].push_back(j);
  }

  std::vector<double> cohort_mean(static_cast<std::size_t>(c.cohorts));
  for (auto& m : cohort_mean) m = rng.normal(0.0, c.cohort_spread);

  std::vector<InteractionRecord> records;
  for (int i = 0; i < c.students; ++i) {
    const auto cohort = rng.uniform_index(static_cast<std::size_t>(c.cohorts));
    const double mean = cohort_mean[cohort];
    const double ability = rng.normal(mean, 1.0);
    const double raw_count = static_cast<double>(c.mean_interactions) +
                             c.engagement * (ability - mean) + rng.normal(0.0, 2.0);
    const auto count = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(raw_count), c.min_interactions,
        std::min(c.max_interactions, c.challenges)));

    // Pools of not-yet-chosen challenges: own block and everything.
    std::vector<std::size_t> block_left = block[cohort];
    std::vector<std::size_t> all_left(num_challenges);
    for (std::size_t j = 0; j < num_challenges; ++j) all_left[j] = j;
    std::vector<bool> taken(num_challenges, false);
    auto take_from = [&](std::vector<std::size_t>& pool) -> std::size_t {
      while (true) {
        const auto k = rng.uniform_index(pool.size());
        const auto j = pool[k];
        pool[k] = pool.back();
        pool.pop_back();
        if (!taken[j]) return j;
      }
    };
    auto pool_has_free = [&](const std::vector<std::size_t>& pool) {
      return std::any_of(pool.begin(), pool.end(), [&](std::size_t j) { return !taken[j]; });
    };

    std::int64_t t = c.start_time + static_cast<std::int64_t>(rng.uniform_index(30 * 86400));
    for (std::size_t n = 0; n < count; ++n) {
      const bool in_block = rng.uniform() < c.in_cohort_probability;
      const auto j = (in_block && pool_has_free(block_left)) ? take_from(block_left)
                                                             : take_from(all_left);
      taken[j] = true;

      t += 60 + static_cast<std::int64_t>(rng.uniform_index(86400));
      const double gap = difficulty[j] - ability;
      InteractionRecord r;
      r.user_id = i + 1;
      r.challenge_id = static_cast<ChallengeId>(j) + 1;
      r.timestamp = t;
      r.final_score = latent_score(ability, difficulty[j], rng.normal(0.0, c.noise_sigma));
      r.exercise_id = exercise_of[j];
      r.course_id = course_of[j];
      r.difficulty = difficulty_level[j];
      r.retries = static_cast<std::int64_t>(rng.poisson(std::exp(0.4 * gap)));
      r.duration = std::round(std::exp(6.0 + 0.3 * gap + rng.normal(0.0, 0.8)));
      records.push_back(r);
    }
  }
  return Dataset(std::move(records));
}

}  // namespace gradepred
