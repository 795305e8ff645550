#pragma once

#include <cstdint>

#include "gradepred/data.hpp"

namespace gradepred {

/// Parameters of the block-structured synthetic cohort generator.
///
/// Students belong to one of `cohorts` groups. Each cohort owns a block of
/// `courses_per_cohort` courses; a student draws each challenge from the own
/// block with probability `in_cohort_probability`, otherwise uniformly from
/// all challenges. Latent ability is Normal(cohort mean, 1) with cohort means
/// drawn from Normal(0, cohort_spread); challenge difficulty is Normal(0, 1).
struct SynthConfig {
  int students = 2000;
  int challenges = 300;
  int cohorts = 10;
  int courses_per_cohort = 3;
  int exercises_per_course = 4;
  double in_cohort_probability = 0.9;
  double noise_sigma = 8.0;
  double cohort_spread = 1.0;
  // Interactions per student: round(mean + engagement * (a - cohort mean)
  // + Normal(0, 2)), clamped to [min_interactions, max_interactions].
  int mean_interactions = 14;
  int min_interactions = 4;
  int max_interactions = 40;
  double engagement = 3.0;
  std::int64_t start_time = 1'514'764'800;  // 2018-01-01T00:00:00Z
};

/// Throws ConfigError on non-positive counts or out-of-range probabilities.
void validate(const SynthConfig& config);

/// clamp(50 + 25 * (ability - difficulty) + noise, 0, 100).
double latent_score(double ability, double difficulty, double noise);

/// Deterministic under (config, seed). Records are grouped per student with
/// strictly increasing timestamps.
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace gradepred
