#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradepred/data.hpp"
#include "gradepred/graph.hpp"

namespace fixtures {

inline gradepred::InteractionRecord record(std::int64_t user, std::int64_t challenge,
                                           std::int64_t timestamp, double score = 50.0) {
  gradepred::InteractionRecord r;
  r.user_id = user;
  r.challenge_id = challenge;
  r.timestamp = timestamp;
  r.final_score = score;
  r.exercise_id = challenge * 10;
  r.course_id = challenge % 3;
  r.difficulty = 1 + challenge % 5;
  r.retries = challenge % 4;
  r.duration = 30.0 + static_cast<double>(challenge);
  return r;
}

inline gradepred::BipartiteGraph graph_from_edges(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
  std::vector<std::int64_t> students;
  std::vector<std::int64_t> challenges;
  for (const auto& [s, c] : edges) {
    students.push_back(s);
    challenges.push_back(c);
  }
  return gradepred::BipartiteGraph(students, challenges, edges);
}

// Two K_{5,5} blocks (students 1-5 x challenges 1-5, students 6-10 x
// challenges 6-10) joined by the edge student 5 - challenge 6.
inline gradepred::BipartiteGraph two_blocks_with_bridge() {
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (int block = 0; block < 2; ++block) {
    for (int s = 1; s <= 5; ++s) {
      for (int c = 1; c <= 5; ++c) edges.emplace_back(block * 5 + s, block * 5 + c);
    }
  }
  edges.emplace_back(5, 6);
  return graph_from_edges(edges);
}

// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gradepred_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
