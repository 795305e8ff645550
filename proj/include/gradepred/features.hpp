#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "gradepred/data.hpp"
#include "gradepred/embed.hpp"
#include "gradepred/graph.hpp"
#include "gradepred/matrix.hpp"

namespace gradepred {

enum class EmbeddingSource { DeepWalk, Node2vec };

/// Interaction record columns with raw identifiers.
struct BaselineFeatures {
  bool operator==(const BaselineFeatures&) const = default;
};

/// Identifiers replaced by degree, eigenvector centrality and node embeddings.
struct StructuralFeatures {
  EmbeddingSource source = EmbeddingSource::Node2vec;
  bool operator==(const StructuralFeatures&) const = default;
};

using FeatureVariant = std::variant<BaselineFeatures, StructuralFeatures>;

/// "baseline", "deepwalk" or "node2vec".
std::string variant_name(const FeatureVariant& variant);
FeatureVariant parse_variant(const std::string& name);

struct LabeledExample {
  std::vector<double> features;
  GradeClass label;
  UserId user_id = 0;
  ChallengeId challenge_id = 0;
};

struct FeatureMatrix {
  std::vector<LabeledExample> examples;
  std::vector<std::string> feature_names;
  FeatureVariant variant;

  Matrix to_matrix() const;
  std::vector<int> labels() const;
};

enum class MissingNodePolicy {
  Strict,        // missing node -> LookupError
  MeanBackfill,  // zero degree/centrality, mean embedding
};

/// Graph-derived inputs for the structural variant. Not owned.
struct StructuralSources {
  const BipartiteGraph* graph = nullptr;
  const CentralityMap* centrality = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  MissingNodePolicy missing = MissingNodePolicy::Strict;
};

/// Baseline: user_id, challenge_id, timestamp, exercise_id, course_id,
/// difficulty, retries, duration.
/// Structural: timestamp, exercise_id, course_id, difficulty, retries,
/// duration, user_degree, challenge_degree, user_ec, challenge_ec,
/// user_emb_0.., challenge_emb_0..
std::vector<std::string> feature_names(const FeatureVariant& variant, int embedding_dimension = 0);

FeatureMatrix assemble(const Dataset& records, const FeatureVariant& variant,
                       const StructuralSources& sources = {});

/// CSV with header feature_names..., label.
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);

}  // namespace gradepred
