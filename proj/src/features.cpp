#include "gradepred/features.hpp"

#include <charconv>
#include <ostream>

#include "gradepred/error.hpp"

namespace gradepred {

std::string variant_name(const FeatureVariant& variant) {
  if (std::holds_alternative<BaselineFeatures>(variant)) return "baseline";
  return std::get<StructuralFeatures>(variant).source == EmbeddingSource::DeepWalk ? "deepwalk"
                                                                                    : "node2vec";
}

FeatureVariant parse_variant(const std::string& name) {
  if (name == "baseline") return BaselineFeatures{};
  if (name == "deepwalk") return StructuralFeatures{EmbeddingSource::DeepWalk};
  if (name == "node2vec") return StructuralFeatures{EmbeddingSource::Node2vec};
  throw ConfigError("unknown feature variant '" + name + "' (baseline, deepwalk, node2vec)");
}

Matrix FeatureMatrix::to_matrix() const {
  const std::size_t cols = feature_names.size();
  std::vector<double> data;
  data.reserve(examples.size() * cols);
  for (const auto& e : examples) data.insert(data.end(), e.features.begin(), e.features.end());
  return Matrix(examples.size(), cols, std::move(data));
}

std::vector<int> FeatureMatrix::labels() const {
  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& e : examples) y.push_back(e.label.value());
  return y;
}

std::vector<std::string> feature_names(const FeatureVariant& variant, int embedding_dimension) {
  if (std::holds_alternative<BaselineFeatures>(variant)) {
    return {"user_id",   "challenge_id", "timestamp", "exercise_id",
            "course_id", "difficulty",   "retries",   "duration"};
  }
  if (embedding_dimension < 1) throw PreconditionError("structural features need dimension >= 1");
  std::vector<std::string> names = {"timestamp",   "exercise_id",      "course_id",
                                    "difficulty",  "retries",          "duration",
                                    "user_degree", "challenge_degree", "user_ec",
                                    "challenge_ec"};
  for (int d = 0; d < embedding_dimension; ++d) names.push_back("user_emb_" + std::to_string(d));
  for (int d = 0; d < embedding_dimension; ++d) {
    names.push_back("challenge_emb_" + std::to_string(d));
  }
  return names;
}

namespace {

void append_record_behavior(std::vector<double>& f, const InteractionRecord& r) {
  f.push_back(static_cast<double>(r.timestamp));
  f.push_back(static_cast<double>(r.exercise_id));
  f.push_back(static_cast<double>(r.course_id));
  f.push_back(static_cast<double>(r.difficulty));
  f.push_back(static_cast<double>(r.retries));
  f.push_back(r.duration);
}

std::vector<double> mean_embedding(const EmbeddingTable& table) {
  std::vector<double> mean(static_cast<std::size_t>(table.dimension()), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
  }
  if (table.size() > 0) {
    for (auto& v : mean) v /= static_cast<double>(table.size());
  }
  return mean;
}

struct NodeFeatures {
  double degree = 0.0;
  double centrality = 0.0;
};

NodeFeatures node_features(const StructuralSources& s, const NodeRef& node) {
  if (auto v = s.graph->find(node)) {
    return {static_cast<double>(s.graph->degree(*v)), s.centrality->at(*v)};
  }
  if (s.missing == MissingNodePolicy::Strict) {
    throw LookupError(to_string(node.side) + " node " + std::to_string(node.id) +
                      " is missing from the interaction graph");
  }
  return {};
}

void append_embedding(std::vector<double>& f, const StructuralSources& s, const NodeRef& node,
                      const std::vector<double>& fallback) {
  if (auto row = s.embeddings->find(node)) {
    f.insert(f.end(), row->begin(), row->end());
    return;
  }
  if (s.missing == MissingNodePolicy::Strict) {
    throw LookupError(to_string(node.side) + " node " + std::to_string(node.id) +
                      " has no embedding");
  }
  f.insert(f.end(), fallback.begin(), fallback.end());
}

}  // namespace

FeatureMatrix assemble(const Dataset& records, const FeatureVariant& variant,
                       const StructuralSources& sources) {
  FeatureMatrix out;
  out.variant = variant;
  const bool structural = std::holds_alternative<StructuralFeatures>(variant);
  if (structural) {
    if (!sources.graph || !sources.centrality || !sources.embeddings) {
      throw PreconditionError("structural features need graph, centrality and embeddings");
    }
    if (sources.centrality->values.size() != sources.graph->num_nodes()) {
      throw PreconditionError("centrality map does not match the graph");
    }
  }
  const int dim = structural ? sources.embeddings->dimension() : 0;
  out.feature_names = feature_names(variant, dim);
  const auto fallback = structural && sources.missing == MissingNodePolicy::MeanBackfill
                            ? mean_embedding(*sources.embeddings)
                            : std::vector<double>{};

  out.examples.reserve(records.size());
  for (const auto& r : records.records()) {
    LabeledExample e;
    e.label = discretize_grade(r.final_score);
    e.user_id = r.user_id;
    e.challenge_id = r.challenge_id;
    e.features.reserve(out.feature_names.size());
    if (!structural) {
      e.features.push_back(static_cast<double>(r.user_id));
      e.features.push_back(static_cast<double>(r.challenge_id));
      append_record_behavior(e.features, r);
    } else {
      const auto user = NodeRef::student(r.user_id);
      const auto challenge = NodeRef::challenge(r.challenge_id);
      append_record_behavior(e.features, r);
      const auto uf = node_features(sources, user);
      const auto cf = node_features(sources, challenge);
      e.features.push_back(uf.degree);
      e.features.push_back(cf.degree);
      e.features.push_back(uf.centrality);
      e.features.push_back(cf.centrality);
      append_embedding(e.features, sources, user, fallback);
      append_embedding(e.features, sources, challenge, fallback);
    }
    out.examples.push_back(std::move(e));
  }
  return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
  for (const auto& name : matrix.feature_names) out << name << ',';
  out << "label\n";
  char buffer[32];
  for (const auto& e : matrix.examples) {
    for (double v : e.features) {
      auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
      (void)ec;
      out.write(buffer, ptr - buffer);
      out << ',';
    }
    out << e.label.value() << '\n';
  }
}

}  // namespace gradepred
