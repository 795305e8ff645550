#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "gradepred/graph.hpp"

namespace gradepred {

/// First-order walk: next node uniform over the current node's neighbors.
struct UniformWalk {};

/// Second-order walk with return parameter p and in-out parameter q.
/// Unnormalized weight of candidate x given (previous t, current v):
/// 1/p if x == t, 1 if x is adjacent to t, 1/q otherwise.
struct BiasedWalk {
  double p = 1.0;
  double q = 1.0;
};

using WalkStrategy = std::variant<UniformWalk, BiasedWalk>;

struct WalkConfig {
  int num_walks_per_node = 100;
  int walk_length = 10;
  WalkStrategy strategy = UniformWalk{};
  std::uint64_t seed = 1;
  int threads = 1;
};

void validate(const WalkConfig& config);

/// Walks over node indices, plus the node names for those indices.
struct WalkCorpus {
  std::vector<NodeRef> nodes;
  std::vector<std::vector<NodeIndex>> walks;
};

/// Transition distribution over graph.neighbors(current), in neighbor order.
/// With no previous node (first step) the distribution is uniform.
std::vector<double> transition_probabilities(const BipartiteGraph& graph,
                                             std::optional<NodeIndex> previous,
                                             NodeIndex current, const WalkStrategy& strategy);

/// num_walks_per_node walks per node. Walks are emitted round by round; within
/// a round nodes appear in index order (students then challenges, each by id).
/// Walk (round r, node v) uses an RNG seeded from (seed, v, r), so the output
/// does not depend on the thread count.
WalkCorpus generate_walks(const BipartiteGraph& graph, const WalkConfig& config);

struct SkipGramConfig {
  int dimension = 128;
  int window = 10;
  int negatives_per_positive = 5;
  int epochs = 5;
  double initial_learning_rate = 0.025;
  std::uint64_t seed = 1;
  // 1 = sequential and deterministic. >1 trains with lock-free concurrent
  // updates (Hogwild); results then depend on scheduling.
  int threads = 1;
};

void validate(const SkipGramConfig& config);

/// Dense node vectors, row i belongs to nodes()[i].
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<NodeRef> nodes, int dimension, std::vector<float> values);

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<NodeRef>& nodes() const noexcept { return nodes_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * static_cast<std::size_t>(dimension_),
            static_cast<std::size_t>(dimension_)};
  }
  std::optional<std::span<const float>> find(const NodeRef& node) const;

  bool operator==(const EmbeddingTable& other) const {
    return dimension_ == other.dimension_ && nodes_ == other.nodes_ && values_ == other.values_;
  }

 private:
  std::vector<NodeRef> nodes_;
  int dimension_ = 0;
  std::vector<float> values_;
  std::vector<std::size_t> order_;  // row indices sorted by NodeRef
};

/// Negative-sampling objective on the fixed probe batch, recorded before
/// training and after each epoch.
struct SkipGramTrace {
  std::vector<double> probe_loss;
};

/// Skip-gram with negative sampling over the walk corpus. Every node within
/// `window` positions of a center is a positive context; negatives follow the
/// unigram distribution raised to 3/4; the learning rate decays linearly.
/// Returns the center vectors. Throws CoverageError if a node never occurs.
EmbeddingTable train_skipgram(const WalkCorpus& corpus, const SkipGramConfig& config,
                              SkipGramTrace* trace = nullptr);

EmbeddingTable embed_graph(const BipartiteGraph& graph, const WalkConfig& walk_config,
                           const SkipGramConfig& skipgram_config);

/// CSV: node_type,node_id,d_0,...,d_{dim-1}.
void write_embeddings_csv(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings_csv(std::string_view text);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace gradepred
