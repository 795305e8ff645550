#include "gradepred/embed.hpp"

#include <algorithm>
#include <thread>

#include "gradepred/error.hpp"
#include "gradepred/rng.hpp"

namespace gradepred {

void validate(const WalkConfig& c) {
  if (c.num_walks_per_node < 1) throw ConfigError("num_walks_per_node must be at least 1");
  if (c.walk_length < 2) throw ConfigError("walk_length must be at least 2");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (const auto* biased = std::get_if<BiasedWalk>(&c.strategy)) {
    if (!(biased->p > 0.0) || !(biased->q > 0.0)) {
      throw ConfigError("node2vec p and q must be positive");
    }
  }
}

namespace {

// Unnormalized second-order weights over neighbors(current).
void biased_weights(const BipartiteGraph& graph, NodeIndex previous, NodeIndex current,
                    const BiasedWalk& bias, std::vector<double>& weights) {
  const auto candidates = graph.neighbors(current);
  weights.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto x = candidates[i];
    if (x == previous) {
      weights[i] = 1.0 / bias.p;
    } else if (graph.has_edge(x, previous)) {
      weights[i] = 1.0;
    } else {
      weights[i] = 1.0 / bias.q;
    }
  }
}

std::size_t sample_weighted(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  return weights.size() - 1;
}

std::vector<NodeIndex> one_walk(const BipartiteGraph& graph, NodeIndex start,
                                const WalkConfig& config, Rng& rng,
                                std::vector<double>& weights) {
  std::vector<NodeIndex> walk;
  walk.reserve(static_cast<std::size_t>(config.walk_length));
  walk.push_back(start);
  const auto* biased = std::get_if<BiasedWalk>(&config.strategy);
  while (walk.size() < static_cast<std::size_t>(config.walk_length)) {
    const auto current = walk.back();
    const auto adj = graph.neighbors(current);
    if (adj.empty()) break;
    if (biased == nullptr || walk.size() == 1) {
      walk.push_back(adj[rng.uniform_index(adj.size())]);
    } else {
      biased_weights(graph, walk[walk.size() - 2], current, *biased, weights);
      walk.push_back(adj[sample_weighted(weights, rng)]);
    }
  }
  return walk;
}

}  // namespace

std::vector<double> transition_probabilities(const BipartiteGraph& graph,
                                             std::optional<NodeIndex> previous,
                                             NodeIndex current, const WalkStrategy& strategy) {
  const auto adj = graph.neighbors(current);
  std::vector<double> probs(adj.size(), 0.0);
  if (adj.empty()) return probs;
  const auto* biased = std::get_if<BiasedWalk>(&strategy);
  if (biased == nullptr || !previous) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(adj.size()));
    return probs;
  }
  biased_weights(graph, *previous, current, *biased, probs);
  double total = 0.0;
  for (double w : probs) total += w;
  for (double& w : probs) w /= total;
  return probs;
}

WalkCorpus generate_walks(const BipartiteGraph& graph, const WalkConfig& config) {
  validate(config);
  if (graph.num_nodes() == 0) throw PreconditionError("cannot walk an empty graph");

  WalkCorpus corpus;
  corpus.nodes = graph.nodes();
  const std::size_t n = graph.num_nodes();
  const std::size_t total = n * static_cast<std::size_t>(config.num_walks_per_node);
  corpus.walks.resize(total);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> weights;
    for (std::size_t k = begin; k < end; ++k) {
      const auto round = k / n;
      const auto v = static_cast<NodeIndex>(k % n);
      Rng rng(derive_seed(config.seed, v, round));
      corpus.walks[k] = one_walk(graph, v, config, rng, weights);
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.threads), total);
  if (threads <= 1) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const auto begin = t * chunk;
      const auto end = std::min(total, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return corpus;
}

EmbeddingTable embed_graph(const BipartiteGraph& graph, const WalkConfig& walk_config,
                           const SkipGramConfig& skipgram_config) {
  return train_skipgram(generate_walks(graph, walk_config), skipgram_config);
}

}  // namespace gradepred
