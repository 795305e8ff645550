#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>

#include "gradepred/embed.hpp"
#include "gradepred/error.hpp"
#include "gradepred/rng.hpp"

namespace gradepred {

void validate(const SkipGramConfig& c) {
  if (c.dimension < 1) throw ConfigError("dimension must be at least 1");
  if (c.window < 1) throw ConfigError("window must be at least 1");
  if (c.negatives_per_positive < 1) throw ConfigError("negatives_per_positive must be at least 1");
  if (c.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(c.initial_learning_rate > 0.0)) throw ConfigError("initial_learning_rate must be positive");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
}

EmbeddingTable::EmbeddingTable(std::vector<NodeRef> nodes, int dimension,
                               std::vector<float> values)
    : nodes_(std::move(nodes)), dimension_(dimension), values_(std::move(values)) {
  if (dimension_ < 1) throw PreconditionError("embedding dimension must be at least 1");
  if (values_.size() != nodes_.size() * static_cast<std::size_t>(dimension_)) {
    throw PreconditionError("embedding values do not match node count times dimension");
  }
  order_.resize(nodes_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  std::sort(order_.begin(), order_.end(),
            [&](std::size_t a, std::size_t b) { return nodes_[a] < nodes_[b]; });
  for (std::size_t i = 1; i < order_.size(); ++i) {
    if (nodes_[order_[i - 1]] == nodes_[order_[i]]) {
      throw PreconditionError("duplicate node in embedding table");
    }
  }
}

std::optional<std::span<const float>> EmbeddingTable::find(const NodeRef& node) const {
  auto it = std::lower_bound(order_.begin(), order_.end(), node,
                             [&](std::size_t i, const NodeRef& key) { return nodes_[i] < key; });
  if (it == order_.end() || nodes_[*it] != node) return std::nullopt;
  return row(*it);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace {

// Draws node indices with probability proportional to count^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<std::uint64_t>& counts) {
    cumulative_.reserve(counts.size());
    double acc = 0.0;
    for (auto c : counts) {
      acc += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(acc);
    }
  }

  NodeIndex draw(Rng& rng) const {
    const double target = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return static_cast<NodeIndex>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Plain access for the sequential trainer; relaxed atomics when several
// threads update the shared tables.
template <bool Concurrent>
inline float load(float& x) {
  if constexpr (Concurrent) {
    return std::atomic_ref<float>(x).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool Concurrent>
inline void store(float& x, float v) {
  if constexpr (Concurrent) {
    std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

struct Model {
  std::size_t dim = 0;
  std::vector<float> input;   // center vectors
  std::vector<float> output;  // context vectors
};

template <bool Concurrent>
void update_pair(Model& m, NodeIndex center, NodeIndex context, int negatives,
                 const NegativeSampler& sampler, Rng& rng, float lr, std::vector<float>& grad,
                 std::vector<float>& center_copy) {
  const std::size_t dim = m.dim;
  float* in = m.input.data() + center * dim;
  for (std::size_t d = 0; d < dim; ++d) center_copy[d] = load<Concurrent>(in[d]);
  std::fill(grad.begin(), grad.end(), 0.0f);

  for (int k = 0; k <= negatives; ++k) {
    NodeIndex target = context;
    float label = 1.0f;
    if (k > 0) {
      target = sampler.draw(rng);
      if (target == context) continue;
      label = 0.0f;
    }
    float* out = m.output.data() + target * dim;
    float dot = 0.0f;
    for (std::size_t d = 0; d < dim; ++d) dot += center_copy[d] * load<Concurrent>(out[d]);
    const float g = (label - sigmoid(dot)) * lr;
    for (std::size_t d = 0; d < dim; ++d) {
      const float o = load<Concurrent>(out[d]);
      grad[d] += g * o;
      store<Concurrent>(out[d], o + g * center_copy[d]);
    }
  }
  for (std::size_t d = 0; d < dim; ++d) store<Concurrent>(in[d], load<Concurrent>(in[d]) + grad[d]);
}

struct Schedule {
  double initial = 0.0;
  double total_tokens = 0.0;

  float rate(std::uint64_t processed) const {
    const double frac = static_cast<double>(processed) / (total_tokens + 1.0);
    return static_cast<float>(initial * std::max(1e-4, 1.0 - frac));
  }
};

template <bool Concurrent>
void train_walks(Model& m, const WalkCorpus& corpus, std::size_t begin, std::size_t end,
                 const SkipGramConfig& config, const NegativeSampler& sampler,
                 const Schedule& schedule, std::atomic<std::uint64_t>& processed, Rng& rng) {
  std::vector<float> grad(m.dim);
  std::vector<float> center_copy(m.dim);
  const auto window = static_cast<std::ptrdiff_t>(config.window);
  for (std::size_t w = begin; w < end; ++w) {
    const auto& walk = corpus.walks[w];
    const auto len = static_cast<std::ptrdiff_t>(walk.size());
    const float lr = schedule.rate(processed.load(std::memory_order_relaxed));
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      const auto lo = std::max<std::ptrdiff_t>(0, i - window);
      const auto hi = std::min<std::ptrdiff_t>(len - 1, i + window);
      for (auto j = lo; j <= hi; ++j) {
        if (j == i) continue;
        update_pair<Concurrent>(m, walk[static_cast<std::size_t>(i)],
                                walk[static_cast<std::size_t>(j)], config.negatives_per_positive,
                                sampler, rng, lr, grad, center_copy);
      }
    }
    processed.fetch_add(walk.size(), std::memory_order_relaxed);
  }
}

struct ProbePair {
  NodeIndex center;
  NodeIndex context;
  std::vector<NodeIndex> negatives;
};

std::vector<ProbePair> make_probe(const WalkCorpus& corpus, const SkipGramConfig& config,
                                  const NegativeSampler& sampler) {
  constexpr std::size_t kProbeSize = 1000;
  Rng rng(derive_seed(config.seed, 0x9B0BE));
  std::vector<ProbePair> probe;
  std::size_t attempts = 0;
  while (probe.size() < kProbeSize && attempts < 20 * kProbeSize) {
    ++attempts;
    const auto& walk = corpus.walks[rng.uniform_index(corpus.walks.size())];
    if (walk.size() < 2) continue;
    const auto i = rng.uniform_index(walk.size());
    const auto span = static_cast<std::size_t>(config.window);
    const auto lo = i >= span ? i - span : 0;
    const auto hi = std::min(walk.size() - 1, i + span);
    const auto j = lo + rng.uniform_index(hi - lo + 1);
    if (j == i) continue;
    ProbePair pair{walk[i], walk[j], {}};
    for (int k = 0; k < config.negatives_per_positive; ++k) {
      pair.negatives.push_back(sampler.draw(rng));
    }
    probe.push_back(std::move(pair));
  }
  return probe;
}

double probe_loss(const Model& m, const std::vector<ProbePair>& probe) {
  if (probe.empty()) return 0.0;
  auto dot = [&](NodeIndex a, NodeIndex b) {
    double s = 0.0;
    for (std::size_t d = 0; d < m.dim; ++d) {
      s += static_cast<double>(m.input[a * m.dim + d]) * m.output[b * m.dim + d];
    }
    return s;
  };
  // -log(sigmoid(x)) = log1p(exp(-x))
  auto neg_log_sigmoid = [](double x) {
    return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
  };
  double total = 0.0;
  for (const auto& p : probe) {
    total += neg_log_sigmoid(dot(p.center, p.context));
    for (auto n : p.negatives) total += neg_log_sigmoid(-dot(p.center, n));
  }
  return total / static_cast<double>(probe.size());
}

}  // namespace

EmbeddingTable train_skipgram(const WalkCorpus& corpus, const SkipGramConfig& config,
                              SkipGramTrace* trace) {
  validate(config);
  if (corpus.walks.empty()) throw PreconditionError("skip-gram needs at least one walk");
  const std::size_t n = corpus.nodes.size();

  std::vector<std::uint64_t> counts(n, 0);
  std::uint64_t tokens = 0;
  for (const auto& walk : corpus.walks) {
    for (auto v : walk) {
      if (v >= n) throw PreconditionError("walk references a node outside the corpus");
      ++counts[v];
    }
    tokens += walk.size();
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (counts[v] == 0) {
      throw CoverageError(to_string(corpus.nodes[v].side) + " node " +
                          std::to_string(corpus.nodes[v].id) + " does not occur in any walk");
    }
  }

  Model m;
  m.dim = static_cast<std::size_t>(config.dimension);
  m.input.resize(n * m.dim);
  m.output.assign(n * m.dim, 0.0f);
  {
    Rng init(derive_seed(config.seed, 0x1A17));
    for (auto& x : m.input) {
      x = static_cast<float>((init.uniform() - 0.5) / static_cast<double>(m.dim));
    }
  }

  const NegativeSampler sampler(counts);
  const auto probe = trace ? make_probe(corpus, config, sampler) : std::vector<ProbePair>{};
  if (trace) {
    trace->probe_loss.clear();
    trace->probe_loss.push_back(probe_loss(m, probe));
  }

  const Schedule schedule{config.initial_learning_rate,
                          static_cast<double>(tokens) * config.epochs};
  std::atomic<std::uint64_t> processed{0};
  const auto threads =
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), corpus.walks.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (threads <= 1) {
      Rng rng(derive_seed(config.seed, 0xE90C, static_cast<std::uint64_t>(epoch)));
      train_walks<false>(m, corpus, 0, corpus.walks.size(), config, sampler, schedule,
                         processed, rng);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (corpus.walks.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const auto begin = t * chunk;
        const auto end = std::min(corpus.walks.size(), begin + chunk);
        if (begin >= end) continue;
        pool.emplace_back([&, begin, end, t] {
          Rng rng(derive_seed(config.seed, 0xE90C + t + 1, static_cast<std::uint64_t>(epoch)));
          train_walks<true>(m, corpus, begin, end, config, sampler, schedule, processed, rng);
        });
      }
    }
    if (trace) trace->probe_loss.push_back(probe_loss(m, probe));
  }

  return EmbeddingTable(corpus.nodes, config.dimension, std::move(m.input));
}

void write_embeddings_csv(std::ostream& out, const EmbeddingTable& table) {
  out << "node_type,node_id";
  for (int d = 0; d < table.dimension(); ++d) out << ",d_" << d;
  out << '\n';
  std::array<char, 32> buffer{};
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& node = table.nodes()[i];
    out << to_string(node.side) << ',' << node.id;
    for (float v : table.row(i)) {
      auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), v);
      (void)ec;
      out << ',';
      out.write(buffer.data(), ptr - buffer.data());
    }
    out << '\n';
  }
}

EmbeddingTable read_embeddings_csv(std::string_view text) {
  std::vector<NodeRef> nodes;
  std::vector<float> values;
  int dimension = -1;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (dimension < 0) {
      if (fields.size() < 3 || fields[0] != "node_type" || fields[1] != "node_id") {
        throw SchemaError("embedding CSV header must start with node_type,node_id,d_0");
      }
      dimension = static_cast<int>(fields.size()) - 2;
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(dimension) + 2) {
      throw RowError(line_no, "expected " + std::to_string(dimension + 2) + " fields");
    }
    NodeRef node;
    if (fields[0] == "student") {
      node.side = NodeSide::Student;
    } else if (fields[0] == "challenge") {
      node.side = NodeSide::Challenge;
    } else {
      throw RowError(line_no, "node_type must be student or challenge");
    }
    {
      auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), node.id);
      if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
        throw RowError(line_no, "cannot parse node_id");
      }
    }
    nodes.push_back(node);
    for (std::size_t d = 2; d < fields.size(); ++d) {
      float v = 0.0f;
      auto [ptr, ec] = std::from_chars(fields[d].data(), fields[d].data() + fields[d].size(), v);
      if (ec != std::errc() || ptr != fields[d].data() + fields[d].size() || !std::isfinite(v)) {
        throw RowError(line_no, "cannot parse embedding value");
      }
      values.push_back(v);
    }
  }
  if (dimension < 0) throw SchemaError("embedding CSV is empty");
  return EmbeddingTable(std::move(nodes), dimension, std::move(values));
}

}  // namespace gradepred
