#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradepred/data.hpp"

namespace gradepred {

enum class NodeSide : std::uint8_t { Student, Challenge };

std::string to_string(NodeSide side);

/// A graph node named by its side and its identifier on that side. Student
/// and challenge identifiers live in separate namespaces.
struct NodeRef {
  NodeSide side = NodeSide::Student;
  std::int64_t id = 0;

  static NodeRef student(UserId id) { return {NodeSide::Student, id}; }
  static NodeRef challenge(ChallengeId id) { return {NodeSide::Challenge, id}; }

  auto operator<=>(const NodeRef&) const = default;
};

using NodeIndex = std::uint32_t;

/// Undirected student-challenge interaction graph in CSR form.
///
/// Node indices are dense: students in ascending id order occupy
/// [0, num_students()), challenges in ascending id order follow. Neighbor
/// lists are sorted by index.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  /// Edges are (student id, challenge id) pairs; repeated pairs collapse.
  /// Every edge endpoint must appear in the corresponding id list.
  BipartiteGraph(std::vector<UserId> students, std::vector<ChallengeId> challenges,
                 std::vector<std::pair<UserId, ChallengeId>> edges);

  std::size_t num_students() const noexcept { return num_students_; }
  std::size_t num_challenges() const noexcept { return nodes_.size() - num_students_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }

  bool is_student(NodeIndex v) const noexcept { return v < num_students_; }
  const NodeRef& node(NodeIndex v) const { return nodes_.at(v); }
  const std::vector<NodeRef>& nodes() const noexcept { return nodes_; }

  std::optional<NodeIndex> find(const NodeRef& ref) const;
  /// Throws LookupError for unknown nodes.
  NodeIndex index_of(const NodeRef& ref) const;

  std::span<const NodeIndex> neighbors(NodeIndex v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeIndex v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeIndex u, NodeIndex v) const;

 private:
  std::size_t num_students_ = 0;
  std::vector<NodeRef> nodes_;
  std::map<NodeRef, NodeIndex> lookup_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeIndex> targets_;
};

/// One node per distinct user/challenge, one edge per distinct pair.
/// Throws PreconditionError on an empty dataset.
BipartiteGraph build_bipartite(const Dataset& dataset);

/// |E| / (|S| * |C|). Throws PreconditionError if either side is empty.
double bipartite_density(std::size_t students, std::size_t challenges, std::size_t edges);
double density(const BipartiteGraph& graph);

/// Throws LookupError for unknown nodes.
std::size_t degree(const BipartiteGraph& graph, const NodeRef& node);

/// Connected component id per node index; ids are assigned in order of the
/// smallest node index in each component.
std::vector<std::size_t> connected_components(const BipartiteGraph& graph);

/// Eigenvector centrality, indexed by node index.
struct CentralityMap {
  std::vector<double> values;
  std::size_t components = 0;
  std::size_t iterations = 0;  // largest iteration count over components

  double at(NodeIndex v) const { return values.at(v); }
};

/// Power iteration on (A + I), run independently on every connected
/// component with an all-ones start. Each component's vector is
/// L2-normalized. Throws ConvergenceError if successive iterates still differ
/// by >= tol (L2) after max_iter steps.
CentralityMap eigenvector_centrality(const BipartiteGraph& graph, double tol = 1e-8,
                                     int max_iter = 1000);

struct GraphStats {
  std::size_t students = 0;
  std::size_t challenges = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double density = 0.0;
  std::map<std::size_t, std::size_t> student_degree_histogram;
  std::map<std::size_t, std::size_t> challenge_degree_histogram;
};

GraphStats graph_stats(const BipartiteGraph& graph);

}  // namespace gradepred
