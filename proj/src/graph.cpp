#include "gradepred/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "gradepred/error.hpp"

namespace gradepred {

std::string to_string(NodeSide side) {
  return side == NodeSide::Student ? "student" : "challenge";
}

BipartiteGraph::BipartiteGraph(std::vector<UserId> students,
                               std::vector<ChallengeId> challenges,
                               std::vector<std::pair<UserId, ChallengeId>> edges) {
  std::sort(students.begin(), students.end());
  students.erase(std::unique(students.begin(), students.end()), students.end());
  std::sort(challenges.begin(), challenges.end());
  challenges.erase(std::unique(challenges.begin(), challenges.end()), challenges.end());

  num_students_ = students.size();
  nodes_.reserve(students.size() + challenges.size());
  for (auto id : students) nodes_.push_back(NodeRef::student(id));
  for (auto id : challenges) nodes_.push_back(NodeRef::challenge(id));
  if (nodes_.size() > std::numeric_limits<NodeIndex>::max()) {
    throw PreconditionError("graph too large for 32-bit node indices");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    lookup_.emplace(nodes_[i], static_cast<NodeIndex>(i));
  }

  std::vector<std::pair<NodeIndex, NodeIndex>> arcs;
  arcs.reserve(edges.size() * 2);
  for (const auto& [user, challenge] : edges) {
    const auto s = index_of(NodeRef::student(user));
    const auto c = index_of(NodeRef::challenge(challenge));
    arcs.emplace_back(s, c);
    arcs.emplace_back(c, s);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  offsets_.assign(nodes_.size() + 1, 0);
  for (const auto& arc : arcs) ++offsets_[arc.first + 1];
  for (std::size_t i = 0; i < nodes_.size(); ++i) offsets_[i + 1] += offsets_[i];
  targets_.reserve(arcs.size());
  for (const auto& arc : arcs) targets_.push_back(arc.second);
}

std::optional<NodeIndex> BipartiteGraph::find(const NodeRef& ref) const {
  if (auto it = lookup_.find(ref); it != lookup_.end()) return it->second;
  return std::nullopt;
}

NodeIndex BipartiteGraph::index_of(const NodeRef& ref) const {
  if (auto v = find(ref)) return *v;
  throw LookupError("unknown " + to_string(ref.side) + " node " + std::to_string(ref.id));
}

bool BipartiteGraph::has_edge(NodeIndex u, NodeIndex v) const {
  const auto adj = neighbors(u);
  return std::binary_search(adj.begin(), adj.end(), v);
}

BipartiteGraph build_bipartite(const Dataset& dataset) {
  if (dataset.empty()) throw PreconditionError("cannot build a graph from an empty dataset");
  std::vector<UserId> students;
  std::vector<ChallengeId> challenges;
  for (const auto& [id, rows] : dataset.student_index()) students.push_back(id);
  for (const auto& [id, rows] : dataset.challenge_index()) challenges.push_back(id);
  std::vector<std::pair<UserId, ChallengeId>> edges;
  edges.reserve(dataset.size());
  for (const auto& r : dataset.records()) edges.emplace_back(r.user_id, r.challenge_id);
  return BipartiteGraph(std::move(students), std::move(challenges), std::move(edges));
}

double bipartite_density(std::size_t students, std::size_t challenges, std::size_t edges) {
  if (students == 0 || challenges == 0) {
    throw PreconditionError("density needs at least one student and one challenge");
  }
  return static_cast<double>(edges) /
         (static_cast<double>(students) * static_cast<double>(challenges));
}

double density(const BipartiteGraph& graph) {
  return bipartite_density(graph.num_students(), graph.num_challenges(), graph.num_edges());
}

std::size_t degree(const BipartiteGraph& graph, const NodeRef& node) {
  return graph.degree(graph.index_of(node));
}

std::vector<std::size_t> connected_components(const BipartiteGraph& graph) {
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> component(graph.num_nodes(), kUnset);
  std::vector<NodeIndex> stack;
  std::size_t next = 0;
  for (NodeIndex start = 0; start < graph.num_nodes(); ++start) {
    if (component[start] != kUnset) continue;
    component[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto w : graph.neighbors(v)) {
        if (component[w] == kUnset) {
          component[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return component;
}

CentralityMap eigenvector_centrality(const BipartiteGraph& graph, double tol, int max_iter) {
  if (max_iter < 1) throw PreconditionError("max_iter must be at least 1");
  const auto component = connected_components(graph);
  const std::size_t num_components =
      component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
  std::vector<std::vector<NodeIndex>> members(num_components);
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) members[component[v]].push_back(v);

  CentralityMap result;
  result.values.assign(graph.num_nodes(), 0.0);
  result.components = num_components;

  std::vector<double> next(graph.num_nodes(), 0.0);
  auto& x = result.values;
  for (const auto& nodes : members) {
    const double start = 1.0 / std::sqrt(static_cast<double>(nodes.size()));
    for (auto v : nodes) x[v] = start;

    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (iter < max_iter) {
      ++iter;
      // y = (A + I) x
      double norm2 = 0.0;
      for (auto v : nodes) {
        double sum = x[v];
        for (auto w : graph.neighbors(v)) sum += x[w];
        next[v] = sum;
        norm2 += sum * sum;
      }
      const double norm = std::sqrt(norm2);
      residual = 0.0;
      for (auto v : nodes) {
        const double y = next[v] / norm;
        residual += (y - x[v]) * (y - x[v]);
        x[v] = y;
      }
      residual = std::sqrt(residual);
      if (residual < tol) break;
    }
    if (!(residual < tol)) {
      throw ConvergenceError("eigenvector centrality did not converge in " +
                                 std::to_string(max_iter) + " iterations (residual " +
                                 std::to_string(residual) + ")",
                             residual);
    }
    result.iterations = std::max(result.iterations, static_cast<std::size_t>(iter));
  }
  return result;
}

GraphStats graph_stats(const BipartiteGraph& graph) {
  GraphStats stats;
  stats.students = graph.num_students();
  stats.challenges = graph.num_challenges();
  stats.nodes = graph.num_nodes();
  stats.edges = graph.num_edges();
  stats.density = density(graph);
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
    auto& hist = graph.is_student(v) ? stats.student_degree_histogram
                                     : stats.challenge_degree_histogram;
    ++hist[graph.degree(v)];
  }
  return stats;
}

}  // namespace gradepred
