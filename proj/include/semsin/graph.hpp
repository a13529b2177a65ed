// graph.hpp - semantic graph with inverse edges, event resolution and the
// two event structures (L-hop neighbourhood, shortest connecting paths)

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semsin/error.hpp"
#include "semsin/penman.hpp"

namespace semsin::graph {

/// Inclusive token span [start, end].
struct TokenSpan {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool operator==(const TokenSpan&) const = default;
};

using Alignments = std::map<std::string, TokenSpan>;

class GraphError : public Error {
 public:
  using Error::Error;
};

struct GraphNode {
  std::string variable;  // constant leaves use their "!k" id
  std::string concept_name;
  std::optional<TokenSpan> span;

  /// Nodes without aligned tokens were introduced by the AMR parser.
  bool auxiliary() const { return !span.has_value(); }
};

struct RoleInfo {
  std::string label;  // normalized, e.g. "ARG0" for both ARG0 and ARG0-of
  penman::RoleClass role_class = penman::RoleClass::Others;
  bool inverse = false;
};

struct GraphEdge {
  std::size_t src = 0;
  std::size_t role = 0;  // index into role_vocab
  std::size_t dst = 0;
  bool is_inverse = false;
};

/// Number of relation types seen by the graph convolution: every role class
/// in forward and inverse direction.
inline constexpr std::size_t kRelationTypeCount = 2 * penman::kRoleClassCount;

class SemanticGraph {
 public:
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<RoleInfo> role_vocab;

  std::size_t node_count() const { return nodes.size(); }

  /// Relation type of an edge in [0, kRelationTypeCount).
  std::size_t relation_type(const GraphEdge& e) const;

  std::optional<std::size_t> find_variable(const std::string& variable) const;

  /// Outgoing edge indices per node, sorted by (dst, role).
  std::vector<std::vector<std::size_t>> adjacency() const;
};

/// Builds the semantic graph: one node per AMR node and constant leaf, and for
/// every edge a forward copy plus an inverse copy with swapped endpoints.
/// Edges written with an inverted role ("ARG0-of") are normalized first.
/// `token_count`, when given, bounds alignment spans.
/// Throws GraphError("AlignmentOutOfRange") / GraphError("UnknownAlignedNode").
SemanticGraph build_semantic_graph(const penman::AmrGraph& amr, const Alignments& alignments,
                                   std::optional<std::size_t> token_count = std::nullopt);

/// Node whose alignment overlaps `event_span` the most; ties go to the larger
/// share of the node's own span, then to the smaller node index.
/// Throws GraphError("NoAlignedNode").
std::size_t resolve_event_node(const SemanticGraph& sg, TokenSpan event_span);

/// Undirected BFS distances (-1 for unreachable).
std::vector<int> bfs_distances(const SemanticGraph& sg, std::size_t source);

struct EventCentricStructure {
  SemanticGraph subgraph;
  std::size_t center = 0;                 // index inside subgraph
  int hops = 0;
  std::vector<std::size_t> original_ids;  // subgraph node -> node in the full graph
};

/// Induced subgraph on nodes within `hops` of `center`. Requires hops >= 1.
EventCentricStructure khop_subgraph(const SemanticGraph& sg, std::size_t center, int hops);

/// node_0, role_0, node_1, ..., node_n.
struct PathSequence {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> roles;  // role ids; roles[i] labels the step nodes[i] -> nodes[i+1]

  std::size_t length() const { return roles.size(); }
  bool operator==(const PathSequence&) const = default;
  auto operator<=>(const PathSequence&) const = default;
};

/// Reverse path (v_n, r_{n-1}, ..., r_1, v_1); relation labels are kept.
PathSequence reverse(const PathSequence& p);

inline constexpr std::size_t kDefaultMaxPaths = 8;

/// All shortest paths from e1 to e2 in lexicographic (node, role) order,
/// truncated to `max_paths`, followed by the reverse of every kept path.
/// Throws GraphError("NoPath") when the events are disconnected and
/// GraphError("SameEvent") when e1 == e2.
std::vector<PathSequence> shortest_paths(const SemanticGraph& sg, std::size_t e1, std::size_t e2,
                                         std::size_t max_paths = kDefaultMaxPaths);

}  // namespace semsin::graph
