// graph.cpp - semantic graph construction and structure extraction

#include "semsin/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <unordered_map>

namespace semsin::graph {

std::size_t SemanticGraph::relation_type(const GraphEdge& e) const {
  const RoleInfo& info = role_vocab.at(e.role);
  return 2 * static_cast<std::size_t>(info.role_class) + (e.is_inverse ? 1 : 0);
}

std::optional<std::size_t> SemanticGraph::find_variable(const std::string& variable) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].variable == variable) return i;
  return std::nullopt;
}

std::vector<std::vector<std::size_t>> SemanticGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(nodes.size());
  for (std::size_t i = 0; i < edges.size(); ++i) adj[edges[i].src].push_back(i);
  for (auto& list : adj)
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      if (edges[a].dst != edges[b].dst) return edges[a].dst < edges[b].dst;
      if (edges[a].role != edges[b].role) return edges[a].role < edges[b].role;
      return a < b;
    });
  return adj;
}

SemanticGraph build_semantic_graph(const penman::AmrGraph& amr, const Alignments& alignments,
                                   std::optional<std::size_t> token_count) {
  SemanticGraph sg;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& n : amr.nodes) {
    index.emplace(n.variable, sg.nodes.size());
    sg.nodes.push_back({n.variable, n.concept_name, std::nullopt});
  }
  for (const auto& c : amr.constants) {
    index.emplace(c.id, sg.nodes.size());
    sg.nodes.push_back({c.id, c.value, std::nullopt});
  }

  for (const auto& [variable, span] : alignments) {
    auto it = index.find(variable);
    if (it == index.end()) throw GraphError("UnknownAlignedNode", "alignment for unknown node '" + variable + "'");
    const bool bad = span.start < 0 || span.start > span.end ||
                     (token_count && static_cast<std::size_t>(span.end) >= *token_count);
    if (bad)
      throw GraphError("AlignmentOutOfRange", "alignment of node '" + variable + "' out of range [" +
                                                  std::to_string(span.start) + "," +
                                                  std::to_string(span.end) + "]");
    sg.nodes[it->second].span = span;
  }

  // label -> forward role id; the inverse id is always forward + 1
  std::unordered_map<std::string, std::size_t> role_ids;
  auto role_id = [&](const std::string& label) {
    auto it = role_ids.find(label);
    if (it != role_ids.end()) return it->second;
    const std::size_t id = sg.role_vocab.size();
    const penman::RoleClass cls = penman::classify_role(label);
    sg.role_vocab.push_back({label, cls, false});
    sg.role_vocab.push_back({label, cls, true});
    role_ids.emplace(label, id);
    return id;
  };

  for (const auto& e : amr.edges) {
    const auto dir = penman::split_inverted_role(e.role);
    std::size_t src = index.at(e.source);
    std::size_t dst = index.at(e.target);
    if (dir.inverted) std::swap(src, dst);
    const std::size_t id = role_id(dir.base);
    sg.edges.push_back({src, id, dst, false});
    sg.edges.push_back({dst, id + 1, src, true});
  }
  return sg;
}

std::size_t resolve_event_node(const SemanticGraph& sg, TokenSpan event_span) {
  std::optional<std::size_t> best;
  int best_overlap = 0;
  int best_len = 1;
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
    const auto& span = sg.nodes[i].span;
    if (!span) continue;
    const int overlap = std::min(span->end, event_span.end) - std::max(span->start, event_span.start) + 1;
    if (overlap <= 0) continue;
    const int len = span->length();
    // overlap/len > best_overlap/best_len, compared without division
    const bool better = !best || overlap > best_overlap ||
                        (overlap == best_overlap && overlap * best_len > best_overlap * len);
    if (better) {
      best = i;
      best_overlap = overlap;
      best_len = len;
    }
  }
  if (!best)
    throw GraphError("NoAlignedNode", "no node aligned to event span [" + std::to_string(event_span.start) +
                                          "," + std::to_string(event_span.end) + "]");
  return *best;
}

std::vector<int> bfs_distances(const SemanticGraph& sg, std::size_t source) {
  std::vector<std::vector<std::size_t>> neighbours(sg.nodes.size());
  for (const auto& e : sg.edges) {
    neighbours[e.src].push_back(e.dst);
    neighbours[e.dst].push_back(e.src);
  }
  std::vector<int> dist(sg.nodes.size(), -1);
  std::deque<std::size_t> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : neighbours[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

EventCentricStructure khop_subgraph(const SemanticGraph& sg, std::size_t center, int hops) {
  if (hops < 1) throw GraphError("InvalidHops", "hop count must be >= 1");
  const std::vector<int> dist = bfs_distances(sg, center);

  EventCentricStructure out;
  out.hops = hops;
  out.subgraph.role_vocab = sg.role_vocab;
  std::vector<std::ptrdiff_t> remap(sg.nodes.size(), -1);
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
    if (dist[i] < 0 || dist[i] > hops) continue;
    remap[i] = static_cast<std::ptrdiff_t>(out.subgraph.nodes.size());
    out.original_ids.push_back(i);
    out.subgraph.nodes.push_back(sg.nodes[i]);
  }
  for (const auto& e : sg.edges)
    if (remap[e.src] >= 0 && remap[e.dst] >= 0)
      out.subgraph.edges.push_back({static_cast<std::size_t>(remap[e.src]), e.role,
                                    static_cast<std::size_t>(remap[e.dst]), e.is_inverse});
  out.center = static_cast<std::size_t>(remap[center]);
  return out;
}

PathSequence reverse(const PathSequence& p) {
  PathSequence r{{p.nodes.rbegin(), p.nodes.rend()}, {p.roles.rbegin(), p.roles.rend()}};
  return r;
}

std::vector<PathSequence> shortest_paths(const SemanticGraph& sg, std::size_t e1, std::size_t e2,
                                         std::size_t max_paths) {
  if (e1 == e2) throw GraphError("SameEvent", "both events resolve to the same node");
  const std::vector<int> to_target = bfs_distances(sg, e2);
  const int length = to_target.at(e1);
  if (length < 0)
    throw GraphError("NoPath", "no path between nodes " + std::to_string(e1) + " and " + std::to_string(e2));

  const auto adj = sg.adjacency();
  std::vector<PathSequence> paths;
  PathSequence current{{e1}, {}};
  // Walking only along edges that reduce the distance to e2 by one yields
  // exactly the shortest paths, in lexicographic order of the sorted lists.
  std::function<void(std::size_t)> walk = [&](std::size_t u) {
    if (paths.size() >= max_paths) return;
    if (u == e2) {
      paths.push_back(current);
      return;
    }
    const GraphEdge* previous = nullptr;
    for (std::size_t ei : adj[u]) {
      const GraphEdge& e = sg.edges[ei];
      if (to_target[e.dst] != to_target[u] - 1) continue;
      // parallel duplicates would only repeat a path
      if (previous && previous->dst == e.dst && previous->role == e.role) continue;
      previous = &e;
      current.nodes.push_back(e.dst);
      current.roles.push_back(e.role);
      walk(e.dst);
      current.nodes.pop_back();
      current.roles.pop_back();
      if (paths.size() >= max_paths) return;
    }
  };
  walk(e1);

  const std::size_t forward = paths.size();
  for (std::size_t i = 0; i < forward; ++i) paths.push_back(reverse(paths[i]));
  return paths;
}

}  // namespace semsin::graph
