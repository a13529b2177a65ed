#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "semsin/graph.hpp"
#include "semsin/verify.hpp"
#include "test_util.hpp"

using namespace semsin;
using graph::TokenSpan;

namespace {

graph::SemanticGraph horton_graph() {
  const auto r = verify::horton_example();
  return graph::build_semantic_graph(penman::parse_penman(r.amr), r.alignments, r.tokens.size());
}

std::size_t node(const graph::SemanticGraph& sg, const std::string& var) { return sg.find_variable(var).value(); }

}  // namespace

TEST_CASE("semantic graph adds an inverse copy of every edge") {
  const auto sg = horton_graph();
  CHECK(sg.node_count() == 8);  // seven variables plus the "Horton" literal
  CHECK(sg.edges.size() == 16);
  std::size_t inverse = 0;
  for (const auto& e : sg.edges) inverse += e.is_inverse;
  CHECK(inverse == 8);
  CHECK(sg.nodes[node(sg, "c")].auxiliary());
  CHECK_FALSE(sg.nodes[node(sg, "s")].auxiliary());
}

TEST_CASE("inverted roles are normalized before the inverse copy") {
  const auto sg = horton_graph();
  // ":ARG0-of s2" under p3 means s2 -ARG0-> p3
  bool found = false;
  for (const auto& e : sg.edges)
    if (!e.is_inverse && e.src == node(sg, "s2") && e.dst == node(sg, "p3")) {
      CHECK(sg.role_vocab[e.role].label == "ARG0");
      found = true;
    }
  CHECK(found);
}

TEST_CASE("relation types pair a role class with a direction") {
  const auto sg = horton_graph();
  for (const auto& e : sg.edges) {
    const auto cls = static_cast<std::size_t>(penman::classify_role(sg.role_vocab[e.role].label));
    CHECK(sg.relation_type(e) == 2 * cls + (e.is_inverse ? 1u : 0u));
    CHECK(sg.relation_type(e) < graph::kRelationTypeCount);
  }
}

TEST_CASE("alignment errors") {
  const auto amr = penman::parse_penman("(w / want-01 :ARG0 (b / boy))");
  CHECK(test::error_code([&] { graph::build_semantic_graph(amr, {{"zz", {0, 0}}}); }) == "UnknownAlignedNode");
  CHECK(test::error_code([&] { graph::build_semantic_graph(amr, {{"b", {0, 5}}}, 3); }) == "AlignmentOutOfRange");
}

TEST_CASE("event resolution picks the node with the largest overlap") {
  const auto sg = horton_graph();
  CHECK(graph::resolve_event_node(sg, {2, 2}) == node(sg, "s"));
  CHECK(graph::resolve_event_node(sg, {4, 4}) == node(sg, "p"));
  CHECK(graph::resolve_event_node(sg, {3, 4}) == node(sg, "p"));
  // p3 and s2 share token 6; the smaller node index wins
  CHECK(graph::resolve_event_node(sg, {6, 6}) == std::min(node(sg, "p3"), node(sg, "s2")));
  CHECK(test::error_code([&] { graph::resolve_event_node(sg, {1, 1}); }) == "NoAlignedNode");
}

TEST_CASE("overlap ties prefer the node covered more completely") {
  const auto amr = penman::parse_penman("(a / and :op1 (x / thing) :op2 (y / thing))");
  const auto sg = graph::build_semantic_graph(amr, {{"x", {0, 3}}, {"y", {2, 2}}});
  // x overlaps [1, 2] by two tokens, y by one
  CHECK(graph::resolve_event_node(sg, {1, 2}) == node(sg, "x"));
  // both overlap [2, 2] by one token; y is covered entirely
  CHECK(graph::resolve_event_node(sg, {2, 2}) == node(sg, "y"));
}

TEST_CASE("worked example path: protect-01 -ARG0-> person -ARG1^-1-> shoot-02") {
  const auto sg = horton_graph();
  const std::size_t p = node(sg, "p"), p2 = node(sg, "p2"), s = node(sg, "s");
  const auto paths = graph::shortest_paths(sg, p, s);
  REQUIRE_FALSE(paths.empty());
  CHECK(paths.size() % 2 == 0);
  bool found = false;
  for (const auto& path : paths) {
    CHECK(path.length() == 2);
    if (path.nodes == std::vector<std::size_t>{p, p2, s}) {
      const auto& r0 = sg.role_vocab[path.roles[0]];
      const auto& r1 = sg.role_vocab[path.roles[1]];
      found = r0.label == "ARG0" && !r0.inverse && r1.label == "ARG1" && r1.inverse;
    }
  }
  CHECK(found);
}

TEST_CASE("shortest paths are followed by their reverses and can be truncated") {
  const auto sg = horton_graph();
  const auto all = graph::shortest_paths(sg, node(sg, "p"), node(sg, "s"), 100);
  const std::size_t half = all.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    CHECK(all[half + i] == graph::reverse(all[i]));
    CHECK(graph::reverse(graph::reverse(all[i])) == all[i]);
  }
  const auto one = graph::shortest_paths(sg, node(sg, "p"), node(sg, "s"), 1);
  REQUIRE(one.size() == 2);
  CHECK(one[0] == all[0]);
}

TEST_CASE("path errors") {
  const auto sg = horton_graph();
  CHECK(test::error_code([&] { graph::shortest_paths(sg, 1, 1); }) == "SameEvent");
  penman::AmrGraph split;
  split.nodes = {{"a", "x"}, {"b", "y"}};
  split.root = "a";
  const auto disconnected = graph::build_semantic_graph(split, {});
  CHECK(test::error_code([&] { graph::shortest_paths(disconnected, 0, 1); }) == "NoPath");
  CHECK(graph::bfs_distances(disconnected, 0)[1] == -1);
  CHECK(test::error_code([&] { graph::khop_subgraph(sg, 0, 0); }) == "InvalidHops");
}

TEST_CASE("random graphs agree with the brute-force oracles") {
  Rng rng(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const auto amr = oracle::random_amr(rng, 2 + rng.index(11));
    const auto sg = graph::build_semantic_graph(amr, {});
    const auto fw = oracle::floyd_warshall(sg);
    const std::size_t n = sg.node_count();
    for (std::size_t a = 0; a < n; ++a) {
      const auto bfs = graph::bfs_distances(sg, a);
      for (std::size_t b = 0; b < n; ++b) REQUIRE(bfs[b] == fw[a][b]);
    }
    const std::size_t e1 = rng.index(n);
    std::size_t e2 = rng.index(n);
    if (e2 == e1) e2 = (e1 + 1) % n;
    const auto paths = graph::shortest_paths(sg, e1, e2, 1000);
    std::vector<graph::PathSequence> forward(paths.begin(), paths.begin() + static_cast<std::ptrdiff_t>(paths.size() / 2));
    for (const auto& p : forward) REQUIRE(static_cast<int>(p.length()) == fw[e1][e2]);
    std::sort(forward.begin(), forward.end());
    REQUIRE(forward == oracle::enumerate_paths(sg, e1, e2, fw[e1][e2]));
    const int hops = 1 + static_cast<int>(rng.index(3));
    std::string why;
    REQUIRE_MESSAGE(oracle::is_khop_subgraph(sg, e1, hops, graph::khop_subgraph(sg, e1, hops), why), why);
  }
}
