// oracles.hpp - brute-force reference implementations shared by the unit and
// acceptance tests

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsin/graph.hpp"
#include "semsin/model.hpp"
#include "semsin/penman.hpp"

namespace semsin::oracle {

/// Connected AMR graph with `nodes` variables: a random tree plus a few
/// reentrant edges, roles drawn from every role class and both directions.
penman::AmrGraph random_amr(Rng& rng, std::size_t nodes);

/// All-pairs undirected hop distances (-1 when unreachable).
std::vector<std::vector<int>> floyd_warshall(const graph::SemanticGraph& sg);

/// Every walk of exactly `length` edges from `from` to `to` that never
/// revisits a node, sorted.
std::vector<graph::PathSequence> enumerate_paths(const graph::SemanticGraph& sg, std::size_t from, std::size_t to,
                                                 int length);

/// True when `s` is the induced subgraph on nodes within `hops` of `center`.
/// On mismatch `why` says what differs.
bool is_khop_subgraph(const graph::SemanticGraph& sg, std::size_t center, int hops,
                      const graph::EventCentricStructure& s, std::string& why);

/// One RGCN layer written as nested loops over nodes, relation types and
/// neighbours. weights[r] for r < 10 are relation matrices, weights[10] the
/// self-loop matrix.
nn::Matrix rgcn_layer_loops(const graph::SemanticGraph& sg, const nn::Matrix& h,
                            const std::vector<nn::Matrix>& weights);

/// Textbook LSTM over a sequence of rows (gate order i, f, g, o) returning the
/// final hidden state.
nn::Matrix lstm_loops(const nn::Matrix& inputs, const nn::Matrix& wx, const nn::Matrix& wh, const nn::Matrix& b,
                      bool reverse);

}  // namespace semsin::oracle
