// oracles.cpp

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace semsin::oracle {

using nn::Matrix;

namespace {

const std::vector<std::string> kRoles = {"ARG0",     "ARG1",   "ARG2",      "op1",      "op2",  "manner",
                                         "instrument", "time", "duration",  "mod",      "location",
                                         "ARG0-of",  "ARG1-of", "purpose",  "frequency"};

}  // namespace

penman::AmrGraph random_amr(Rng& rng, std::size_t nodes) {
  penman::AmrGraph g;
  for (std::size_t i = 0; i < nodes; ++i)
    g.nodes.push_back({"v" + std::to_string(i), "concept-" + std::to_string(rng.index(5))});
  g.root = "v0";
  std::set<std::tuple<std::size_t, std::string, std::size_t>> seen;
  const auto add = [&](std::size_t u, std::size_t v) {
    const std::string& role = kRoles[rng.index(kRoles.size())];
    const auto dir = penman::split_inverted_role(role);
    const auto key = dir.inverted ? std::make_tuple(v, dir.base, u) : std::make_tuple(u, dir.base, v);
    if (!seen.insert(key).second) return;
    g.edges.push_back({g.nodes[u].variable, role, g.nodes[v].variable, false});
  };
  for (std::size_t i = 1; i < nodes; ++i) add(rng.index(i), i);
  const std::size_t extra = nodes > 2 ? rng.index(3) : 0;
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t u = rng.index(nodes);
    const std::size_t v = rng.index(nodes);
    if (u != v) add(u, v);
  }
  if (rng.bernoulli(0.3)) {
    g.constants.push_back({"!0", "-"});
    g.edges.push_back({g.nodes[rng.index(nodes)].variable, "polarity", "!0", true});
  }
  return g;
}

std::vector<std::vector<int>> floyd_warshall(const graph::SemanticGraph& sg) {
  const std::size_t n = sg.node_count();
  constexpr int kInf = 1 << 29;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : sg.edges) {
    d[e.src][e.dst] = std::min(d[e.src][e.dst], 1);
    d[e.dst][e.src] = std::min(d[e.dst][e.src], 1);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (int& x : row)
      if (x >= kInf) x = -1;
  return d;
}

std::vector<graph::PathSequence> enumerate_paths(const graph::SemanticGraph& sg, std::size_t from, std::size_t to,
                                                 int length) {
  std::vector<graph::PathSequence> out;
  graph::PathSequence cur;
  cur.nodes.push_back(from);
  std::vector<bool> on_path(sg.node_count(), false);
  on_path[from] = true;
  const auto dfs = [&](auto&& self, std::size_t u) -> void {
    if (static_cast<int>(cur.roles.size()) == length) {
      if (u == to) out.push_back(cur);
      return;
    }
    for (const auto& e : sg.edges) {
      if (e.src != u || on_path[e.dst]) continue;
      on_path[e.dst] = true;
      cur.nodes.push_back(e.dst);
      cur.roles.push_back(e.role);
      self(self, e.dst);
      cur.nodes.pop_back();
      cur.roles.pop_back();
      on_path[e.dst] = false;
    }
  };
  dfs(dfs, from);
  std::sort(out.begin(), out.end());
  return out;
}

bool is_khop_subgraph(const graph::SemanticGraph& sg, std::size_t center, int hops,
                      const graph::EventCentricStructure& s, std::string& why) {
  const auto dist = floyd_warshall(sg);
  std::set<std::size_t> expected;
  for (std::size_t v = 0; v < sg.node_count(); ++v)
    if (dist[center][v] >= 0 && dist[center][v] <= hops) expected.insert(v);
  const std::set<std::size_t> got(s.original_ids.begin(), s.original_ids.end());
  if (got != expected || got.size() != s.original_ids.size()) {
    why = "node set differs";
    return false;
  }
  if (s.original_ids.at(s.center) != center) {
    why = "center maps to the wrong node";
    return false;
  }
  // compare edge multisets by (src, label, inverse, dst) in original ids
  using Key = std::tuple<std::size_t, std::string, bool, std::size_t>;
  std::multiset<Key> want, have;
  for (const auto& e : sg.edges)
    if (expected.count(e.src) && expected.count(e.dst))
      want.insert({e.src, sg.role_vocab[e.role].label, e.is_inverse, e.dst});
  for (const auto& e : s.subgraph.edges)
    have.insert({s.original_ids.at(e.src), s.subgraph.role_vocab.at(e.role).label, e.is_inverse,
                 s.original_ids.at(e.dst)});
  if (want != have) {
    why = "edge set differs";
    return false;
  }
  for (std::size_t i = 0; i < s.original_ids.size(); ++i)
    if (s.subgraph.nodes[i].concept_name != sg.nodes[s.original_ids[i]].concept_name) {
      why = "node attributes differ";
      return false;
    }
  return true;
}

Matrix rgcn_layer_loops(const graph::SemanticGraph& sg, const Matrix& h, const std::vector<Matrix>& weights) {
  const std::size_t n = sg.node_count();
  const std::size_t types = 2 * penman::kRoleClassCount;
  const Eigen::Index d_out = weights.at(types).cols();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), d_out);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < types; ++r) {
      std::set<std::size_t> neighbours;
      for (const auto& e : sg.edges) {
        const std::size_t type =
            2 * static_cast<std::size_t>(penman::classify_role(sg.role_vocab[e.role].label)) + (e.is_inverse ? 1 : 0);
        if (type == r && e.dst == i) neighbours.insert(e.src);
      }
      for (std::size_t j : neighbours)
        for (Eigen::Index c = 0; c < d_out; ++c) {
          double acc = 0.0;
          for (Eigen::Index k = 0; k < h.cols(); ++k) acc += h(static_cast<Eigen::Index>(j), k) * weights[r](k, c);
          out(static_cast<Eigen::Index>(i), c) += acc / static_cast<double>(neighbours.size());
        }
    }
    for (Eigen::Index c = 0; c < d_out; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < h.cols(); ++k) acc += h(static_cast<Eigen::Index>(i), k) * weights[types](k, c);
      out(static_cast<Eigen::Index>(i), c) += acc;
    }
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
  return out;
}

Matrix lstm_loops(const Matrix& inputs, const Matrix& wx, const Matrix& wh, const Matrix& b, bool reverse) {
  const Eigen::Index hid = wh.rows();
  std::vector<double> h(static_cast<std::size_t>(hid), 0.0), c(static_cast<std::size_t>(hid), 0.0);
  const auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (Eigen::Index s = 0; s < inputs.rows(); ++s) {
    const Eigen::Index t = reverse ? inputs.rows() - 1 - s : s;
    std::vector<double> z(static_cast<std::size_t>(4 * hid));
    for (Eigen::Index g = 0; g < 4 * hid; ++g) {
      double acc = b(0, g);
      for (Eigen::Index k = 0; k < inputs.cols(); ++k) acc += inputs(t, k) * wx(k, g);
      for (Eigen::Index k = 0; k < hid; ++k) acc += h[static_cast<std::size_t>(k)] * wh(k, g);
      z[static_cast<std::size_t>(g)] = acc;
    }
    for (Eigen::Index k = 0; k < hid; ++k) {
      const auto u = static_cast<std::size_t>(k);
      const auto H = static_cast<std::size_t>(hid);
      const double i = sigmoid(z[u]);
      const double f = sigmoid(z[H + u]);
      const double g = std::tanh(z[2 * H + u]);
      const double o = sigmoid(z[3 * H + u]);
      c[u] = f * c[u] + i * g;
      h[u] = o * std::tanh(c[u]);
    }
  }
  Matrix out(1, hid);
  for (Eigen::Index k = 0; k < hid; ++k) out(0, k) = h[static_cast<std::size_t>(k)];
  return out;
}

}  // namespace semsin::oracle
