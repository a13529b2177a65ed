// model.cpp

#include "semsin/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "semsin/checkpoint.hpp"

namespace semsin::model {

using nlohmann::ordered_json;

Ablation parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::Full;
  if (name == "wo-stru") return Ablation::WoStru;
  if (name == "wo-path") return Ablation::WoPath;
  if (name == "wo-cent") return Ablation::WoCent;
  throw Error("UnknownAblation", "unknown ablation '" + name + "' (expected full, wo-stru, wo-path, wo-cent)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::WoStru: return "wo-stru";
    case Ablation::WoPath: return "wo-path";
    case Ablation::WoCent: return "wo-cent";
  }
  return "full";
}

LstmCell make_lstm_cell(nn::ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden) {
  LstmCell cell;
  cell.input = &store.add(prefix + ".wx", input, 4 * hidden);
  cell.recurrent = &store.add(prefix + ".wh", hidden, 4 * hidden);
  cell.bias = &store.add(prefix + ".b", 1, 4 * hidden);
  return cell;
}

// --- building blocks -------------------------------------------------------

RelationalAdjacency RelationalAdjacency::from_graph(const graph::SemanticGraph& sg) {
  RelationalAdjacency adj;
  adj.nodes = sg.node_count();
  adj.normalized.resize(graph::kRelationTypeCount);
  // N_i^r: distinct sources j of edges j -> i with relation type r
  std::vector<std::vector<std::set<std::size_t>>> in(graph::kRelationTypeCount,
                                                     std::vector<std::set<std::size_t>>(adj.nodes));
  for (const auto& e : sg.edges) {
    const std::size_t r = sg.relation_type(e);
    if (r >= graph::kRelationTypeCount) throw Error("UnknownRoleId", "relation type " + std::to_string(r) + " out of range");
    in[r][e.dst].insert(e.src);
  }
  for (std::size_t r = 0; r < graph::kRelationTypeCount; ++r) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(adj.nodes), static_cast<Eigen::Index>(adj.nodes));
    bool used = false;
    for (std::size_t i = 0; i < adj.nodes; ++i) {
      const auto& n = in[r][i];
      for (std::size_t j : n) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(n.size());
      used = used || !n.empty();
    }
    if (used) adj.normalized[r] = std::move(a);
  }
  return adj;
}

Tensor init_node_reps(Tape& tape, const graph::SemanticGraph& sg, const Tensor& token_vectors,
                      const std::vector<std::size_t>& token_position, const Tensor& concept_table,
                      const std::vector<std::size_t>& concept_ids) {
  const auto n = static_cast<Eigen::Index>(sg.node_count());
  const auto t = static_cast<Eigen::Index>(token_vectors.rows());
  if (concept_ids.size() != sg.node_count())
    throw nn::ShapeMismatch("init_node_reps", concept_ids.size(), 1, sg.node_count(), 1);

  Matrix average = Matrix::Zero(n, t);
  std::vector<std::size_t> aux_rows, aux_ids;
  for (std::size_t i = 0; i < sg.node_count(); ++i) {
    const auto& node = sg.nodes[i];
    if (node.auxiliary()) {
      aux_rows.push_back(i);
      aux_ids.push_back(concept_ids[i]);
      continue;
    }
    const auto span = *node.span;
    if (span.start < 0 || span.end < span.start || static_cast<std::size_t>(span.end) >= token_position.size())
      throw Error("SpanOutOfRange", "node '" + node.variable + "' span [" + std::to_string(span.start) + ", " +
                                        std::to_string(span.end) + "] outside the token sequence");
    const double w = 1.0 / static_cast<double>(span.length());
    for (int k = span.start; k <= span.end; ++k) {
      const auto pos = static_cast<Eigen::Index>(token_position[static_cast<std::size_t>(k)]);
      if (pos >= t) throw Error("SpanOutOfRange", "token position " + std::to_string(pos) + " outside the encoded sequence");
      average(static_cast<Eigen::Index>(i), pos) += w;
    }
  }
  Tensor h0 = nn::matmul(tape.constant(std::move(average)), token_vectors);
  if (!aux_rows.empty()) {
    Matrix place = Matrix::Zero(n, static_cast<Eigen::Index>(aux_rows.size()));
    for (std::size_t q = 0; q < aux_rows.size(); ++q) place(static_cast<Eigen::Index>(aux_rows[q]), static_cast<Eigen::Index>(q)) = 1.0;
    h0 = h0 + nn::matmul(tape.constant(std::move(place)), nn::gather_rows(concept_table, aux_ids));
  }
  return h0;
}

Tensor rgcn_forward(Tape& tape, const RelationalAdjacency& adj, const Tensor& h0, const std::vector<RgcnLayer>& layers,
                    double dropout, Rng* rng, bool training) {
  if (layers.empty()) throw Error("InvalidArgument", "rgcn needs at least one layer");
  if (h0.rows() != adj.nodes) throw nn::ShapeMismatch("rgcn_forward", h0.rows(), h0.cols(), adj.nodes, h0.cols());
  std::vector<Tensor> a(adj.normalized.size());
  for (std::size_t r = 0; r < adj.normalized.size(); ++r)
    if (adj.normalized[r]) a[r] = tape.constant(*adj.normalized[r]);

  Tensor h = h0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Tensor pre = nn::matmul(h, tape.parameter(*layer.self));
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (!a[r].valid()) continue;
      if (r >= layer.relation.size() || layer.relation[r] == nullptr)
        throw Error("UnknownRoleId", "no weight for relation type " + std::to_string(r));
      pre = pre + nn::matmul(nn::matmul(a[r], h), tape.parameter(*layer.relation[r]));
    }
    h = nn::relu(pre);
    if (l + 1 < layers.size() && training && rng != nullptr) h = nn::dropout(h, dropout, *rng, true);
  }
  return h;
}

Tensor event_pair_rep(const Tensor& h_e1, const Tensor& h_e2) {
  if (h_e1.rows() != h_e2.rows() || h_e1.cols() != h_e2.cols())
    throw nn::ShapeMismatch("event_pair_rep", h_e1.value(), h_e2.value());
  return h_e1 + h_e2;
}

Tensor lstm_step(const Tensor& x_proj, const Tensor& state, const Tensor& wh) {
  Tape& tape = *x_proj.tape();
  const Eigen::Index hs = wh.value().rows();
  const Matrix& sv = state.value();
  if (x_proj.value().cols() != 4 * hs || sv.cols() != 2 * hs || sv.rows() != x_proj.value().rows() ||
      wh.value().cols() != 4 * hs)
    throw nn::ShapeMismatch("lstm_step", x_proj.value(), sv);
  const auto sigmoid = [](const auto& m) { return (1.0 / (1.0 + (-m.array()).exp())).matrix(); };
  const Matrix a = x_proj.value() + sv.leftCols(hs) * wh.value();
  Matrix gates(a.rows(), 4 * hs);  // i, f, g, o after their nonlinearities
  gates.leftCols(2 * hs) = sigmoid(a.leftCols(2 * hs));
  gates.middleCols(2 * hs, hs) = a.middleCols(2 * hs, hs).array().tanh().matrix();
  gates.rightCols(hs) = sigmoid(a.rightCols(hs));
  Matrix out(a.rows(), 2 * hs);
  out.rightCols(hs) = (gates.middleCols(hs, hs).array() * sv.rightCols(hs).array() +
                       gates.leftCols(hs).array() * gates.middleCols(2 * hs, hs).array()).matrix();
  out.leftCols(hs) = (gates.rightCols(hs).array() * out.rightCols(hs).array().tanh()).matrix();

  const std::size_t xi = x_proj.id(), si = state.id(), wi = wh.id();
  return tape.record(std::move(out), {xi, si, wi}, [xi, si, wi, hs, gates](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_of(self);
    const Matrix& sv = t.value(si);
    const Matrix& c = t.value(self).rightCols(hs);
    const auto i = gates.leftCols(hs).array(), f = gates.middleCols(hs, hs).array();
    const auto gg = gates.middleCols(2 * hs, hs).array(), o = gates.rightCols(hs).array();
    const Eigen::ArrayXXd tc = c.array().tanh();
    const Eigen::ArrayXXd dh = g.leftCols(hs).array();
    const Eigen::ArrayXXd dc = g.rightCols(hs).array() + dh * o * (1.0 - tc * tc);
    Matrix da(g.rows(), 4 * hs);
    da.leftCols(hs) = (dc * gg * i * (1.0 - i)).matrix();
    da.middleCols(hs, hs) = (dc * sv.rightCols(hs).array() * f * (1.0 - f)).matrix();
    da.middleCols(2 * hs, hs) = (dc * i * (1.0 - gg * gg)).matrix();
    da.rightCols(hs) = (dh * tc * o * (1.0 - o)).matrix();
    if (t.needs_grad(xi)) t.accumulate(xi, da);
    if (t.needs_grad(wi)) t.accumulate(wi, sv.leftCols(hs).transpose() * da);
    if (t.needs_grad(si)) {
      Matrix ds(g.rows(), 2 * hs);
      ds.leftCols(hs) = da * t.value(wi).transpose();
      ds.rightCols(hs) = (dc * f).matrix();
      t.accumulate(si, ds);
    }
  });
}

namespace {

/// One LSTM direction over pre-projected inputs x_t W_x + b; returns the
/// [h_t | c_t] state per step.
std::vector<Tensor> lstm_steps(Tape& tape, const LstmCell& cell, const std::vector<Tensor>& projected, bool reverse) {
  const std::size_t hs = cell.hidden();
  const std::size_t batch = projected.front().rows();
  const Tensor wh = tape.parameter(*cell.recurrent);
  Tensor state = tape.constant(Matrix::Zero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(2 * hs)));
  std::vector<Tensor> out(projected.size());
  for (std::size_t s = 0; s < projected.size(); ++s) {
    const std::size_t t = reverse ? projected.size() - 1 - s : s;
    state = lstm_step(projected[t], state, wh);
    out[t] = state;
  }
  return out;
}

std::vector<Tensor> project_steps(Tape& tape, const LstmCell& cell, const std::vector<Tensor>& steps) {
  const Tensor wx = tape.parameter(*cell.input);
  const Tensor b = tape.parameter(*cell.bias);
  std::vector<Tensor> out;
  out.reserve(steps.size());
  for (const auto& x : steps) out.push_back(nn::matmul(x, wx) + b);
  return out;
}

/// Row t of a T x k tensor projected through the cell input weights, for every t.
std::vector<Tensor> project_rows(Tape& tape, const LstmCell& cell, const Tensor& inputs) {
  const Tensor all = nn::matmul(inputs, tape.parameter(*cell.input)) + tape.parameter(*cell.bias);
  std::vector<Tensor> out;
  out.reserve(inputs.rows());
  for (std::size_t t = 0; t < inputs.rows(); ++t) out.push_back(nn::gather_rows(all, {t}));
  return out;
}

}  // namespace

Tensor run_lstm(Tape& tape, const LstmCell& cell, const std::vector<Tensor>& steps, bool reverse) {
  if (steps.empty()) throw Error("EmptyPath", "lstm over an empty sequence");
  const auto states = lstm_steps(tape, cell, project_steps(tape, cell, steps), reverse);
  return nn::slice_cols(reverse ? states.front() : states.back(), 0, cell.hidden());
}

Tensor bilstm_states(Tape& tape, const BiLstm& lstm, const Tensor& inputs) {
  if (inputs.rows() == 0) throw Error("EmptyPath", "lstm over an empty sequence");
  const auto fwd = lstm_steps(tape, lstm.forward, project_rows(tape, lstm.forward, inputs), false);
  const auto bwd = lstm_steps(tape, lstm.backward, project_rows(tape, lstm.backward, inputs), true);
  return nn::concat_cols({nn::slice_cols(nn::concat_rows(fwd), 0, lstm.forward.hidden()),
                          nn::slice_cols(nn::concat_rows(bwd), 0, lstm.backward.hidden())});
}

Tensor encode_paths(Tape& tape, const std::vector<graph::PathSequence>& paths,
                    const std::vector<std::vector<std::size_t>>& relation_ids, std::size_t pad_id,
                    const Tensor& node_reps, const PathEncoderParams& params) {
  if (paths.empty()) throw Error("EmptyPath", "no paths to encode");
  if (relation_ids.size() != paths.size())
    throw nn::ShapeMismatch("encode_paths", relation_ids.size(), 1, paths.size(), 1);
  const std::size_t n = paths.front().length();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    if (paths[p].length() == 0 || paths[p].nodes.size() != paths[p].length() + 1)
      throw Error("EmptyPath", "path " + std::to_string(p) + " has no edges");
    if (paths[p].length() != n || relation_ids[p].size() != n)
      throw nn::ShapeMismatch("encode_paths", paths[p].length(), relation_ids[p].size(), n, n);
  }
  const Tensor rel_table = tape.parameter(*params.relation_embedding);
  std::vector<Tensor> steps;
  steps.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    std::vector<std::size_t> node_rows, rel_rows;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      node_rows.push_back(paths[p].nodes[i]);
      rel_rows.push_back(i < n ? relation_ids[p][i] : pad_id);
    }
    steps.push_back(nn::concat_cols({nn::gather_rows(node_reps, node_rows), nn::gather_rows(rel_table, rel_rows)}));
  }
  const Tensor hf = run_lstm(tape, params.lstm.forward, steps, false);
  const Tensor hb = run_lstm(tape, params.lstm.backward, steps, true);
  return nn::matmul(nn::concat_cols({hf, hb}), tape.parameter(*params.projection)) +
         tape.parameter(*params.projection_bias);
}

Tensor attend_paths(const Tensor& f_e, const Tensor& paths, const AttentionParams& params, Matrix* weights) {
  Tape& tape = *f_e.tape();
  const Tensor q = nn::matmul(f_e, tape.parameter(*params.query));
  const Tensor k = nn::matmul(paths, tape.parameter(*params.key));
  const Tensor v = nn::matmul(paths, tape.parameter(*params.value));
  const double dk = static_cast<double>(k.cols());
  const Tensor alpha = nn::softmax_rows(nn::scale(nn::matmul(q, nn::transpose(k)), 1.0 / std::sqrt(dk)));
  if (weights != nullptr) *weights = alpha.value();
  return nn::matmul(alpha, v);
}

ContextOutput encode_context_internal(Tape& tape, const data::MarkedSequence& seq, const data::Vocab& vocab,
                                      const TokenEncoderParams& params) {
  std::vector<std::size_t> ids;
  ids.reserve(seq.tokens.size());
  for (const auto& tok : seq.tokens) ids.push_back(vocab.id(tok));
  const Tensor x = nn::gather_rows(tape.parameter(*params.embedding), ids);
  return {bilstm_states(tape, params.lstm, x), seq.cls, seq.e1_open, seq.e2_open, seq.token_position};
}

ContextOutput encode_context_external(Tape& tape, const data::MarkedSequence& seq, const Matrix& vectors) {
  if (static_cast<std::size_t>(vectors.rows()) != seq.tokens.size())
    throw data::DataError("DimensionMismatch", "embedding entry has " + std::to_string(vectors.rows()) +
                                                   " tokens, marked sequence has " + std::to_string(seq.tokens.size()));
  return {tape.constant(vectors), seq.cls, seq.e1_open, seq.e2_open, seq.token_position};
}

Tensor context_pair_rep(Tape& tape, const ContextOutput& ctx, const ContextPairParams& params) {
  const Tensor cls = nn::gather_rows(ctx.vectors, {ctx.cls, ctx.cls});
  const Tensor ev = nn::gather_rows(ctx.vectors, {ctx.e1, ctx.e2});
  const Tensor u = nn::tanh(nn::matmul(nn::concat_cols({cls, ev}), tape.parameter(*params.weight)) +
                            tape.parameter(*params.bias));
  return nn::matmul(tape.constant(Matrix::Ones(1, 2)), u);
}

Tensor classify(Tape& tape, const Tensor& f_e, const Tensor& f_p, const Tensor& f_c, std::size_t hidden,
                const ClassifierParams& params, Ablation ablation, double dropout, Rng* rng, bool training) {
  const auto zero = [&] { return tape.constant(Matrix::Zero(1, static_cast<Eigen::Index>(hidden))); };
  const bool use_e = ablation == Ablation::Full || ablation == Ablation::WoPath;
  const bool use_p = ablation == Ablation::Full || ablation == Ablation::WoCent;
  const Tensor e = use_e && f_e.valid() ? f_e : zero();
  const Tensor p = use_p && f_p.valid() ? f_p : zero();
  const Tensor c = f_c.valid() ? f_c : zero();
  Tensor f = nn::concat_cols({e, p, c});
  if (training && rng != nullptr) f = nn::dropout(f, dropout, *rng, true);
  return nn::softmax_rows(nn::matmul(f, tape.parameter(*params.weight)) + tape.parameter(*params.bias));
}

// --- vocabularies and prepared corpora ---------------------------------------

std::string Vocabularies::relation_key(const graph::RoleInfo& role) {
  return role.inverse ? role.label + "^-1" : role.label;
}

PreparedCorpus prepare_corpus(const std::vector<data::CorpusRecord>& records, int hops, std::size_t max_paths) {
  if (hops < 1) throw Error("InvalidHops", "hop count must be at least 1");
  PreparedCorpus out;
  auto skip = [&](const data::CorpusRecord& r, std::size_t p, const std::string& code) {
    out.skips.skipped.push_back({r.doc_id, p, r.pairs[p].label, code});
    if (code == "NoAlignedNode")
      ++out.skips.unaligned;
    else
      ++out.skips.other;
  };

  for (const auto& r : records) {
    PreparedDoc doc;
    doc.doc_id = r.doc_id;
    doc.topic_id = r.topic_id;
    doc.tokens = r.tokens;
    try {
      doc.graph = graph::build_semantic_graph(penman::parse_penman(r.amr), r.alignments, r.tokens.size());
    } catch (const Error& e) {
      for (std::size_t p = 0; p < r.pairs.size(); ++p) skip(r, p, e.code());
      continue;
    }
    doc.adjacency = RelationalAdjacency::from_graph(doc.graph);
    doc.plain = data::plain_sequence(r.tokens);

    for (std::size_t p = 0; p < r.pairs.size(); ++p) {
      const auto* ev1 = r.find_event(r.pairs[p].e1);
      const auto* ev2 = r.find_event(r.pairs[p].e2);
      PreparedPair pair;
      pair.pair_index = p;
      pair.label = r.pairs[p].label;
      try {
        if (ev1 == nullptr || ev2 == nullptr) throw Error("UnknownEvent", "pair references an undeclared event");
        pair.node1 = graph::resolve_event_node(doc.graph, ev1->token_span);
        pair.node2 = graph::resolve_event_node(doc.graph, ev2->token_span);
        if (pair.node1 == pair.node2) throw Error("SameEvent", "both events resolve to one node");
        pair.marked = data::insert_markers(r.tokens, ev1->token_span, ev2->token_span);
      } catch (const Error& e) {
        skip(r, p, e.code());
        continue;
      }
      pair.centric1 = graph::khop_subgraph(doc.graph, pair.node1, hops);
      pair.centric2 = graph::khop_subgraph(doc.graph, pair.node2, hops);
      pair.centric1_adj = RelationalAdjacency::from_graph(pair.centric1.subgraph);
      pair.centric2_adj = RelationalAdjacency::from_graph(pair.centric2.subgraph);
      try {
        pair.paths = graph::shortest_paths(doc.graph, pair.node1, pair.node2, max_paths);
      } catch (const graph::GraphError& e) {
        if (e.code() != "NoPath") throw;
        ++out.skips.unreachable;
      }
      doc.pairs.push_back(std::move(pair));
    }
    out.docs.push_back(std::move(doc));
  }
  return out;
}

Vocabularies build_vocabularies(const std::vector<const PreparedDoc*>& docs) {
  Vocabularies v;
  for (const auto* d : docs) {
    for (const auto& t : d->tokens) v.tokens.add(t);
    for (const auto& n : d->graph.nodes) v.concepts.add(n.concept_name);
    for (const auto& role : d->graph.role_vocab) v.relations.add(Vocabularies::relation_key(role));
  }
  return v;
}

Vocabularies build_vocabularies(const std::vector<PreparedDoc>& docs) {
  std::vector<const PreparedDoc*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);
  return build_vocabularies(ptrs);
}

// --- full model ---------------------------------------------------------------

SemSinModel::SemSinModel(ModelConfig config, Vocabularies vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  if (config_.hidden == 0) throw Error("InvalidArgument", "hidden size must be positive");
  if (config_.layers < 1) throw Error("InvalidArgument", "at least one RGCN layer is required");
  if (config_.context_mode == ContextMode::Internal && config_.hidden % 2 != 0)
    throw Error("InvalidArgument", "internal context mode needs an even hidden size");
  build();
  initialize(seed);
}

void SemSinModel::build() {
  const std::size_t d = config_.hidden;
  concept_embedding_ = &store_.add("concept.emb", vocab_.concepts.size(), d);
  for (int l = 0; l < config_.layers; ++l) {
    RgcnLayer layer;
    const std::string prefix = "rgcn." + std::to_string(l);
    for (std::size_t r = 0; r < graph::kRelationTypeCount; ++r)
      layer.relation.push_back(&store_.add(prefix + ".w" + std::to_string(r), d, d));
    layer.self = &store_.add(prefix + ".self", d, d);
    rgcn_.push_back(layer);
  }
  path_.relation_embedding = &store_.add("path.rel.emb", vocab_.relations.size(), d);
  const std::size_t ph = std::max<std::size_t>(1, d / 2);
  path_.lstm.forward = make_lstm_cell(store_, "path.lstm.fwd", 2 * d, ph);
  path_.lstm.backward = make_lstm_cell(store_, "path.lstm.bwd", 2 * d, ph);
  path_.projection = &store_.add("path.proj.w", 2 * ph, d);
  path_.projection_bias = &store_.add("path.proj.b", 1, d);
  attention_.query = &store_.add("attn.q", d, d);
  attention_.key = &store_.add("attn.k", d, d);
  attention_.value = &store_.add("attn.v", d, d);
  context_.weight = &store_.add("ctx.w", 2 * d, d);
  context_.bias = &store_.add("ctx.b", 1, d);
  classifier_.weight = &store_.add("clf.w", 3 * d, 2);
  classifier_.bias = &store_.add("clf.b", 1, 2);
  if (config_.context_mode == ContextMode::Internal) {
    for (auto* enc : {&graph_encoder_, &context_encoder_}) {
      const std::string prefix = enc == &graph_encoder_ ? "graph_enc" : "ctx_enc";
      enc->embedding = &store_.add(prefix + ".emb", vocab_.tokens.size(), d);
      enc->lstm.forward = make_lstm_cell(store_, prefix + ".lstm.fwd", d, d / 2);
      enc->lstm.backward = make_lstm_cell(store_, prefix + ".lstm.bwd", d, d / 2);
    }
  }
}

void SemSinModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  const auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (auto* p : store_.all()) {
    if (ends_with(p->name, ".emb"))
      nn::init_normal(*p, rng, 0.02);
    else if (ends_with(p->name, ".b"))
      nn::init_zeros(*p);
    else
      nn::init_xavier_uniform(*p, rng);
  }
}

std::vector<std::size_t> SemSinModel::concept_ids(const graph::SemanticGraph& sg) const {
  std::vector<std::size_t> ids;
  ids.reserve(sg.node_count());
  for (const auto& n : sg.nodes) ids.push_back(vocab_.concepts.id(n.concept_name));
  return ids;
}

SemSinModel::DocCache::Entry& SemSinModel::doc_entry(Tape& tape, const PreparedDoc& doc, DocCache& cache, Rng& rng,
                                                      bool training) const {
  auto it = cache.entries.find(&doc);
  if (it != cache.entries.end()) return it->second;

  Tensor tokens;
  std::vector<std::size_t> positions;
  if (config_.context_mode == ContextMode::Internal) {
    const auto ctx = encode_context_internal(tape, doc.plain, vocab_.tokens, graph_encoder_);
    tokens = ctx.vectors;
    positions = ctx.token_position;
  } else {
    if (ctx_index_ == nullptr) throw Error("MissingEmbeddingEntry", "no contextual embeddings loaded");
    if (doc.pairs.empty()) throw Error("MissingEmbeddingEntry", "document '" + doc.doc_id + "' has no pairs");
    const auto& first = doc.pairs.front();
    const auto ctx = encode_context_external(tape, first.marked, ctx_index_->lookup(doc.doc_id, first.pair_index));
    tokens = ctx.vectors;
    positions = ctx.token_position;
  }
  if (tokens.cols() != config_.hidden)
    throw data::DataError("DimensionMismatch", "token vectors have dimension " + std::to_string(tokens.cols()) +
                                                   ", model expects " + std::to_string(config_.hidden));

  DocCache::Entry entry;
  entry.h0 = init_node_reps(tape, doc.graph, tokens, positions, tape.parameter(*concept_embedding_),
                            concept_ids(doc.graph));
  if (config_.ablation == Ablation::Full)
    entry.h_full = rgcn_forward(tape, doc.adjacency, entry.h0, rgcn_, config_.dropout, &rng, training);
  return cache.entries.emplace(&doc, entry).first->second;
}

PairOutput SemSinModel::forward(Tape& tape, const PreparedDoc& doc, const PreparedPair& pair, DocCache& cache,
                                Rng& rng, bool training) const {
  const auto& entry = doc_entry(tape, doc, cache, rng, training);
  const Ablation ab = config_.ablation;
  PairOutput out;

  Tensor query;
  if (ab == Ablation::Full || ab == Ablation::WoPath) {
    Tensor h[2];
    const graph::EventCentricStructure* cs[2] = {&pair.centric1, &pair.centric2};
    const RelationalAdjacency* adj[2] = {&pair.centric1_adj, &pair.centric2_adj};
    for (int k = 0; k < 2; ++k) {
      const Tensor sub_h0 = nn::gather_rows(entry.h0, cs[k]->original_ids);
      const Tensor hl = rgcn_forward(tape, *adj[k], sub_h0, rgcn_, config_.dropout, &rng, training);
      h[k] = nn::gather_rows(hl, {cs[k]->center});
    }
    out.f_e = event_pair_rep(h[0], h[1]);
    query = out.f_e;
  } else if (ab == Ablation::WoCent) {
    query = event_pair_rep(nn::gather_rows(entry.h0, {pair.node1}), nn::gather_rows(entry.h0, {pair.node2}));
  }

  if ((ab == Ablation::Full || ab == Ablation::WoCent) && !pair.paths.empty()) {
    std::vector<std::vector<std::size_t>> rel_ids;
    rel_ids.reserve(pair.paths.size());
    for (const auto& p : pair.paths) {
      std::vector<std::size_t> ids;
      for (std::size_t role : p.roles)
        ids.push_back(vocab_.relations.id(Vocabularies::relation_key(doc.graph.role_vocab.at(role))));
      rel_ids.push_back(std::move(ids));
    }
    const Tensor& nodes = ab == Ablation::Full ? entry.h_full : entry.h0;
    const Tensor encoded = encode_paths(tape, pair.paths, rel_ids, vocab_.pad_relation(), nodes, path_);
    out.f_p = attend_paths(query, encoded, attention_, &out.attention);
  }

  ContextOutput ctx;
  if (config_.context_mode == ContextMode::Internal) {
    ctx = encode_context_internal(tape, pair.marked, vocab_.tokens, context_encoder_);
  } else {
    if (ctx_index_ == nullptr) throw Error("MissingEmbeddingEntry", "no contextual embeddings loaded");
    ctx = encode_context_external(tape, pair.marked, ctx_index_->lookup(doc.doc_id, pair.pair_index));
  }
  out.f_c = context_pair_rep(tape, ctx, context_);
  out.probs = classify(tape, out.f_e, out.f_p, out.f_c, config_.hidden, classifier_, ab, config_.dropout, &rng,
                       training);
  return out;
}

double SemSinModel::predict(const PreparedDoc& doc, const PreparedPair& pair) const {
  Tape tape;
  DocCache cache;
  Rng rng(0);
  return forward(tape, doc, pair, cache, rng, false).probs.value()(0, 1);
}

std::string SemSinModel::metadata() const {
  ordered_json j;
  j["format"] = "semsin-model";
  j["config"] = {{"hidden", config_.hidden},
                 {"layers", config_.layers},
                 {"dropout", config_.dropout},
                 {"ablation", to_string(config_.ablation)},
                 {"max_paths", config_.max_paths},
                 {"context_mode", config_.context_mode == ContextMode::Internal ? "internal" : "external"}};
  const auto vocab_json = [](const data::Vocab& v) {
    return ordered_json{{"specials", v.special_count()}, {"tokens", v.tokens()}};
  };
  j["vocab"] = {{"tokens", vocab_json(vocab_.tokens)},
                {"concepts", vocab_json(vocab_.concepts)},
                {"relations", vocab_json(vocab_.relations)}};
  return j.dump();
}

void SemSinModel::save(const std::string& path) const { nn::save_checkpoint(path, metadata(), store_); }

SemSinModel SemSinModel::load(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  return from_checkpoint(ck.metadata, ck.params);
}

SemSinModel SemSinModel::from_checkpoint(const std::string& metadata, const nn::ParameterStore& params) {
  ModelConfig config;
  Vocabularies vocab;
  try {
    const auto j = nlohmann::json::parse(metadata);
    if (j.value("format", "") != "semsin-model") throw Error("BadCheckpoint", "checkpoint is not a semsin model");
    const auto& c = j.at("config");
    config.hidden = c.at("hidden").get<std::size_t>();
    config.layers = c.at("layers").get<int>();
    config.dropout = c.at("dropout").get<double>();
    config.ablation = parse_ablation(c.at("ablation").get<std::string>());
    config.max_paths = c.at("max_paths").get<std::size_t>();
    config.context_mode = c.at("context_mode").get<std::string>() == "external" ? ContextMode::External
                                                                               : ContextMode::Internal;
    const auto read_vocab = [&](const char* key) {
      const auto& v = j.at("vocab").at(key);
      return data::Vocab::from_tokens(v.at("tokens").get<std::vector<std::string>>(),
                                      v.at("specials").get<std::size_t>(), data::kOov);
    };
    vocab.tokens = read_vocab("tokens");
    vocab.concepts = read_vocab("concepts");
    vocab.relations = read_vocab("relations");
  } catch (const nlohmann::json::exception& e) {
    throw Error("BadCheckpoint", std::string("malformed checkpoint metadata: ") + e.what());
  }
  SemSinModel model(config, std::move(vocab), 0);
  model.store_.assign(params);
  return model;
}

}  // namespace semsin::model
