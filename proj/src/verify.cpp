// verify.cpp

#include "semsin/verify.hpp"

#include <chrono>
#include <functional>

#include "semsin/model.hpp"
#include "semsin/training.hpp"

namespace semsin::verify {

using nn::Matrix;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;

data::CorpusRecord horton_example() {
  data::CorpusRecord r;
  r.doc_id = "horton";
  r.topic_id = "1";
  r.sentence = "Horton was shot while protecting a student .";
  r.tokens = {"Horton", "was", "shot", "while", "protecting", "a", "student", "."};
  r.amr =
      "(c / cause-01 :ARG0 (p / protect-01 :ARG0 (p2 / person :name (n / name :op1 \"Horton\")) "
      ":ARG1 (p3 / person :ARG0-of (s2 / study-01))) :ARG1 (s / shoot-02 :ARG1 p2))";
  r.alignments = {{"p2", {0, 0}}, {"s", {2, 2}}, {"p", {4, 4}}, {"p3", {6, 6}}, {"s2", {6, 6}}};
  r.events = {{"shot", {2, 2}}, {"protect", {4, 4}}};
  r.pairs = {{"shot", "protect", 1}};
  return r;
}

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

/// sum(tanh(x) * R) for a fixed random R: a smooth scalar read-out.
Tensor readout(const Tensor& x, const Matrix& r) {
  Tape& tape = *x.tape();
  return nn::sum(nn::tanh(x) * tape.constant(r));
}

void append(std::vector<Parameter*>& out, const model::LstmCell& c) {
  out.insert(out.end(), {c.input, c.recurrent, c.bias});
}

}  // namespace

std::vector<BlockCheck> gradcheck_blocks(std::uint64_t seed, std::size_t hidden, double eps) {
  const auto prepared = model::prepare_corpus({horton_example()}, 3, graph::kDefaultMaxPaths);
  const auto& doc = prepared.docs.at(0);
  const auto& pair = doc.pairs.at(0);
  model::ModelConfig config;
  config.hidden = hidden;
  config.layers = 3;
  config.dropout = 0.0;
  model::SemSinModel m(config, model::build_vocabularies(prepared.docs), seed);
  const auto& vocab = m.vocab();

  Rng rng(Rng::derive(seed, 99));
  // unit-scale weights keep every coordinate's gradient well above finite-difference noise
  for (auto* p : m.params().all()) p->value = random_matrix(rng, p->value.rows(), p->value.cols());
  nn::ParameterStore inputs;
  const std::size_t n = doc.graph.node_count();
  const std::size_t d = hidden;
  const auto input = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    Parameter& p = inputs.add(name, rows, cols);
    p.value = random_matrix(rng, rows, cols);
    return &p;
  };

  std::vector<std::size_t> concept_ids;
  for (const auto& node : doc.graph.nodes) concept_ids.push_back(vocab.concepts.id(node.concept_name));
  std::vector<std::vector<std::size_t>> rel_ids;
  for (const auto& p : pair.paths) {
    std::vector<std::size_t> ids;
    for (std::size_t role : p.roles)
      ids.push_back(vocab.relations.id(model::Vocabularies::relation_key(doc.graph.role_vocab.at(role))));
    rel_ids.push_back(ids);
  }

  std::vector<BlockCheck> out;
  const auto run = [&](const std::string& name, const nn::ScalarFunction& f, const std::vector<Parameter*>& params) {
    const auto start = std::chrono::steady_clock::now();
    BlockCheck c;
    c.block = name;
    c.result = nn::grad_check(f, params, eps);
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(c);
  };

  // node initialization: token averages and concept embeddings
  {
    const Matrix r = random_matrix(rng, n, d);
    std::vector<Parameter*> params{m.concept_embedding(), m.graph_encoder().embedding};
    append(params, m.graph_encoder().lstm.forward);
    append(params, m.graph_encoder().lstm.backward);
    run("node-init",
        [&](Tape& t) {
          const auto ctx = model::encode_context_internal(t, doc.plain, vocab.tokens, m.graph_encoder());
          return readout(model::init_node_reps(t, doc.graph, ctx.vectors, ctx.token_position,
                                               t.parameter(*m.concept_embedding()), concept_ids),
                         r);
        },
        params);
  }
  // relational graph convolution, three layers
  {
    Parameter* h0 = input("input.h0", n, d);
    const Matrix r = random_matrix(rng, n, d);
    std::vector<Parameter*> params{h0};
    for (const auto& layer : m.rgcn()) {
      params.insert(params.end(), layer.relation.begin(), layer.relation.end());
      params.push_back(layer.self);
    }
    run("rgcn", [&](Tape& t) { return readout(model::rgcn_forward(t, doc.adjacency, t.parameter(*h0), m.rgcn()), r); },
        params);
  }
  // path BiLSTM with relation embeddings and projection
  {
    Parameter* nodes = input("input.nodes", n, d);
    const Matrix r = random_matrix(rng, pair.paths.size(), d);
    const auto& pp = m.path_params();
    std::vector<Parameter*> params{nodes, pp.relation_embedding, pp.projection, pp.projection_bias};
    append(params, pp.lstm.forward);
    append(params, pp.lstm.backward);
    run("path-bilstm",
        [&](Tape& t) {
          return readout(model::encode_paths(t, pair.paths, rel_ids, vocab.pad_relation(), t.parameter(*nodes), pp), r);
        },
        params);
  }
  // scaled dot-product attention over paths
  {
    Parameter* fe = input("input.fe", 1, d);
    Parameter* paths = input("input.paths", pair.paths.size(), d);
    const Matrix r = random_matrix(rng, 1, d);
    const auto& ap = m.attention_params();
    run("attention",
        [&](Tape& t) { return readout(model::attend_paths(t.parameter(*fe), t.parameter(*paths), ap), r); },
        {fe, paths, ap.query, ap.key, ap.value});
  }
  // context encoder, context pair representation and classifier
  {
    Parameter* fe = input("input.fe2", 1, d);
    Parameter* fp = input("input.fp", 1, d);
    const Matrix r = random_matrix(rng, 1, 2);
    const auto& ce = m.context_encoder();
    std::vector<Parameter*> params{fe, fp, ce.embedding, m.context_params().weight, m.context_params().bias,
                                   m.classifier_params().weight, m.classifier_params().bias};
    append(params, ce.lstm.forward);
    append(params, ce.lstm.backward);
    run("context-classifier",
        [&](Tape& t) {
          const auto ctx = model::encode_context_internal(t, pair.marked, vocab.tokens, ce);
          const Tensor fc = model::context_pair_rep(t, ctx, m.context_params());
          const Tensor p = model::classify(t, t.parameter(*fe), t.parameter(*fp), fc, d, m.classifier_params(),
                                           model::Ablation::Full);
          return nn::sum(p * t.constant(r));
        },
        params);
  }
  // focal loss for both labels
  {
    Parameter* logits = input("input.logits", 1, 2);
    run("focal-loss",
        [&](Tape& t) {
          const Tensor p = nn::softmax_rows(t.parameter(*logits));
          return training::focal_loss(p, 1, 0.5, 2.0) + training::focal_loss(p, 0, 0.5, 2.0);
        },
        {logits});
  }
  // the whole model under the focal loss
  {
    run("full-model",
        [&](Tape& t) {
          model::SemSinModel::DocCache cache;
          Rng unused(0);
          const auto o = m.forward(t, doc, pair, cache, unused, false);
          return training::focal_loss(o.probs, pair.label, 0.5, 2.0);
        },
        m.params().all());
  }
  return out;
}

}  // namespace semsin::verify
