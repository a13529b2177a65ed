// model.hpp - event aggregator, path aggregator, context encoder, classifier
//
// Row-vector convention throughout: a representation is a 1 x d row and a
// weight maps it by right-multiplication (h W).

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semsin/data.hpp"
#include "semsin/graph.hpp"
#include "semsin/rng.hpp"
#include "semsin/tensor.hpp"

namespace semsin::model {

using nn::Matrix;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;

enum class Ablation { Full, WoStru, WoPath, WoCent };

/// "full", "wo-stru", "wo-path", "wo-cent". Throws Error("UnknownAblation").
Ablation parse_ablation(const std::string& name);
std::string to_string(Ablation a);

enum class ContextMode { Internal, External };

struct ModelConfig {
  std::size_t hidden = 64;  // d
  int layers = 3;           // L
  double dropout = 0.5;
  Ablation ablation = Ablation::Full;
  std::size_t max_paths = graph::kDefaultMaxPaths;
  ContextMode context_mode = ContextMode::Internal;
};

// --- parameter groups (non-owning views into a ParameterStore) ------------

struct RgcnLayer {
  std::vector<Parameter*> relation;  // one d x d matrix per relation type
  Parameter* self = nullptr;         // d x d
};

struct LstmCell {
  Parameter* input = nullptr;      // in x 4h, gate order i, f, g, o
  Parameter* recurrent = nullptr;  // h x 4h
  Parameter* bias = nullptr;       // 1 x 4h
  std::size_t hidden() const { return static_cast<std::size_t>(recurrent->value.rows()); }
};

struct BiLstm {
  LstmCell forward;
  LstmCell backward;
};

struct PathEncoderParams {
  Parameter* relation_embedding = nullptr;  // relation vocab x d, includes the PAD relation
  BiLstm lstm;                           // hidden h = d/2 per direction
  Parameter* projection = nullptr;       // 2h x d
  Parameter* projection_bias = nullptr;  // 1 x d
};

struct AttentionParams {
  Parameter* query = nullptr;  // d x d_k
  Parameter* key = nullptr;    // d x d_k
  Parameter* value = nullptr;  // d x d_v
};

struct ContextPairParams {
  Parameter* weight = nullptr;  // 2c x d
  Parameter* bias = nullptr;    // 1 x d
};

struct ClassifierParams {
  Parameter* weight = nullptr;  // 3d x 2
  Parameter* bias = nullptr;    // 1 x 2
};

struct TokenEncoderParams {
  Parameter* embedding = nullptr;  // vocab x d
  BiLstm lstm;                     // hidden d/2 per direction
};

/// Creates LSTM weights `<prefix>.{wx,wh,b}` in the store.
LstmCell make_lstm_cell(nn::ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden);

// --- building blocks -------------------------------------------------------

/// Node-level view of a graph for message passing: per relation type, the
/// in-neighbour sets N_i^r as a row-normalized n x n matrix.
struct RelationalAdjacency {
  std::size_t nodes = 0;
  std::vector<std::optional<Matrix>> normalized;  // index = relation type; empty when unused

  static RelationalAdjacency from_graph(const graph::SemanticGraph& sg);
};

/// Token span average for aligned nodes, concept embedding row for the rest.
/// `token_position` maps original token index -> row of `token_vectors`.
/// Throws Error("SpanOutOfRange").
Tensor init_node_reps(Tape& tape, const graph::SemanticGraph& sg, const Tensor& token_vectors,
                      const std::vector<std::size_t>& token_position, const Tensor& concept_table,
                      const std::vector<std::size_t>& concept_ids);

/// h^{l+1}_i = ReLU( sum_r sum_{j in N_i^r} (1/|N_i^r|) h^l_j W_r + h^l_i W_0 ) for each
/// layer. Dropout (if training) follows every layer but the last.
/// Throws Error("UnknownRoleId") if a relation type has no weight.
Tensor rgcn_forward(Tape& tape, const RelationalAdjacency& adj, const Tensor& h0, const std::vector<RgcnLayer>& layers,
                    double dropout = 0.0, Rng* rng = nullptr, bool training = false);

/// F_E = h_e1 + h_e2.
Tensor event_pair_rep(const Tensor& h_e1, const Tensor& h_e2);

/// One fused LSTM step. `x_proj` = x_t W_x + b (B x 4h), `state` = [h | c]
/// of the previous step (B x 2h), `wh` = recurrent weights (h x 4h).
/// Gates i, f, g, o; returns the new [h | c].
Tensor lstm_step(const Tensor& x_proj, const Tensor& state, const Tensor& wh);

/// Runs one LSTM direction over a batch of equal-length sequences; returns the
/// final hidden state (batch x h).
Tensor run_lstm(Tape& tape, const LstmCell& cell, const std::vector<Tensor>& steps, bool reverse);

/// Per-step hidden states of a bidirectional LSTM over one sequence (T x 2h).
Tensor bilstm_states(Tape& tape, const BiLstm& lstm, const Tensor& inputs);

/// Encodes a batch of paths with the same length. `relation_ids[p][i]` is the
/// relation vocabulary id of step i of path p; the last state uses `pad_id`.
/// Returns one row P_i per path. Throws Error("EmptyPath").
Tensor encode_paths(Tape& tape, const std::vector<graph::PathSequence>& paths,
                    const std::vector<std::vector<std::size_t>>& relation_ids, std::size_t pad_id,
                    const Tensor& node_reps, const PathEncoderParams& params);

/// alpha = (F_E W_Q)(P W_K)^T / sqrt(d_k); F_P = softmax(alpha) (P W_V).
/// Returns F_P and, optionally, the attention weights.
Tensor attend_paths(const Tensor& f_e, const Tensor& paths, const AttentionParams& params,
                    Matrix* weights = nullptr);

/// Sequence outputs plus the positions read by the pair representation.
struct ContextOutput {
  Tensor vectors;  // T x c
  std::size_t cls = 0;
  std::size_t e1 = 0;
  std::size_t e2 = 0;
  std::vector<std::size_t> token_position;
};

/// Internal context encoder: token embeddings through a bidirectional LSTM.
ContextOutput encode_context_internal(Tape& tape, const data::MarkedSequence& seq, const data::Vocab& vocab,
                                      const TokenEncoderParams& params);
/// External context: vectors read from a CTXEMB entry. Throws
/// data::DataError("DimensionMismatch") if the entry length does not fit `seq`.
ContextOutput encode_context_external(Tape& tape, const data::MarkedSequence& seq, const Matrix& vectors);

/// u~_i = tanh(W_u [u_CLS || u_i] + b_u); F_C = u~_1 + u~_2.
Tensor context_pair_rep(Tape& tape, const ContextOutput& ctx, const ContextPairParams& params);

/// p = softmax(W_f [F_E || F_P || F_C] + b_f) with ablated blocks zeroed.
/// Invalid tensors are accepted for switched-off blocks.
Tensor classify(Tape& tape, const Tensor& f_e, const Tensor& f_p, const Tensor& f_c, std::size_t hidden,
                const ClassifierParams& params, Ablation ablation, double dropout = 0.0, Rng* rng = nullptr,
                bool training = false);

// --- vocabularies and prepared corpora ---------------------------------------

struct Vocabularies {
  data::Vocab tokens = data::make_token_vocab();
  data::Vocab concepts{{data::kOov}, data::kOov};
  data::Vocab relations{{data::kPad, data::kOov}, data::kOov};

  std::size_t pad_relation() const { return 0; }
  static std::string relation_key(const graph::RoleInfo& role);
};

struct PreparedPair {
  std::size_t pair_index = 0;  // index into CorpusRecord::pairs
  int label = 0;
  std::size_t node1 = 0;
  std::size_t node2 = 0;
  graph::EventCentricStructure centric1;
  graph::EventCentricStructure centric2;
  RelationalAdjacency centric1_adj;
  RelationalAdjacency centric2_adj;
  std::vector<graph::PathSequence> paths;  // empty when the events are disconnected
  data::MarkedSequence marked;
};

struct PreparedDoc {
  std::string doc_id;
  std::string topic_id;
  graph::SemanticGraph graph;
  RelationalAdjacency adjacency;
  data::MarkedSequence plain;
  std::vector<std::string> tokens;
  std::vector<PreparedPair> pairs;
};

struct SkippedPair {
  std::string doc_id;
  std::size_t pair_index = 0;
  int label = 0;
  std::string reason;  // error code
};

struct SkipReport {
  std::size_t unaligned = 0;
  std::size_t unreachable = 0;  // kept, with a zero path vector
  std::size_t other = 0;
  std::vector<SkippedPair> skipped;
};

struct PreparedCorpus {
  std::vector<PreparedDoc> docs;
  SkipReport skips;
};

/// Builds graphs and structures for every record. Pairs whose events cannot
/// be placed in the graph are skipped and reported; malformed PENMAN or
/// alignments skip the whole document.
PreparedCorpus prepare_corpus(const std::vector<data::CorpusRecord>& records, int hops, std::size_t max_paths);

Vocabularies build_vocabularies(const std::vector<PreparedDoc>& docs);
Vocabularies build_vocabularies(const std::vector<const PreparedDoc*>& docs);

// --- full model ---------------------------------------------------------------

struct PairOutput {
  Tensor probs;  // 1 x 2, column 1 = causal
  Tensor f_e, f_p, f_c;
  Matrix attention;
};

class SemSinModel {
 public:
  /// Builds and initializes every parameter. For external context the hidden
  /// size must equal the embedding dimension.
  SemSinModel(ModelConfig config, Vocabularies vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const Vocabularies& vocab() const { return vocab_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  /// Set before running in external context mode.
  void set_context_embeddings(const data::CtxEmbIndex* index) { ctx_index_ = index; }

  /// Per-tape cache of document-level encodings (node init, whole-graph RGCN).
  class DocCache {
   public:
    struct Entry {
      Tensor h0;
      Tensor h_full;
    };
    std::map<const PreparedDoc*, Entry> entries;
  };

  PairOutput forward(Tape& tape, const PreparedDoc& doc, const PreparedPair& pair, DocCache& cache, Rng& rng,
                     bool training) const;

  /// Probability of the causal class (dropout off).
  double predict(const PreparedDoc& doc, const PreparedPair& pair) const;

  /// JSON metadata (config + vocabularies) stored in checkpoints.
  std::string metadata() const;
  void save(const std::string& path) const;
  static SemSinModel load(const std::string& path);
  static SemSinModel from_checkpoint(const std::string& metadata, const nn::ParameterStore& params);

  // parameter groups, exposed for tests and gradient checks
  const std::vector<RgcnLayer>& rgcn() const { return rgcn_; }
  const PathEncoderParams& path_params() const { return path_; }
  const AttentionParams& attention_params() const { return attention_; }
  const ContextPairParams& context_params() const { return context_; }
  const ClassifierParams& classifier_params() const { return classifier_; }
  const TokenEncoderParams& graph_encoder() const { return graph_encoder_; }
  const TokenEncoderParams& context_encoder() const { return context_encoder_; }
  Parameter* concept_embedding() const { return concept_embedding_; }

 private:
  void build();
  void initialize(std::uint64_t seed);
  DocCache::Entry& doc_entry(Tape& tape, const PreparedDoc& doc, DocCache& cache, Rng& rng, bool training) const;
  std::vector<std::size_t> concept_ids(const graph::SemanticGraph& sg) const;

  ModelConfig config_;
  Vocabularies vocab_;
  nn::ParameterStore store_;
  const data::CtxEmbIndex* ctx_index_ = nullptr;

  std::vector<RgcnLayer> rgcn_;
  PathEncoderParams path_;
  AttentionParams attention_;
  ContextPairParams context_;
  ClassifierParams classifier_;
  TokenEncoderParams graph_encoder_;
  TokenEncoderParams context_encoder_;
  Parameter* concept_embedding_ = nullptr;
};

}  // namespace semsin::model
