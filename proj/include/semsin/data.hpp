// data.hpp - corpus records, contextual-embedding files and vocabularies
//
// Corpus files are UTF-8 JSON lines, one document per line:
//   {"doc_id": "...", "topic_id": "...", "sentence": "...", "tokens": [...],
//    "amr": "<PENMAN>", "alignments": {"<var>": [a, b], ...},
//    "events": [{"event_id": "...", "token_span": [a, b]}, ...],
//    "pairs": [{"e1": "...", "e2": "...", "label": 0|1}, ...]}
// Spans are inclusive token indices.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semsin/error.hpp"
#include "semsin/graph.hpp"
#include "semsin/tensor.hpp"

namespace semsin::data {

using graph::TokenSpan;

struct EventMention {
  std::string event_id;
  TokenSpan token_span;

  bool operator==(const EventMention&) const = default;
};

struct LabeledPair {
  std::string e1;
  std::string e2;
  int label = 0;

  bool operator==(const LabeledPair&) const = default;
};

struct CorpusRecord {
  std::string doc_id;
  std::string topic_id;
  std::string sentence;
  std::vector<std::string> tokens;
  std::string amr;
  graph::Alignments alignments;
  std::vector<EventMention> events;
  std::vector<LabeledPair> pairs;

  const EventMention* find_event(const std::string& id) const;
  bool operator==(const CorpusRecord&) const = default;
};

class DataError : public Error {
 public:
  DataError(std::string code, const std::string& message, std::size_t line = 0, std::string field = {})
      : Error(std::move(code), message), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct SkippedLine {
  std::size_t line = 0;  // 1-based
  std::string code;
  std::string message;
};

struct LoadResult {
  std::vector<CorpusRecord> records;
  std::vector<SkippedLine> skipped;
};

/// Parses and validates one JSON line. Throws DataError with codes
/// SchemaViolation or SpanOutOfRange.
CorpusRecord parse_record(const std::string& json_line, std::size_t line_number = 0);
std::string record_to_json(const CorpusRecord& record);

/// Blank lines are ignored. Malformed lines are collected in `skipped`, or
/// rethrown when `fail_fast` is set.
LoadResult read_corpus(std::istream& in, bool fail_fast = false);
LoadResult load_corpus(const std::string& path, bool fail_fast = false);
void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);
void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records);

// --- marker insertion ------------------------------------------------------

inline constexpr const char* kCls = "[CLS]";
inline constexpr const char* kSep = "[SEP]";
inline constexpr const char* kE1Open = "<e1>";
inline constexpr const char* kE1Close = "</e1>";
inline constexpr const char* kE2Open = "<e2>";
inline constexpr const char* kE2Close = "</e2>";

/// [CLS] tokens... [SEP] with <e1>..</e1> and <e2>..</e2> wrapped around the
/// two event spans.
struct MarkedSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> token_position;  // original token index -> position
  std::size_t cls = 0;
  std::size_t e1_open = 0;
  std::size_t e2_open = 0;
  std::size_t sep = 0;
};

/// Throws DataError("MarkerCollision") when the spans overlap and
/// DataError("SpanOutOfRange") when a span leaves the token range.
MarkedSequence insert_markers(const std::vector<std::string>& tokens, TokenSpan e1, TokenSpan e2);

/// [CLS] tokens... [SEP] without event markers.
MarkedSequence plain_sequence(const std::vector<std::string>& tokens);

// --- CTXEMB ----------------------------------------------------------------
//
//   "CTXEMB1" (7 bytes), u32 sequence count, then per sequence:
//   u32 id length, id (UTF-8), u32 token count, u32 dimension,
//   token_count * dimension f32 values, row-major. Little-endian throughout.
// Sequence ids are a doc_id, or "<doc_id>#<pair index>" for per-pair entries.

inline constexpr char kCtxEmbMagic[] = "CTXEMB1";

class CtxEmbIndex {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const { return entries_.count(id) > 0; }
  const nn::Matrix& at(const std::string& id) const;

  /// Entry for a pair: "<doc>#<pair>" if present, otherwise "<doc>".
  /// Throws DataError("MissingEmbeddingEntry").
  const nn::Matrix& lookup(const std::string& doc_id, std::size_t pair_index) const;

  std::vector<std::string> ids() const;
  void insert(const std::string& id, nn::Matrix vectors);

 private:
  std::size_t dimension_ = 0;
  std::map<std::string, nn::Matrix> entries_;
};

/// Throws OffsetError with codes BadMagic, TruncatedPayload, DimensionMismatch.
CtxEmbIndex read_ctxemb(std::istream& in);
CtxEmbIndex load_ctxemb(const std::string& path);
/// Values are narrowed to f32 on write.
void write_ctxemb(std::ostream& out, const std::vector<std::pair<std::string, nn::Matrix>>& sequences);

// --- vocabularies ------------------------------------------------------------

/// Dense ids from 0; specials occupy the first ids in the given order.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::string> specials, std::string unknown);

  std::size_t add(const std::string& token);
  /// Unknown tokens map to the unknown special.
  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t special_count() const { return specials_; }

  static Vocab from_tokens(const std::vector<std::string>& tokens, std::size_t special_count,
                           const std::string& unknown);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t specials_ = 0;
  std::size_t unknown_ = 0;
};

inline constexpr const char* kOov = "[OOV]";
inline constexpr const char* kPad = "[PAD]";

/// [CLS], [SEP], <e1>, </e1>, <e2>, </e2>, [OOV], [PAD] reserved as ids 0..7.
Vocab make_token_vocab();

}  // namespace semsin::data
