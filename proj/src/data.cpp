// data.cpp - corpus JSONL, marker insertion, CTXEMB files, vocabularies

#include "semsin/data.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "semsin/binary_io.hpp"

namespace semsin::data {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const EventMention* CorpusRecord::find_event(const std::string& id) const {
  for (const auto& e : events)
    if (e.event_id == id) return &e;
  return nullptr;
}

namespace {

[[noreturn]] void schema(std::size_t line, const std::string& field, const std::string& what) {
  throw DataError("SchemaViolation", "line " + std::to_string(line) + ": field '" + field + "' " + what, line, field);
}

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) schema(line, field, "is missing");
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (v.is_string()) return v.get<std::string>();
  // topic ids are often numeric in exported corpora
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  schema(line, field, "must be a string");
}

TokenSpan parse_span(const json& v, std::size_t line, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    schema(line, field, "must be a [start, end] integer pair");
  return {v[0].get<int>(), v[1].get<int>()};
}

void check_span(TokenSpan span, std::size_t n_tokens, std::size_t line, const std::string& field) {
  if (span.start < 0 || span.start > span.end || static_cast<std::size_t>(span.end) >= n_tokens)
    throw DataError("SpanOutOfRange",
                    "line " + std::to_string(line) + ": span [" + std::to_string(span.start) + "," +
                        std::to_string(span.end) + "] of '" + field + "' outside " + std::to_string(n_tokens) +
                        " tokens",
                    line, field);
}

}  // namespace

CorpusRecord parse_record(const std::string& json_line, std::size_t line) {
  json doc;
  try {
    doc = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw DataError("SchemaViolation", "line " + std::to_string(line) + ": invalid JSON: " + e.what(), line, "");
  }
  if (!doc.is_object()) schema(line, "<record>", "must be a JSON object");

  CorpusRecord r;
  r.doc_id = require_string(doc, "doc_id", line);
  r.topic_id = require_string(doc, "topic_id", line);
  r.sentence = require_string(doc, "sentence", line);
  r.amr = require_string(doc, "amr", line);

  const json& tokens = require(doc, "tokens", line);
  if (!tokens.is_array()) schema(line, "tokens", "must be an array");
  for (const auto& t : tokens) {
    if (!t.is_string()) schema(line, "tokens", "must contain strings");
    r.tokens.push_back(t.get<std::string>());
  }

  const json& alignments = require(doc, "alignments", line);
  if (!alignments.is_object()) schema(line, "alignments", "must be an object");
  for (const auto& [var, span] : alignments.items()) {
    const TokenSpan s = parse_span(span, line, "alignments." + var);
    check_span(s, r.tokens.size(), line, "alignments." + var);
    r.alignments.emplace(var, s);
  }

  const json& events = require(doc, "events", line);
  if (!events.is_array()) schema(line, "events", "must be an array");
  std::set<std::string> event_ids;
  for (const auto& e : events) {
    if (!e.is_object()) schema(line, "events", "must contain objects");
    EventMention m{require_string(e, "event_id", line), parse_span(require(e, "token_span", line), line,
                                                                    "events.token_span")};
    check_span(m.token_span, r.tokens.size(), line, "events." + m.event_id);
    if (!event_ids.insert(m.event_id).second) schema(line, "events", "repeats event id '" + m.event_id + "'");
    r.events.push_back(std::move(m));
  }

  const json& pairs = require(doc, "pairs", line);
  if (!pairs.is_array()) schema(line, "pairs", "must be an array");
  for (const auto& p : pairs) {
    if (!p.is_object()) schema(line, "pairs", "must contain objects");
    LabeledPair lp{require_string(p, "e1", line), require_string(p, "e2", line), 0};
    const json& label = require(p, "label", line);
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1))
      schema(line, "pairs.label", "must be 0 or 1");
    lp.label = label.get<int>();
    if (!event_ids.count(lp.e1)) schema(line, "pairs.e1", "refers to undeclared event '" + lp.e1 + "'");
    if (!event_ids.count(lp.e2)) schema(line, "pairs.e2", "refers to undeclared event '" + lp.e2 + "'");
    r.pairs.push_back(std::move(lp));
  }
  return r;
}

std::string record_to_json(const CorpusRecord& r) {
  ordered_json doc;
  doc["doc_id"] = r.doc_id;
  doc["topic_id"] = r.topic_id;
  doc["sentence"] = r.sentence;
  doc["tokens"] = r.tokens;
  doc["amr"] = r.amr;
  ordered_json alignments = ordered_json::object();
  for (const auto& [var, span] : r.alignments) alignments[var] = {span.start, span.end};
  doc["alignments"] = std::move(alignments);
  ordered_json events = ordered_json::array();
  for (const auto& e : r.events)
    events.push_back({{"event_id", e.event_id}, {"token_span", {e.token_span.start, e.token_span.end}}});
  doc["events"] = std::move(events);
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"e1", p.e1}, {"e2", p.e2}, {"label", p.label}});
  doc["pairs"] = std::move(pairs);
  return doc.dump();
}

LoadResult read_corpus(std::istream& in, bool fail_fast) {
  LoadResult result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(parse_record(line, number));
    } catch (const DataError& e) {
      if (fail_fast) throw;
      result.skipped.push_back({number, e.code(), e.what()});
    }
  }
  return result;
}

LoadResult load_corpus(const std::string& path, bool fail_fast) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open corpus '" + path + "'");
  return read_corpus(in, fail_fast);
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records) {
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write corpus '" + path + "'");
  write_corpus(out, records);
}

// --- markers ---------------------------------------------------------------

MarkedSequence insert_markers(const std::vector<std::string>& tokens, TokenSpan e1, TokenSpan e2) {
  const auto n = static_cast<int>(tokens.size());
  for (const TokenSpan& s : {e1, e2})
    if (s.start < 0 || s.start > s.end || s.end >= n)
      throw DataError("SpanOutOfRange", "event span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                            "] outside " + std::to_string(n) + " tokens");
  if (e1.start <= e2.end && e2.start <= e1.end)
    throw DataError("MarkerCollision", "event spans overlap; markers cannot be inserted");

  MarkedSequence m;
  m.tokens.push_back(kCls);
  for (int k = 0; k < n; ++k) {
    if (k == e1.start) {
      m.e1_open = m.tokens.size();
      m.tokens.push_back(kE1Open);
    }
    if (k == e2.start) {
      m.e2_open = m.tokens.size();
      m.tokens.push_back(kE2Open);
    }
    m.token_position.push_back(m.tokens.size());
    m.tokens.push_back(tokens[static_cast<std::size_t>(k)]);
    if (k == e1.end) m.tokens.push_back(kE1Close);
    if (k == e2.end) m.tokens.push_back(kE2Close);
  }
  m.sep = m.tokens.size();
  m.tokens.push_back(kSep);
  return m;
}

MarkedSequence plain_sequence(const std::vector<std::string>& tokens) {
  MarkedSequence m;
  m.tokens.push_back(kCls);
  for (const auto& t : tokens) {
    m.token_position.push_back(m.tokens.size());
    m.tokens.push_back(t);
  }
  m.sep = m.tokens.size();
  m.tokens.push_back(kSep);
  return m;
}

// --- CTXEMB ----------------------------------------------------------------

const nn::Matrix& CtxEmbIndex::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw DataError("MissingEmbeddingEntry", "no embedding entry for '" + id + "'");
  return it->second;
}

const nn::Matrix& CtxEmbIndex::lookup(const std::string& doc_id, std::size_t pair_index) const {
  auto it = entries_.find(doc_id + "#" + std::to_string(pair_index));
  if (it != entries_.end()) return it->second;
  it = entries_.find(doc_id);
  if (it != entries_.end()) return it->second;
  throw DataError("MissingEmbeddingEntry", "no embedding entry for document '" + doc_id + "'");
}

std::vector<std::string> CtxEmbIndex::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

void CtxEmbIndex::insert(const std::string& id, nn::Matrix vectors) {
  if (!entries_.empty() && static_cast<std::size_t>(vectors.cols()) != dimension_)
    throw DataError("DimensionMismatch", "entry '" + id + "' has dimension " + std::to_string(vectors.cols()) +
                                             ", expected " + std::to_string(dimension_));
  if (entries_.empty()) dimension_ = static_cast<std::size_t>(vectors.cols());
  entries_[id] = std::move(vectors);
}

CtxEmbIndex read_ctxemb(std::istream& in) {
  io::Reader reader(in, "TruncatedPayload");
  char magic[7];
  reader.read_raw(magic, sizeof magic);
  if (std::memcmp(magic, kCtxEmbMagic, 7) != 0) throw OffsetError("BadMagic", "not a CTXEMB file", 0);
  const auto count = reader.read<std::uint32_t>();
  CtxEmbIndex index;
  std::size_t dimension = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::size_t entry_offset = reader.offset();
    const std::string id = reader.read_string(1u << 20);
    const auto n_tokens = reader.read<std::uint32_t>();
    const auto dim = reader.read<std::uint32_t>();
    if (s == 0) dimension = dim;
    if (dim != dimension)
      throw OffsetError("DimensionMismatch",
                        "sequence '" + id + "' has dimension " + std::to_string(dim) + ", expected " +
                            std::to_string(dimension),
                        entry_offset);
    nn::Matrix m(n_tokens, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(reader.read<float>());
    index.insert(id, std::move(m));
  }
  if (!reader.at_end()) throw OffsetError("TruncatedPayload", "trailing bytes after the declared sequences",
                                          reader.offset());
  return index;
}

CtxEmbIndex load_ctxemb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open embedding file '" + path + "'");
  return read_ctxemb(in);
}

void write_ctxemb(std::ostream& out, const std::vector<std::pair<std::string, nn::Matrix>>& sequences) {
  out.write(kCtxEmbMagic, 7);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sequences.size()));
  for (const auto& [id, m] : sequences) {
    io::write_string(out, id);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<float>(out, static_cast<float>(m.data()[i]));
  }
}

// --- vocab -----------------------------------------------------------------

Vocab::Vocab(std::vector<std::string> specials, std::string unknown) {
  for (const auto& s : specials) add(s);
  specials_ = tokens_.size();
  auto it = ids_.find(unknown);
  unknown_ = it == ids_.end() ? add(unknown) : it->second;
}

std::size_t Vocab::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? unknown_ : it->second;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens, std::size_t special_count,
                         const std::string& unknown) {
  if (special_count > tokens.size()) throw Error("InvalidVocab", "more specials than tokens");
  Vocab v({tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(special_count)}, unknown);
  for (std::size_t i = special_count; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}

Vocab make_token_vocab() { return Vocab({kCls, kSep, kE1Open, kE1Close, kE2Open, kE2Close, kOov, kPad}, kOov); }

}  // namespace semsin::data
