#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "semsin/synthetic.hpp"
#include "semsin/verify.hpp"
#include "test_util.hpp"

using namespace semsin;
using namespace semsin::data;
using nn::Matrix;

TEST_CASE("the bundled worked example parses and round-trips") {
  const std::string line = test::read_file(test::fixture_path("horton.jsonl"));
  const auto r = parse_record(line.substr(0, line.find('\n')), 1);
  CHECK(r == verify::horton_example());
  CHECK(record_to_json(r) + "\n" == line);
}

TEST_CASE("schema violations name the line and field") {
  auto j = record_to_json(verify::horton_example());
  const auto without = [&](const std::string& field) {
    const auto at = j.find("\"" + field + "\"");
    return j.substr(0, at) + "\"x" + j.substr(at + 1);
  };
  try {
    parse_record(without("tokens"), 7);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.code() == "SchemaViolation");
    CHECK(e.line() == 7);
    CHECK(e.field() == "tokens");
  }
  CHECK(test::error_code([] { parse_record("{not json", 1); }) == "SchemaViolation");
  auto wide = verify::horton_example();
  wide.events[0].token_span = {2, 9};
  CHECK(test::error_code([&] { parse_record(record_to_json(wide), 1); }) == "SpanOutOfRange");
  auto bad_label = record_to_json(verify::horton_example());
  bad_label.replace(bad_label.find("\"label\":1"), 9, "\"label\":3");
  CHECK(test::error_code([&] { parse_record(bad_label, 1); }) == "SchemaViolation");
}

TEST_CASE("corpus reading collects or rethrows malformed lines") {
  const std::string good = record_to_json(verify::horton_example());
  std::istringstream in(good + "\n\n{broken\n" + good + "\n");
  const auto loaded = read_corpus(in, false);
  CHECK(loaded.records.size() == 2);
  REQUIRE(loaded.skipped.size() == 1);
  CHECK(loaded.skipped[0].line == 3);
  std::istringstream again(good + "\n{broken\n");
  CHECK(test::error_code([&] { read_corpus(again, true); }) == "SchemaViolation");
  std::ostringstream out;
  write_corpus(out, loaded.records);
  CHECK(out.str() == good + "\n" + good + "\n");
}

TEST_CASE("marker insertion") {
  const std::vector<std::string> t{"a", "b", "c", "d"};
  const auto m = insert_markers(t, {2, 3}, {0, 0});
  CHECK(m.tokens == std::vector<std::string>{"[CLS]", "<e2>", "a", "</e2>", "b", "<e1>", "c", "d", "</e1>", "[SEP]"});
  CHECK(m.token_position == std::vector<std::size_t>{2, 4, 6, 7});
  CHECK(m.e1_open == 5);
  CHECK(m.e2_open == 1);
  CHECK(m.sep == 9);
  CHECK(test::error_code([&] { insert_markers(t, {1, 2}, {2, 3}); }) == "MarkerCollision");
  CHECK(test::error_code([&] { insert_markers(t, {1, 4}, {0, 0}); }) == "SpanOutOfRange");
  const auto p = plain_sequence(t);
  CHECK(p.tokens.size() == 6);
  CHECK(p.token_position == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("CTXEMB round trip, lookup fallback and damage detection") {
  Matrix a(2, 3), b(1, 3);
  a << 1.5, -2.0, 0.25, 3.0, 1e-3, 7.0;
  b << 0.1, 0.2, 0.3;
  std::ostringstream out;
  write_ctxemb(out, {{"doc", a}, {"doc#1", b}});
  const std::string bytes = out.str();
  CHECK(bytes.substr(0, 7) == "CTXEMB1");
  std::istringstream in(bytes);
  const auto idx = read_ctxemb(in);
  CHECK(idx.dimension() == 3);
  CHECK(idx.size() == 2);
  CHECK((idx.at("doc") - a).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((idx.at("doc#1") - b).cwiseAbs().maxCoeff() <= 1e-7);  // stored as f32
  CHECK(&idx.lookup("doc", 1) == &idx.at("doc#1"));
  CHECK(&idx.lookup("doc", 0) == &idx.at("doc"));
  CHECK(test::error_code([&] { idx.lookup("other", 0); }) == "MissingEmbeddingEntry");

  std::istringstream bad_magic("CTXEMB2" + bytes.substr(7));
  CHECK(test::error_code([&] { read_ctxemb(bad_magic); }) == "BadMagic");
  std::istringstream cut(bytes.substr(0, bytes.size() - 2));
  CHECK(test::error_code([&] { read_ctxemb(cut); }) == "TruncatedPayload");
  std::ostringstream mixed;
  write_ctxemb(mixed, {{"x", a}, {"y", Matrix::Ones(1, 4)}});
  std::istringstream mixed_in(mixed.str());
  CHECK(test::error_code([&] { read_ctxemb(mixed_in); }) == "DimensionMismatch");
}

TEST_CASE("vocabularies reserve specials and map unknown tokens") {
  auto v = make_token_vocab();
  CHECK(v.special_count() == 8);
  CHECK(v.id("[CLS]") == 0);
  const auto x = v.add("storm");
  CHECK(v.add("storm") == x);
  CHECK(v.id("never-seen") == v.id(kOov));
  const auto copy = Vocab::from_tokens(v.tokens(), v.special_count(), kOov);
  CHECK(copy.id("storm") == x);
  CHECK(copy.tokens() == v.tokens());
}

namespace {

bool has_agent(const graph::SemanticGraph& sg, std::size_t event) {
  for (const auto& e : sg.edges)
    if (!e.is_inverse && e.src == event && sg.role_vocab[e.role].label == kAgentRole &&
        sg.nodes[e.dst].concept_name == kParticipantConcept)
      return true;
  return false;
}

bool cue_on_path(const graph::SemanticGraph& sg, std::size_t a, std::size_t b) {
  for (const auto& p : graph::shortest_paths(sg, a, b, 100))
    for (auto n : p.nodes)
      if (sg.nodes[n].concept_name == kCueConcept) return true;
  return false;
}

}  // namespace

TEST_CASE("synthetic labels follow the planted rules") {
  const auto syn = gen_synthetic(60, 7);
  CHECK(syn.records.size() == 60);
  REQUIRE(syn.truth.size() == 180);
  std::set<std::string> topics;
  std::size_t positives = 0;
  std::map<std::string, const CorpusRecord*> by_id;
  for (const auto& r : syn.records) {
    topics.insert(r.topic_id);
    by_id[r.doc_id] = &r;
  }
  CHECK(topics.size() == 22);
  for (const auto& t : syn.truth) {
    const auto& r = *by_id.at(t.doc_id);
    const auto sg = graph::build_semantic_graph(penman::parse_penman(r.amr), r.alignments, r.tokens.size());
    const auto& pair = r.pairs.at(t.pair_index);
    CHECK(pair.label == t.label);
    const auto a = graph::resolve_event_node(sg, r.find_event(pair.e1)->token_span);
    const auto b = graph::resolve_event_node(sg, r.find_event(pair.e2)->token_span);
    const int rule = t.subset == PairSubset::Path ? cue_on_path(sg, a, b) : (has_agent(sg, a) && has_agent(sg, b));
    CHECK(rule == t.label);
    positives += t.label;
  }
  CHECK(positives > 30);
  CHECK(positives < 150);
  CHECK(record_to_json(gen_synthetic(60, 7).records[5]) == record_to_json(syn.records[5]));
  CHECK(record_to_json(gen_synthetic(60, 8).records[5]) != record_to_json(syn.records[5]));
  CHECK(test::error_code([] { gen_synthetic(19, 0); }) == "InvalidArgument");
}

TEST_CASE("text alone does not give the labels away") {
  // multinomial naive Bayes on the marked token sequence, trained on even
  // documents and tested on odd ones
  const auto syn = gen_synthetic(200, 11);
  std::map<std::string, std::array<double, 2>> counts;
  std::array<double, 2> totals{0, 0}, priors{0, 0};
  const auto features = [](const CorpusRecord& r, const LabeledPair& p) {
    const auto m = insert_markers(r.tokens, r.find_event(p.e1)->token_span, r.find_event(p.e2)->token_span);
    auto f = m.tokens;
    f.push_back("E1=" + m.tokens[m.e1_open + 1]);
    f.push_back("E2=" + m.tokens[m.e2_open + 1]);
    return f;
  };
  for (std::size_t d = 0; d < syn.records.size(); d += 2)
    for (const auto& p : syn.records[d].pairs) {
      priors[static_cast<std::size_t>(p.label)] += 1;
      for (const auto& f : features(syn.records[d], p)) {
        counts[f][static_cast<std::size_t>(p.label)] += 1;
        totals[static_cast<std::size_t>(p.label)] += 1;
      }
    }
  std::size_t correct = 0, seen = 0;
  const double vocab = static_cast<double>(counts.size());
  for (std::size_t d = 1; d < syn.records.size(); d += 2)
    for (const auto& p : syn.records[d].pairs) {
      std::array<double, 2> score{std::log(priors[0]), std::log(priors[1])};
      for (const auto& f : features(syn.records[d], p))
        for (std::size_t c = 0; c < 2; ++c) {
          const auto it = counts.find(f);
          const double n = it == counts.end() ? 0.0 : it->second[c];
          score[c] += std::log((n + 1.0) / (totals[c] + vocab));
        }
      correct += (score[1] > score[0] ? 1 : 0) == p.label;
      ++seen;
    }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(seen);
  CHECK(accuracy <= 0.70);
}
