// synthetic.cpp

#include "semsin/synthetic.hpp"

#include <array>
#include <cstdio>

#include "json.hpp"
#include "semsin/rng.hpp"

namespace semsin::data {

namespace {

struct Word {
  const char* concept_name;
  const char* token;
};

constexpr std::array<Word, 12> kVerbs{{{"attack-01", "attacked"},
                                       {"kill-01", "killed"},
                                       {"arrest-01", "arrested"},
                                       {"protest-01", "protested"},
                                       {"flee-05", "fled"},
                                       {"collapse-01", "collapsed"},
                                       {"injure-01", "injured"},
                                       {"evacuate-01", "evacuated"},
                                       {"explode-01", "exploded"},
                                       {"strike-01", "struck"},
                                       {"rescue-01", "rescued"},
                                       {"charge-05", "charged"}}};

constexpr std::array<const char*, 16> kFillers{"city",   "bridge",  "market", "village", "river",    "building",
                                               "road",   "school",  "harbor", "station", "tower",    "field",
                                               "camp",   "border",  "hospital", "factory"};

constexpr std::array<const char*, 6> kParticipants{"someone", "people", "police", "officials", "residents",
                                                   "soldiers"};

constexpr std::array<const char*, 5> kChainRoles{"ARG1", "ARG2", "mod", "part", "location"};

std::array<std::size_t, 3> distinct_verbs(Rng& rng) {
  std::vector<std::size_t> idx(kVerbs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  return {idx[0], idx[1], idx[2]};
}

void add_event_pairs(CorpusRecord& r, const std::array<int, 3>& labels) {
  const std::array<std::pair<int, int>, 3> combos{{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t i = 0; i < combos.size(); ++i)
    r.pairs.push_back({"ev" + std::to_string(combos[i].first), "ev" + std::to_string(combos[i].second), labels[i]});
}

CorpusRecord path_doc(Rng& rng, bool cue_on_path) {
  CorpusRecord r;
  const auto verbs = distinct_verbs(rng);
  const char* hub = cue_on_path ? kCueConcept : kDecoyConcept;
  const char* leaf = cue_on_path ? kDecoyConcept : kCueConcept;
  std::string amr = std::string("(h / ") + hub;
  const std::array<const char*, 3> hub_roles{"ARG0", "ARG1", "ARG2"};
  for (int b = 0; b < 3; ++b) {
    if (b > 0) r.tokens.push_back(",");
    const std::string vb = "v" + std::to_string(b);
    const int verb_pos = static_cast<int>(r.tokens.size());
    r.tokens.push_back(kVerbs[verbs[static_cast<std::size_t>(b)]].token);
    r.alignments[vb] = {verb_pos, verb_pos};
    r.events.push_back({"ev" + std::to_string(b), {verb_pos, verb_pos}});

    // chain x{b}3 -> x{b}2 -> x{b}1 -> v{b}, written outermost first
    std::array<std::string, 3> vars, concepts, roles;
    for (int k = 0; k < 3; ++k) {
      vars[static_cast<std::size_t>(k)] = "x" + std::to_string(b) + std::to_string(k + 1);
      concepts[static_cast<std::size_t>(k)] = kFillers[rng.index(kFillers.size())];
      roles[static_cast<std::size_t>(k)] = kChainRoles[rng.index(kChainRoles.size())];
      const int pos = static_cast<int>(r.tokens.size());
      r.tokens.push_back(concepts[static_cast<std::size_t>(k)]);
      r.alignments[vars[static_cast<std::size_t>(k)]] = {pos, pos};
    }
    amr += std::string(" :") + hub_roles[static_cast<std::size_t>(b)] + " (" + vars[2] + " / " + concepts[2] + " :" +
           roles[2] + " (" + vars[1] + " / " + concepts[1] + " :" + roles[1] + " (" + vars[0] + " / " + concepts[0] +
           " :" + roles[0] + " (" + vb + " / " + kVerbs[verbs[static_cast<std::size_t>(b)]].concept_name + "))))";
  }
  amr += std::string(" :ARG3 (z / ") + leaf + "))";
  r.tokens.push_back(".");
  r.amr = std::move(amr);
  const int label = cue_on_path ? 1 : 0;
  add_event_pairs(r, {label, label, label});
  return r;
}

CorpusRecord centric_doc(Rng& rng, const std::array<bool, 3>& agent) {
  CorpusRecord r;
  const auto verbs = distinct_verbs(rng);
  std::string amr = "(a / and";
  for (int i = 0; i < 3; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (i > 0) {
      if (i == 1) r.alignments["a"] = {static_cast<int>(r.tokens.size()), static_cast<int>(r.tokens.size())};
      r.tokens.push_back("and");
    }
    const std::string n = std::to_string(i);
    const int p_pos = static_cast<int>(r.tokens.size());
    r.tokens.push_back(kParticipants[rng.index(kParticipants.size())]);
    const int v_pos = static_cast<int>(r.tokens.size());
    r.tokens.push_back(kVerbs[verbs[si]].token);
    const int t_pos = static_cast<int>(r.tokens.size());
    const char* filler = kFillers[rng.index(kFillers.size())];
    r.tokens.push_back(filler);
    r.alignments["p" + n] = {p_pos, p_pos};
    r.alignments["v" + n] = {v_pos, v_pos};
    r.alignments["t" + n] = {t_pos, t_pos};
    r.events.push_back({"ev" + n, {v_pos, v_pos}});
    amr += " :op" + std::to_string(i + 1) + " (v" + n + " / " + kVerbs[verbs[si]].concept_name + " :" +
           (agent[si] ? kAgentRole : kNonAgentRole) + " (p" + n + " / " + kParticipantConcept + ") :ARG2 (t" + n + " / " +
           filler + "))";
  }
  amr += ")";
  r.tokens.push_back(".");
  r.amr = std::move(amr);
  add_event_pairs(r, {agent[0] && agent[1] ? 1 : 0, agent[0] && agent[2] ? 1 : 0, agent[1] && agent[2] ? 1 : 0});
  return r;
}

}  // namespace

std::string to_string(PairSubset s) { return s == PairSubset::Path ? "path" : "centric"; }

std::string truth_to_json(const PairTruth& t) {
  nlohmann::ordered_json j;
  j["doc_id"] = t.doc_id;
  j["pair_index"] = t.pair_index;
  j["subset"] = to_string(t.subset);
  j["label"] = t.label;
  return j.dump();
}

SyntheticCorpus gen_synthetic(std::size_t n_docs, std::uint64_t seed, const SyntheticOptions& options) {
  if (n_docs < 20) throw Error("InvalidArgument", "synthetic corpus needs at least 20 documents");
  if (options.topics == 0) throw Error("InvalidArgument", "synthetic corpus needs at least one topic");
  Rng rng(seed);

  const std::size_t n_path = n_docs / 2;
  std::vector<char> is_path(n_docs, 0);
  for (std::size_t i = 0; i < n_path; ++i) is_path[i] = 1;
  rng.shuffle(is_path);

  std::vector<char> cue(n_path, 0);
  for (std::size_t i = 0; i < n_path / 2; ++i) cue[i] = 1;
  rng.shuffle(cue);

  // agent counts per centric doc; one cycle yields 9 positive pairs of 18
  constexpr std::array<int, 6> kAgentCycle{3, 3, 2, 2, 2, 0};
  std::vector<int> agents(n_docs - n_path);
  for (std::size_t i = 0; i < agents.size(); ++i) agents[i] = kAgentCycle[i % kAgentCycle.size()];
  rng.shuffle(agents);

  SyntheticCorpus out;
  std::size_t next_path = 0, next_centric = 0;
  for (std::size_t d = 0; d < n_docs; ++d) {
    CorpusRecord r;
    PairSubset subset;
    if (is_path[d]) {
      r = path_doc(rng, cue[next_path++]);
      subset = PairSubset::Path;
    } else {
      std::vector<char> agent{0, 0, 0};
      for (int k = 0; k < agents[next_centric]; ++k) agent[static_cast<std::size_t>(k)] = 1;
      rng.shuffle(agent);
      ++next_centric;
      r = centric_doc(rng, {agent[0] != 0, agent[1] != 0, agent[2] != 0});
      subset = PairSubset::Centric;
    }
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", d);
    r.doc_id = id;
    std::snprintf(id, sizeof id, "T%02zu", d % options.topics + 1);
    r.topic_id = id;
    for (std::size_t i = 0; i < r.tokens.size(); ++i) r.sentence += (i ? " " : "") + r.tokens[i];
    for (std::size_t p = 0; p < r.pairs.size(); ++p) out.truth.push_back({r.doc_id, p, subset, r.pairs[p].label});
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace semsin::data
