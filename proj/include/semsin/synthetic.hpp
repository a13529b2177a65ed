// synthetic.hpp - planted-cue corpus for desk-scale end-to-end runs
//
// Two document templates, in equal numbers:
//
//   path docs     three event chains hang four hops below a hub node. Every
//                 pair's single shortest path runs through the hub; the pair
//                 is causal iff the hub is the cue concept "cause-01". The
//                 hub is unaligned and lies outside each event's 3-hop
//                 neighbourhood.
//   centric docs  three events joined by "and", each with a "person"
//                 participant attached as ARG0 or as beneficiary (same
//                 surface word either way; the two roles fall in different
//                 role classes). A pair is causal iff both events have the
//                 ARG0 participant. Participants never lie on the pair path.
//
// Surface tokens are drawn independently of the labels, so the text alone
// carries no label signal.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsin/data.hpp"

namespace semsin::data {

inline constexpr const char* kCueConcept = "cause-01";
inline constexpr const char* kDecoyConcept = "contrast-01";
inline constexpr const char* kParticipantConcept = "person";
inline constexpr const char* kAgentRole = "ARG0";
inline constexpr const char* kNonAgentRole = "beneficiary";

enum class PairSubset { Path, Centric };

struct PairTruth {
  std::string doc_id;
  std::size_t pair_index = 0;
  PairSubset subset = PairSubset::Path;
  int label = 0;
};

struct SyntheticCorpus {
  std::vector<CorpusRecord> records;
  std::vector<PairTruth> truth;
};

struct SyntheticOptions {
  std::size_t topics = 22;
};

/// Deterministic in (n_docs, seed, options). Requires n_docs >= 20.
SyntheticCorpus gen_synthetic(std::size_t n_docs, std::uint64_t seed, const SyntheticOptions& options = {});

std::string to_string(PairSubset s);
std::string truth_to_json(const PairTruth& t);

}  // namespace semsin::data
