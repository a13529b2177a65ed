// verify.hpp - worked example fixture and per-block gradient checks

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsin/data.hpp"
#include "semsin/gradcheck.hpp"

namespace semsin::verify {

/// "Horton was shot while protecting a student ." with its AMR graph,
/// alignments and the causal pair (shot, protect).
data::CorpusRecord horton_example();

struct BlockCheck {
  std::string block;
  nn::GradCheckResult result;
  double seconds = 0.0;
};

inline constexpr double kGradTolerance = 1e-4;

/// Finite-difference checks of node initialization, the 3-layer RGCN, the
/// path BiLSTM, path attention, context + classifier, the focal loss and the
/// whole model, all on the worked example with hidden size `hidden`.
std::vector<BlockCheck> gradcheck_blocks(std::uint64_t seed = 1, std::size_t hidden = 4, double eps = 1e-5);

}  // namespace semsin::verify
