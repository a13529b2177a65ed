// training.hpp - focal loss, epoch sampling and the mini-batch fit loop

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semsin/model.hpp"
#include "semsin/optim.hpp"

namespace semsin::training {

using model::PreparedDoc;
using model::SemSinModel;
using nn::Tape;
using nn::Tensor;

inline constexpr double kMinProbability = 1e-12;

/// -w (1 - p_t)^gamma log p_t with w = beta for label 1 and 1 - beta for
/// label 0; p_t is clamped to [1e-12, 1].
double focal_loss_value(double p_true, int label, double beta, double gamma);

/// Tape op over a 1 x 2 probability row. Throws Error("InvalidProbability")
/// if the row is not a distribution.
Tensor focal_loss(const Tensor& probs, int label, double beta, double gamma);

/// Each positive repeated `pos_rate` times, each negative kept with
/// probability `neg_rate`, then shuffled. Returns indices into `labels`.
std::vector<std::size_t> sample_epoch(const std::vector<int>& labels, std::size_t pos_rate, double neg_rate, Rng& rng);

struct TrainConfig {
  double lr = 1e-3;
  double dropout = 0.5;
  int layers = 3;
  double gamma = 2.0;
  double beta = 0.5;
  std::size_t batch = 20;
  std::size_t pos_rate = 1;
  double neg_rate = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  model::Ablation ablation = model::Ablation::Full;
  std::size_t hidden = 64;
  std::size_t max_paths = graph::kDefaultMaxPaths;
  int patience = 10;
  double weight_decay = 0.01;
  model::ContextMode context_mode = model::ContextMode::Internal;

  /// Throws Error("InvalidConfig").
  void validate() const;
  model::ModelConfig model_config() const;
};

/// Pairs a model is trained or scored on, plus the pairs that could not be
/// prepared (scored as negatives).
struct Split {
  std::vector<const PreparedDoc*> docs;
  std::vector<model::SkippedPair> skipped;

  std::size_t pair_count() const;
};

struct DevScore {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double loss = 0.0;  // mean focal loss over scored pairs
  double precision() const;
  double recall() const;
  double f1() const;
};

struct EpochRecord {
  int epoch = 0;
  std::size_t samples = 0;
  double train_loss = 0.0;  // mean batch loss
  DevScore dev;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  bool stopped_early = false;
  std::size_t skipped_unaligned = 0;
  std::size_t skipped_other = 0;
  std::size_t unreachable = 0;

  /// One JSON object per epoch followed by a summary object.
  std::string to_jsonl(bool include_timing = true) const;
};

struct FitResult {
  SemSinModel model;
  TrainReport report;
};

/// Scores a split with dropout off.
DevScore score(const SemSinModel& model, const Split& split, double beta, double gamma);

/// Mini-batch AdamW on the summed focal loss of each batch. Keeps the
/// parameters of the epoch with the best dev F1 (ties: lower dev loss) and
/// stops after `patience` epochs without improvement. Throws
/// Error("NonFiniteLoss") naming the offending batch.
FitResult fit(const Split& train, const Split& dev, const TrainConfig& config,
              const data::CtxEmbIndex* embeddings = nullptr);

}  // namespace semsin::training
