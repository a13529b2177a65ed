// evaluation.hpp - precision/recall/F1, fold plans and cross-validation

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semsin/data.hpp"
#include "semsin/model.hpp"
#include "semsin/training.hpp"

namespace semsin::eval {

/// Percentages; the causal class is positive.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  std::size_t total() const { return tp + fp + fn + tn; }

  MetricsReport& operator+=(const MetricsReport& other);
  std::string to_json() const;
};

/// One-decimal rounding used in reports.
double round1(double percent);

/// F1 from already-rounded P and R, rounded to one decimal.
double f1_from_pr(double precision, double recall);

/// Throws Error("LengthMismatch") or Error("InvalidLabel").
MetricsReport prf1(const std::vector<int>& predictions, const std::vector<int>& labels);

enum class FoldMode { CrossTopic, Random };

/// "cross-topic" or "random". Throws Error("UnknownMode").
FoldMode parse_fold_mode(const std::string& name);
std::string to_string(FoldMode m);

struct FoldPlan {
  FoldMode mode = FoldMode::Random;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> fold_of;    // test fold per document
  std::vector<std::string> dev_docs;             // cross-topic: held out from every fold
  std::vector<std::vector<std::string>> fold_dev;  // random: dev documents per fold (drawn from its training side)
  std::vector<std::vector<std::string>> fold_topics;  // cross-topic: topics per fold

  /// Development documents used while training fold `f`.
  std::vector<std::string> dev_for(std::size_t f) const;
  std::string to_json() const;
};

/// Cross-topic: topics sorted (numerically when every id is an integer), the
/// last two become the dev set and the rest form k contiguous blocks.
/// Random: document ids sorted, shuffled by a seeded Rng and cut into k
/// blocks; each fold holds out 10% of its training documents as dev.
/// Throws Error("TooFewTopics"), Error("TooFewDocuments"), Error("InvalidArgument").
FoldPlan make_folds(const std::vector<data::CorpusRecord>& corpus, FoldMode mode, std::size_t k, std::uint64_t seed);

struct PairPrediction {
  std::string doc_id;
  std::size_t pair_index = 0;
  std::size_t fold = 0;
  int label = 0;
  double probability = 0.0;  // 0 for skipped pairs
  int predicted = 0;
  bool skipped = false;

  std::string to_json() const;
};

struct FoldResult {
  std::size_t fold = 0;
  MetricsReport metrics;
  training::TrainReport report;
  std::shared_ptr<model::SemSinModel> model;
};

struct CrossValResult {
  MetricsReport aggregate;  // pooled counts over folds
  std::vector<FoldResult> folds;
  std::vector<PairPrediction> predictions;  // sorted by (doc order, pair index)
  model::SkipReport skips;
};

struct CrossValOptions {
  std::size_t jobs = 1;
  const data::CtxEmbIndex* embeddings = nullptr;
};

/// Trains one model per fold on the other folds and tests it on the fold.
/// Folds run on up to `jobs` threads; results do not depend on `jobs`.
CrossValResult run_cross_validation(const std::vector<data::CorpusRecord>& corpus, const FoldPlan& plan,
                                    const training::TrainConfig& config, const CrossValOptions& options = {});

/// Scores every pair of `docs` (skipped pairs as negatives).
std::vector<PairPrediction> predict_pairs(const model::SemSinModel& model, const std::vector<const model::PreparedDoc*>& docs,
                                          const std::vector<model::SkippedPair>& skipped, std::size_t fold = 0);
MetricsReport metrics_of(const std::vector<PairPrediction>& predictions);

/// Aligned text table with columns Method, P, R, F1.
std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace semsin::eval
