// evaluation.cpp

#include "semsin/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace semsin::eval {

using nlohmann::ordered_json;

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double MetricsReport::precision() const { return percent(tp, tp + fp); }
double MetricsReport::recall() const { return percent(tp, tp + fn); }
double MetricsReport::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

std::string MetricsReport::to_json() const {
  ordered_json j;
  j["precision"] = round1(precision());
  j["recall"] = round1(recall());
  j["f1"] = round1(f1());
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  j["tn"] = tn;
  return j.dump();
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

double f1_from_pr(double precision, double recall) {
  return precision + recall > 0.0 ? round1(2.0 * precision * recall / (precision + recall)) : 0.0;
}

MetricsReport prf1(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw Error("LengthMismatch", std::to_string(predictions.size()) + " predictions for " +
                                      std::to_string(labels.size()) + " labels");
  MetricsReport m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], l = labels[i];
    if ((p != 0 && p != 1) || (l != 0 && l != 1)) throw Error("InvalidLabel", "values must be 0 or 1");
    if (p == 1 && l == 1) ++m.tp;
    else if (p == 1) ++m.fp;
    else if (l == 1) ++m.fn;
    else ++m.tn;
  }
  return m;
}

FoldMode parse_fold_mode(const std::string& name) {
  if (name == "cross-topic") return FoldMode::CrossTopic;
  if (name == "random") return FoldMode::Random;
  throw Error("UnknownMode", "unknown fold mode '" + name + "' (expected cross-topic or random)");
}

std::string to_string(FoldMode m) { return m == FoldMode::CrossTopic ? "cross-topic" : "random"; }

std::vector<std::string> FoldPlan::dev_for(std::size_t f) const {
  return mode == FoldMode::CrossTopic ? dev_docs : fold_dev.at(f);
}

std::string FoldPlan::to_json() const {
  ordered_json j;
  j["mode"] = to_string(mode);
  j["k"] = k;
  j["seed"] = seed;
  std::vector<std::vector<std::string>> folds(k);
  for (const auto& [doc, f] : fold_of) folds[f].push_back(doc);
  j["folds"] = folds;
  if (mode == FoldMode::CrossTopic) {
    j["fold_topics"] = fold_topics;
    j["dev"] = dev_docs;
  } else {
    j["fold_dev"] = fold_dev;
  }
  return j.dump();
}

namespace {

bool parse_int(const std::string& s, long long& out) {
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end && !s.empty();
}

std::vector<std::string> sorted_topics(const std::vector<data::CorpusRecord>& corpus) {
  std::set<std::string> unique;
  for (const auto& r : corpus) unique.insert(r.topic_id);
  std::vector<std::string> topics(unique.begin(), unique.end());
  long long tmp = 0;
  const bool numeric = std::all_of(topics.begin(), topics.end(), [&](const std::string& t) { return parse_int(t, tmp); });
  if (numeric) {
    std::stable_sort(topics.begin(), topics.end(), [](const std::string& a, const std::string& b) {
      long long x = 0, y = 0;
      parse_int(a, x);
      parse_int(b, y);
      return x < y;
    });
  }
  return topics;
}

}  // namespace

FoldPlan make_folds(const std::vector<data::CorpusRecord>& corpus, FoldMode mode, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("InvalidArgument", "k must be at least 2");
  if (corpus.empty()) throw Error("InvalidArgument", "cannot split an empty corpus");
  std::set<std::string> seen;
  for (const auto& r : corpus)
    if (!seen.insert(r.doc_id).second) throw Error("DuplicateDocument", "duplicate doc_id '" + r.doc_id + "'");

  FoldPlan plan;
  plan.mode = mode;
  plan.k = k;
  plan.seed = seed;

  if (mode == FoldMode::CrossTopic) {
    const auto topics = sorted_topics(corpus);
    if (topics.size() < k + 2)
      throw Error("TooFewTopics", std::to_string(topics.size()) + " topics cannot give " + std::to_string(k) +
                                      " folds plus two dev topics");
    const std::size_t m = topics.size() - 2;
    std::map<std::string, std::size_t> fold_of_topic;
    plan.fold_topics.resize(k);
    for (std::size_t f = 0; f < k; ++f)
      for (std::size_t t = f * m / k; t < (f + 1) * m / k; ++t) {
        fold_of_topic[topics[t]] = f;
        plan.fold_topics[f].push_back(topics[t]);
      }
    for (const auto& r : corpus) {
      const auto it = fold_of_topic.find(r.topic_id);
      if (it == fold_of_topic.end())
        plan.dev_docs.push_back(r.doc_id);
      else
        plan.fold_of[r.doc_id] = it->second;
    }
    return plan;
  }

  if (corpus.size() < k)
    throw Error("TooFewDocuments", std::to_string(corpus.size()) + " documents cannot fill " + std::to_string(k) + " folds");
  std::vector<std::string> docs(seen.begin(), seen.end());  // sorted by name
  Rng rng(seed);
  rng.shuffle(docs);
  const std::size_t n = docs.size();
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t i = f * n / k; i < (f + 1) * n / k; ++i) plan.fold_of[docs[i]] = f;
  plan.fold_dev.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::string> train;
    for (const auto& d : docs)
      if (plan.fold_of[d] != f) train.push_back(d);
    Rng dev_rng(Rng::derive(seed, f));
    dev_rng.shuffle(train);
    std::size_t m = train.size() / 10;
    if (m == 0 && train.size() >= 2) m = 1;
    plan.fold_dev[f].assign(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(plan.fold_dev[f].begin(), plan.fold_dev[f].end());
  }
  return plan;
}

std::string PairPrediction::to_json() const {
  ordered_json j;
  j["doc_id"] = doc_id;
  j["pair_index"] = pair_index;
  j["fold"] = fold;
  j["label"] = label;
  j["probability"] = probability;
  j["predicted"] = predicted;
  j["skipped"] = skipped;
  return j.dump();
}

std::vector<PairPrediction> predict_pairs(const model::SemSinModel& model, const std::vector<const model::PreparedDoc*>& docs,
                                          const std::vector<model::SkippedPair>& skipped, std::size_t fold) {
  std::vector<PairPrediction> out;
  Rng unused(0);
  for (const auto* doc : docs) {
    nn::Tape tape;
    model::SemSinModel::DocCache cache;
    for (const auto& pair : doc->pairs) {
      const double p = model.forward(tape, *doc, pair, cache, unused, false).probs.value()(0, 1);
      out.push_back({doc->doc_id, pair.pair_index, fold, pair.label, p, p > 0.5 ? 1 : 0, false});
    }
  }
  for (const auto& s : skipped) out.push_back({s.doc_id, s.pair_index, fold, s.label, 0.0, 0, true});
  return out;
}

MetricsReport metrics_of(const std::vector<PairPrediction>& predictions) {
  std::vector<int> pred, gold;
  for (const auto& p : predictions) {
    pred.push_back(p.predicted);
    gold.push_back(p.label);
  }
  return prf1(pred, gold);
}

CrossValResult run_cross_validation(const std::vector<data::CorpusRecord>& corpus, const FoldPlan& plan,
                                    const training::TrainConfig& config, const CrossValOptions& options) {
  config.validate();
  const auto prepared = model::prepare_corpus(corpus, config.layers, config.max_paths);
  std::unordered_map<std::string, const model::PreparedDoc*> doc_of;
  for (const auto& d : prepared.docs) doc_of[d.doc_id] = &d;
  std::unordered_map<std::string, std::vector<model::SkippedPair>> skips_of;
  for (const auto& s : prepared.skips.skipped) skips_of[s.doc_id].push_back(s);

  const auto add_doc = [&](training::Split& split, const std::string& id) {
    if (const auto it = doc_of.find(id); it != doc_of.end()) split.docs.push_back(it->second);
    if (const auto it = skips_of.find(id); it != skips_of.end())
      split.skipped.insert(split.skipped.end(), it->second.begin(), it->second.end());
  };

  const std::size_t k = plan.k;
  std::vector<FoldResult> results(k);
  std::vector<std::vector<PairPrediction>> fold_predictions(k);
  std::vector<std::exception_ptr> errors(k);

  const auto run_fold = [&](std::size_t f) {
    const auto dev_ids = plan.dev_for(f);
    const std::set<std::string> dev_set(dev_ids.begin(), dev_ids.end());
    training::Split train, dev, test;
    for (const auto& r : corpus) {
      const auto it = plan.fold_of.find(r.doc_id);
      if (dev_set.count(r.doc_id)) {
        add_doc(dev, r.doc_id);
      } else if (it == plan.fold_of.end()) {
        continue;
      } else if (it->second == f) {
        add_doc(test, r.doc_id);
      } else {
        add_doc(train, r.doc_id);
      }
    }
    training::TrainConfig fold_config = config;
    fold_config.seed = Rng::derive(config.seed, 1000 + f);
    auto fitted = training::fit(train, dev, fold_config, options.embeddings);
    fold_predictions[f] = predict_pairs(fitted.model, test.docs, test.skipped, f);
    results[f].fold = f;
    results[f].metrics = metrics_of(fold_predictions[f]);
    results[f].report = std::move(fitted.report);
    results[f].model = std::make_shared<model::SemSinModel>(std::move(fitted.model));
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.jobs, k));
  if (workers == 1) {
    for (std::size_t f = 0; f < k; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < k; f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CrossValResult out;
  out.skips = prepared.skips;
  std::unordered_map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < corpus.size(); ++i) order[corpus[i].doc_id] = i;
  for (std::size_t f = 0; f < k; ++f) {
    out.aggregate += results[f].metrics;
    out.predictions.insert(out.predictions.end(), fold_predictions[f].begin(), fold_predictions[f].end());
  }
  std::sort(out.predictions.begin(), out.predictions.end(), [&](const PairPrediction& a, const PairPrediction& b) {
    const auto oa = order.at(a.doc_id), ob = order.at(b.doc_id);
    return oa != ob ? oa < ob : a.pair_index < b.pair_index;
  });
  out.folds = std::move(results);
  return out;
}

std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, m] : rows) width = std::max(width, name.size());
  const auto line = [&](const std::string& a, const std::string& p, const std::string& r, const std::string& f) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %6s  %6s  %6s\n", static_cast<int>(width), a.c_str(), p.c_str(), r.c_str(),
                  f.c_str());
    return std::string(buf);
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", round1(v));
    return std::string(buf);
  };
  std::string out = line("Method", "P", "R", "F1");
  for (const auto& [name, m] : rows) out += line(name, num(m.precision()), num(m.recall()), num(m.f1()));
  return out;
}

}  // namespace semsin::eval
