// training.cpp

#include "semsin/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

namespace semsin::training {

using nn::Matrix;

double focal_loss_value(double p_true, int label, double beta, double gamma) {
  const double p = std::clamp(p_true, kMinProbability, 1.0);
  const double w = label == 1 ? beta : 1.0 - beta;
  return -w * std::pow(1.0 - p, gamma) * std::log(p);
}

Tensor focal_loss(const Tensor& probs, int label, double beta, double gamma) {
  const Matrix& v = probs.value();
  if (v.rows() != 1 || v.cols() != 2) throw nn::ShapeMismatch("focal_loss", v.rows(), v.cols(), 1, 2);
  if (label != 0 && label != 1) throw Error("InvalidLabel", "label must be 0 or 1, got " + std::to_string(label));
  for (Eigen::Index j = 0; j < 2; ++j)
    if (!std::isfinite(v(0, j)) || v(0, j) < 0.0 || v(0, j) > 1.0)
      throw Error("InvalidProbability", "probability " + std::to_string(v(0, j)) + " outside [0, 1]");
  if (std::abs(v.sum() - 1.0) > 1e-6) throw Error("InvalidProbability", "probabilities do not sum to 1");

  const double raw = v(0, label);
  Matrix out(1, 1);
  out(0, 0) = focal_loss_value(raw, label, beta, gamma);
  const std::size_t in = probs.id();
  return probs.tape()->record(std::move(out), {in}, [in, raw, label, beta, gamma](Tape& t, std::size_t self) {
    Matrix g = Matrix::Zero(1, 2);
    if (raw >= kMinProbability) {
      const double p = std::min(raw, 1.0);
      const double w = label == 1 ? beta : 1.0 - beta;
      // d/dp of -w (1-p)^gamma log p; the first term vanishes at p = 1
      const double focus = p < 1.0 && gamma != 0.0 ? -gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p) : 0.0;
      g(0, label) = -w * (focus + std::pow(1.0 - p, gamma) / p) * t.grad_of(self)(0, 0);
    }
    t.accumulate(in, g);
  });
}

std::vector<std::size_t> sample_epoch(const std::vector<int>& labels, std::size_t pos_rate, double neg_rate, Rng& rng) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      out.insert(out.end(), pos_rate, i);
    } else if (rng.bernoulli(neg_rate)) {
      out.push_back(i);
    }
  }
  rng.shuffle(out);
  return out;
}

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error("InvalidConfig", what); };
  if (!(lr >= 0.0)) fail("lr must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (layers < 1) fail("layers must be at least 1");
  if (!(gamma >= 0.0)) fail("gamma must be non-negative");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (batch < 1) fail("batch must be at least 1");
  if (pos_rate < 1) fail("pos-rate must be at least 1");
  if (!(neg_rate > 0.0 && neg_rate <= 1.0)) fail("neg-rate must lie in (0, 1]");
  if (epochs < 1) fail("epochs must be at least 1");
  if (hidden < 2) fail("hidden size must be at least 2");
  if (!(weight_decay >= 0.0)) fail("weight decay must be non-negative");
}

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m;
  m.hidden = hidden;
  m.layers = layers;
  m.dropout = dropout;
  m.ablation = ablation;
  m.max_paths = max_paths;
  m.context_mode = context_mode;
  return m;
}

std::size_t Split::pair_count() const {
  std::size_t n = skipped.size();
  for (const auto* d : docs) n += d->pairs.size();
  return n;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double DevScore::precision() const { return ratio(tp, tp + fp); }
double DevScore::recall() const { return ratio(tp, tp + fn); }
double DevScore::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::string TrainReport::to_jsonl(bool include_timing) const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["samples"] = e.samples;
    j["train_loss"] = e.train_loss;
    j["dev_loss"] = e.dev.loss;
    j["dev_precision"] = e.dev.precision();
    j["dev_recall"] = e.dev.recall();
    j["dev_f1"] = e.dev.f1();
    if (include_timing) j["wall_seconds"] = e.wall_seconds;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["epochs_run"] = epochs.size();
  s["best_epoch"] = best_epoch;
  s["best_dev_f1"] = best_dev_f1;
  s["stopped_early"] = stopped_early;
  s["skipped_unaligned"] = skipped_unaligned;
  s["skipped_other"] = skipped_other;
  s["unreachable"] = unreachable;
  out += s.dump() + "\n";
  return out;
}

DevScore score(const SemSinModel& model, const Split& split, double beta, double gamma) {
  DevScore s;
  std::size_t scored = 0;
  Rng unused(0);
  for (const auto* doc : split.docs) {
    Tape tape;
    SemSinModel::DocCache cache;
    for (const auto& pair : doc->pairs) {
      const double p = model.forward(tape, *doc, pair, cache, unused, false).probs.value()(0, 1);
      const bool pred = p > 0.5;
      if (pred && pair.label == 1) ++s.tp;
      else if (pred) ++s.fp;
      else if (pair.label == 1) ++s.fn;
      else ++s.tn;
      s.loss += focal_loss_value(pair.label == 1 ? p : 1.0 - p, pair.label, beta, gamma);
      ++scored;
    }
  }
  for (const auto& sk : split.skipped) (sk.label == 1 ? s.fn : s.tn) += 1;
  if (scored > 0) s.loss /= static_cast<double>(scored);
  return s;
}

FitResult fit(const Split& train, const Split& dev, const TrainConfig& config, const data::CtxEmbIndex* embeddings) {
  config.validate();
  std::vector<const PreparedDoc*> docs;
  std::vector<const model::PreparedPair*> pairs;
  std::vector<int> labels;
  for (const auto* d : train.docs)
    for (const auto& p : d->pairs) {
      docs.push_back(d);
      pairs.push_back(&p);
      labels.push_back(p.label);
    }
  if (pairs.empty()) throw Error("EmptyTrainingSet", "no trainable pairs in the training split");

  SemSinModel model(config.model_config(), model::build_vocabularies(train.docs), Rng::derive(config.seed, 0));
  model.set_context_embeddings(embeddings);

  TrainReport report;
  for (const auto& sk : train.skipped) (sk.reason == "NoAlignedNode" ? report.skipped_unaligned : report.skipped_other) += 1;
  for (const auto* p : pairs) report.unreachable += p->paths.empty() ? 1 : 0;

  nn::OptimizerState opt;
  opt.config.lr = config.lr;
  opt.config.weight_decay = config.weight_decay;
  const auto params = model.params().all();
  std::vector<Matrix> best;
  double best_loss = 0.0;
  int since_best = 0;
  const bool have_dev = dev.pair_count() > 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng sample_rng(Rng::derive(config.seed, 2 * static_cast<std::uint64_t>(epoch)));
    Rng dropout_rng(Rng::derive(config.seed, 2 * static_cast<std::uint64_t>(epoch) + 1));
    const auto order = sample_epoch(labels, config.pos_rate, config.neg_rate, sample_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.samples = order.size();
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch, ++batches) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      Tape tape;
      SemSinModel::DocCache cache;
      std::vector<Tensor> losses;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        const auto out = model.forward(tape, *docs[i], *pairs[i], cache, dropout_rng, true);
        losses.push_back(focal_loss(out.probs, labels[i], config.beta, config.gamma));
      }
      const Tensor loss = nn::sum(nn::concat_cols(losses));
      if (!std::isfinite(loss.scalar()))
        throw Error("NonFiniteLoss", "non-finite loss in epoch " + std::to_string(epoch) + " batch " +
                                         std::to_string(batches));
      model.params().zero_grad();
      tape.backward(loss);
      nn::adamw_step(params, opt);
      rec.train_loss += loss.scalar();
    }
    if (batches > 0) rec.train_loss /= static_cast<double>(batches);
    rec.dev = score(model, dev, config.beta, config.gamma);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);

    const bool improved = best.empty() || !have_dev || rec.dev.f1() > report.best_dev_f1 ||
                          (rec.dev.f1() == report.best_dev_f1 && rec.dev.loss < best_loss);
    if (improved) {
      best.clear();
      for (const auto* p : params) best.push_back(p->value);
      report.best_epoch = epoch;
      report.best_dev_f1 = rec.dev.f1();
      best_loss = rec.dev.loss;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      report.stopped_early = true;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return {std::move(model), std::move(report)};
}

}  // namespace semsin::training
