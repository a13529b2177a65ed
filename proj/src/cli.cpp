// cli.cpp

#include "semsin/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "semsin/evaluation.hpp"
#include "semsin/penman.hpp"
#include "semsin/synthetic.hpp"
#include "semsin/training.hpp"
#include "semsin/verify.hpp"

namespace semsin::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kInternalLr = 1e-3;
constexpr double kExternalLr = 1e-5;

struct Options {
  std::string data;
  std::string embeddings;
  std::string model;
  std::string mode = "cross-topic";
  std::size_t k = 5;
  int layers = 3;
  double lr = 0.0;  // 0 = mode default
  double dropout = 0.5;
  double gamma = 2.0;
  double beta = 0.5;
  std::size_t batch = 20;
  std::size_t pos_rate = 1;
  double neg_rate = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  std::string ablation = "full";
  std::string out;
  std::size_t jobs = 1;
  std::size_t docs = 60;
  int max_layers = 5;  // grid-layers reuses --layers as the sweep bound
};

void add_data(CLI::App* app, Options& o, bool required = true) {
  auto* opt = app->add_option("--data", o.data, "corpus file (JSON lines)")->check(CLI::ExistingFile);
  if (required) opt->required();
}

void add_embeddings(CLI::App* app, Options& o) {
  app->add_option("--embeddings", o.embeddings, "CTXEMB file; switches to external context vectors")
      ->check(CLI::ExistingFile);
}

void add_training(CLI::App* app, Options& o, bool sweep = false) {
  if (sweep)
    app->add_option("--layers", o.max_layers, "largest RGCN depth in the sweep")->capture_default_str();
  else
    app->add_option("--layers", o.layers, "RGCN layers (also the neighbourhood hop count)")->capture_default_str();
  app->add_option("--lr", o.lr, "learning rate [default: 1e-3, or 1e-5 with --embeddings]");
  app->add_option("--dropout", o.dropout, "dropout rate")->capture_default_str();
  app->add_option("--gamma", o.gamma, "focal loss focusing exponent")->capture_default_str();
  app->add_option("--beta", o.beta, "focal loss weight of the causal class")->capture_default_str();
  app->add_option("--batch", o.batch, "mini-batch size")->capture_default_str();
  app->add_option("--pos-rate", o.pos_rate, "copies of each positive pair per epoch")->capture_default_str();
  app->add_option("--neg-rate", o.neg_rate, "probability of keeping each negative pair per epoch")
      ->capture_default_str();
  app->add_option("--epochs", o.epochs, "maximum epochs")->capture_default_str();
  app->add_option("--ablation", o.ablation, "model variant")
      ->check(CLI::IsMember({"full", "wo-stru", "wo-path", "wo-cent"}))
      ->capture_default_str();
}

void add_folds(CLI::App* app, Options& o) {
  app->add_option("--mode", o.mode, "fold protocol")->check(CLI::IsMember({"cross-topic", "random"}))
      ->capture_default_str();
  app->add_option("--k", o.k, "number of folds")->capture_default_str();
  app->add_option("--jobs", o.jobs, "folds trained in parallel")->capture_default_str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("IoError", "cannot write " + path.string());
  f << content;
  if (!f) throw Error("IoError", "failed writing " + path.string());
}

fs::path prepare_out(const Options& o, const std::string& fallback) {
  const fs::path dir = o.out.empty() ? fs::path(fallback) : fs::path(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("IoError", "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

struct Context {
  std::optional<data::CtxEmbIndex> embeddings;
  const data::CtxEmbIndex* ptr() const { return embeddings ? &*embeddings : nullptr; }
};

Context load_context(const Options& o) {
  Context c;
  if (!o.embeddings.empty()) c.embeddings = data::load_ctxemb(o.embeddings);
  return c;
}

training::TrainConfig train_config(const Options& o, const Context& ctx) {
  training::TrainConfig c;
  c.lr = o.lr > 0.0 ? o.lr : (ctx.embeddings ? kExternalLr : kInternalLr);
  c.dropout = o.dropout;
  c.layers = o.layers;
  c.gamma = o.gamma;
  c.beta = o.beta;
  c.batch = o.batch;
  c.pos_rate = o.pos_rate;
  c.neg_rate = o.neg_rate;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.ablation = model::parse_ablation(o.ablation);
  if (ctx.embeddings) {
    c.context_mode = model::ContextMode::External;
    c.hidden = ctx.embeddings->dimension();
  }
  c.validate();
  return c;
}

std::vector<data::CorpusRecord> load_records(const Options& o) {
  auto loaded = data::load_corpus(o.data, true);
  return std::move(loaded.records);
}

ordered_json config_json(const training::TrainConfig& c) {
  return {{"lr", c.lr},         {"dropout", c.dropout},   {"layers", c.layers},
          {"gamma", c.gamma},   {"beta", c.beta},         {"batch", c.batch},
          {"pos_rate", c.pos_rate}, {"neg_rate", c.neg_rate}, {"epochs", c.epochs},
          {"seed", c.seed},     {"ablation", model::to_string(c.ablation)},
          {"hidden", c.hidden}, {"patience", c.patience}, {"weight_decay", c.weight_decay}};
}

ordered_json metrics_json(const eval::MetricsReport& m) { return ordered_json::parse(m.to_json()); }

ordered_json skips_json(const model::SkipReport& s) {
  ordered_json j;
  j["unaligned"] = s.unaligned;
  j["unreachable"] = s.unreachable;
  j["other"] = s.other;
  ordered_json list = ordered_json::array();
  for (const auto& p : s.skipped)
    list.push_back({{"doc_id", p.doc_id}, {"pair_index", p.pair_index}, {"label", p.label}, {"reason", p.reason}});
  j["skipped"] = list;
  return j;
}

// --- subcommands -----------------------------------------------------------

int cmd_check(const Options& o, std::ostream& out) {
  const auto loaded = data::load_corpus(o.data, false);
  ordered_json report;
  report["records"] = loaded.records.size();
  ordered_json bad_lines = ordered_json::array();
  for (const auto& s : loaded.skipped)
    bad_lines.push_back({{"line", s.line}, {"code", s.code}, {"message", s.message}});
  report["malformed_lines"] = bad_lines;

  ordered_json penman_failures = ordered_json::array();
  std::size_t pairs = 0;
  for (const auto& r : loaded.records) {
    pairs += r.pairs.size();
    try {
      const auto g = penman::parse_penman(r.amr);
      const auto again = penman::parse_penman(penman::serialize_penman(g));
      if (!penman::isomorphic(g, again)) throw Error("RoundTripMismatch", "reparsed graph differs");
      graph::build_semantic_graph(g, r.alignments, r.tokens.size());
    } catch (const Error& e) {
      penman_failures.push_back({{"doc_id", r.doc_id}, {"code", e.code()}, {"message", e.what()}});
    }
  }
  report["pairs"] = pairs;
  report["graph_failures"] = penman_failures;
  const auto prepared = model::prepare_corpus(loaded.records, o.layers, graph::kDefaultMaxPaths);
  report["pair_skips"] = skips_json(prepared.skips);
  const bool ok = loaded.skipped.empty() && penman_failures.empty();
  report["valid"] = ok;
  out << report.dump(2) << "\n";
  return ok ? 0 : 1;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto ctx = load_context(o);
  const auto config = train_config(o, ctx);
  const auto records = load_records(o);
  if (records.empty()) throw Error("EmptyCorpus", "no records in " + o.data);
  const fs::path dir = prepare_out(o, "semsin-train");

  // dev: 10% of documents, drawn the same way as a random fold's dev set
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.doc_id);
  std::sort(ids.begin(), ids.end());
  Rng rng(o.seed);
  rng.shuffle(ids);
  std::size_t m = ids.size() / 10;
  if (m == 0 && ids.size() >= 2) m = 1;
  const std::set<std::string> dev_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));

  const auto prepared = model::prepare_corpus(records, config.layers, config.max_paths);
  training::Split train, dev;
  for (const auto& d : prepared.docs) (dev_ids.count(d.doc_id) ? dev : train).docs.push_back(&d);
  for (const auto& s : prepared.skips.skipped) (dev_ids.count(s.doc_id) ? dev : train).skipped.push_back(s);

  const auto start = std::chrono::steady_clock::now();
  auto fitted = training::fit(train, dev, config, ctx.ptr());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fitted.model.save((dir / "model.ckpt").string());
  write_file(dir / "train_report.jsonl", fitted.report.to_jsonl(false));
  const auto dev_preds = eval::predict_pairs(fitted.model, dev.docs, dev.skipped);
  ordered_json metrics;
  metrics["config"] = config_json(config);
  metrics["dev_documents"] = std::vector<std::string>(dev_ids.begin(), dev_ids.end());
  metrics["dev"] = metrics_json(eval::metrics_of(dev_preds));
  metrics["best_epoch"] = fitted.report.best_epoch;
  metrics["skips"] = skips_json(prepared.skips);
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  write_file(dir / "timing.json", ordered_json{{"wall_seconds", seconds}}.dump() + "\n");
  out << metrics.dump(2) << "\n";
  return 0;
}

eval::CrossValResult cross_validate(const Options& o, const training::TrainConfig& config, const Context& ctx,
                                    const std::vector<data::CorpusRecord>& records, eval::FoldPlan& plan) {
  plan = eval::make_folds(records, eval::parse_fold_mode(o.mode), o.k, o.seed);
  eval::CrossValOptions options;
  options.jobs = o.jobs;
  options.embeddings = ctx.ptr();
  return eval::run_cross_validation(records, plan, config, options);
}

int cmd_xval(const Options& o, std::ostream& out) {
  const auto ctx = load_context(o);
  const auto config = train_config(o, ctx);
  const auto records = load_records(o);
  const fs::path dir = prepare_out(o, "semsin-xval");
  eval::FoldPlan plan;
  const auto start = std::chrono::steady_clock::now();
  const auto result = cross_validate(o, config, ctx, records, plan);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file(dir / "folds.json", plan.to_json() + "\n");
  std::string preds;
  for (const auto& p : result.predictions) preds += p.to_json() + "\n";
  write_file(dir / "predictions.jsonl", preds);
  ordered_json metrics;
  metrics["config"] = config_json(config);
  metrics["mode"] = o.mode;
  metrics["k"] = o.k;
  metrics["aggregate"] = metrics_json(result.aggregate);
  ordered_json folds = ordered_json::array();
  for (const auto& f : result.folds) {
    f.model->save((dir / ("fold" + std::to_string(f.fold) + ".ckpt")).string());
    write_file(dir / ("fold" + std::to_string(f.fold) + "_report.jsonl"), f.report.to_jsonl(false));
    folds.push_back({{"fold", f.fold}, {"metrics", metrics_json(f.metrics)}, {"best_epoch", f.report.best_epoch}});
  }
  metrics["folds"] = folds;
  metrics["skips"] = skips_json(result.skips);
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  write_file(dir / "timing.json", ordered_json{{"wall_seconds", seconds}}.dump() + "\n");
  out << eval::format_table({{"SemSIn (" + o.ablation + ")", result.aggregate}});
  return 0;
}

struct LoadedModel {
  model::SemSinModel model;
  Context ctx;
};

LoadedModel load_model(const Options& o) {
  LoadedModel lm{model::SemSinModel::load(o.model), load_context(o)};
  if (lm.model.config().context_mode == model::ContextMode::External && !lm.ctx.embeddings)
    throw Error("MissingEmbeddingEntry", "this model was trained on external context vectors; pass --embeddings");
  lm.model.set_context_embeddings(lm.ctx.ptr());
  return lm;
}

std::vector<eval::PairPrediction> predict_all(const model::SemSinModel& m, const std::vector<data::CorpusRecord>& records) {
  const auto prepared = model::prepare_corpus(records, m.config().layers, m.config().max_paths);
  std::vector<const model::PreparedDoc*> docs;
  for (const auto& d : prepared.docs) docs.push_back(&d);
  return eval::predict_pairs(m, docs, prepared.skips.skipped);
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto lm = load_model(o);
  const auto preds = predict_all(lm.model, load_records(o));
  const auto metrics = eval::metrics_of(preds);
  out << eval::format_table({{"SemSIn", metrics}});
  out << metrics.to_json() << "\n";
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto lm = load_model(o);
  std::string lines;
  for (const auto& p : predict_all(lm.model, load_records(o))) lines += p.to_json() + "\n";
  if (o.out.empty()) {
    out << lines;
  } else {
    write_file(prepare_out(o, o.out) / "predictions.jsonl", lines);
  }
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  const auto blocks = verify::gradcheck_blocks(o.seed);
  double worst = 0.0;
  for (const auto& b : blocks) {
    ordered_json j;
    j["block"] = b.block;
    j["max_relative_error"] = b.result.max_relative_error;
    j["worst_parameter"] = b.result.worst_parameter;
    j["coordinates"] = b.result.coordinates;
    out << j.dump() << "\n";
    worst = std::max(worst, b.result.max_relative_error);
  }
  const bool ok = worst <= verify::kGradTolerance;
  out << ordered_json{{"max_relative_error", worst}, {"tolerance", verify::kGradTolerance}, {"passed", ok}}
             .dump()
      << "\n";
  return ok ? 0 : 1;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const auto corpus = data::gen_synthetic(o.docs, o.seed);
  const fs::path dir = prepare_out(o, ".");
  data::save_corpus((dir / "corpus.jsonl").string(), corpus.records);
  std::string truth;
  for (const auto& t : corpus.truth) truth += data::truth_to_json(t) + "\n";
  write_file(dir / "truth.jsonl", truth);
  out << ordered_json{{"documents", corpus.records.size()}, {"pairs", corpus.truth.size()},
                      {"corpus", (dir / "corpus.jsonl").string()}, {"truth", (dir / "truth.jsonl").string()}}
             .dump()
      << "\n";
  return 0;
}

int cmd_grid_layers(const Options& o, std::ostream& out) {
  const auto ctx = load_context(o);
  const auto records = load_records(o);
  const fs::path dir = prepare_out(o, "semsin-grid");
  std::vector<std::pair<std::string, eval::MetricsReport>> rows;
  ordered_json grid = ordered_json::array();
  for (int l = 1; l <= o.max_layers; ++l) {
    Options lo = o;
    lo.layers = l;
    const auto config = train_config(lo, ctx);
    eval::FoldPlan plan;
    const auto result = cross_validate(lo, config, ctx, records, plan);
    rows.push_back({"L=" + std::to_string(l), result.aggregate});
    grid.push_back({{"layers", l}, {"metrics", metrics_json(result.aggregate)}});
  }
  write_file(dir / "grid_layers.json", grid.dump(2) + "\n");
  out << eval::format_table(rows);
  return 0;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message, const ordered_json& extra = {}) {
  ordered_json e;
  e["code"] = code;
  e["message"] = message;
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) e[k] = v;
  err << ordered_json{{"error", e}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event causality identification over AMR semantic structures", "semsin"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  Options o;

  auto* check = app.add_subcommand("check", "validate a corpus and round-trip every PENMAN graph");
  add_data(check, o);
  check->add_option("--layers", o.layers, "hop count used for the neighbourhood structures")->capture_default_str();

  auto* train = app.add_subcommand("train", "train one model, holding out 10% of documents as dev");
  add_data(train, o);
  add_embeddings(train, o);
  add_training(train, o);
  train->add_option("--seed", o.seed, "random seed")->required();
  train->add_option("--out", o.out, "output directory [default: semsin-train]");

  auto* xval = app.add_subcommand("xval", "k-fold cross-validation");
  add_data(xval, o);
  add_embeddings(xval, o);
  add_training(xval, o);
  add_folds(xval, o);
  xval->add_option("--seed", o.seed, "random seed")->required();
  xval->add_option("--out", o.out, "output directory [default: semsin-xval]");

  auto* evalc = app.add_subcommand("eval", "score a checkpoint on a labelled corpus");
  add_data(evalc, o);
  add_embeddings(evalc, o);
  evalc->add_option("--model", o.model, "checkpoint file")->required()->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "per-pair causal probabilities");
  add_data(predict, o);
  add_embeddings(predict, o);
  predict->add_option("--model", o.model, "checkpoint file")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", o.out, "output directory [default: print to stdout]");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every model block");
  gradcheck->add_option("--seed", o.seed, "random seed")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "write the planted-cue synthetic corpus");
  synth->add_option("--docs", o.docs, "number of documents (at least 20)")->capture_default_str();
  synth->add_option("--seed", o.seed, "random seed")->capture_default_str();
  synth->add_option("--out", o.out, "output directory [default: .]");

  auto* grid = app.add_subcommand("grid-layers", "cross-validated F1 for every RGCN depth 1..--layers");
  add_data(grid, o);
  add_embeddings(grid, o);
  add_training(grid, o, true);
  add_folds(grid, o);
  grid->add_option("--seed", o.seed, "random seed")->required();
  grid->add_option("--out", o.out, "output directory [default: semsin-grid]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*check) return cmd_check(o, out);
    if (*train) return cmd_train(o, out);
    if (*xval) return cmd_xval(o, out);
    if (*evalc) return cmd_eval(o, out);
    if (*predict) return cmd_predict(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*grid) return cmd_grid_layers(o, out);
  } catch (const data::DataError& e) {
    print_error(err, e.code(), e.what(), {{"line", e.line()}, {"field", e.field()}});
    return 1;
  } catch (const OffsetError& e) {
    print_error(err, e.code(), e.what(), {{"offset", e.offset()}});
    return 1;
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what());
    return 1;
  }
  return 0;
}

}  // namespace semsin::cli
