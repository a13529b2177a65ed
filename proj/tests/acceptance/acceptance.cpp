// acceptance.cpp - one PASS/FAIL line per primary acceptance criterion
//
// Usage: semsin_acceptance [--only <name>]... ; exit status 0 iff every
// selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "semsin/cli.hpp"
#include "semsin/evaluation.hpp"
#include "semsin/synthetic.hpp"
#include "semsin/verify.hpp"
#include "test_util.hpp"

using namespace semsin;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// --- gradient verification ---------------------------------------------------

Outcome gradients() {
  Outcome o;
  const auto start = Clock::now();
  const auto blocks = verify::gradcheck_blocks(1);
  const double total = seconds_since(start);
  for (const auto& b : blocks)
    o.expect(b.result.max_relative_error <= verify::kGradTolerance,
             b.block + ": max relative error " + fmt("%.2e", b.result.max_relative_error) + " over " +
                 std::to_string(b.result.coordinates) + " coordinates");
  o.expect(blocks.size() == 7, "seven blocks checked");
  o.expect(total < 60.0, "completed in " + fmt("%.1f s", total) + " (limit 60 s)");
  return o;
}

// --- graph oracles -------------------------------------------------------------

Outcome graph_oracles() {
  Outcome o;
  Rng rng(7);
  std::size_t dist_bad = 0, path_bad = 0, khop_bad = 0, paths_seen = 0;
  double rgcn_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto sg = graph::build_semantic_graph(oracle::random_amr(rng, 2 + rng.index(11)), {});
    const std::size_t n = sg.node_count();
    const auto fw = oracle::floyd_warshall(sg);
    const std::size_t e1 = rng.index(n);
    std::size_t e2 = rng.index(n);
    if (e2 == e1) e2 = (e1 + 1) % n;
    const auto paths = graph::shortest_paths(sg, e1, e2, 100000);
    std::vector<graph::PathSequence> forward(paths.begin(), paths.begin() + static_cast<std::ptrdiff_t>(paths.size() / 2));
    for (const auto& p : forward) dist_bad += static_cast<int>(p.length()) != fw[e1][e2];
    std::sort(forward.begin(), forward.end());
    path_bad += forward != oracle::enumerate_paths(sg, e1, e2, fw[e1][e2]);
    paths_seen += forward.size();
    for (int hops = 1; hops <= 3; ++hops) {
      std::string why;
      khop_bad += !oracle::is_khop_subgraph(sg, e1, hops, graph::khop_subgraph(sg, e1, hops), why);
    }

    // one RGCN layer against the loop oracle
    const std::size_t d = 6;
    nn::ParameterStore store;
    model::RgcnLayer layer;
    std::vector<nn::Matrix> weights;
    for (std::size_t r = 0; r <= graph::kRelationTypeCount; ++r) {
      auto& p = store.add("w" + std::to_string(r), d, d);
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-1.0, 1.0);
      weights.push_back(p.value);
      if (r < graph::kRelationTypeCount) layer.relation.push_back(&p);
      else layer.self = &p;
    }
    nn::Matrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.uniform(-1.0, 1.0);
    nn::Tape tape;
    const auto got = model::rgcn_forward(tape, model::RelationalAdjacency::from_graph(sg), tape.constant(h), {layer});
    rgcn_err = std::max(rgcn_err, (got.value() - oracle::rgcn_layer_loops(sg, h, weights)).cwiseAbs().maxCoeff());
  }
  o.expect(dist_bad == 0, "shortest path length equals Floyd-Warshall distance (200 graphs)");
  o.expect(path_bad == 0, "path multiset equals exhaustive DFS enumeration (" + std::to_string(paths_seen) + " paths)");
  o.expect(khop_bad == 0, "k-hop subgraph equals the distance filter for k = 1..3");
  o.expect(rgcn_err <= 1e-10, "RGCN layer vs dense loop oracle: max abs error " + fmt("%.2e", rgcn_err));
  return o;
}

// --- parser ----------------------------------------------------------------------

Outcome parser() {
  Outcome o;
  auto blocks = test::penman_blocks(test::read_file(test::fixture_path("penman.txt")));
  blocks.push_back(verify::horton_example().amr);
  std::size_t fixpoints = 0;
  for (const auto& b : blocks) {
    try {
      const auto g = penman::parse_penman(b);
      const auto s = penman::serialize_penman(g);
      const auto g2 = penman::parse_penman(s);
      fixpoints += penman::serialize_penman(g2) == s && penman::isomorphic(g, g2);
    } catch (const Error& e) {
      o.note(std::string("parse error: ") + e.what());
    }
  }
  o.expect(fixpoints == blocks.size(),
           std::to_string(fixpoints) + "/" + std::to_string(blocks.size()) + " fixtures are round-trip fixpoints");

  const auto r = verify::horton_example();
  const auto sg = graph::build_semantic_graph(penman::parse_penman(r.amr), r.alignments, r.tokens.size());
  const std::size_t protect = graph::resolve_event_node(sg, r.find_event("protect")->token_span);
  const std::size_t shot = graph::resolve_event_node(sg, r.find_event("shot")->token_span);
  bool found = false;
  for (const auto& p : graph::shortest_paths(sg, protect, shot)) {
    if (p.length() != 2) continue;
    const auto& r0 = sg.role_vocab[p.roles[0]];
    const auto& r1 = sg.role_vocab[p.roles[1]];
    if (sg.nodes[p.nodes[0]].concept_name == "protect-01" && r0.label == "ARG0" && !r0.inverse &&
        sg.nodes[p.nodes[1]].concept_name == "person" && r1.label == "ARG1" && r1.inverse &&
        sg.nodes[p.nodes[2]].concept_name == "shoot-02")
      found = true;
  }
  o.expect(found, "horton_example yields protect-01 -ARG0-> person -ARG1^-1-> shoot-02 (length 2)");
  return o;
}

// --- loss --------------------------------------------------------------------------

Outcome losses() {
  Outcome o;
  double worst = 0.0;
  for (double p = 0.001; p < 1.0; p += 0.0137)
    for (int label : {0, 1}) {
      const double ce = -std::log(p);
      worst = std::max(worst, std::abs(training::focal_loss_value(p, label, 0.5, 0.0) - 0.5 * ce) / ce);
    }
  o.expect(worst <= 4 * std::numeric_limits<double>::epsilon(),
           "gamma 0, beta 0.5 equals half the cross-entropy (max relative deviation " + fmt("%.1e", worst) + ")");
  const double v = training::focal_loss_value(0.5, 1, 0.5, 2.0);
  o.expect(std::abs(v - 0.08664) <= 1e-5, "p_t 0.5, gamma 2, beta 0.5 gives " + fmt("%.7f", v) + " (want 0.08664)");
  nn::Tape tape;
  nn::Matrix half(1, 2);
  half << 0.5, 0.5;
  const double op = training::focal_loss(tape.constant(half), 1, 0.5, 2.0).scalar();
  o.expect(std::abs(op - v) <= 1e-15, "tape op agrees with the direct evaluation");
  return o;
}

// --- metrics -------------------------------------------------------------------------

Outcome metrics() {
  Outcome o;
  const double a = eval::f1_from_pr(50.5, 63.0);
  const double b = eval::f1_from_pr(52.3, 65.8);
  o.expect(a == 56.1, "P 50.5, R 63.0 -> F1 " + fmt("%.1f", a) + " (want 56.1)");
  o.expect(b == 58.3, "P 52.3, R 65.8 -> F1 " + fmt("%.1f", b) + " (want 58.3)");
  return o;
}

// --- synthetic end-to-end ------------------------------------------------------------

struct SubsetScores {
  std::map<std::string, eval::MetricsReport> by_subset;
};

SubsetScores subset_scores(const eval::CrossValResult& r, const data::SyntheticCorpus& syn) {
  std::map<std::pair<std::string, std::size_t>, data::PairSubset> subset;
  for (const auto& t : syn.truth) subset[{t.doc_id, t.pair_index}] = t.subset;
  SubsetScores s;
  for (const auto& p : r.predictions) {
    auto& m = s.by_subset[data::to_string(subset.at({p.doc_id, p.pair_index}))];
    if (p.predicted && p.label) ++m.tp;
    else if (p.predicted) ++m.fp;
    else if (p.label) ++m.fn;
    else ++m.tn;
  }
  return s;
}

Outcome synthetic_end_to_end() {
  Outcome o;
  const auto syn = data::gen_synthetic(60, 7);
  const auto plan = eval::make_folds(syn.records, eval::FoldMode::Random, 5, 7);
  training::TrainConfig config;  // d 64, L 3, gamma 2, beta 0.5, batch 20
  config.seed = 7;
  config.epochs = 200;
  o.note("corpus: 60 documents, 180 pairs, 5-fold random split, d=64, L=3, gamma=2, beta=0.5, <= 200 epochs");

  std::map<model::Ablation, eval::CrossValResult> results;
  for (auto a : {model::Ablation::Full, model::Ablation::WoCent, model::Ablation::WoPath, model::Ablation::WoStru}) {
    config.ablation = a;
    const auto start = Clock::now();
    results[a] = eval::run_cross_validation(syn.records, plan, config, {1, nullptr});
    const double secs = seconds_since(start);
    const auto subsets = subset_scores(results[a], syn);
    int max_epochs = 0;
    for (const auto& f : results[a].folds) max_epochs = std::max(max_epochs, static_cast<int>(f.report.epochs.size()));
    o.note(model::to_string(a) + ": F1 " + fmt("%.1f", results[a].aggregate.f1()) + "  path-subset F1 " +
           fmt("%.1f", subsets.by_subset.at("path").f1()) + "  centric-subset F1 " +
           fmt("%.1f", subsets.by_subset.at("centric").f1()) + "  (" + fmt("%.0f s", secs) + ", at most " +
           std::to_string(max_epochs) + " epochs per fold)");
    if (a == model::Ablation::Full) {
      o.expect(results[a].aggregate.f1() >= 95.0, "full model aggregate F1 " + fmt("%.1f", results[a].aggregate.f1()) + " >= 95");
      o.expect(max_epochs <= 200, "trained within 200 epochs");
      o.expect(secs <= 600.0, "full run took " + fmt("%.0f s", secs) + " single-threaded (limit 600 s)");
    }
  }
  const auto full = subset_scores(results[model::Ablation::Full], syn);
  const auto gap = [&](model::Ablation a, const std::string& subset) {
    return full.by_subset.at(subset).f1() - subset_scores(results[a], syn).by_subset.at(subset).f1();
  };
  const auto check_gap = [&](model::Ablation a, const std::string& subset) {
    const double g = gap(a, subset);
    o.expect(g >= 5.0, "full beats " + model::to_string(a) + " on the " + subset + " subset by " + fmt("%.1f", g) +
                           " F1 points (need >= 5)");
  };
  check_gap(model::Ablation::WoCent, "centric");
  check_gap(model::Ablation::WoPath, "path");
  check_gap(model::Ablation::WoStru, "path");
  check_gap(model::Ablation::WoStru, "centric");
  for (auto a : {model::Ablation::WoCent, model::Ablation::WoPath, model::Ablation::WoStru})
    o.expect(results[model::Ablation::Full].aggregate.f1() >= results[a].aggregate.f1(),
             "full >= " + model::to_string(a) + " on the whole corpus");
  return o;
}

// --- split protocol ----------------------------------------------------------------------

Outcome split_protocol() {
  Outcome o;
  const auto syn = data::gen_synthetic(60, 7);
  std::map<std::string, std::string> topic_of;
  for (const auto& r : syn.records) topic_of[r.doc_id] = r.topic_id;
  const auto plan = eval::make_folds(syn.records, eval::FoldMode::CrossTopic, 5, 7);

  std::map<std::string, std::set<std::size_t>> folds_of_topic;
  for (const auto& [doc, fold] : plan.fold_of) folds_of_topic[topic_of[doc]].insert(fold);
  std::set<std::string> dev_topics;
  for (const auto& d : plan.dev_docs) dev_topics.insert(topic_of[d]);
  bool whole = true;
  for (const auto& [topic, folds] : folds_of_topic) whole = whole && folds.size() == 1 && !dev_topics.count(topic);
  o.expect(whole, "no topic is split across folds or between a fold and dev");
  bool four = plan.fold_topics.size() == 5;
  for (const auto& t : plan.fold_topics) four = four && t.size() == 4;
  o.expect(four, "20 fold topics at k=5 give exactly 4 topics per fold (2 more topics form the dev set)");

  training::TrainConfig config;
  config.hidden = 8;
  config.epochs = 1;
  config.seed = 7;
  for (auto mode : {eval::FoldMode::CrossTopic, eval::FoldMode::Random}) {
    const auto p = eval::make_folds(syn.records, mode, 5, 7);
    const auto r = eval::run_cross_validation(syn.records, p, config, {1, nullptr});
    std::map<std::pair<std::string, std::size_t>, int> tested;
    for (const auto& pr : r.predictions) tested[{pr.doc_id, pr.pair_index}]++;
    bool once = true;
    std::size_t expected = 0;
    for (const auto& rec : syn.records) {
      const bool in_fold = p.fold_of.count(rec.doc_id) > 0;
      for (std::size_t i = 0; i < rec.pairs.size(); ++i) {
        const auto it = tested.find({rec.doc_id, i});
        const int n = it == tested.end() ? 0 : it->second;
        once = once && n == (in_fold ? 1 : 0);
        expected += in_fold;
      }
    }
    once = once && r.predictions.size() == expected;
    o.expect(once, eval::to_string(mode) + ": every pair of the fold documents tested exactly once (" +
                       std::to_string(expected) + " pairs)");
  }
  return o;
}

// --- determinism ----------------------------------------------------------------------------

struct Run {
  int code = 0;
  std::string out;
  std::map<std::string, std::string> files;
};

Run run_cli(std::vector<std::string> args, const fs::path& dir) {
  args.insert(args.begin(), "semsin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  if (fs::exists(dir))
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "timing.json")
        r.files[fs::relative(e.path(), dir).string()] = test::read_file(e.path().string());
  return r;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "semsin_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string corpus = (root / "corpus.jsonl").string();
  data::save_corpus(corpus, data::gen_synthetic(24, 3).records);
  // train a model once for eval/predict
  run_cli({"train", "--data", corpus, "--seed", "5", "--epochs", "2", "--out", (root / "base").string()}, root / "base");
  const std::string model = (root / "base" / "model.ckpt").string();

  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"check", {"check", "--data", corpus}},
      {"synth", {"synth", "--docs", "30", "--seed", "9", "--out", "@"}},
      {"train", {"train", "--data", corpus, "--seed", "11", "--epochs", "3", "--out", "@"}},
      {"xval", {"xval", "--data", corpus, "--seed", "11", "--epochs", "2", "--k", "3", "--mode", "random", "--out", "@"}},
      {"xval --jobs 3", {"xval", "--data", corpus, "--seed", "11", "--epochs", "2", "--k", "3", "--mode", "random",
                         "--jobs", "3", "--out", "@"}},
      {"eval", {"eval", "--data", corpus, "--model", model}},
      {"predict", {"predict", "--data", corpus, "--model", model, "--out", "@"}},
      {"gradcheck", {"gradcheck", "--seed", "2"}},
      {"grid-layers", {"grid-layers", "--data", corpus, "--seed", "11", "--epochs", "1", "--layers", "2", "--k", "3",
                       "--mode", "random", "--out", "@"}},
  };
  std::map<std::string, Run> first_xval;
  for (const auto& [name, args] : commands) {
    Run runs[2];
    for (int k = 0; k < 2; ++k) {
      // same directory both times so echoed paths match; cleared in between
      const fs::path dir = root / "run";
      fs::remove_all(dir);
      auto a = args;
      for (auto& s : a)
        if (s == "@") s = dir.string();
      runs[k] = run_cli(a, dir);
    }
    const bool same = runs[0].code == runs[1].code && runs[0].out == runs[1].out && runs[0].files == runs[1].files;
    o.expect(same && runs[0].code == 0,
             name + ": exit " + std::to_string(runs[0].code) + ", " + std::to_string(runs[0].files.size()) +
                 " artifacts byte-identical across two runs");
    if (name.rfind("xval", 0) == 0) first_xval[name] = runs[0];
  }
  o.expect(first_xval["xval"].files == first_xval["xval --jobs 3"].files,
           "xval artifacts do not depend on --jobs");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient-verification", gradients},   {"graph-oracles", graph_oracles},
      {"parser", parser},                     {"loss-reductions", losses},
      {"metric-arithmetic", metrics},         {"synthetic-end-to-end", synthetic_end_to_end},
      {"split-protocol", split_protocol},     {"determinism", determinism},
  };
  std::set<std::string> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") only.insert(argv[++i]);

  bool all = true;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.expect(false, std::string("threw: ") + e.what());
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f s", seconds_since(start)) << ")\n";
    for (const auto& d : o.details) std::cout << "       " << d << "\n";
    std::cout.flush();
  }
  return all ? 0 : 1;
}
