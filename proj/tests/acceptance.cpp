// Acceptance suite: one pass/fail line per criterion.
//
// The desk-scale retrieval criteria (6, 7, 9) run the full CLI pipeline on a
// 4-class corpus of ~2300 documents. When a 20 newsgroups JSON-lines dump is
// available (RBSH_20NEWS_JSONL environment variable or --data), a fixed
// 4-class subset of it is used; otherwise a deterministic synthetic 4-topic
// corpus stands in, and the report says so. Criterion 8 (full-scale
// reproduction) is optional and needs both --full and the real dataset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rbsh/cli_commands.hpp"
#include "rbsh/gradcheck.hpp"
#include "rbsh/hamming.hpp"
#include "rbsh/io.hpp"
#include "rbsh/model.hpp"
#include "rbsh/rng.hpp"
#include "rbsh/sth.hpp"
#include "rbsh/trainer.hpp"
#include "support/synth_corpus.hpp"

namespace fs = std::filesystem;
using namespace rbsh;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip } status = kFail;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << v;
  return ss.str();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion1_knn_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitRng rng(4242);
  const int n = 500, k = 100;
  std::vector<HashCode> codes;
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  for (int i = 0; i < n; ++i) {
    HashCode c(32);
    for (int b = 0; b < 32; ++b) c.set(b, rng.next_below(2));
    codes.push_back(c);
  }
  auto index = ham::CodeIndex::build(
      codes, ids, std::vector<std::vector<std::uint32_t>>(n, {0u}));

  for (std::uint32_t q = 0; q < std::uint32_t(n); ++q) {
    const auto r = ham::knn_query(index, codes[q], q, k);
    std::vector<std::pair<int, std::uint32_t>> oracle;
    for (std::uint32_t i = 0; i < std::uint32_t(n); ++i) {
      if (i == q) continue;
      oracle.emplace_back(hamming(codes[q], codes[i]), i);
    }
    std::sort(oracle.begin(), oracle.end());
    for (int i = 0; i < k; ++i)
      if (r.ids[std::size_t(i)] != oracle[std::size_t(i)].second ||
          r.distances[std::size_t(i)] != oracle[std::size_t(i)].first)
        return fail("mismatch at query " + std::to_string(q) + " rank " + std::to_string(i));
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt >= 5.0) return fail("exact but too slow: " + fmt(dt, 2) + " s (budget 5 s)");
  return pass("500 queries identical to the double-loop oracle in " + fmt(dt, 2) + " s");
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2_gradients() {
  // straight-through path: identity Jacobian, tested directly
  {
    MatD q(3, 1);
    q << 0.2, 0.6, 0.9;
    MatD bits(3, 1);
    bits << 0, 1, 1;
    ad::Tape<double> t;
    const int p = t.param(&q);
    const int st = t.straight_through(p, bits);
    if (t.value(st) != bits) return fail("straight-through forward is not the sampled bits");
    MatD w(3, 1);
    w << 0.5, -1.5, 2.0;
    t.backward(t.sum_all(t.cmul(st, t.constant(w))));
    if (t.grad(p) != w) return fail("straight-through backward is not the identity map");
  }

  // combined loss on the toy instance: V=5, m=4, batch=2, frozen noise
  auto bow = [](std::uint32_t dim,
                std::initializer_list<std::pair<std::uint32_t, float>> e) {
    corpus::BowVector b;
    b.dim = dim;
    b.entries.assign(e.begin(), e.end());
    return b;
  };
  const auto d = bow(5, {{0, 1.5f}, {2, 0.5f}, {4, 1.0f}});
  const auto d1 = bow(5, {{1, 1.0f}, {3, 0.5f}});
  const auto d2 = bow(5, {{2, 2.0f}});
  const auto d3 = bow(5, {{0, 0.5f}, {1, 0.25f}});
  const auto d4 = bow(5, {{3, 1.0f}});
  const auto d5 = bow(5, {{4, 2.0f}, {1, 1.0f}});

  model::TripletBatch batch;
  batch.anchors = {&d, &d3};
  batch.cand1 = {&d1, &d4};
  batch.cand2 = {&d2, &d5};
  batch.s1 = {-1.0f, -2.0f};
  batch.s2 = {-2.0f, -2.0f};

  MatD eps(4, 2);
  eps << 0.3, -0.9, 1.1, 0.2, -0.4, 0.6, 0.05, -1.3;

  SplitRng rng(2024);
  auto p0 = model::ModelParams<double>::init(5, 4, 6, 4, rng.split("init"));
  std::vector<MatD> params;
  for (const auto* t : p0.tensors()) params.push_back(*t);

  auto fn = [&](const std::vector<MatD>& ps) {
    model::ModelParams<double> p;
    auto ptrs = p.tensors();
    for (std::size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = ps[i];
    model::LossOptions<double> opt;
    opt.alpha = 0.7;
    opt.beta = 0.4;
    opt.sigma2 = 0.3;
    opt.path = model::CodePath::kSoft;
    opt.frozen_eps = &eps;
    auto g = model::combined_loss_batch(batch, p, opt);
    g.tape.backward(g.loss);
    std::vector<MatD> grads;
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      grads.push_back(g.tape.has_grad(g.param_nodes[i])
                          ? g.tape.grad(g.param_nodes[i])
                          : MatD::Zero(ptrs[i]->rows(), ptrs[i]->cols()));
    return std::make_pair(g.tape.scalar(g.loss), grads);
  };

  const auto rep = ad::check_gradients<double>(fn, params, 1e-4, 1e-3);
  if (!rep.pass)
    return fail("max relative error " + fmt(rep.max_rel_error, 8) + " at parameter " +
                std::to_string(rep.worst_param) + " (tolerance 1e-3)");
  return pass("max relative error " + fmt(rep.max_rel_error, 8) + " over " +
              std::to_string(rep.checked) + " entries (tolerance 1e-3)");
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3_kl() {
  double at09 = 0;
  for (int i = 0; i <= 1000; ++i) {
    VecF q(1);
    q << float(i) / 1000.0f;
    const double kl = model::kl_divergence(q);
    if (kl < 0) return fail("negative KL at q=" + fmt(double(i) / 1000.0));
    if (i == 500 && kl != 0.0) return fail("KL at q=0.5 is " + fmt(kl, 10) + ", expected 0");
    if (i != 500 && kl <= 0.0)
      return fail("KL vanishes away from 0.5 at q=" + fmt(double(i) / 1000.0));
    if (i == 900) at09 = kl;
  }
  if (std::abs(at09 - 0.3681) > 1e-4)
    return fail("KL(0.9||0.5) = " + fmt(at09, 6) + ", expected 0.3681 +/- 1e-4");
  return pass("1001-point grid non-negative, zero only at 0.5; KL(0.9) = " + fmt(at09, 5));
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4_ranking_branches() {
  VecF z(2), z1(2), z2(2);
  z << 0, 0;
  z1 << 1, 0;
  z2 << 2, 0;  // D = 4 - 1 = 3
  if (model::ranking_loss(z, z1, z2, -1.0, -2.0) != 0.0)
    return fail("s1>s2, D=3 should give 0");
  z1 << std::sqrt(0.6f), 0;
  z2 << 1, 0;  // D = 0.4
  if (std::abs(model::ranking_loss(z, z1, z2, -1.0, -2.0) - 0.6) > 1e-6)
    return fail("s1>s2, D=0.4 should give 0.6");
  z1 << std::sqrt(0.75f), 0;
  z2 << 0.5f, 0;  // D = -0.5
  if (std::abs(model::ranking_loss(z, z1, z2, -1.0, -1.0) - 0.5) > 1e-6)
    return fail("s1=s2, D=-0.5 should give 0.5");
  z1 << 0.3f, 0.7f;
  z2 = z1;
  if (model::ranking_loss(z, z1, z2, -1.5, -1.5) != 0.0)
    return fail("z1=z2, s1=s2 should give 0");
  return pass("all four worked branch examples reproduce exactly");
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5_sth() {
  SplitRng rng(31);
  for (int n : {20, 33, 128}) {
    std::vector<corpus::BowVector> docs(static_cast<std::size_t>(n));
    for (auto& d : docs) {
      d.dim = 64;
      std::set<std::uint32_t> idx;
      while (idx.size() < 5) idx.insert(std::uint32_t(rng.next_below(64)));
      for (auto i : idx) d.entries.emplace_back(i, float(0.2 + rng.next_double()));
    }
    sth::SthOptions opts;
    opts.k_graph = 8;
    const auto codes = sth::compute_sth_codes(docs, 6, opts);
    for (int bit = 0; bit < 6; ++bit) {
      int ones = 0;
      for (const auto& c : codes) ones += c.get(bit);
      if (ones != n / 2)
        return fail("bit " + std::to_string(bit) + " has " + std::to_string(ones) +
                    " ones at n=" + std::to_string(n) + ", expected " + std::to_string(n / 2));
    }
  }

  // identical documents on the constructed 6-document corpus
  auto bow6 = [](std::initializer_list<std::pair<std::uint32_t, float>> e) {
    corpus::BowVector b;
    b.dim = 8;
    b.entries.assign(e.begin(), e.end());
    return b;
  };
  std::vector<corpus::BowVector> six = {
      bow6({{0, 1.0f}, {1, 0.8f}, {2, 0.3f}}),
      bow6({{0, 1.0f}, {1, 0.8f}, {2, 0.3f}}),
      bow6({{0, 0.9f}, {1, 0.7f}, {2, 0.5f}, {3, 0.2f}}),
      bow6({{0, 0.85f}, {1, 0.75f}, {2, 0.45f}, {3, 0.3f}}),
      bow6({{5, 1.0f}, {6, 0.6f}, {2, 0.1f}}),
      bow6({{5, 1.0f}, {6, 0.5f}, {2, 0.15f}})};
  sth::SthOptions opts;
  opts.k_graph = 5;
  const auto codes = sth::compute_sth_codes(six, 2, opts);
  if (!(codes[0] == codes[1]))
    return fail("identical documents got different codes: " + codes[0].to_string() + " vs " +
                codes[1].to_string());
  for (int bit = 0; bit < 2; ++bit) {
    int ones = 0;
    for (const auto& c : codes) ones += c.get(bit);
    if (ones != 3) return fail("6-doc corpus bit balance violated");
  }
  return pass("bit balance exact on all code sets; duplicate documents encode identically");
}

// ------------------------------------------------- desk-scale pipeline helpers

struct DeskData {
  std::string description;
  std::vector<corpus::RawDocument> docs;
};

std::optional<std::string> twenty_news_path(const std::string& cli_data) {
  if (!cli_data.empty()) return cli_data;
  if (const char* env = std::getenv("RBSH_20NEWS_JSONL")) return std::string(env);
  return std::nullopt;
}

// Fixed well-separated 4-class subset, subsampled to ~2300 documents.
DeskData desk_corpus(const std::optional<std::string>& news_path, std::uint64_t seed) {
  if (news_path) {
    const std::set<std::string> classes = {"comp.graphics", "rec.sport.hockey", "sci.space",
                                           "talk.politics.mideast"};
    auto all = corpus::read_jsonl_corpus(*news_path);
    std::map<std::string, std::vector<corpus::RawDocument>> by_class;
    for (auto& d : all)
      for (const auto& l : d.labels)
        if (classes.contains(l)) {
          by_class[l].push_back(d);
          break;
        }
    DeskData data;
    data.description = "20news 4-class subset (" + *news_path + ")";
    SplitRng rng = SplitRng(seed).split("subsample");
    for (auto& [cls, docs] : by_class) {
      std::sort(docs.begin(), docs.end(),
                [](const auto& a, const auto& b) { return a.id < b.id; });
      for (std::size_t i = docs.size() - 1; i > 0; --i)
        std::swap(docs[i], docs[std::size_t(rng.next_below(i + 1))]);
      const std::size_t take = std::min<std::size_t>(575, docs.size());
      for (std::size_t i = 0; i < take; ++i) data.docs.push_back(docs[i]);
    }
    // re-id sequentially to keep ids unique
    for (std::uint32_t i = 0; i < data.docs.size(); ++i) data.docs[i].id = i;
    return data;
  }

  testsupport::SynthSpec spec;
  spec.n_docs = 2300;
  spec.n_topics = 4;
  spec.topic_vocab = 800;
  spec.shared_vocab = 2600;
  spec.min_len = 40;
  spec.max_len = 120;
  spec.topic_frac = 0.4;
  spec.bleed = 0.12;
  spec.seed = seed;
  DeskData data;
  data.description = "synthetic 4-topic corpus (20news not present in this environment)";
  data.docs = testsupport::make_synth_corpus(spec);
  return data;
}

// Schedule constants rescaled for ~5k-iteration desk runs (the paper-default
// constants presume ~1M iterations). beta starts at 1.0: an Adam-speed
// encoder runaway collapses every code to all-ones within ~200 iterations
// unless the KL pull is live from the first step, and float32 sigmoid
// saturation makes that collapse absorbing.
train::TrainConfig desk_config(int bits, std::uint64_t seed) {
  train::TrainConfig cfg;
  cfg.bits = bits;
  cfg.hidden = 1000;
  cfg.embed = 300;
  cfg.lr = 0.002;
  cfg.batch_size = 32;
  cfg.max_epochs = 2;
  cfg.patience = 3;
  cfg.sigma2_decrement = 1e-3;
  cfg.beta_init = 1.0;
  cfg.beta_increment = 1e-4;
  cfg.alpha_init = 1.5;
  cfg.alpha_increment = 1e-3;
  cfg.seed = seed;
  return cfg;
}

struct DeskRun {
  double rbsh_prec = 0;     // test queries vs train index
  double sth_prec = 0;      // validation STH codes vs train STH codes
  std::string out_dir;
};

DeskRun run_desk_pipeline(const fs::path& work, const DeskData& data, int bits,
                          std::uint64_t seed, bool ablate) {
  const fs::path base =
      work / ("desk_b" + std::to_string(bits) + "_s" + std::to_string(seed));
  const fs::path dir = ablate ? fs::path(base.string() + "_norank") : base;
  fs::create_directories(dir);

  // the ablated run reuses the non-ablated preprocessing and weak labels so
  // both models train on identical triplets
  const bool reuse = ablate && fs::exists(base / cli::names::kTrainTriplets);
  if (reuse) {
    for (const char* name :
         {cli::names::kVocab, cli::names::kVectors, cli::names::kSplit,
          cli::names::kSthCodes, cli::names::kTrainTriplets, cli::names::kValTriplets})
      fs::copy_file(base / name, dir / name, fs::copy_options::overwrite_existing);
  } else {
    const std::string corpus_path = (dir / "corpus.jsonl").string();
    if (!fs::exists(corpus_path)) testsupport::write_jsonl(corpus_path, data.docs);
    cli::cmd_preprocess({corpus_path, dir.string(), seed, 10000, true});

    cli::WeakLabelArgs weak;
    weak.out_dir = dir.string();
    weak.bits = bits;
    weak.top = 100;
    weak.stride = 10;
    weak.seed = seed;
    weak.force = true;
    cli::cmd_weaklabel(weak);
  }

  cli::TrainArgs train_args;
  train_args.out_dir = dir.string();
  train_args.config = desk_config(bits, seed);
  train_args.ablate_ranking = ablate;
  train_args.force = true;
  cli::cmd_train(train_args);

  cli::EvalArgs eval_args;
  eval_args.out_dir = dir.string();
  eval_args.bits = bits;
  eval_args.k = 100;
  eval_args.force = true;
  DeskRun run;
  run.out_dir = dir.string();
  run.rbsh_prec = cli::cmd_eval(eval_args);

  // Prec@100 of the weak labeller itself: validation codes query train codes
  const auto split = io::read_split_manifest((dir / cli::names::kSplit).string());
  const auto sth_codes = io::read_codes_file((dir / cli::names::kSthCodes).string());
  const std::size_t n_train = split.train.size();
  std::vector<std::vector<std::uint32_t>> train_labels, val_labels;
  for (auto id : split.train) train_labels.push_back(split.doc_labels[split.row_of(id)]);
  for (auto id : split.validation) val_labels.push_back(split.doc_labels[split.row_of(id)]);
  auto index = ham::CodeIndex::build(
      std::vector<HashCode>(sth_codes.begin(), sth_codes.begin() + long(n_train)),
      split.train, train_labels);
  run.sth_prec = ham::evaluate(index,
                               std::vector<HashCode>(sth_codes.begin() + long(n_train),
                                                     sth_codes.end()),
                               split.validation, val_labels, 100)
                     .mean;
  return run;
}

// ------------------------------------------------------------- criteria 6 + 7

Outcome criterion6_learning(const fs::path& work, const std::optional<std::string>& news,
                            std::map<std::uint64_t, DeskRun>& cache16) {
  std::vector<double> rbsh, sth_scores;
  std::string src;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto data = desk_corpus(news, seed);
    src = data.description;
    const auto run = run_desk_pipeline(work, data, 16, seed, false);
    cache16.emplace(seed, run);
    rbsh.push_back(run.rbsh_prec);
    sth_scores.push_back(run.sth_prec);
    std::cerr << "  [c6] seed " << seed << ": RBSH " << fmt(run.rbsh_prec) << ", STH "
              << fmt(run.sth_prec) << "\n";
  }
  const double med_rbsh = median3(rbsh), med_sth = median3(sth_scores);
  const std::string detail = "median RBSH@16 " + fmt(med_rbsh) + " vs STH " + fmt(med_sth) +
                             " on " + src;
  if (med_rbsh >= med_sth) return pass(detail);
  return fail(detail);
}

Outcome criterion7_ablation(const fs::path& work, const std::optional<std::string>& news) {
  std::vector<double> diffs;
  std::string src;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto data = desk_corpus(news, seed);
    src = data.description;
    const auto full = run_desk_pipeline(work, data, 8, seed, false);
    const auto ablated = run_desk_pipeline(work, data, 8, seed, true);
    diffs.push_back(full.rbsh_prec - ablated.rbsh_prec);
    std::cerr << "  [c7] seed " << seed << ": full " << fmt(full.rbsh_prec) << ", w/o ranking "
              << fmt(ablated.rbsh_prec) << "\n";
  }
  const double med = median3(diffs);
  const std::string detail =
      "median Prec@100 gain of the ranking component at 8 bits: " + fmt(med) + " on " + src;
  if (med >= 0.01) return pass(detail);
  return fail(detail + " (needs >= 0.01)");
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8_fullscale(const fs::path& work, const std::optional<std::string>& news,
                             bool full) {
  if (!full)
    return skip("optional full-scale run; enable with --full (multi-hour CPU training)");
  if (!news)
    return skip("optional; requires the 20news JSONL via --data or RBSH_20NEWS_JSONL");

  const fs::path dir = work / "fullscale";
  fs::create_directories(dir);
  cli::cmd_preprocess({*news, dir.string(), 1, 0, true});
  cli::WeakLabelArgs weak;
  weak.out_dir = dir.string();
  weak.bits = 16;
  weak.seed = 1;
  weak.force = true;
  cli::cmd_weaklabel(weak);
  cli::TrainArgs train_args;
  train_args.out_dir = dir.string();
  train_args.config = train::TrainConfig{};  // paper defaults
  train_args.config.bits = 16;
  train_args.config.lr = 0.0005;
  train_args.config.seed = 1;
  train_args.config.max_epochs = 30;
  train_args.force = true;
  cli::cmd_train(train_args);
  cli::EvalArgs eval_args;
  eval_args.out_dir = dir.string();
  eval_args.bits = 16;
  eval_args.force = true;
  const double prec = cli::cmd_eval(eval_args);
  const std::string detail = "20news 16-bit Prec@100 = " + fmt(prec) + " (target 0.6087 +/- 0.05)";
  if (std::abs(prec - 0.6087) <= 0.05) return pass(detail);
  return fail(detail);
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9_determinism(const fs::path& work, const std::optional<std::string>& news) {
  const auto data = desk_corpus(news, 7);
  auto run_once = [&](const char* tag) {
    const fs::path dir = work / (std::string("det_") + tag);
    fs::create_directories(dir);
    const std::string corpus_path = (dir / "corpus.jsonl").string();
    testsupport::write_jsonl(corpus_path, data.docs);
    cli::cmd_preprocess({corpus_path, dir.string(), 7, 10000, true});
    cli::WeakLabelArgs weak;
    weak.out_dir = dir.string();
    weak.bits = 16;
    weak.top = 100;
    weak.stride = 10;
    weak.seed = 7;
    weak.force = true;
    cli::cmd_weaklabel(weak);
    cli::TrainArgs train_args;
    train_args.out_dir = dir.string();
    train_args.config = desk_config(16, 7);
    train_args.config.max_iterations = 600;  // full pipeline, shortened schedule
    train_args.force = true;
    cli::cmd_train(train_args);
    cli::EvalArgs eval_args;
    eval_args.out_dir = dir.string();
    eval_args.bits = 16;
    eval_args.force = true;
    const double prec = cli::cmd_eval(eval_args);
    return std::make_pair(
        io::read_file_bytes((dir / cli::names::kCkptBest).string()), prec);
  };
  const auto [bytes_a, prec_a] = run_once("a");
  const auto [bytes_b, prec_b] = run_once("b");
  if (bytes_a != bytes_b) return fail("checkpoints differ between identical runs");
  if (prec_a != prec_b)
    return fail("Prec@100 differs: " + fmt(prec_a, 6) + " vs " + fmt(prec_b, 6));
  return pass("bit-identical checkpoints (" + std::to_string(bytes_a.size()) +
              " bytes) and identical Prec@100 = " + fmt(prec_a));
}

// --------------------------------------------------------------- criterion 10

Outcome criterion10_schedules() {
  train::TrainConfig cfg;  // paper defaults
  cfg.alpha_init = 1.5;
  cfg.alpha_increment = 1.0 / 300000;
  if (train::schedule_at(1000000, cfg).sigma2 != 0.0)
    return fail("sigma2(1e6) != 0");
  if (train::schedule_at(100000, cfg).beta != 1e-5 * 100000)
    return fail("beta(1e5) != 1.0");
  for (std::int64_t t : {0LL, 123LL, 29999LL, 500000LL, 2000000LL}) {
    const auto s = train::schedule_at(t, cfg);
    if (s.sigma2 != std::max(0.0, 1.0 - 1e-6 * double(t)))
      return fail("sigma2 mismatch at t=" + std::to_string(t));
    if (s.beta != 1e-5 * double(t)) return fail("beta mismatch at t=" + std::to_string(t));
    if (s.alpha != 1.5 + double(t) / 300000)
      return fail("alpha mismatch at t=" + std::to_string(t));
  }
  return pass("sigma2(1e6)=0, beta(1e5)=1, alpha affine; 5 spot values each, exact");
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  std::string data_path;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full") {
      full = true;
    } else if (arg == "--data" && i + 1 < argc) {
      data_path = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::istringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: rbsh_acceptance [--full] [--data 20news.jsonl] [--only 1,2,...]\n";
      return 1;
    }
  }

  const auto news = twenty_news_path(data_path);
  const fs::path work = fs::current_path() / "rbsh_acceptance_work";
  fs::create_directories(work);

  std::map<std::uint64_t, DeskRun> cache16;
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> criteria = {
      {1, "retrieval oracle equivalence", [&] { return criterion1_knn_oracle(); }},
      {2, "combined-loss gradient correctness", [&] { return criterion2_gradients(); }},
      {3, "closed-form KL", [&] { return criterion3_kl(); }},
      {4, "ranking-loss branch table", [&] { return criterion4_ranking_branches(); }},
      {5, "STH labeller balance and duplicates", [&] { return criterion5_sth(); }},
      {6, "desk-scale learning vs weak labels",
       [&] { return criterion6_learning(work, news, cache16); }},
      {7, "desk-scale ranking ablation", [&] { return criterion7_ablation(work, news); }},
      {8, "full-scale 20news reproduction (optional)",
       [&] { return criterion8_fullscale(work, news, full); }},
      {9, "end-to-end determinism", [&] { return criterion9_determinism(work, news); }},
      {10, "annealing schedules", [&] { return criterion10_schedules(); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* status = out.status == Outcome::kPass   ? "PASS"
                         : out.status == Outcome::kSkip ? "SKIP"
                                                        : "FAIL";
    std::cout << status << "  criterion " << c.id << " (" << c.name << "): " << out.detail
              << "  [" << fmt(dt, 1) << " s]" << std::endl;
    if (out.status == Outcome::kFail) ++failures;
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all executed criteria passed" << std::endl;
  return 0;
}
