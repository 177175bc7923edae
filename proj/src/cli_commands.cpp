#include "rbsh/cli_commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "json.hpp"
#include "rbsh/hamming.hpp"
#include "rbsh/io.hpp"
#include "rbsh/stats.hpp"

namespace fs = std::filesystem;

namespace rbsh::cli {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_absent_or_force(const std::vector<std::string>& paths, bool force) {
  if (force) return;
  for (const auto& p : paths)
    if (fs::exists(p))
      throw UsageError("refusing to overwrite " + p + " (use --force)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  check_data(!ec, "cannot create directory " + dir + ": " + ec.message());
}

// Appends hashes of the produced artifacts to run_manifest.json. Reruns with
// identical inputs overwrite entries with identical hashes.
void update_manifest(const std::string& out_dir, const std::string& command,
                     const nlohmann::json& config,
                     const std::vector<std::string>& input_paths,
                     const std::vector<std::string>& output_paths) {
  const std::string manifest_path = join(out_dir, names::kManifest);
  nlohmann::json m;
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      in >> m;
    } catch (const nlohmann::json::exception&) {
      m = nlohmann::json::object();  // corrupted manifest: start fresh
    }
  }
  if (!m.contains("artifacts")) m["artifacts"] = nlohmann::json::object();

  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto ts = std::chrono::duration_cast<std::chrono::seconds>(now).count();

  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& p : input_paths)
    if (fs::exists(p)) inputs[p] = io::file_git_sha1(p);

  for (const auto& p : output_paths) {
    if (!fs::exists(p)) continue;
    const std::string rel = fs::relative(p, out_dir).string();
    m["artifacts"][rel] = {{"sha1", io::file_git_sha1(p)},
                           {"bytes", fs::file_size(p)},
                           {"command", command},
                           {"timestamp", ts}};
  }
  nlohmann::json record = {{"command", command},
                           {"timestamp", ts},
                           {"config", config},
                           {"inputs", inputs}};
  m["history"].push_back(record);

  std::ofstream out(manifest_path, std::ios::binary);
  check_data(out.good(), "cannot write " + manifest_path);
  out << m.dump(2) << '\n';
}

struct Artifacts {
  io::BowFile bow;
  io::SplitManifest split;
  corpus::Vocabulary vocab;
};

Artifacts load_preprocessed(const std::string& out_dir) {
  const std::string vec_path = join(out_dir, names::kVectors);
  const std::string split_path = join(out_dir, names::kSplit);
  const std::string vocab_path = join(out_dir, names::kVocab);
  for (const auto& p : {vec_path, split_path, vocab_path})
    check_data(fs::exists(p), "missing artifact " + p + " (run `rbsh preprocess` first)");
  Artifacts a;
  a.bow = io::read_bow_file(vec_path);
  a.split = io::read_split_manifest(split_path);
  a.vocab = io::read_vocab_tsv(vocab_path);
  check_data(a.bow.docs.size() == a.split.doc_ids.size(),
             "vectors and split manifest disagree on document count");
  return a;
}

std::vector<corpus::BowVector> gather_rows(const Artifacts& a,
                                           const std::vector<std::uint32_t>& ids) {
  std::vector<corpus::BowVector> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(a.bow.docs[a.split.row_of(id)]);
  return out;
}

std::vector<std::vector<std::uint32_t>> gather_labels(const Artifacts& a,
                                                      const std::vector<std::uint32_t>& ids) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(a.split.doc_labels[a.split.row_of(id)]);
  return out;
}

void warn_if_off_grid(const train::TrainConfig& cfg) {
  const std::vector<double> lr_set = {0.001, 0.0005};
  if (std::find(lr_set.begin(), lr_set.end(), cfg.lr) == lr_set.end())
    std::cerr << "[train] warning: lr " << cfg.lr
              << " is outside the tuned set {0.001, 0.0005}; accepted\n";
  const std::vector<double> alpha_set = {0, 0.5, 1, 1.5};
  if (std::find(alpha_set.begin(), alpha_set.end(), cfg.alpha_init) == alpha_set.end())
    std::cerr << "[train] warning: alpha_init " << cfg.alpha_init
              << " is outside the tuned set {0, 0.5, 1, 1.5}; accepted\n";
}

struct PipelineData {
  train::DocStore docs;  // train + validation vectors
  std::vector<sth::Triplet> train_triplets, val_triplets;
};

PipelineData load_training_data(const Artifacts& a, const std::string& out_dir) {
  const std::string tri_train = join(out_dir, names::kTrainTriplets);
  const std::string tri_val = join(out_dir, names::kValTriplets);
  for (const auto& p : {tri_train, tri_val})
    check_data(fs::exists(p), "missing artifact " + p + " (run `rbsh weaklabel` first)");

  std::vector<std::uint32_t> ids = a.split.train;
  ids.insert(ids.end(), a.split.validation.begin(), a.split.validation.end());
  std::vector<corpus::BowVector> vecs;
  vecs.reserve(ids.size());
  for (auto id : ids) vecs.push_back(a.bow.docs[a.split.row_of(id)]);

  PipelineData d{train::DocStore::make(std::move(ids), std::move(vecs)),
                 io::read_triplets_file(tri_train), io::read_triplets_file(tri_val)};
  return d;
}

void run_training_loop(train::Trainer& trainer, const train::TrainConfig& cfg,
                       const std::string& out_dir, bool quiet = false) {
  const std::string metrics_path = join(out_dir, names::kMetrics);
  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::app);
  check_data(metrics.good(), "cannot write " + metrics_path);

  trainer.diagnostic_sink = [&](const io::NamedTensors& ckpt) {
    io::write_checkpoint(join(out_dir, names::kCkptDiag), ckpt);
    std::cerr << "[train] numerical failure; diagnostic checkpoint written to "
              << join(out_dir, names::kCkptDiag) << "\n";
  };

  while (trainer.state().epoch < cfg.max_epochs &&
         trainer.state().iteration < cfg.max_iterations) {
    const auto em = trainer.train_epoch();
    const double val = trainer.validate();
    nlohmann::json line = {{"epoch", trainer.state().epoch},
                           {"iteration", em.iteration_end},
                           {"loss", em.mean_loss.combined},
                           {"reconstruction", em.mean_loss.reconstruction},
                           {"kl", em.mean_loss.kl},
                           {"ranking", em.mean_loss.ranking},
                           {"sigma2", em.sched_end.sigma2},
                           {"beta", em.sched_end.beta},
                           {"alpha", em.sched_end.alpha},
                           {"val_loss", val},
                           {"best_val", trainer.state().best_val}};
    metrics << line.dump() << '\n';
    metrics.flush();
    if (!quiet)
      std::cout << "epoch " << trainer.state().epoch << " iter " << em.iteration_end
                << " loss " << em.mean_loss.combined << " val " << val << "\n";
    io::write_checkpoint(join(out_dir, names::kCkptLast), trainer.to_checkpoint());
    if (trainer.state().rounds_since_improve == 0)
      io::write_checkpoint(join(out_dir, names::kCkptBest), trainer.to_checkpoint());
    if (trainer.should_stop()) break;
  }
  trainer.restore_best();
  io::write_checkpoint(join(out_dir, names::kCkptBest), trainer.to_checkpoint());
}

model::ModelParams<float> params_from_checkpoint(const io::NamedTensors& ckpt, int bits) {
  check_data(int(ckpt.bits) == bits,
             "code length mismatch: checkpoint has " + std::to_string(ckpt.bits) +
                 " bits, flags say " + std::to_string(bits));
  model::ModelParams<float> p;
  auto need = [&](const char* name) {
    const MatF* t = ckpt.find(name);
    check_data(t != nullptr, std::string("checkpoint: missing tensor ") + name);
    return *t;
  };
  p.W_a = need("W_a");
  p.b_a = need("b_a");
  p.W_b = need("W_b");
  p.b_b = need("b_b");
  p.W_m = need("W_m");
  p.b_m = need("b_m");
  p.E_imp = need("E_imp");
  p.E_word = need("E_word");
  p.W_g = need("W_g");
  p.b_dec = need("b_dec");
  return p;
}

double validation_prec_at_100(const Artifacts& a, const model::ModelParams<float>& params) {
  auto train_vecs = gather_rows(a, a.split.train);
  auto val_vecs = gather_rows(a, a.split.validation);
  auto index = ham::CodeIndex::build(train::encode_corpus(params, train_vecs), a.split.train,
                                     gather_labels(a, a.split.train));
  const int k = std::min<int>(100, int(index.size()) - 1);
  return ham::evaluate(index, train::encode_corpus(params, val_vecs), a.split.validation,
                       gather_labels(a, a.split.validation), k)
      .mean;
}

}  // namespace

void cmd_preprocess(const PreprocessArgs& args) {
  ensure_dir(args.out_dir);
  const std::string vocab_path = join(args.out_dir, names::kVocab);
  const std::string vec_path = join(args.out_dir, names::kVectors);
  const std::string split_path = join(args.out_dir, names::kSplit);
  require_absent_or_force({vocab_path, vec_path, split_path}, args.force);

  const auto raw = corpus::read_jsonl_corpus(args.corpus_path);
  check_data(!raw.empty(), args.corpus_path + ": empty corpus");

  const auto& stop = corpus::english_stopwords();
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::size_t> kept_raw;
  std::size_t dropped_empty = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto t = corpus::tokenize_and_filter(raw[i], stop);
    if (t.empty()) {
      ++dropped_empty;
      continue;
    }
    tokens.push_back(std::move(t));
    kept_raw.push_back(i);
  }
  check_data(tokens.size() >= 10, "too few documents after filtering ("
                                      + std::to_string(tokens.size()) + ", need >= 10)");

  const auto vocab = corpus::build_vocabulary(tokens, args.max_vocab);

  // Documents reduced to empty by vocabulary filtering are dropped. The df
  // counts are unaffected (a dropped document contains no vocabulary term),
  // so idf can use the final document count consistently.
  std::vector<std::size_t> kept_tok;
  std::vector<std::size_t> kept_final;
  std::size_t dropped_oov = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool has_vocab_term = std::any_of(
        tokens[i].begin(), tokens[i].end(),
        [&](const std::string& t) { return vocab.term_to_index.contains(t); });
    if (!has_vocab_term) {
      ++dropped_oov;
      continue;
    }
    kept_tok.push_back(i);
    kept_final.push_back(kept_raw[i]);
  }
  const auto n_final = std::uint32_t(kept_final.size());
  check_data(n_final >= 10, "too few documents after vocabulary filtering");

  std::vector<corpus::BowVector> vecs;
  vecs.reserve(n_final);
  for (auto i : kept_tok) vecs.push_back(corpus::vectorize_tfidf(tokens[i], vocab, n_final));

  // label dictionary, sorted for determinism
  std::set<std::string> label_set;
  for (auto i : kept_final)
    for (const auto& l : raw[i].labels) label_set.insert(l);
  std::vector<std::string> label_names(label_set.begin(), label_set.end());
  std::map<std::string, std::uint32_t> label_id;
  for (std::uint32_t i = 0; i < label_names.size(); ++i) label_id[label_names[i]] = i;

  io::SplitManifest manifest;
  manifest.seed = args.seed;
  manifest.dropped = dropped_empty + dropped_oov;
  manifest.label_names = label_names;
  for (auto i : kept_final) {
    manifest.doc_ids.push_back(raw[i].id);
    std::vector<std::uint32_t> ls;
    for (const auto& l : raw[i].labels) ls.push_back(label_id[l]);
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    manifest.doc_labels.push_back(std::move(ls));
  }

  const auto split = corpus::split_dataset(n_final, args.seed);
  for (auto pos : split.train) manifest.train.push_back(manifest.doc_ids[pos]);
  for (auto pos : split.validation) manifest.validation.push_back(manifest.doc_ids[pos]);
  for (auto pos : split.test) manifest.test.push_back(manifest.doc_ids[pos]);

  io::write_vocab_tsv(vocab_path, vocab);
  io::write_bow_file(vec_path, vocab.size(), vecs);
  io::write_split_manifest(split_path, manifest);

  std::cout << "documents: " << raw.size() << " read, " << dropped_empty
            << " empty after token filtering, " << dropped_oov
            << " without vocabulary terms, " << n_final << " kept\n"
            << "vocabulary: " << vocab.size() << " terms\n"
            << "split: " << manifest.train.size() << "/" << manifest.validation.size() << "/"
            << manifest.test.size() << " (train/validation/test)\n";

  update_manifest(args.out_dir, "preprocess",
                  {{"seed", args.seed}, {"max_vocab", args.max_vocab}}, {args.corpus_path},
                  {vocab_path, vec_path, split_path});
}

void cmd_weaklabel(const WeakLabelArgs& args) {
  const std::string codes_path = join(args.out_dir, names::kSthCodes);
  const std::string tri_train_path = join(args.out_dir, names::kTrainTriplets);
  const std::string tri_val_path = join(args.out_dir, names::kValTriplets);
  require_absent_or_force({codes_path, tri_train_path, tri_val_path}, args.force);

  const Artifacts a = load_preprocessed(args.out_dir);
  const int m_sth = args.m_sth > 0 ? args.m_sth : args.bits;

  // STH runs jointly over train + validation (both are needed as anchors);
  // candidates are always training documents.
  std::vector<std::uint32_t> ids = a.split.train;
  ids.insert(ids.end(), a.split.validation.begin(), a.split.validation.end());
  std::vector<corpus::BowVector> vecs = gather_rows(a, ids);

  sth::SthOptions opts;
  opts.k_graph = args.k_graph;
  opts.seed = args.seed;
  auto codes = sth::compute_sth_codes(vecs, m_sth, opts);
  io::write_codes_file(codes_path, codes);

  const std::size_t n_train = a.split.train.size();
  auto train_codes = sth::CodeSet::make(
      a.split.train, std::vector<HashCode>(codes.begin(), codes.begin() + n_train));

  auto make_triplets = [&](const std::vector<std::uint32_t>& anchors,
                           std::size_t offset) {
    std::vector<sth::Triplet> out;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const HashCode& code = codes[offset + i];
      const auto neigh =
          sth::select_neighbours(code, anchors[i], train_codes, args.top, args.stride);
      if (neigh.size() < 2) {
        ++skipped;
        continue;
      }
      auto tri = sth::generate_triplets(code, anchors[i], neigh, train_codes);
      out.insert(out.end(), tri.begin(), tri.end());
    }
    if (skipped > 0)
      std::cerr << "[weaklabel] warning: " << skipped
                << " anchors skipped (fewer than 2 selectable neighbours)\n";
    return out;
  };

  const auto train_triplets = make_triplets(a.split.train, 0);
  const auto val_triplets = make_triplets(a.split.validation, n_train);
  io::write_triplets_file(tri_train_path, train_triplets);
  io::write_triplets_file(tri_val_path, val_triplets);

  std::cout << "sth codes: " << codes.size() << " x " << m_sth << " bits\n"
            << "triplets: " << train_triplets.size() << " train, " << val_triplets.size()
            << " validation\n";

  update_manifest(args.out_dir, "weaklabel",
                  {{"m_sth", m_sth},
                   {"k_graph", args.k_graph},
                   {"top", args.top},
                   {"stride", args.stride},
                   {"seed", args.seed}},
                  {join(args.out_dir, names::kVectors), join(args.out_dir, names::kSplit)},
                  {codes_path, tri_train_path, tri_val_path});
}

void cmd_train(const TrainArgs& args) {
  train::TrainConfig cfg = args.config;
  if (args.ablate_ranking) {
    cfg.alpha_init = 0;
    cfg.alpha_increment = 0;
  }
  warn_if_off_grid(cfg);

  const std::string best_path = join(args.out_dir, names::kCkptBest);
  if (!args.resume) {
    require_absent_or_force({best_path}, args.force);
    std::error_code ec;
    fs::remove(join(args.out_dir, names::kMetrics), ec);  // metrics append per epoch
  }

  const Artifacts a = load_preprocessed(args.out_dir);
  PipelineData data = load_training_data(a, args.out_dir);

  if (args.grid) {
    // grid over the tuned sets, selected by validation Prec@100
    const std::vector<double> lr_set = {0.001, 0.0005};
    const std::vector<double> alpha_set = {0, 0.5, 1, 1.5};
    const std::vector<double> inc_set = {1.0 / 30000, 1.0 / 300000, 1.0 / 1500000,
                                         1.0 / 3000000};
    double best_prec = -1;
    train::TrainConfig best_cfg = cfg;
    io::NamedTensors best_ckpt;
    for (double lr : lr_set)
      for (double a0 : alpha_set)
        for (double inc : inc_set) {
          train::TrainConfig c = cfg;
          c.lr = lr;
          c.alpha_init = a0;
          c.alpha_increment = inc;
          train::Trainer t(&data.docs, data.train_triplets, data.val_triplets, c);
          run_training_loop(t, c, args.out_dir, /*quiet=*/true);
          const double prec = validation_prec_at_100(a, t.params());
          std::cout << "grid lr=" << lr << " alpha0=" << a0 << " inc=" << inc
                    << " val Prec@100=" << prec << "\n";
          if (prec > best_prec) {
            best_prec = prec;
            best_cfg = c;
            best_ckpt = t.to_checkpoint();
          }
        }
    io::write_checkpoint(best_path, best_ckpt);
    std::ofstream cfg_out(join(args.out_dir, names::kConfigUsed), std::ios::binary);
    cfg_out << best_cfg.to_json() << '\n';
    std::cout << "grid best val Prec@100 " << best_prec << "\n";
  } else {
    train::Trainer trainer(&data.docs, data.train_triplets, data.val_triplets, cfg);
    if (args.resume) {
      const std::string last_path = join(args.out_dir, names::kCkptLast);
      check_data(fs::exists(last_path), "resume: missing " + last_path);
      trainer.load_checkpoint(io::read_checkpoint(last_path));
    }
    std::ofstream cfg_out(join(args.out_dir, names::kConfigUsed), std::ios::binary);
    check_data(cfg_out.good(), "cannot write config snapshot");
    cfg_out << cfg.to_json() << '\n';
    cfg_out.close();
    run_training_loop(trainer, cfg, args.out_dir);
  }

  update_manifest(args.out_dir, "train", nlohmann::json::parse(cfg.to_json()),
                  {join(args.out_dir, names::kVectors), join(args.out_dir, names::kTrainTriplets),
                   join(args.out_dir, names::kValTriplets)},
                  {best_path, join(args.out_dir, names::kCkptLast),
                   join(args.out_dir, names::kMetrics), join(args.out_dir, names::kConfigUsed)});
}

double cmd_eval(const EvalArgs& args) {
  const std::string ckpt_path =
      args.checkpoint.empty() ? join(args.out_dir, names::kCkptBest) : args.checkpoint;
  const std::string report_path =
      args.report_path.empty() ? join(args.out_dir, names::kEval) : args.report_path;
  require_absent_or_force({report_path}, args.force);

  const Artifacts a = load_preprocessed(args.out_dir);
  check_data(fs::exists(ckpt_path), "missing checkpoint " + ckpt_path);
  const auto params = params_from_checkpoint(io::read_checkpoint(ckpt_path), args.bits);
  check_data(Eigen::Index(a.bow.dim) == params.vocab(),
             "checkpoint vocabulary does not match the preprocessed vectors");

  auto train_vecs = gather_rows(a, a.split.train);
  auto test_vecs = gather_rows(a, a.split.test);
  auto index = ham::CodeIndex::build(train::encode_corpus(params, train_vecs), a.split.train,
                                     gather_labels(a, a.split.train));
  check_data(std::size_t(args.k) < index.size(),
             "k=" + std::to_string(args.k) + " exceeds the index size " +
                 std::to_string(index.size()));
  const auto eval = ham::evaluate(index, train::encode_corpus(params, test_vecs),
                                  a.split.test, gather_labels(a, a.split.test), args.k);

  nlohmann::json report;
  report["k"] = args.k;
  report["bits"] = args.bits;
  report["mean_prec"] = eval.mean;
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < eval.per_query.size(); ++i)
    per.push_back({{"id", eval.query_ids[i]}, {"prec", eval.per_query[i]}});
  report["per_query"] = std::move(per);

  if (args.compare_path) {
    std::ifstream in(*args.compare_path);
    check_data(in.good(), "cannot open " + *args.compare_path);
    nlohmann::json other;
    try {
      in >> other;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(*args.compare_path + ": malformed eval report: " + e.what());
    }
    std::map<std::uint32_t, double> other_scores;
    for (const auto& row : other.at("per_query"))
      other_scores[row.at("id").get<std::uint32_t>()] = row.at("prec").get<double>();
    std::vector<double> mine, theirs;
    for (std::size_t i = 0; i < eval.per_query.size(); ++i) {
      auto it = other_scores.find(eval.query_ids[i]);
      check_data(it != other_scores.end(),
                 "compare: query id " + std::to_string(eval.query_ids[i]) +
                     " missing from " + *args.compare_path);
      mine.push_back(eval.per_query[i]);
      theirs.push_back(it->second);
    }
    const auto tt = stats::paired_ttest(mine, theirs);
    report["compare"] = {{"against", *args.compare_path},
                         {"t", tt.t},
                         {"p", tt.p},
                         {"n", tt.n},
                         {"mean_diff", tt.mean_diff}};
    std::cout << "paired t-test vs " << *args.compare_path << ": t=" << tt.t << " p=" << tt.p
              << " (n=" << tt.n << ")\n";
  }

  std::ofstream out(report_path, std::ios::binary);
  check_data(out.good(), "cannot write " + report_path);
  out << report.dump(2) << '\n';
  out.close();

  std::cout << "Prec@" << args.k << ": " << eval.mean << " over " << eval.per_query.size()
            << " test queries\n";

  update_manifest(args.out_dir, "eval", {{"k", args.k}, {"bits", args.bits}},
                  {ckpt_path}, {report_path});
  return eval.mean;
}

void cmd_analyze(const AnalyzeArgs& args) {
  const std::string ckpt_path =
      args.checkpoint.empty() ? join(args.out_dir, names::kCkptBest) : args.checkpoint;
  const std::string analysis_dir = join(args.out_dir, names::kAnalysisDir);
  const std::string words_path = join(analysis_dir, "words.csv");
  const std::string codes_bin_path = join(analysis_dir, "codes_test.rbshcode");
  const std::string codes_csv_path = join(analysis_dir, "codes_test.csv");
  require_absent_or_force({words_path, codes_bin_path, codes_csv_path}, args.force);
  ensure_dir(analysis_dir);

  const Artifacts a = load_preprocessed(args.out_dir);
  check_data(fs::exists(ckpt_path), "missing checkpoint " + ckpt_path);
  const auto params = params_from_checkpoint(io::read_checkpoint(ckpt_path), args.bits);
  check_data(Eigen::Index(a.bow.dim) == params.vocab(),
             "checkpoint vocabulary does not match the preprocessed vectors");

  auto test_vecs = gather_rows(a, a.split.test);
  {
    std::ofstream csv(words_path, std::ios::binary);
    check_data(csv.good(), "cannot write " + words_path);
    ham::export_analysis(csv, a.vocab, std::uint32_t(a.bow.docs.size()), params, test_vecs);
  }

  const auto codes = train::encode_corpus(params, test_vecs);
  io::write_codes_file(codes_bin_path, codes);
  {
    std::ofstream csv(codes_csv_path, std::ios::binary);
    check_data(csv.good(), "cannot write " + codes_csv_path);
    csv << "id,labels,code\r\n";
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const auto id = a.split.test[i];
      const auto& labels = a.split.doc_labels[a.split.row_of(id)];
      csv << id << ',';
      for (std::size_t l = 0; l < labels.size(); ++l)
        csv << (l ? ";" : "") << a.split.label_names[labels[l]];
      csv << ',' << codes[i].to_string() << "\r\n";
    }
  }

  std::cout << "analysis written to " << analysis_dir << "\n";

  update_manifest(args.out_dir, "analyze", {{"bits", args.bits}}, {ckpt_path},
                  {words_path, codes_bin_path, codes_csv_path});
}

}  // namespace rbsh::cli
