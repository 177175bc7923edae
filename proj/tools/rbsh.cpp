// rbsh: unsupervised semantic hashing pipeline.
//   preprocess -> weaklabel -> train -> eval -> analyze

#include <exception>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "rbsh/cli_commands.hpp"
#include "rbsh/trainer.hpp"

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "rbsh_out";
  int bits = 16;
  bool force = false;
};

void add_globals(CLI::App* cmd, Globals& g) {
  cmd->add_option("--seed", g.seed, "root seed for all randomness");
  cmd->add_option("--out", g.out, "artifact directory");
  cmd->add_option("--bits", g.bits, "hash code length")
      ->check(CLI::IsMember({8, 16, 32, 64, 128}));
  cmd->add_flag("--force", g.force, "overwrite existing artifacts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranking based semantic hashing pipeline"};
  app.require_subcommand(1);

  Globals g;

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "build vocabulary, TF-IDF vectors and splits");
  std::string corpus_path;
  std::size_t max_vocab = 0;
  pre->add_option("corpus", corpus_path, "JSON-lines corpus file")->required();
  pre->add_option("--max-vocab", max_vocab, "cap vocabulary at the highest-df terms");
  add_globals(pre, g);

  // weaklabel
  auto* weak = app.add_subcommand("weaklabel", "STH codes and training triplets");
  int m_sth = 0, k_graph = 25, top = 200, stride = 10;
  weak->add_option("--m-sth", m_sth, "labeller code length (default: --bits)");
  weak->add_option("--k-graph", k_graph, "k of the cosine k-NN graph");
  weak->add_option("--top", top, "neighbour pool size");
  weak->add_option("--stride", stride, "neighbour selection stride");
  add_globals(weak, g);

  // train
  auto* tr = app.add_subcommand("train", "train the hashing model");
  std::string config_path;
  bool ablate = false, resume = false, grid = false;
  double lr = -1, alpha_init = -1, alpha_increment = -1;
  std::int64_t max_iterations = -1;
  int max_epochs = -1, batch_size = -1, patience = -1;
  tr->add_option("--config", config_path, "TrainConfig JSON file");
  tr->add_option("--lr", lr, "learning rate override");
  tr->add_option("--alpha-init", alpha_init, "initial ranking weight override");
  tr->add_option("--alpha-increment", alpha_increment, "ranking weight increment override");
  tr->add_option("--batch-size", batch_size, "minibatch size override");
  tr->add_option("--max-epochs", max_epochs, "epoch cap override");
  tr->add_option("--max-iterations", max_iterations, "iteration cap override");
  tr->add_option("--patience", patience, "early stopping patience override");
  tr->add_flag("--ablate-ranking", ablate, "train with the ranking term fixed to zero");
  tr->add_flag("--resume", resume, "continue from checkpoint_last");
  tr->add_flag("--grid", grid, "grid-search lr x alpha_init x alpha_increment");
  add_globals(tr, g);

  // eval
  auto* ev = app.add_subcommand("eval", "Prec@k of test queries against the training index");
  std::string checkpoint, compare, report;
  int k = 100;
  ev->add_option("--checkpoint", checkpoint, "checkpoint path (default: best)");
  ev->add_option("-k,--k", k, "retrieval depth");
  ev->add_option("--compare", compare, "reference eval.json for a paired t-test");
  ev->add_option("--report", report, "report path (default: <out>/eval.json)");
  add_globals(ev, g);

  // analyze
  auto* an = app.add_subcommand("analyze", "per-word analysis tables and code export");
  std::string a_checkpoint;
  an->add_option("--checkpoint", a_checkpoint, "checkpoint path (default: best)");
  add_globals(an, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message / help text
    return code == 0 ? 0 : 1;     // all usage errors map to exit 1
  }

  try {
    if (pre->parsed()) {
      rbsh::cli::cmd_preprocess({corpus_path, g.out, g.seed, max_vocab, g.force});
    } else if (weak->parsed()) {
      rbsh::cli::cmd_weaklabel({g.out, m_sth, g.bits, k_graph, top, stride, g.seed, g.force});
    } else if (tr->parsed()) {
      rbsh::cli::TrainArgs args;
      args.out_dir = g.out;
      rbsh::train::TrainConfig cfg;
      if (!config_path.empty()) {
        args.config_path = config_path;
        cfg = rbsh::train::TrainConfig::from_json(rbsh::io::read_file_bytes(config_path));
      }
      cfg.bits = g.bits;
      cfg.seed = g.seed;
      if (lr > 0) cfg.lr = lr;
      if (alpha_init >= 0) cfg.alpha_init = alpha_init;
      if (alpha_increment >= 0) cfg.alpha_increment = alpha_increment;
      if (batch_size > 0) cfg.batch_size = batch_size;
      if (max_epochs > 0) cfg.max_epochs = max_epochs;
      if (max_iterations > 0) cfg.max_iterations = max_iterations;
      if (patience > 0) cfg.patience = patience;
      args.config = cfg;
      args.ablate_ranking = ablate;
      args.resume = resume;
      args.grid = grid;
      args.force = g.force;
      rbsh::cli::cmd_train(args);
    } else if (ev->parsed()) {
      rbsh::cli::EvalArgs args;
      args.out_dir = g.out;
      args.checkpoint = checkpoint;
      args.bits = g.bits;
      args.k = k;
      if (!compare.empty()) args.compare_path = compare;
      args.report_path = report;
      args.force = g.force;
      rbsh::cli::cmd_eval(args);
    } else if (an->parsed()) {
      rbsh::cli::cmd_analyze({g.out, a_checkpoint, g.bits, g.force});
    }
  } catch (const rbsh::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rbsh::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const rbsh::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
