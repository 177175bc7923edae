#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsh/trainer.hpp"
#include "rbsh/types.hpp"

namespace rbsh::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed artifact names inside the output directory. Stages communicate only
// through these files.
namespace names {
inline constexpr const char* kVocab = "vocab.tsv";
inline constexpr const char* kVectors = "vectors.rbshbow";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kSthCodes = "sth_codes.rbshcode";
inline constexpr const char* kTrainTriplets = "triplets_train.rbshtri";
inline constexpr const char* kValTriplets = "triplets_val.rbshtri";
inline constexpr const char* kCkptBest = "checkpoint_best.rbshckpt";
inline constexpr const char* kCkptLast = "checkpoint_last.rbshckpt";
inline constexpr const char* kCkptDiag = "checkpoint_diag.rbshckpt";
inline constexpr const char* kMetrics = "metrics.jsonl";
inline constexpr const char* kConfigUsed = "config_used.json";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kAnalysisDir = "analysis";
inline constexpr const char* kManifest = "run_manifest.json";
}  // namespace names

struct PreprocessArgs {
  std::string corpus_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t max_vocab = 0;  // 0: unlimited
  bool force = false;
};
void cmd_preprocess(const PreprocessArgs& args);

struct WeakLabelArgs {
  std::string out_dir;
  int m_sth = 0;  // 0: use bits
  int bits = 16;
  int k_graph = 25;
  int top = 200;
  int stride = 10;
  std::uint64_t seed = 0;
  bool force = false;
};
void cmd_weaklabel(const WeakLabelArgs& args);

struct TrainArgs {
  std::string out_dir;
  std::optional<std::string> config_path;
  train::TrainConfig config;  // defaults + config file + CLI overrides, resolved by caller
  bool ablate_ranking = false;
  bool resume = false;
  bool grid = false;  // hyperparameter grid search on validation Prec@100
  bool force = false;
};
void cmd_train(const TrainArgs& args);

struct EvalArgs {
  std::string out_dir;
  std::string checkpoint;  // empty: out_dir/checkpoint_best
  int bits = 16;
  int k = 100;
  std::optional<std::string> compare_path;
  std::string report_path;  // empty: out_dir/eval.json
  bool force = false;
};
/// Returns the mean Prec@k.
double cmd_eval(const EvalArgs& args);

struct AnalyzeArgs {
  std::string out_dir;
  std::string checkpoint;  // empty: out_dir/checkpoint_best
  int bits = 16;
  bool force = false;
};
void cmd_analyze(const AnalyzeArgs& args);

}  // namespace rbsh::cli
