#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rbsh/adam.hpp"
#include "rbsh/corpus.hpp"
#include "rbsh/io.hpp"
#include "rbsh/model.hpp"
#include "rbsh/sth.hpp"
#include "rbsh/types.hpp"

namespace rbsh::train {

struct TrainConfig {
  int bits = 16;
  int hidden = 1000;
  int embed = 300;
  double lr = 0.001;  // tuned over {0.001, 0.0005}
  int batch_size = 64;
  std::int64_t max_iterations = std::numeric_limits<std::int64_t>::max();
  int max_epochs = 100;
  double sigma2_init = 1.0;
  double sigma2_decrement = 1e-6;  // per iteration
  double beta_init = 0.0;
  double beta_increment = 1e-5;  // per iteration
  double alpha_init = 1.0;       // tuned over {0, 0.5, 1, 1.5}
  double alpha_increment = 1.0 / 30000;  // tuned over {1/30000, ..., 1/3000000}
  double margin = 1.0;
  int patience = 3;  // validation rounds without improvement
  std::uint64_t seed = 0;
  // weak labeller settings (recorded here so one config drives the pipeline)
  int m_sth = 0;  // 0: use `bits`
  int k_graph = 25;
  int top = 200;
  int stride = 10;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

struct Schedule {
  double sigma2 = 1.0, beta = 0.0, alpha = 0.0;
};

/// Closed-form annealing values at iteration t:
/// sigma2 = max(0, init - dec*t); beta = init + inc*t; alpha = init + inc*t.
Schedule schedule_at(std::int64_t t, const TrainConfig& cfg);

struct TrainState {
  std::int64_t iteration = 0;
  int epoch = 0;
  Schedule sched;
  double best_val = std::numeric_limits<double>::infinity();
  int rounds_since_improve = 0;
};

struct EpochMetrics {
  model::LossBreakdown mean_loss;
  Schedule sched_end;
  std::int64_t iteration_end = 0;
  std::size_t batches = 0;
};

/// Document pool addressable by id.
struct DocStore {
  std::vector<std::uint32_t> ids;
  std::vector<corpus::BowVector> vecs;
  std::unordered_map<std::uint32_t, std::uint32_t> pos;

  static DocStore make(std::vector<std::uint32_t> ids, std::vector<corpus::BowVector> vecs);
  const corpus::BowVector& by_id(std::uint32_t id) const;
};

class Trainer {
 public:
  Trainer(const DocStore* docs, std::vector<sth::Triplet> train_triplets,
          std::vector<sth::Triplet> val_triplets, TrainConfig cfg);

  /// One shuffled pass over the training triplets with per-iteration
  /// annealing and ADAM updates. NaN losses abort through the diagnostic
  /// sink (when set) with a NumericError.
  EpochMetrics train_epoch();

  /// Mean combined loss over the validation triplets with deterministic code
  /// sampling and the annealing schedule frozen at its current value.
  /// Updates the best/patience counters.
  double validate();

  bool should_stop() const { return state_.rounds_since_improve >= cfg_.patience; }

  /// Puts the parameters back to the best validated snapshot.
  void restore_best();

  const model::ModelParams<float>& params() const { return params_; }
  model::ModelParams<float>& params() { return params_; }
  const ad::AdamState<float>& adam() const { return adam_; }
  const TrainState& state() const { return state_; }

  io::NamedTensors to_checkpoint() const;
  void load_checkpoint(const io::NamedTensors& ckpt);

  /// Called with the checkpoint of the aborted step when a loss goes NaN.
  std::function<void(const io::NamedTensors&)> diagnostic_sink;

 private:
  model::LossBreakdown step(const model::TripletBatch& batch);

  const DocStore* docs_;
  std::vector<sth::Triplet> train_triplets_, val_triplets_;
  TrainConfig cfg_;
  model::ModelParams<float> params_;
  ad::AdamState<float> adam_;
  TrainState state_;
  std::optional<model::ModelParams<float>> best_params_;
};

/// Deterministic codes (mu = 0.5) for every document, in input order.
std::vector<HashCode> encode_corpus(const model::ModelParams<float>& params,
                                    const std::vector<corpus::BowVector>& docs);

}  // namespace rbsh::train
