#include "rbsh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "rbsh/rng.hpp"

namespace rbsh::train {

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["bits"] = bits;
  j["hidden"] = hidden;
  j["embed"] = embed;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["max_iterations"] = max_iterations;
  j["max_epochs"] = max_epochs;
  j["sigma2_init"] = sigma2_init;
  j["sigma2_decrement"] = sigma2_decrement;
  j["beta_init"] = beta_init;
  j["beta_increment"] = beta_increment;
  j["alpha_init"] = alpha_init;
  j["alpha_increment"] = alpha_increment;
  j["margin"] = margin;
  j["patience"] = patience;
  j["seed"] = seed;
  j["m_sth"] = m_sth;
  j["k_graph"] = k_graph;
  j["top"] = top;
  j["stride"] = stride;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: malformed JSON: ") + e.what());
  }
  TrainConfig c;
  try {
    c.bits = j.value("bits", c.bits);
    c.hidden = j.value("hidden", c.hidden);
    c.embed = j.value("embed", c.embed);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.sigma2_init = j.value("sigma2_init", c.sigma2_init);
    c.sigma2_decrement = j.value("sigma2_decrement", c.sigma2_decrement);
    c.beta_init = j.value("beta_init", c.beta_init);
    c.beta_increment = j.value("beta_increment", c.beta_increment);
    c.alpha_init = j.value("alpha_init", c.alpha_init);
    c.alpha_increment = j.value("alpha_increment", c.alpha_increment);
    c.margin = j.value("margin", c.margin);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.m_sth = j.value("m_sth", c.m_sth);
    c.k_graph = j.value("k_graph", c.k_graph);
    c.top = j.value("top", c.top);
    c.stride = j.value("stride", c.stride);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: bad field: ") + e.what());
  }
  check_data(c.lr > 0 && c.batch_size >= 1 && c.bits >= 1 && c.bits <= HashCode::kMaxBits,
             "config: invalid values");
  check_data(c.sigma2_init >= 0 && c.sigma2_decrement >= 0 && c.beta_increment >= 0 &&
                 c.alpha_init >= 0 && c.alpha_increment >= 0,
             "config: rates must be non-negative");
  return c;
}

Schedule schedule_at(std::int64_t t, const TrainConfig& cfg) {
  // products go through named locals so the schedule endpoints are exact
  // (fused multiply-add contraction would leave sigma2(1e6) at ~4.5e-17)
  const double sig_dec = cfg.sigma2_decrement * double(t);
  const double beta_inc = cfg.beta_increment * double(t);
  const double alpha_inc = cfg.alpha_increment * double(t);
  Schedule s;
  s.sigma2 = sig_dec >= cfg.sigma2_init ? 0.0 : cfg.sigma2_init - sig_dec;
  s.beta = cfg.beta_init + beta_inc;
  s.alpha = cfg.alpha_init + alpha_inc;
  return s;
}

DocStore DocStore::make(std::vector<std::uint32_t> ids, std::vector<corpus::BowVector> vecs) {
  check_data(ids.size() == vecs.size(), "DocStore: ids/vectors size mismatch");
  DocStore s;
  s.ids = std::move(ids);
  s.vecs = std::move(vecs);
  for (std::uint32_t i = 0; i < s.ids.size(); ++i) s.pos.emplace(s.ids[i], i);
  check_data(s.pos.size() == s.ids.size(), "DocStore: duplicate ids");
  return s;
}

const corpus::BowVector& DocStore::by_id(std::uint32_t id) const {
  auto it = pos.find(id);
  check_data(it != pos.end(), "DocStore: unknown doc id " + std::to_string(id));
  return vecs[it->second];
}

Trainer::Trainer(const DocStore* docs, std::vector<sth::Triplet> train_triplets,
                 std::vector<sth::Triplet> val_triplets, TrainConfig cfg)
    : docs_(docs),
      train_triplets_(std::move(train_triplets)),
      val_triplets_(std::move(val_triplets)),
      cfg_(std::move(cfg)) {
  check_data(docs_ != nullptr && !docs_->vecs.empty(), "Trainer: no documents");
  check_data(!train_triplets_.empty(), "Trainer: no training triplets");
  const Eigen::Index vocab = docs_->vecs.front().dim;
  params_ = model::ModelParams<float>::init(vocab, cfg_.bits, cfg_.hidden, cfg_.embed,
                                            SplitRng(cfg_.seed).split("init"));
  auto ptrs = params_.tensors();
  adam_ = ad::AdamState<float>::zeros_like(
      std::vector<const MatF*>(ptrs.begin(), ptrs.end()));
  state_.sched = schedule_at(0, cfg_);
}

model::LossBreakdown Trainer::step(const model::TripletBatch& batch) {
  state_.sched = schedule_at(state_.iteration, cfg_);
  SplitRng sample_rng = SplitRng(cfg_.seed).split("sample").split(std::uint64_t(state_.iteration));
  SplitRng noise_rng = SplitRng(cfg_.seed).split("noise").split(std::uint64_t(state_.iteration));

  model::LossOptions<float> opt;
  opt.alpha = float(state_.sched.alpha);
  opt.beta = float(state_.sched.beta);
  opt.sigma2 = float(state_.sched.sigma2);
  opt.margin = float(cfg_.margin);
  opt.mode = model::SampleMode::kStochastic;
  opt.path = model::CodePath::kSampledST;
  opt.sample_rng = &sample_rng;
  opt.noise_rng = &noise_rng;

  try {
    auto g = model::combined_loss_batch(batch, params_, opt);
    check_numeric(std::isfinite(g.parts.combined), "train: non-finite loss");
    g.tape.backward(g.loss);

    auto ptrs = params_.tensors();
    std::vector<MatF*> param_ptrs(ptrs.begin(), ptrs.end());
    std::vector<MatF> zero_grads;  // keeps fallbacks alive through the update
    std::vector<const MatF*> grad_ptrs(ptrs.size());
    zero_grads.reserve(ptrs.size());
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      if (g.tape.has_grad(g.param_nodes[i])) {
        grad_ptrs[i] = &g.tape.grad(g.param_nodes[i]);
      } else {
        zero_grads.push_back(MatF::Zero(ptrs[i]->rows(), ptrs[i]->cols()));
        grad_ptrs[i] = &zero_grads.back();
      }
    }
    ad::adam_step(param_ptrs, grad_ptrs, adam_, float(cfg_.lr));
    ++state_.iteration;
    return g.parts;
  } catch (const NumericError&) {
    if (diagnostic_sink) diagnostic_sink(to_checkpoint());
    throw;
  }
}

EpochMetrics Trainer::train_epoch() {
  std::vector<std::uint32_t> order(train_triplets_.size());
  std::iota(order.begin(), order.end(), 0u);
  SplitRng shuffle_rng = SplitRng(cfg_.seed).split("shuffle").split(std::uint64_t(state_.epoch));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = std::size_t(shuffle_rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }

  EpochMetrics metrics;
  double total = 0, recon = 0, kl = 0, rank = 0;
  std::size_t seen = 0;

  for (std::size_t begin = 0; begin < order.size(); begin += std::size_t(cfg_.batch_size)) {
    if (state_.iteration >= cfg_.max_iterations) break;
    const std::size_t end = std::min(order.size(), begin + std::size_t(cfg_.batch_size));
    model::TripletBatch batch;
    batch.anchors.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = train_triplets_[order[i]];
      batch.anchors.push_back(&docs_->by_id(t.anchor));
      batch.cand1.push_back(&docs_->by_id(t.cand1));
      batch.cand2.push_back(&docs_->by_id(t.cand2));
      batch.s1.push_back(t.s1);
      batch.s2.push_back(t.s2);
    }
    const auto parts = step(batch);
    const auto bsz = double(end - begin);
    total += parts.combined * bsz;
    recon += parts.reconstruction * bsz;
    kl += parts.kl * bsz;
    rank += parts.ranking * bsz;
    seen += end - begin;
    ++metrics.batches;
  }

  ++state_.epoch;
  if (seen > 0) {
    metrics.mean_loss.combined = total / double(seen);
    metrics.mean_loss.reconstruction = recon / double(seen);
    metrics.mean_loss.kl = kl / double(seen);
    metrics.mean_loss.ranking = rank / double(seen);
  }
  metrics.sched_end = state_.sched;
  metrics.iteration_end = state_.iteration;
  return metrics;
}

double Trainer::validate() {
  check_data(!val_triplets_.empty(), "validate: no validation triplets");

  // deterministic codes; schedule frozen at the current value; noise drawn
  // from a fixed substream so every validation round sees the same draws
  SplitRng noise_rng = SplitRng(cfg_.seed).split("val_noise");

  double total = 0;
  std::size_t seen = 0;
  for (std::size_t begin = 0; begin < val_triplets_.size();
       begin += std::size_t(cfg_.batch_size)) {
    const std::size_t end =
        std::min(val_triplets_.size(), begin + std::size_t(cfg_.batch_size));
    model::TripletBatch batch;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = val_triplets_[i];
      batch.anchors.push_back(&docs_->by_id(t.anchor));
      batch.cand1.push_back(&docs_->by_id(t.cand1));
      batch.cand2.push_back(&docs_->by_id(t.cand2));
      batch.s1.push_back(t.s1);
      batch.s2.push_back(t.s2);
    }
    model::LossOptions<float> opt;
    opt.alpha = float(state_.sched.alpha);
    opt.beta = float(state_.sched.beta);
    opt.sigma2 = float(state_.sched.sigma2);
    opt.margin = float(cfg_.margin);
    opt.mode = model::SampleMode::kDeterministic;
    opt.path = model::CodePath::kSampledST;
    opt.noise_rng = &noise_rng;
    const auto parts = model::combined_loss_batch(batch, params_, opt).parts;
    total += parts.combined * double(end - begin);
    seen += end - begin;
  }
  const double val_loss = total / double(seen);

  if (val_loss < state_.best_val) {
    state_.best_val = val_loss;
    state_.rounds_since_improve = 0;
    best_params_ = params_;
  } else {
    ++state_.rounds_since_improve;
  }
  return val_loss;
}

void Trainer::restore_best() {
  if (best_params_) params_ = *best_params_;
}

io::NamedTensors Trainer::to_checkpoint() const {
  io::NamedTensors ckpt;
  ckpt.vocab = std::uint32_t(params_.vocab());
  ckpt.bits = std::uint32_t(params_.bits());
  auto ptrs = params_.tensors();
  for (std::size_t i = 0; i < ptrs.size(); ++i)
    ckpt.add(model::ModelParams<float>::tensor_names[i], *ptrs[i]);
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    ckpt.add(std::string("adam.m.") + model::ModelParams<float>::tensor_names[i], adam_.m[i]);
    ckpt.add(std::string("adam.v.") + model::ModelParams<float>::tensor_names[i], adam_.v[i]);
  }
  auto scalar = [](double v) { return MatF::Constant(1, 1, float(v)); };
  ckpt.add("opt.t", scalar(double(adam_.t)));
  ckpt.add("train.iteration", scalar(double(state_.iteration)));
  ckpt.add("train.epoch", scalar(double(state_.epoch)));
  ckpt.add("train.best_val", scalar(state_.best_val));
  ckpt.add("train.rounds_since_improve", scalar(double(state_.rounds_since_improve)));
  return ckpt;
}

void Trainer::load_checkpoint(const io::NamedTensors& ckpt) {
  check_data(Eigen::Index(ckpt.vocab) == params_.vocab(),
             "checkpoint: vocabulary size mismatch");
  check_data(int(ckpt.bits) == cfg_.bits, "checkpoint: code length mismatch");
  auto ptrs = params_.tensors();
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    const char* name = model::ModelParams<float>::tensor_names[i];
    const MatF* t = ckpt.find(name);
    check_data(t != nullptr, std::string("checkpoint: missing tensor ") + name);
    check_data(t->rows() == ptrs[i]->rows() && t->cols() == ptrs[i]->cols(),
               std::string("checkpoint: shape mismatch for ") + name);
    *ptrs[i] = *t;
    const MatF* m = ckpt.find(std::string("adam.m.") + name);
    const MatF* v = ckpt.find(std::string("adam.v.") + name);
    check_data(m && v, std::string("checkpoint: missing ADAM state for ") + name);
    adam_.m[i] = *m;
    adam_.v[i] = *v;
  }
  auto scalar = [&](const char* name) {
    const MatF* t = ckpt.find(name);
    check_data(t != nullptr, std::string("checkpoint: missing scalar ") + name);
    return double((*t)(0, 0));
  };
  adam_.t = std::int64_t(scalar("opt.t"));
  state_.iteration = std::int64_t(scalar("train.iteration"));
  state_.epoch = int(scalar("train.epoch"));
  state_.best_val = scalar("train.best_val");
  state_.rounds_since_improve = int(scalar("train.rounds_since_improve"));
  state_.sched = schedule_at(state_.iteration, cfg_);
  best_params_ = params_;
}

std::vector<HashCode> encode_corpus(const model::ModelParams<float>& params,
                                    const std::vector<corpus::BowVector>& docs) {
  std::vector<HashCode> codes;
  codes.reserve(docs.size());
  for (const auto& d : docs) {
    const VecF q = model::encode(d, params);
    codes.push_back(model::sample_code(q, model::SampleMode::kDeterministic).code);
  }
  return codes;
}

}  // namespace rbsh::train
