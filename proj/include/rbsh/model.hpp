#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rbsh/corpus.hpp"
#include "rbsh/rng.hpp"
#include "rbsh/tape.hpp"
#include "rbsh/types.hpp"

namespace rbsh::model {

/// All learnable tensors of the RBSH network. Biases are n x 1 matrices so
/// every parameter shares one type.
template <class S>
struct ModelParams {
  Mat<S> W_a, b_a;    // V -> hidden
  Mat<S> W_b, b_b;    // hidden -> hidden
  Mat<S> W_m, b_m;    // hidden -> m
  Mat<S> E_imp;       // V x 1, pre-sigmoid word importance
  Mat<S> E_word;      // V x embed
  Mat<S> W_g;         // m x embed, code-length projection of word embeddings
  Mat<S> b_dec;       // V x 1, decoder word bias

  Eigen::Index vocab() const { return E_imp.rows(); }
  Eigen::Index bits() const { return W_m.rows(); }
  Eigen::Index hidden() const { return W_b.rows(); }
  Eigen::Index embed() const { return W_g.cols(); }

  static constexpr std::array<const char*, 10> tensor_names = {
      "W_a", "b_a", "W_b", "b_b", "W_m", "b_m", "E_imp", "E_word", "W_g", "b_dec"};

  std::array<Mat<S>*, 10> tensors() {
    return {&W_a, &b_a, &W_b, &b_b, &W_m, &b_m, &E_imp, &E_word, &W_g, &b_dec};
  }
  std::array<const Mat<S>*, 10> tensors() const {
    return {&W_a, &b_a, &W_b, &b_b, &W_m, &b_m, &E_imp, &E_word, &W_g, &b_dec};
  }

  /// Glorot-uniform matrices, zero biases, zero pre-sigmoid importances.
  static ModelParams init(Eigen::Index vocab, Eigen::Index bits, Eigen::Index hidden,
                          Eigen::Index embed, SplitRng rng) {
    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols, double fan_in,
                         double fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      Mat<S> w(rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
          w(i, j) = S(limit * (2 * rng.next_double() - 1));
      return w;
    };
    ModelParams p;
    p.W_a = glorot(hidden, vocab, double(vocab), double(hidden));
    p.b_a = Mat<S>::Zero(hidden, 1);
    p.W_b = glorot(hidden, hidden, double(hidden), double(hidden));
    p.b_b = Mat<S>::Zero(hidden, 1);
    p.W_m = glorot(bits, hidden, double(hidden), double(bits));
    p.b_m = Mat<S>::Zero(bits, 1);
    p.E_imp = Mat<S>::Zero(vocab, 1);
    p.E_word = glorot(vocab, embed, double(vocab), double(embed));
    p.W_g = glorot(bits, embed, double(embed), double(bits));
    p.b_dec = Mat<S>::Zero(vocab, 1);
    return p;
  }
};

template <class S>
S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

/// Encoder: q = sigmoid(W_m relu(W_b relu(W_a (d .* sigmoid(E_imp)) + b_a) + b_b) + b_m).
template <class S>
Vec<S> encode(const corpus::BowVector& d, const ModelParams<S>& p) {
  check_data(Eigen::Index(d.dim) == p.vocab(), "encode: document dimension mismatch");
  Vec<S> h1 = p.b_a.col(0);
  for (const auto& [idx, w] : d.entries)
    h1 += (S(w) * stable_sigmoid(p.E_imp(idx, 0))) * p.W_a.col(idx);
  h1 = h1.cwiseMax(S(0));
  Vec<S> h2 = ((p.W_b * h1 + p.b_b.col(0)).cwiseMax(S(0)));
  Vec<S> q = p.W_m * h2 + p.b_m.col(0);
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = stable_sigmoid(q[i]);
  return q;
}

enum class SampleMode { kStochastic, kDeterministic };

template <class S>
struct EncoderOutput {
  Vec<S> q;
  HashCode code;
  Vec<S> mu;  // the uniform draws actually used
};

/// Bit i = ceil(q_i - mu_i), with ceil(0) = 0: a Bernoulli(q_i) trial when
/// mu is uniform, a threshold at q > 0.5 when deterministic (mu = 0.5).
template <class S>
EncoderOutput<S> sample_code(const Vec<S>& q, SampleMode mode, SplitRng* rng = nullptr) {
  EncoderOutput<S> out;
  out.q = q;
  out.mu.resize(q.size());
  out.code = HashCode(int(q.size()));
  if (mode == SampleMode::kStochastic)
    check_data(rng != nullptr, "sample_code: stochastic mode needs an rng");
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    out.mu[i] = mode == SampleMode::kStochastic ? S(rng->next_double()) : S(0.5);
    out.code.set(int(i), q[i] > out.mu[i]);
  }
  return out;
}

/// f(z) = z + eps * sigma2 with eps ~ N(0, I); sigma2 = 0 returns z exactly.
template <class S>
Vec<S> inject_noise(const Vec<S>& z, S sigma2, SplitRng& rng) {
  check_data(sigma2 >= S(0), "inject_noise: sigma2 must be non-negative");
  if (sigma2 == S(0)) return z;
  Vec<S> out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = z[i] + S(rng.next_gaussian()) * sigma2;
  return out;
}

/// Precomputed decoder projection: row j holds the code-space embedding of
/// word j, i.e. W_g (sigmoid(E_imp)_j * E_word_j).
template <class S>
struct DecoderCache {
  Mat<S> proj;  // V x m
};

template <class S>
DecoderCache<S> make_decoder_cache(const ModelParams<S>& p) {
  Vec<S> e(p.vocab());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = stable_sigmoid(p.E_imp(i, 0));
  DecoderCache<S> c;
  c.proj.noalias() = (p.E_word.array().colwise() * e.array()).matrix() * p.W_g.transpose();
  return c;
}

/// Log-softmax word probabilities for one latent vector (length V).
template <class S>
Vec<S> decoder_word_log_probs(const Vec<S>& fz, const ModelParams<S>& p,
                              const DecoderCache<S>& cache) {
  check_data(fz.size() == p.bits(), "decoder: latent length mismatch");
  Vec<S> logits = cache.proj * fz + p.b_dec.col(0);
  const S mx = logits.maxCoeff();
  double sum = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) sum += std::exp(double(logits[i] - mx));
  const S lse = mx + S(std::log(sum));
  return logits.array() - lse;
}

/// Sum of word log probabilities over the unique words of d.
template <class S>
double decode_log_prob(const Vec<S>& fz, const corpus::BowVector& d, const ModelParams<S>& p,
                       const DecoderCache<S>& cache) {
  check_data(!d.entries.empty(), "decode_log_prob: document has no in-vocabulary words");
  const Vec<S> lp = decoder_word_log_probs(fz, p, cache);
  double sum = 0;
  for (const auto& [idx, w] : d.entries) sum += double(lp[Eigen::Index(idx)]);
  return sum;
}

template <class S>
double decode_log_prob(const Vec<S>& fz, const corpus::BowVector& d, const ModelParams<S>& p) {
  return decode_log_prob(fz, d, p, make_decoder_cache(p));
}

/// Closed-form KL(Bernoulli(q) || Bernoulli(p)) summed over bits; q clamped
/// to [1e-7, 1 - 1e-7] before the logs.
template <class S>
double kl_divergence(const Vec<S>& q, double p = 0.5) {
  double sum = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double qc = std::min(1.0 - ad::Tape<S>::kProbEps,
                               std::max(ad::Tape<S>::kProbEps, double(q[i])));
    sum += qc * std::log(qc / p) + (1 - qc) * std::log((1 - qc) / (1 - p));
  }
  return sum;
}

/// Piecewise hinge on the squared-distance difference
/// D = ||z - z2||^2 - ||z - z1||^2.
template <class S>
double ranking_loss(const Vec<S>& z, const Vec<S>& z1, const Vec<S>& z2, double s1, double s2,
                    double margin = 1.0) {
  check_data(z.size() == z1.size() && z.size() == z2.size(), "ranking_loss: length mismatch");
  const double d = (z - z2).template cast<double>().squaredNorm() -
                   (z - z1).template cast<double>().squaredNorm();
  if (s1 != s2) {
    const double sign = s1 > s2 ? 1.0 : -1.0;
    return std::max(0.0, margin - sign * d);
  }
  return std::abs(d);
}

struct LossBreakdown {
  double reconstruction = 0;  // negated E_Q term, >= 0
  double kl = 0;
  double ranking = 0;
  double combined = 0;
};

enum class CodePath {
  kSampledST,  // hard bits forward, straight-through backward
  kSoft        // z = q, fully differentiable (gradient verification)
};

/// One minibatch of triplets. Pointers must stay valid while the graph lives.
struct TripletBatch {
  std::vector<const corpus::BowVector*> anchors, cand1, cand2;
  std::vector<float> s1, s2;

  std::size_t size() const { return anchors.size(); }
};

template <class S>
struct LossOptions {
  S alpha = S(0), beta = S(0), sigma2 = S(0), margin = S(1);
  SampleMode mode = SampleMode::kStochastic;
  CodePath path = CodePath::kSampledST;
  SplitRng* sample_rng = nullptr;
  SplitRng* noise_rng = nullptr;
  const Mat<S>* frozen_mu = nullptr;   // m x (3B or B); overrides rng draws
  const Mat<S>* frozen_eps = nullptr;  // m x B
};

template <class S>
struct BatchLossGraph {
  ad::Tape<S> tape;
  int loss = -1;
  LossBreakdown parts;
  std::array<int, 10> param_nodes{};
};

/// Builds the full combined-loss graph over a triplet minibatch:
/// combined = alpha * mean(ranking) + mean(recon NLL) + beta * mean(KL),
/// reconstruction and KL evaluated on the anchor documents. When alpha is 0
/// the candidate documents are not encoded at all (their gradients vanish
/// identically either way).
template <class S>
BatchLossGraph<S> combined_loss_batch(const TripletBatch& batch, const ModelParams<S>& params,
                                      const LossOptions<S>& opt) {
  const std::size_t b_sz = batch.size();
  check_data(b_sz >= 1, "combined_loss_batch: empty batch");
  check_data(opt.alpha >= S(0) && opt.beta >= S(0) && opt.sigma2 >= S(0),
             "combined_loss_batch: weights must be non-negative");
  const bool with_rank = opt.alpha != S(0);
  if (with_rank)
    check_data(batch.cand1.size() == b_sz && batch.cand2.size() == b_sz &&
                   batch.s1.size() == b_sz && batch.s2.size() == b_sz,
               "combined_loss_batch: incomplete triplets");

  BatchLossGraph<S> g;
  auto& t = g.tape;
  auto ptrs = params.tensors();
  for (std::size_t i = 0; i < ptrs.size(); ++i) g.param_nodes[i] = t.param(ptrs[i]);
  const int n_wa = g.param_nodes[0], n_ba = g.param_nodes[1], n_wb = g.param_nodes[2],
            n_bb = g.param_nodes[3], n_wm = g.param_nodes[4], n_bm = g.param_nodes[5],
            n_eimp = g.param_nodes[6], n_eword = g.param_nodes[7], n_wg = g.param_nodes[8],
            n_bdec = g.param_nodes[9];

  const int e_sig = t.sigmoid(n_eimp);  // V x 1 word importances

  const std::size_t n_cols = with_rank ? 3 * b_sz : b_sz;
  std::vector<ad::SparseColumn> cols;
  cols.reserve(n_cols);
  auto push_docs = [&](const std::vector<const corpus::BowVector*>& docs) {
    for (const auto* d : docs) {
      check_data(Eigen::Index(d->dim) == params.vocab(),
                 "combined_loss_batch: document dimension mismatch");
      cols.emplace_back(d->entries);
    }
  };
  push_docs(batch.anchors);
  if (with_rank) {
    push_docs(batch.cand1);
    push_docs(batch.cand2);
  }

  const int h1 = t.relu(t.sparse_linear(n_wa, n_ba, e_sig, std::move(cols)));
  const int h2 = t.relu(t.add_col_vec(t.matmul(n_wb, h1), n_bb));
  const int q_all = t.sigmoid(t.add_col_vec(t.matmul(n_wm, h2), n_bm));  // m x n_cols

  // code sampling
  int z_all;
  if (opt.path == CodePath::kSoft) {
    z_all = q_all;
  } else {
    const auto& qv = t.value(q_all);
    Mat<S> mu;
    if (opt.frozen_mu) {
      mu = *opt.frozen_mu;
      check_data(mu.rows() == qv.rows() && mu.cols() == qv.cols(),
                 "combined_loss_batch: frozen mu shape mismatch");
    } else if (opt.mode == SampleMode::kDeterministic) {
      mu = Mat<S>::Constant(qv.rows(), qv.cols(), S(0.5));
    } else {
      check_data(opt.sample_rng != nullptr, "combined_loss_batch: missing sample rng");
      mu.resize(qv.rows(), qv.cols());
      for (Eigen::Index j = 0; j < mu.cols(); ++j)
        for (Eigen::Index i = 0; i < mu.rows(); ++i)
          mu(i, j) = S(opt.sample_rng->next_double());
    }
    Mat<S> bits = (qv.array() > mu.array()).template cast<S>();
    z_all = t.straight_through(q_all, std::move(bits));
  }

  const int z_anchor = with_rank ? t.col_slice(z_all, 0, int(b_sz)) : z_all;
  const int q_anchor = with_rank ? t.col_slice(q_all, 0, int(b_sz)) : q_all;

  // noise injection before decoding
  int fz = z_anchor;
  if (opt.sigma2 > S(0)) {
    Mat<S> noise(params.bits(), Eigen::Index(b_sz));
    if (opt.frozen_eps) {
      check_data(opt.frozen_eps->rows() == noise.rows() &&
                     opt.frozen_eps->cols() == noise.cols(),
                 "combined_loss_batch: frozen eps shape mismatch");
      noise = *opt.frozen_eps * opt.sigma2;
    } else {
      check_data(opt.noise_rng != nullptr, "combined_loss_batch: missing noise rng");
      for (Eigen::Index j = 0; j < noise.cols(); ++j)
        for (Eigen::Index i = 0; i < noise.rows(); ++i)
          noise(i, j) = S(opt.noise_rng->next_gaussian()) * opt.sigma2;
    }
    fz = t.add(z_anchor, t.constant(std::move(noise)));
  }

  // decoder: log-softmax over the vocabulary, summed over each anchor's words
  const int t_emb = t.row_scale(n_eword, e_sig);
  const int proj = t.matmul_nt(t_emb, n_wg);                       // V x m
  const int logits = t.add_col_vec(t.matmul(proj, fz), n_bdec);    // V x B
  const int log_probs = t.log_softmax_cols(logits);
  std::vector<std::vector<std::uint32_t>> groups(b_sz);
  for (std::size_t b = 0; b < b_sz; ++b) {
    check_data(!batch.anchors[b]->entries.empty(),
               "combined_loss_batch: anchor without in-vocabulary words");
    for (const auto& [idx, w] : batch.anchors[b]->entries) groups[b].push_back(idx);
  }
  const int doc_ll = t.gather_sum_cols(log_probs, std::move(groups));  // 1 x B
  const int mean_ll = t.mean_all(doc_ll);
  const int recon = t.scalar_affine(mean_ll, -1, 0);

  const int kl_mean = t.mean_all(t.bernoulli_kl_cols(q_anchor, 0.5));

  int loss = recon;
  g.parts.reconstruction = -t.scalar(mean_ll);
  g.parts.kl = t.scalar(kl_mean);
  if (opt.beta > S(0)) loss = t.add(loss, t.scalar_affine(kl_mean, double(opt.beta), 0));

  if (with_rank) {
    const int z1 = t.col_slice(z_all, int(b_sz), int(b_sz));
    const int z2 = t.col_slice(z_all, 2 * int(b_sz), int(b_sz));
    const int d_far = t.col_sqnorm(t.sub(z_anchor, z2));
    const int d_near = t.col_sqnorm(t.sub(z_anchor, z1));
    const int diff = t.sub(d_far, d_near);
    std::vector<S> s1(batch.s1.begin(), batch.s1.end());
    std::vector<S> s2(batch.s2.begin(), batch.s2.end());
    const int rank_mean =
        t.mean_all(t.hinge_rank_cols(diff, std::move(s1), std::move(s2), opt.margin));
    g.parts.ranking = t.scalar(rank_mean);
    loss = t.add(loss, t.scalar_affine(rank_mean, double(opt.alpha), 0));
  }

  g.parts.combined = double(opt.alpha) * g.parts.ranking + g.parts.reconstruction +
                     double(opt.beta) * g.parts.kl;
  g.loss = loss;
  return g;
}

/// Spec-shaped single-triplet loss; delegates to the batched graph.
template <class S>
LossBreakdown combined_loss(const corpus::BowVector& d, const corpus::BowVector& d1,
                            const corpus::BowVector& d2, float s1, float s2,
                            const ModelParams<S>& params, S alpha, S beta, S sigma2,
                            SplitRng& rng) {
  TripletBatch batch;
  batch.anchors = {&d};
  batch.cand1 = {&d1};
  batch.cand2 = {&d2};
  batch.s1 = {s1};
  batch.s2 = {s2};
  LossOptions<S> opt;
  opt.alpha = alpha;
  opt.beta = beta;
  opt.sigma2 = sigma2;
  SplitRng sample_rng = rng.split("sample");
  SplitRng noise_rng = rng.split("noise");
  opt.sample_rng = &sample_rng;
  opt.noise_rng = &noise_rng;
  return combined_loss_batch(batch, params, opt).parts;
}

}  // namespace rbsh::model
