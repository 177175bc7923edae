#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbsh/types.hpp"

namespace rbsh::ad {

/// Per-output-column sparse input: (row index, weight) pairs of one document.
using SparseColumn = std::span<const std::pair<std::uint32_t, float>>;

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kMatMul,        // A * B
  kMatMulNT,      // A * B^T
  kAdd,
  kSub,
  kCMul,          // coefficient-wise product
  kScalarAffine,  // mul * X + add
  kAddColVec,     // X + v * ones^T
  kRelu,
  kSigmoid,
  kRowScale,      // X row-scaled by vector v
  kLogSoftmaxCols,
  kSparseLinear,  // W[:,idx] * (w .* e[idx]) + b, per sparse input column
  kGatherSumCols,
  kColSqnorm,
  kBernoulliKl,   // closed-form Bernoulli KL per column, summed over rows
  kHingeRank,     // piecewise ranking loss on a 1 x B distance-difference row
  kStraightThrough,
  kColSlice,
  kSumAll,
  kMeanAll,
};

/// Reverse-mode tape over dense Eigen matrices.
///
/// Nodes are created eagerly (forward value computed at creation) and
/// backward() walks them in reverse creation order, which is topological by
/// construction. Values of op outputs and all gradients are finiteness
/// checked; a NaN/Inf raises NumericError with the offending node id.
/// Reductions and softmax normalizers accumulate in double regardless of S.
template <class S>
class Tape {
 public:
  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    Mat<S> val;                    // owned value (empty when `ref` is set)
    const Mat<S>* ref = nullptr;   // caller-owned storage for params/constants
    Mat<S> grad;
    bool needs_grad = false;
    double mul = 1, add = 0;       // kScalarAffine
    double scalar = 0;             // exact value of scalar reductions / kl prior
    int slice_begin = 0, slice_len = 0;
    std::vector<SparseColumn> sparse_cols;
    std::vector<std::vector<std::uint32_t>> row_groups;
    std::vector<S> s1, s2;         // kHingeRank similarities
    S margin = S(1);

    const Mat<S>& value() const { return ref ? *ref : val; }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
  };

  int constant(Mat<S> v) { return push(Op::kConstant, std::move(v), -1); }
  /// Constant backed by caller storage; must outlive the tape.
  int constant_ref(const Mat<S>* v) {
    Node n;
    n.op = Op::kConstant;
    n.ref = v;
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }
  /// Parameter leaf backed by caller storage; must outlive the tape.
  int param(const Mat<S>* v) {
    Node n;
    n.op = Op::kParam;
    n.ref = v;
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  int matmul(int a, int b) {
    require(at(a).cols() == at(b).rows(), "matmul: inner dimensions differ");
    return push(Op::kMatMul, at(a).value() * at(b).value(), a, b);
  }
  int matmul_nt(int a, int b) {
    require(at(a).cols() == at(b).cols(), "matmul_nt: inner dimensions differ");
    return push(Op::kMatMulNT, at(a).value() * at(b).value().transpose(), a, b);
  }
  int add(int a, int b) {
    require_same_shape(a, b, "add");
    return push(Op::kAdd, at(a).value() + at(b).value(), a, b);
  }
  int sub(int a, int b) {
    require_same_shape(a, b, "sub");
    return push(Op::kSub, at(a).value() - at(b).value(), a, b);
  }
  int cmul(int a, int b) {
    require_same_shape(a, b, "cmul");
    return push(Op::kCMul, at(a).value().cwiseProduct(at(b).value()), a, b);
  }
  int scalar_affine(int a, double mul, double add) {
    const int id = push(Op::kScalarAffine, (at(a).value().array() * S(mul) + S(add)).matrix(), a);
    nodes_[id].mul = mul;
    nodes_[id].add = add;
    return id;
  }
  int add_col_vec(int a, int v) {
    require(at(v).cols() == 1 && at(v).rows() == at(a).rows(), "add_col_vec: bad bias shape");
    return push(Op::kAddColVec, at(a).value().colwise() + Vec<S>(at(v).value()), a, v);
  }
  int relu(int a) {
    return push(Op::kRelu, at(a).value().cwiseMax(S(0)), a);
  }
  int sigmoid(int a) {
    Mat<S> y = at(a).value().unaryExpr([](S x) { return stable_sigmoid(x); });
    return push(Op::kSigmoid, std::move(y), a);
  }
  int row_scale(int m, int v) {
    require(at(v).cols() == 1 && at(v).rows() == at(m).rows(), "row_scale: bad scale shape");
    Mat<S> y = (at(m).value().array().colwise() * at(v).value().col(0).array()).matrix();
    return push(Op::kRowScale, std::move(y), m, v);
  }

  int log_softmax_cols(int a) {
    const auto& x = at(a).value();
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const S mx = x.col(j).maxCoeff();
      double sum = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) sum += std::exp(double(x(i, j) - mx));
      const S lse = mx + S(std::log(sum));
      y.col(j) = x.col(j).array() - lse;
    }
    return push(Op::kLogSoftmaxCols, std::move(y), a);
  }

  /// Fused first encoder layer over a batch of sparse documents:
  /// out.col(b) = W[:, idx_b] * (w_b .* e[idx_b]) + bias.
  int sparse_linear(int w, int bias, int e, std::vector<SparseColumn> cols) {
    const auto& wm = at(w).value();
    const auto& ev = at(e).value();
    require(at(bias).cols() == 1 && at(bias).rows() == wm.rows(), "sparse_linear: bad bias");
    require(ev.cols() == 1 && ev.rows() == wm.cols(), "sparse_linear: bad embedding");
    Mat<S> y(wm.rows(), Eigen::Index(cols.size()));
    y.colwise() = at(bias).value().col(0);
    for (std::size_t b = 0; b < cols.size(); ++b)
      for (const auto& [idx, weight] : cols[b]) {
        require(idx < wm.cols(), "sparse_linear: index out of range");
        y.col(Eigen::Index(b)) += (S(weight) * ev(idx, 0)) * wm.col(idx);
      }
    const int id = push(Op::kSparseLinear, std::move(y), w, bias, e);
    nodes_[id].sparse_cols = std::move(cols);
    return id;
  }

  /// y(0, b) = sum of A(i, b) over the row group of column b.
  int gather_sum_cols(int a, std::vector<std::vector<std::uint32_t>> groups) {
    const auto& x = at(a).value();
    require(Eigen::Index(groups.size()) == x.cols(), "gather_sum_cols: group count");
    Mat<S> y(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double sum = 0;
      for (auto i : groups[std::size_t(j)]) {
        require(i < x.rows(), "gather_sum_cols: row index out of range");
        sum += double(x(Eigen::Index(i), j));
      }
      y(0, j) = S(sum);
    }
    const int id = push(Op::kGatherSumCols, std::move(y), a);
    nodes_[id].row_groups = std::move(groups);
    return id;
  }

  int col_sqnorm(int a) {
    const auto& x = at(a).value();
    Mat<S> y(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      y(0, j) = S(x.col(j).template cast<double>().squaredNorm());
    return push(Op::kColSqnorm, std::move(y), a);
  }

  /// Closed-form KL(Bernoulli(q) || Bernoulli(p)) summed over rows, per column.
  /// q is clamped to [1e-7, 1 - 1e-7] before the logs.
  int bernoulli_kl_cols(int q, double p) {
    const auto& x = at(q).value();
    Mat<S> y(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double sum = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double qc = clamp_prob(double(x(i, j)));
        sum += qc * std::log(qc / p) + (1 - qc) * std::log((1 - qc) / (1 - p));
      }
      y(0, j) = S(sum);
    }
    const int id = push(Op::kBernoulliKl, std::move(y), q);
    nodes_[id].scalar = p;
    return id;
  }

  /// Piecewise ranking loss per column of the 1 x B distance difference D:
  ///   s1 != s2: max(0, margin - sign(s1 - s2) * D)
  ///   s1 == s2: |D|
  int hinge_rank_cols(int d, std::vector<S> s1, std::vector<S> s2, S margin) {
    const auto& x = at(d).value();
    require(x.rows() == 1, "hinge_rank_cols: expects a row vector");
    require(Eigen::Index(s1.size()) == x.cols() && Eigen::Index(s2.size()) == x.cols(),
            "hinge_rank_cols: similarity count");
    Mat<S> y(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const S dv = x(0, j);
      const auto b = std::size_t(j);
      if (s1[b] != s2[b]) {
        const S sign = s1[b] > s2[b] ? S(1) : S(-1);
        y(0, j) = std::max(S(0), margin - sign * dv);
      } else {
        y(0, j) = std::abs(dv);
      }
    }
    const int id = push(Op::kHingeRank, std::move(y), d);
    nodes_[id].s1 = std::move(s1);
    nodes_[id].s2 = std::move(s2);
    nodes_[id].margin = margin;
    return id;
  }

  /// Forward value is exactly `bits`; backward passes the upstream gradient
  /// to the probabilities unchanged (identity Jacobian).
  int straight_through(int q, Mat<S> bits) {
    require(bits.rows() == at(q).rows() && bits.cols() == at(q).cols(),
            "straight_through: shape mismatch");
    for (Eigen::Index j = 0; j < bits.cols(); ++j)
      for (Eigen::Index i = 0; i < bits.rows(); ++i)
        check_numeric(bits(i, j) == S(0) || bits(i, j) == S(1),
                      "straight_through: bits must be exactly 0 or 1");
    return push(Op::kStraightThrough, std::move(bits), q);
  }

  int col_slice(int a, int begin, int len) {
    require(begin >= 0 && len >= 1 && begin + len <= at(a).cols(), "col_slice: bad range");
    const int id = push(Op::kColSlice, at(a).value().middleCols(begin, len), a);
    nodes_[id].slice_begin = begin;
    nodes_[id].slice_len = len;
    return id;
  }

  int sum_all(int a) {
    const double s = at(a).value().template cast<double>().sum();
    const int id = push(Op::kSumAll, Mat<S>::Constant(1, 1, S(s)), a);
    nodes_[id].scalar = s;
    return id;
  }
  int mean_all(int a) {
    const double s =
        at(a).value().template cast<double>().sum() / double(at(a).value().size());
    const int id = push(Op::kMeanAll, Mat<S>::Constant(1, 1, S(s)), a);
    nodes_[id].scalar = s;
    return id;
  }

  const Mat<S>& value(int id) const { return at(id).value(); }
  /// Exact (double-accumulated) value of a scalar reduction node.
  double scalar(int id) const {
    const auto& n = at(id);
    if (n.op == Op::kSumAll || n.op == Op::kMeanAll) return n.scalar;
    require(n.rows() == 1 && n.cols() == 1, "scalar: node is not scalar");
    return double(n.value()(0, 0));
  }
  const Mat<S>& grad(int id) const {
    const auto& g = at(id).grad;
    require(g.size() > 0, "grad: node has no gradient (run backward first)");
    return g;
  }
  bool has_grad(int id) const { return at(id).grad.size() > 0; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss node. Gradients of parameter leaves
  /// are retrievable via grad(); constants receive none.
  void backward(int loss) {
    auto& ln = at(loss);
    check_numeric(ln.rows() == 1 && ln.cols() == 1, "backward: loss must be scalar");
    touch_grad(loss)(0, 0) = S(1);

    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[std::size_t(id)];
      if (n.grad.size() == 0 || n.op == Op::kParam || n.op == Op::kConstant) continue;
      check_finite_grad(n.grad, id);
      const Mat<S>& g = n.grad;
      switch (n.op) {
        case Op::kMatMul:
          if (wants(n.a)) touch_grad(n.a).noalias() += g * at(n.b).value().transpose();
          if (wants(n.b)) touch_grad(n.b).noalias() += at(n.a).value().transpose() * g;
          break;
        case Op::kMatMulNT:
          if (wants(n.a)) touch_grad(n.a).noalias() += g * at(n.b).value();
          if (wants(n.b)) touch_grad(n.b).noalias() += g.transpose() * at(n.a).value();
          break;
        case Op::kAdd:
          if (wants(n.a)) touch_grad(n.a) += g;
          if (wants(n.b)) touch_grad(n.b) += g;
          break;
        case Op::kSub:
          if (wants(n.a)) touch_grad(n.a) += g;
          if (wants(n.b)) touch_grad(n.b) -= g;
          break;
        case Op::kCMul:
          if (wants(n.a)) touch_grad(n.a) += g.cwiseProduct(at(n.b).value());
          if (wants(n.b)) touch_grad(n.b) += g.cwiseProduct(at(n.a).value());
          break;
        case Op::kScalarAffine:
          if (wants(n.a)) touch_grad(n.a) += S(n.mul) * g;
          break;
        case Op::kAddColVec:
          if (wants(n.a)) touch_grad(n.a) += g;
          if (wants(n.b)) touch_grad(n.b) += g.rowwise().sum();
          break;
        case Op::kRelu:
          if (wants(n.a))
            touch_grad(n.a).array() +=
                g.array() * (at(n.a).value().array() > S(0)).template cast<S>();
          break;
        case Op::kSigmoid:
          if (wants(n.a))
            touch_grad(n.a).array() += g.array() * n.val.array() * (S(1) - n.val.array());
          break;
        case Op::kRowScale:
          if (wants(n.a))
            touch_grad(n.a).array() += g.array().colwise() * at(n.b).value().col(0).array();
          if (wants(n.b))
            touch_grad(n.b).col(0) += g.cwiseProduct(at(n.a).value()).rowwise().sum();
          break;
        case Op::kLogSoftmaxCols:
          if (wants(n.a)) {
            Mat<S>& da = touch_grad(n.a);
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
              const double colsum = g.col(j).template cast<double>().sum();
              da.col(j).array() +=
                  g.col(j).array() - n.val.col(j).array().exp() * S(colsum);
            }
          }
          break;
        case Op::kSparseLinear: {
          const auto& wm = at(n.a).value();
          const auto& ev = at(n.c).value();
          const bool want_w = wants(n.a), want_b = wants(n.b), want_e = wants(n.c);
          Mat<S>* dw = want_w ? &touch_grad(n.a) : nullptr;
          Mat<S>* de = want_e ? &touch_grad(n.c) : nullptr;
          if (want_b) touch_grad(n.b) += g.rowwise().sum();
          for (std::size_t b = 0; b < n.sparse_cols.size(); ++b) {
            const auto jb = Eigen::Index(b);
            for (const auto& [idx, weight] : n.sparse_cols[b]) {
              if (want_w) dw->col(idx) += (S(weight) * ev(idx, 0)) * g.col(jb);
              if (want_e) (*de)(idx, 0) += S(weight) * wm.col(idx).dot(g.col(jb));
            }
          }
          break;
        }
        case Op::kGatherSumCols:
          if (wants(n.a)) {
            Mat<S>& da = touch_grad(n.a);
            for (Eigen::Index j = 0; j < g.cols(); ++j)
              for (auto i : n.row_groups[std::size_t(j)]) da(Eigen::Index(i), j) += g(0, j);
          }
          break;
        case Op::kColSqnorm:
          if (wants(n.a)) {
            Mat<S>& da = touch_grad(n.a);
            for (Eigen::Index j = 0; j < g.cols(); ++j)
              da.col(j) += (S(2) * g(0, j)) * at(n.a).value().col(j);
          }
          break;
        case Op::kBernoulliKl:
          if (wants(n.a)) {
            Mat<S>& da = touch_grad(n.a);
            const auto& q = at(n.a).value();
            const double p = n.scalar;
            const double prior_logit = std::log(p / (1 - p));
            // gradient at the clamped value: saturated probabilities keep a
            // strong restoring force instead of a dead zone
            for (Eigen::Index j = 0; j < g.cols(); ++j)
              for (Eigen::Index i = 0; i < q.rows(); ++i) {
                const double qc = clamp_prob(double(q(i, j)));
                da(i, j) += g(0, j) * S(std::log(qc / (1 - qc)) - prior_logit);
              }
          }
          break;
        case Op::kHingeRank:
          if (wants(n.a)) {
            Mat<S>& da = touch_grad(n.a);
            const auto& d = at(n.a).value();
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
              const auto b = std::size_t(j);
              S slope;
              if (n.s1[b] != n.s2[b]) {
                const S sign = n.s1[b] > n.s2[b] ? S(1) : S(-1);
                slope = (n.margin - sign * d(0, j)) > S(0) ? -sign : S(0);
              } else {
                slope = d(0, j) > S(0) ? S(1) : (d(0, j) < S(0) ? S(-1) : S(0));
              }
              da(0, j) += slope * g(0, j);
            }
          }
          break;
        case Op::kStraightThrough:
          if (wants(n.a)) touch_grad(n.a) += g;
          break;
        case Op::kColSlice:
          if (wants(n.a)) touch_grad(n.a).middleCols(n.slice_begin, n.slice_len) += g;
          break;
        case Op::kSumAll:
          if (wants(n.a)) touch_grad(n.a).array() += g(0, 0);
          break;
        case Op::kMeanAll:
          if (wants(n.a))
            touch_grad(n.a).array() += g(0, 0) / S(double(at(n.a).value().size()));
          break;
        case Op::kParam:
        case Op::kConstant:
          break;
      }
    }
  }

  static constexpr double kProbEps = 1e-7;

 private:
  static S stable_sigmoid(S x) {
    if (x >= S(0)) {
      const S e = std::exp(-x);
      return S(1) / (S(1) + e);
    }
    const S e = std::exp(x);
    return e / (S(1) + e);
  }
  static double clamp_prob(double q) {
    return std::min(1.0 - kProbEps, std::max(kProbEps, q));
  }

  int push(Op op, Mat<S> val, int a, int b = -1, int c = -1) {
    check_finite_value(val, op_name(op));
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.val = std::move(val);
    n.needs_grad = (a >= 0 && at(a).needs_grad) || (b >= 0 && at(b).needs_grad) ||
                   (c >= 0 && at(c).needs_grad);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  bool wants(int id) const { return id >= 0 && at(id).needs_grad; }

  Mat<S>& touch_grad(int id) {
    Node& n = nodes_[std::size_t(id)];
    if (n.grad.size() == 0) n.grad = Mat<S>::Zero(n.rows(), n.cols());
    return n.grad;
  }

  const Node& at(int id) const { return nodes_[std::size_t(id)]; }
  Node& at(int id) { return nodes_[std::size_t(id)]; }

  static void require(bool ok, const std::string& msg) {
    if (!ok) throw std::logic_error("tape: " + msg);
  }
  void require_same_shape(int a, int b, const char* what) const {
    require(at(a).rows() == at(b).rows() && at(a).cols() == at(b).cols(),
            std::string(what) + ": shape mismatch");
  }

  void check_finite_value(const Mat<S>& v, const char* what) const {
    check_numeric(v.allFinite(), std::string("tape: non-finite value in ") + what +
                                     " (node " + std::to_string(nodes_.size()) + ")");
  }
  void check_finite_grad(const Mat<S>& g, int id) const {
    check_numeric(g.allFinite(),
                  "tape: non-finite gradient at node " + std::to_string(id) + " (" +
                      op_name(nodes_[std::size_t(id)].op) + ")");
  }

  static const char* op_name(Op op) {
    switch (op) {
      case Op::kConstant: return "constant";
      case Op::kParam: return "param";
      case Op::kMatMul: return "matmul";
      case Op::kMatMulNT: return "matmul_nt";
      case Op::kAdd: return "add";
      case Op::kSub: return "sub";
      case Op::kCMul: return "cmul";
      case Op::kScalarAffine: return "scalar_affine";
      case Op::kAddColVec: return "add_col_vec";
      case Op::kRelu: return "relu";
      case Op::kSigmoid: return "sigmoid";
      case Op::kRowScale: return "row_scale";
      case Op::kLogSoftmaxCols: return "log_softmax_cols";
      case Op::kSparseLinear: return "sparse_linear";
      case Op::kGatherSumCols: return "gather_sum_cols";
      case Op::kColSqnorm: return "col_sqnorm";
      case Op::kBernoulliKl: return "bernoulli_kl_cols";
      case Op::kHingeRank: return "hinge_rank_cols";
      case Op::kStraightThrough: return "straight_through";
      case Op::kColSlice: return "col_slice";
      case Op::kSumAll: return "sum_all";
      case Op::kMeanAll: return "mean_all";
    }
    return "?";
  }

  std::vector<Node> nodes_;
};

}  // namespace rbsh::ad
