#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rbsh/corpus.hpp"
#include "rbsh/types.hpp"

namespace rbsh::sth {

struct SthCode {
  std::uint32_t doc_id = 0;
  HashCode code;
};

struct Triplet {
  std::uint32_t anchor = 0, cand1 = 0, cand2 = 0;
  float s1 = 0, s2 = 0;  // pseudo similarities of (anchor,cand1) and (anchor,cand2)
};

struct SthOptions {
  int k_graph = 25;
  std::uint64_t seed = 0;
  // Above this corpus size the Lanczos path replaces the dense eigensolver.
  Eigen::Index dense_threshold = 4096;
};

/// Spectral codes of the weak labeller: cosine k-NN graph, unnormalized
/// Laplacian, eigenvectors of the smallest non-trivial eigenvalues, each
/// binarized at its median with exact balance (floor(n/2) ones per bit).
std::vector<HashCode> compute_sth_codes(const std::vector<corpus::BowVector>& vectors,
                                        int m_sth, const SthOptions& opts = {});

/// -sqrt(Hamming distance): the (negated) Euclidean distance between codes
/// viewed as {0,1} coordinate vectors. 0 iff the codes are identical.
double pairwise_similarity(const HashCode& a, const HashCode& b);

/// Code collection addressable by document id.
struct CodeSet {
  std::vector<std::uint32_t> ids;
  std::vector<HashCode> codes;
  std::unordered_map<std::uint32_t, std::uint32_t> pos;

  static CodeSet make(std::vector<std::uint32_t> ids, std::vector<HashCode> codes);
  const HashCode& by_id(std::uint32_t id) const;
  std::size_t size() const { return ids.size(); }
};

/// Ranks candidates by similarity to the anchor (descending, ties by
/// ascending doc id) and returns the ids at ranks stride, 2*stride, ..., top.
/// The anchor itself is never a candidate. When fewer than `top` candidates
/// exist, the same stride is applied over all available ranks.
std::vector<std::uint32_t> select_neighbours(const HashCode& anchor_code,
                                             std::uint32_t anchor_id,
                                             const CodeSet& candidates, int top = 200,
                                             int stride = 10);

/// One triplet per unordered pair of neighbours, annotated with both
/// similarities to the anchor.
std::vector<Triplet> generate_triplets(const HashCode& anchor_code, std::uint32_t anchor_id,
                                       const std::vector<std::uint32_t>& neighbour_ids,
                                       const CodeSet& candidates);

namespace detail {

/// Smallest eigenpairs of a sparse symmetric PSD matrix via Lanczos with full
/// reorthogonalization. `deflate` vectors (orthonormal) are projected out of
/// the Krylov space; their eigenpairs are not reported.
/// Throws NumericError when the requested pairs fail to converge.
void smallest_eigenpairs(const Eigen::SparseMatrix<double>& L, int n_pairs,
                         const std::vector<Eigen::VectorXd>& deflate, std::uint64_t seed,
                         Eigen::VectorXd& eigenvalues, Eigen::MatrixXd& eigenvectors);

}  // namespace detail

}  // namespace rbsh::sth
