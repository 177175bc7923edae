#include "rbsh/sth.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <queue>

#include "rbsh/rng.hpp"

namespace rbsh::sth {

namespace {

// Cosine k-NN edges via an inverted index over terms; O(sum_t df_t^2) work.
std::vector<Eigen::Triplet<double>> knn_edges(const std::vector<corpus::BowVector>& vecs,
                                              int k) {
  const std::uint32_t n = static_cast<std::uint32_t>(vecs.size());
  std::vector<double> inv_norm(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double nrm = std::sqrt(vecs[i].squared_norm());
    check_data(nrm > 0, "compute_sth_codes: document " + std::to_string(i) +
                            " has an empty vector");
    inv_norm[i] = 1.0 / nrm;
  }

  std::uint32_t dim = 0;
  for (const auto& v : vecs) dim = std::max(dim, v.dim);
  std::vector<std::vector<std::pair<std::uint32_t, float>>> postings(dim);
  for (std::uint32_t i = 0; i < n; ++i)
    for (const auto& [t, w] : vecs[i].entries) postings[t].emplace_back(i, w);

  std::vector<Eigen::Triplet<double>> edges;
  std::vector<double> acc(n, 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::uint32_t i = 0; i < n; ++i) {
    touched.clear();
    for (const auto& [t, w] : vecs[i].entries) {
      for (const auto& [j, wj] : postings[t]) {
        if (acc[j] == 0.0 && j != i) touched.push_back(j);
        if (j != i) acc[j] += double(w) * double(wj);
      }
    }
    cand.clear();
    cand.reserve(touched.size());
    for (std::uint32_t j : touched) {
      const double sim = acc[j] * inv_norm[i] * inv_norm[j];
      if (sim > 0) cand.emplace_back(sim, j);
      acc[j] = 0.0;
    }
    const std::size_t keep = std::min<std::size_t>(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t r = 0; r < keep; ++r)
      edges.emplace_back(int(i), int(cand[r].second), cand[r].first);
  }
  return edges;
}

std::vector<int> connected_components(std::uint32_t n,
                                      const Eigen::SparseMatrix<double>& adj) {
  std::vector<int> comp(n, -1);
  int c = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::uint32_t u = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double>::InnerIterator it(adj, u); it; ++it) {
        const auto v = static_cast<std::uint32_t>(it.row());
        if (comp[v] == -1) {
          comp[v] = c;
          stack.push_back(v);
        }
      }
    }
    ++c;
  }
  return comp;
}

// Orthonormal vectors that are constant within components and, together with
// the global constant vector, span the Laplacian nullspace. Components are
// ordered by their smallest member, contrasts are Helmert-style.
std::vector<Eigen::VectorXd> component_contrasts(const std::vector<int>& comp, int n_comp) {
  const auto n = static_cast<Eigen::Index>(comp.size());
  std::vector<double> size(n_comp, 0.0);
  for (int c : comp) size[c] += 1.0;

  std::vector<Eigen::VectorXd> out;
  double cum = size[0];
  for (int c = 1; c < n_comp; ++c) {
    Eigen::VectorXd v(n);
    const double a = std::sqrt(size[c] / (cum * (cum + size[c])));
    const double b = -std::sqrt(cum / (size[c] * (cum + size[c])));
    for (Eigen::Index i = 0; i < n; ++i)
      v[i] = comp[i] < c ? a : (comp[i] == c ? b : 0.0);
    out.push_back(std::move(v));
    cum += size[c];
  }
  return out;
}

// Exact-balance median binarization: the floor(n/2) largest entries (ties by
// ascending position) become ones.
void binarize_column(const Eigen::VectorXd& v, int bit, std::vector<HashCode>& codes) {
  const auto n = static_cast<std::uint32_t>(v.size());
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (v[a] != v[b]) return v[a] < v[b];
    return a < b;
  });
  for (std::uint32_t r = n - n / 2; r < n; ++r) codes[order[r]].set(bit, true);
}

// Deterministic sign: the entry of largest magnitude (first on ties) is positive.
void canonicalize_sign(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

}  // namespace

std::vector<HashCode> compute_sth_codes(const std::vector<corpus::BowVector>& vectors,
                                        int m_sth, const SthOptions& opts) {
  const auto n = static_cast<std::uint32_t>(vectors.size());
  check_data(m_sth >= 1 && m_sth <= HashCode::kMaxBits, "compute_sth_codes: bad code length");
  check_data(n >= std::uint32_t(m_sth) + 1,
             "compute_sth_codes: need at least m_sth + 1 documents");
  check_data(opts.k_graph >= 1 && std::uint32_t(opts.k_graph) < n,
             "compute_sth_codes: k_graph must be in [1, n)");

  auto edges = knn_edges(vectors, opts.k_graph);

  // symmetrize with max(), build L = D - A
  const std::size_t n_directed = edges.size();
  edges.reserve(2 * n_directed);
  for (std::size_t e = 0; e < n_directed; ++e)
    edges.emplace_back(edges[e].col(), edges[e].row(), edges[e].value());
  Eigen::SparseMatrix<double> adj(n, n);
  adj.setFromTriplets(edges.begin(), edges.end(),
                      [](const double& x, const double& y) { return std::max(x, y); });

  const std::vector<int> comp = connected_components(n, adj);
  const int n_comp = 1 + *std::max_element(comp.begin(), comp.end());
  if (n_comp > 1)
    std::cerr << "[sth] warning: similarity graph has " << n_comp
              << " connected components; proceeding per component\n";

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < adj.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(adj, j); it; ++it)
      degree[it.row()] += it.value();
  Eigen::SparseMatrix<double> lap = -adj;
  for (std::uint32_t i = 0; i < n; ++i) lap.coeffRef(i, i) += degree[i];
  lap.makeCompressed();

  // The nullspace is known exactly from the components: the constant vector
  // plus one contrast per extra component. Contrasts count as non-trivial
  // structure (they encode component membership); the constant does not.
  std::vector<Eigen::VectorXd> nullspace = component_contrasts(comp, n_comp);
  const int n_from_spectrum = std::max(0, m_sth - int(nullspace.size()));

  std::vector<Eigen::VectorXd> basis;
  for (int i = 0; i < std::min<int>(m_sth, int(nullspace.size())); ++i)
    basis.push_back(nullspace[i]);

  if (n_from_spectrum > 0) {
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    if (Eigen::Index(n) <= opts.dense_threshold) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(lap)};
      check_numeric(solver.info() == Eigen::Success, "compute_sth_codes: eigensolver failed");
      // skip the nullspace (n_comp smallest), take the next n_from_spectrum
      evals = solver.eigenvalues().segment(n_comp, n_from_spectrum);
      evecs = solver.eigenvectors().middleCols(n_comp, n_from_spectrum);
    } else {
      std::vector<Eigen::VectorXd> deflate = nullspace;
      deflate.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n))));
      detail::smallest_eigenpairs(lap, n_from_spectrum, deflate, opts.seed, evals, evecs);
    }
    for (int i = 0; i < n_from_spectrum; ++i) basis.emplace_back(evecs.col(i));
  }

  std::vector<HashCode> codes(n, HashCode(m_sth));
  for (int bit = 0; bit < m_sth; ++bit) {
    canonicalize_sign(basis[bit]);
    binarize_column(basis[bit], bit, codes);
  }
  return codes;
}

double pairwise_similarity(const HashCode& a, const HashCode& b) {
  return -std::sqrt(double(hamming(a, b)));
}

CodeSet CodeSet::make(std::vector<std::uint32_t> ids, std::vector<HashCode> codes) {
  check_data(ids.size() == codes.size(), "CodeSet: ids/codes size mismatch");
  CodeSet s;
  s.ids = std::move(ids);
  s.codes = std::move(codes);
  for (std::uint32_t i = 0; i < s.ids.size(); ++i) s.pos.emplace(s.ids[i], i);
  check_data(s.pos.size() == s.ids.size(), "CodeSet: duplicate doc ids");
  return s;
}

const HashCode& CodeSet::by_id(std::uint32_t id) const {
  auto it = pos.find(id);
  check_data(it != pos.end(), "CodeSet: unknown doc id " + std::to_string(id));
  return codes[it->second];
}

std::vector<std::uint32_t> select_neighbours(const HashCode& anchor_code,
                                             std::uint32_t anchor_id, const CodeSet& candidates,
                                             int top, int stride) {
  check_data(top >= 1 && stride >= 1, "select_neighbours: top and stride must be positive");

  std::vector<std::pair<double, std::uint32_t>> ranked;  // (-similarity, id)
  ranked.reserve(candidates.size());
  for (std::uint32_t i = 0; i < candidates.size(); ++i) {
    if (candidates.ids[i] == anchor_id) continue;
    ranked.emplace_back(-pairwise_similarity(anchor_code, candidates.codes[i]),
                        candidates.ids[i]);
  }
  std::sort(ranked.begin(), ranked.end());

  const int limit = std::min<int>(top, int(ranked.size()));
  std::vector<std::uint32_t> out;
  for (int rank = stride; rank <= limit; rank += stride)
    out.push_back(ranked[rank - 1].second);
  return out;
}

std::vector<Triplet> generate_triplets(const HashCode& anchor_code, std::uint32_t anchor_id,
                                       const std::vector<std::uint32_t>& neighbour_ids,
                                       const CodeSet& candidates) {
  check_data(neighbour_ids.size() >= 2, "generate_triplets: need at least 2 neighbours");
  std::vector<Triplet> out;
  out.reserve(neighbour_ids.size() * (neighbour_ids.size() - 1) / 2);
  std::vector<float> sim(neighbour_ids.size());
  for (std::size_t i = 0; i < neighbour_ids.size(); ++i)
    sim[i] = float(pairwise_similarity(anchor_code, candidates.by_id(neighbour_ids[i])));
  for (std::size_t i = 0; i < neighbour_ids.size(); ++i)
    for (std::size_t j = i + 1; j < neighbour_ids.size(); ++j)
      out.push_back({anchor_id, neighbour_ids[i], neighbour_ids[j], sim[i], sim[j]});
  return out;
}

namespace detail {

void smallest_eigenpairs(const Eigen::SparseMatrix<double>& L, int n_pairs,
                         const std::vector<Eigen::VectorXd>& deflate, std::uint64_t seed,
                         Eigen::VectorXd& eigenvalues, Eigen::MatrixXd& eigenvectors) {
  const Eigen::Index n = L.rows();
  check_numeric(n_pairs >= 1 && Eigen::Index(n_pairs) < n, "smallest_eigenpairs: bad n_pairs");

  const int max_dim = int(std::min<Eigen::Index>(n - Eigen::Index(deflate.size()),
                                                 std::max(6 * n_pairs + 60, 120)));
  check_numeric(max_dim > n_pairs, "smallest_eigenpairs: problem too small after deflation");

  SplitRng rng = SplitRng(seed).split("lanczos");
  Eigen::MatrixXd v_basis(n, max_dim);
  Eigen::VectorXd alpha(max_dim), beta(max_dim);

  auto project_out = [&](Eigen::VectorXd& w, int upto) {
    for (const auto& d : deflate) w -= d.dot(w) * d;
    // two passes of classical Gram-Schmidt against the Krylov basis
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < upto; ++j) w -= v_basis.col(j).dot(w) * v_basis.col(j);
  };

  auto random_unit = [&](int upto) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.next_gaussian();
    project_out(w, upto);
    const double nrm = w.norm();
    check_numeric(nrm > 1e-12, "smallest_eigenpairs: cannot find new direction");
    return Eigen::VectorXd(w / nrm);
  };

  v_basis.col(0) = random_unit(0);
  double beta_prev = 0;
  int k = 0;
  const double tol = 1e-8;

  for (k = 0; k < max_dim; ++k) {
    Eigen::VectorXd w = L * v_basis.col(k);
    alpha[k] = v_basis.col(k).dot(w);
    w -= alpha[k] * v_basis.col(k);
    if (k > 0) w -= beta_prev * v_basis.col(k - 1);
    project_out(w, k + 1);
    const double b = w.norm();

    const int dim = k + 1;
    if (dim >= n_pairs + 2 || dim == max_dim || b < 1e-12) {
      // Ritz values/residuals from the tridiagonal section
      Eigen::MatrixXd t_mat = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) {
        t_mat(i, i) = alpha[i];
        if (i + 1 < dim) t_mat(i, i + 1) = t_mat(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t_mat);
      check_numeric(es.info() == Eigen::Success, "smallest_eigenpairs: tridiagonal solve failed");
      bool converged = dim > n_pairs;
      for (int i = 0; i < n_pairs && converged; ++i)
        if (b * std::abs(es.eigenvectors()(dim - 1, i)) > tol) converged = false;

      if (converged || dim == max_dim || b < 1e-12) {
        if (!converged && dim == max_dim)
          throw NumericError("smallest_eigenpairs: Lanczos did not converge in " +
                             std::to_string(max_dim) + " iterations");
        eigenvalues = es.eigenvalues().head(n_pairs);
        eigenvectors.noalias() =
            v_basis.leftCols(dim) * es.eigenvectors().leftCols(n_pairs);
        for (int i = 0; i < n_pairs; ++i) eigenvectors.col(i).normalize();
        return;
      }
    }

    if (b < 1e-12) {
      // invariant subspace hit early: restart with a fresh direction
      v_basis.col(k + 1) = random_unit(k + 1);
      beta[k] = 0;
      beta_prev = 0;
    } else {
      beta[k] = b;
      beta_prev = b;
      v_basis.col(k + 1) = w / b;
    }
  }
  throw NumericError("smallest_eigenpairs: Lanczos did not converge");
}

}  // namespace detail

}  // namespace rbsh::sth
