#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbsh/corpus.hpp"
#include "rbsh/model.hpp"
#include "rbsh/types.hpp"

namespace rbsh::ham {

/// Immutable retrieval pool: packed codes with document ids and label sets.
class CodeIndex {
 public:
  static CodeIndex build(std::vector<HashCode> codes, std::vector<std::uint32_t> ids,
                         std::vector<std::vector<std::uint32_t>> labels);

  std::size_t size() const { return codes_.size(); }
  int bits() const { return codes_.empty() ? 0 : codes_.front().bits(); }
  const std::vector<HashCode>& codes() const { return codes_; }
  const std::vector<std::uint32_t>& ids() const { return ids_; }
  const std::vector<std::uint32_t>& labels_of(std::size_t pos) const { return labels_[pos]; }

 private:
  std::vector<HashCode> codes_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::vector<std::uint32_t>> labels_;  // sorted label ids
};

struct RetrievalResult {
  std::uint32_t query_id = 0;
  std::vector<std::uint32_t> ids;  // ranked, nearest first
  std::vector<int> distances;      // non-decreasing
};

/// Exact k-NN by full scan. Ties broken by ascending doc id; a pool document
/// with the query's id is excluded.
RetrievalResult knn_query(const CodeIndex& index, const HashCode& query,
                          std::uint32_t query_id, int k = 100);

/// Fraction of retrieved documents sharing at least one label with the query.
double prec_at_k(const RetrievalResult& result, const std::vector<std::uint32_t>& query_labels,
                 const CodeIndex& index);

struct EvalResult {
  std::vector<std::uint32_t> query_ids;
  std::vector<double> per_query;
  double mean = 0;
};

/// Prec@k of every query against the index, plus the corpus mean.
EvalResult evaluate(const CodeIndex& index, const std::vector<HashCode>& query_codes,
                    const std::vector<std::uint32_t>& query_ids,
                    const std::vector<std::vector<std::uint32_t>>& query_labels, int k = 100);

/// Per-word analysis table backing the importance/reconstruction figures:
/// term, IDF, sigmoid(E_imp), and the mean word-level reconstruction log
/// probability over the given documents that contain the term (empty when
/// no document does). RFC-4180 CSV with a header row.
void export_analysis(std::ostream& csv, const corpus::Vocabulary& vocab,
                     std::uint32_t n_docs_total, const model::ModelParams<float>& params,
                     const std::vector<corpus::BowVector>& docs);

}  // namespace rbsh::ham
