#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rbsh/types.hpp"

namespace rbsh::corpus {

struct RawDocument {
  std::uint32_t id = 0;
  std::string text;
  std::vector<std::string> labels;  // at least one class identifier
};

struct Vocabulary {
  std::vector<std::string> terms;  // lexicographic order
  std::unordered_map<std::string, std::uint32_t> term_to_index;
  std::vector<std::uint32_t> doc_freq;  // per term, over the build corpus
  std::uint32_t n_build_docs = 0;       // corpus size the df filters were applied to

  std::uint32_t size() const { return static_cast<std::uint32_t>(terms.size()); }
};

/// Sparse TF-IDF document vector. Entries are sorted by term index.
struct BowVector {
  std::vector<std::pair<std::uint32_t, float>> entries;
  std::uint32_t dim = 0;

  bool empty() const { return entries.empty(); }
  double squared_norm() const {
    double s = 0;
    for (const auto& [i, w] : entries) s += double(w) * w;
    return s;
  }
};

struct LabeledVector {
  std::uint32_t doc_id = 0;
  BowVector vec;
  std::vector<std::uint32_t> labels;  // sorted label ids
};

struct SplitIndices {
  std::vector<std::uint32_t> train, validation, test;  // positions into the doc array
  std::uint64_t seed = 0;
};

struct SplitCorpus {
  std::vector<LabeledVector> train, validation, test;
  std::uint64_t split_seed = 0;
};

const std::unordered_set<std::string>& english_stopwords();

/// Lowercases, splits on non-alphabetic characters, drops single-letter
/// tokens and stopwords. An empty result flags the document for exclusion.
std::vector<std::string> tokenize_and_filter(const RawDocument& doc,
                                             const std::unordered_set<std::string>& stopwords);

/// Builds the filtered vocabulary: hapax legomena and terms in more than 90%
/// of the documents are removed. Empty token lists still count towards the
/// document total, which keeps vocabulary filtering idempotent.
/// max_terms > 0 caps the vocabulary at the terms with highest document
/// frequency (ties broken lexicographically).
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            std::size_t max_terms = 0);

/// weight(t) = tf(t) * ln(n_docs / df(t)); out-of-vocabulary tokens ignored.
BowVector vectorize_tfidf(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          std::uint32_t n_docs);

/// Deterministic 80/10/10 split; train receives the rounding remainder.
SplitIndices split_dataset(std::uint32_t n_docs, std::uint64_t seed);

/// Materializes the split as (vector, labels) lists.
SplitCorpus assemble_split(const std::vector<LabeledVector>& docs, const SplitIndices& idx);

/// Parses a JSON-lines corpus: one {"id", "text", "labels"} object per line.
/// Malformed lines raise DataError with the 1-based line number.
std::vector<RawDocument> read_jsonl_corpus(const std::string& path);

}  // namespace rbsh::corpus
