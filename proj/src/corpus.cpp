#include "rbsh/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"
#include "rbsh/rng.hpp"

namespace rbsh::corpus {

std::vector<std::string> tokenize_and_filter(const RawDocument& doc,
                                             const std::unordered_set<std::string>& stopwords) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !stopwords.contains(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : doc.text) {
    if (std::isalpha(ch))
      cur.push_back(static_cast<char>(std::tolower(ch)));
    else
      flush();
  }
  flush();
  return tokens;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            std::size_t max_terms) {
  check_data(docs.size() >= 2, "build_vocabulary: need at least 2 documents");
  const std::uint32_t n = static_cast<std::uint32_t>(docs.size());

  std::map<std::string, std::uint32_t> df;  // ordered: term order falls out sorted
  std::unordered_set<std::string> seen;
  for (const auto& toks : docs) {
    seen.clear();
    for (const auto& t : toks) seen.insert(t);
    for (const auto& t : seen) ++df[t];
  }

  // hapax legomena out; terms in more than 90% of the documents out
  const double ceiling = 0.9 * n;
  std::vector<std::pair<std::string, std::uint32_t>> kept;
  for (const auto& [term, freq] : df)
    if (freq > 1 && double(freq) <= ceiling) kept.emplace_back(term, freq);

  if (max_terms > 0 && kept.size() > max_terms) {
    // cap at the highest-df terms, ties lexicographic, then restore term order
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(max_terms);
    std::sort(kept.begin(), kept.end());
  }

  check_data(!kept.empty(), "build_vocabulary: vocabulary empty after filtering");

  Vocabulary v;
  v.n_build_docs = n;
  v.terms.reserve(kept.size());
  v.doc_freq.reserve(kept.size());
  for (std::uint32_t i = 0; i < kept.size(); ++i) {
    v.terms.push_back(kept[i].first);
    v.doc_freq.push_back(kept[i].second);
    v.term_to_index.emplace(kept[i].first, i);
  }
  return v;
}

BowVector vectorize_tfidf(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          std::uint32_t n_docs) {
  std::unordered_map<std::uint32_t, std::uint32_t> tf;
  for (const auto& t : tokens) {
    auto it = vocab.term_to_index.find(t);
    if (it != vocab.term_to_index.end()) ++tf[it->second];
  }
  BowVector bow;
  bow.dim = vocab.size();
  bow.entries.reserve(tf.size());
  for (const auto& [idx, count] : tf) {
    const float w =
        float(count) * float(std::log(double(n_docs) / double(vocab.doc_freq[idx])));
    bow.entries.emplace_back(idx, w);
  }
  std::sort(bow.entries.begin(), bow.entries.end());
  return bow;
}

SplitIndices split_dataset(std::uint32_t n_docs, std::uint64_t seed) {
  check_data(n_docs >= 10, "split_dataset: need at least 10 documents");

  std::vector<std::uint32_t> order(n_docs);
  std::iota(order.begin(), order.end(), 0u);
  SplitRng rng = SplitRng(seed).split("split");
  for (std::uint32_t i = n_docs - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }

  const std::uint32_t n_val = n_docs / 10;
  const std::uint32_t n_test = n_docs / 10;
  const std::uint32_t n_train = n_docs - n_val - n_test;

  SplitIndices s;
  s.seed = seed;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

SplitCorpus assemble_split(const std::vector<LabeledVector>& docs, const SplitIndices& idx) {
  SplitCorpus s;
  s.split_seed = idx.seed;
  auto gather = [&](const std::vector<std::uint32_t>& positions) {
    std::vector<LabeledVector> out;
    out.reserve(positions.size());
    for (auto pos : positions) {
      check_data(pos < docs.size(), "assemble_split: position out of range");
      out.push_back(docs[pos]);
    }
    return out;
  };
  s.train = gather(idx.train);
  s.validation = gather(idx.validation);
  s.test = gather(idx.test);
  return s;
}

std::vector<RawDocument> read_jsonl_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_data(in.good(), "cannot open corpus file: " + path);

  std::vector<RawDocument> docs;
  std::unordered_set<std::uint32_t> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    RawDocument d;
    try {
      d.id = j.at("id").get<std::uint32_t>();
      d.text = j.at("text").get<std::string>();
      for (const auto& lab : j.at("labels")) {
        if (lab.is_string())
          d.labels.push_back(lab.get<std::string>());
        else
          d.labels.push_back(lab.dump());
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad document fields: " + e.what());
    }
    check_data(!d.labels.empty(),
               path + ":" + std::to_string(lineno) + ": document has no labels");
    check_data(ids.insert(d.id).second,
               path + ":" + std::to_string(lineno) + ": duplicate document id " +
                   std::to_string(d.id));
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace rbsh::corpus
