#include "rbsh/hamming.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <queue>

namespace rbsh::ham {

CodeIndex CodeIndex::build(std::vector<HashCode> codes, std::vector<std::uint32_t> ids,
                           std::vector<std::vector<std::uint32_t>> labels) {
  check_data(!codes.empty(), "CodeIndex: empty");
  check_data(codes.size() == ids.size() && codes.size() == labels.size(),
             "CodeIndex: codes/ids/labels size mismatch");
  const int m = codes.front().bits();
  for (const auto& c : codes) check_data(c.bits() == m, "CodeIndex: mixed code lengths");
  CodeIndex idx;
  idx.codes_ = std::move(codes);
  idx.ids_ = std::move(ids);
  idx.labels_ = std::move(labels);
  for (auto& l : idx.labels_) std::sort(l.begin(), l.end());
  return idx;
}

RetrievalResult knn_query(const CodeIndex& index, const HashCode& query,
                          std::uint32_t query_id, int k) {
  check_data(k >= 1, "knn_query: k must be positive");
  check_data(std::size_t(k) < index.size(), "knn_query: k must be smaller than the index");

  // bounded max-heap of (distance, id), worst on top
  using Entry = std::pair<int, std::uint32_t>;
  std::priority_queue<Entry> heap;
  const auto& codes = index.codes();
  const auto& ids = index.ids();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (ids[i] == query_id) continue;
    const Entry e{hamming(query, codes[i]), ids[i]};
    if (int(heap.size()) < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }

  RetrievalResult r;
  r.query_id = query_id;
  r.ids.resize(heap.size());
  r.distances.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    r.distances[i] = heap.top().first;
    r.ids[i] = heap.top().second;
    heap.pop();
  }
  return r;
}

double prec_at_k(const RetrievalResult& result, const std::vector<std::uint32_t>& query_labels,
                 const CodeIndex& index) {
  check_data(!query_labels.empty(), "prec_at_k: query has no labels");
  check_data(!result.ids.empty(), "prec_at_k: empty result");

  std::vector<std::uint32_t> q = query_labels;
  std::sort(q.begin(), q.end());

  // id -> position lookup built once per call is wasteful for bulk use;
  // evaluate() below goes through positions directly.
  std::size_t relevant = 0;
  for (std::uint32_t id : result.ids) {
    const auto& ids = index.ids();
    const auto it = std::find(ids.begin(), ids.end(), id);
    check_data(it != ids.end(), "prec_at_k: result id not in index");
    const auto& labels = index.labels_of(std::size_t(it - ids.begin()));
    if (std::ranges::any_of(q, [&](std::uint32_t l) {
          return std::binary_search(labels.begin(), labels.end(), l);
        }))
      ++relevant;
  }
  return double(relevant) / double(result.ids.size());
}

EvalResult evaluate(const CodeIndex& index, const std::vector<HashCode>& query_codes,
                    const std::vector<std::uint32_t>& query_ids,
                    const std::vector<std::vector<std::uint32_t>>& query_labels, int k) {
  check_data(query_codes.size() == query_ids.size() && query_codes.size() == query_labels.size(),
             "evaluate: query array size mismatch");
  check_data(!query_codes.empty(), "evaluate: no queries");

  std::unordered_map<std::uint32_t, std::size_t> pos;
  pos.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) pos.emplace(index.ids()[i], i);

  EvalResult out;
  out.query_ids = query_ids;
  out.per_query.resize(query_codes.size());
  double sum = 0;
  for (std::size_t qi = 0; qi < query_codes.size(); ++qi) {
    const RetrievalResult r = knn_query(index, query_codes[qi], query_ids[qi], k);
    std::vector<std::uint32_t> ql = query_labels[qi];
    std::sort(ql.begin(), ql.end());
    std::size_t relevant = 0;
    for (std::uint32_t id : r.ids) {
      const auto& labels = index.labels_of(pos.at(id));
      if (std::ranges::any_of(ql, [&](std::uint32_t l) {
            return std::binary_search(labels.begin(), labels.end(), l);
          }))
        ++relevant;
    }
    out.per_query[qi] = double(relevant) / double(r.ids.size());
    sum += out.per_query[qi];
  }
  out.mean = sum / double(out.per_query.size());
  return out;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out.push_back(c);
    if (c == '"') out.push_back('"');
  }
  out.push_back('"');
  return out;
}

}  // namespace

void export_analysis(std::ostream& csv, const corpus::Vocabulary& vocab,
                     std::uint32_t n_docs_total, const model::ModelParams<float>& params,
                     const std::vector<corpus::BowVector>& docs) {
  const auto v_sz = vocab.size();
  check_data(Eigen::Index(v_sz) == params.vocab(), "export_analysis: vocabulary size mismatch");

  // mean word-level reconstruction log prob over documents containing the word,
  // deterministic codes, no noise
  std::vector<double> log_prob_sum(v_sz, 0.0);
  std::vector<std::uint32_t> containing(v_sz, 0);
  const auto cache = model::make_decoder_cache(params);
  for (const auto& d : docs) {
    const VecF q = model::encode(d, params);
    const auto enc = model::sample_code(q, model::SampleMode::kDeterministic);
    VecF z(q.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = enc.code.get(int(i)) ? 1.0f : 0.0f;
    const VecF lp = model::decoder_word_log_probs(z, params, cache);
    for (const auto& [idx, w] : d.entries) {
      log_prob_sum[idx] += double(lp[Eigen::Index(idx)]);
      ++containing[idx];
    }
  }

  csv << std::setprecision(12);
  csv << "term,idf,importance,mean_recon_log_prob\r\n";
  for (std::uint32_t t = 0; t < v_sz; ++t) {
    const double idf = std::log(double(n_docs_total) / double(vocab.doc_freq[t]));
    const double imp = double(model::stable_sigmoid(params.E_imp(Eigen::Index(t), 0)));
    csv << csv_quote(vocab.terms[t]) << ',' << idf << ',' << imp << ',';
    if (containing[t] > 0) csv << log_prob_sum[t] / double(containing[t]);
    csv << "\r\n";
  }
}

}  // namespace rbsh::ham
