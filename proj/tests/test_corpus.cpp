#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rbsh/corpus.hpp"
#include "rbsh/rng.hpp"

using namespace rbsh;
using namespace rbsh::corpus;

namespace {

RawDocument doc(std::uint32_t id, std::string text) {
  return RawDocument{id, std::move(text), {"c"}};
}

}  // namespace

TEST_CASE("tokenize lowercases, splits and filters") {
  const std::unordered_set<std::string> stop = {"the"};
  CHECK(tokenize_and_filter(doc(0, "The cat sat"), stop) ==
        std::vector<std::string>{"cat", "sat"});
  CHECK(tokenize_and_filter(doc(1, ""), stop).empty());  // exclusion flag
  const std::unordered_set<std::string> stop_a = {"a"};
  CHECK(tokenize_and_filter(doc(2, "a a a"), stop_a).empty());
  // non-alphabetic separators and single-letter tokens
  CHECK(tokenize_and_filter(doc(3, "don't panic42now, x!"), {}) ==
        std::vector<std::string>{"don", "panic", "now"});
}

TEST_CASE("bundled stopword list is the frozen 179-word asset") {
  const auto& stop = english_stopwords();
  CHECK(stop.size() == 179);
  CHECK(stop.contains("the"));
  CHECK(stop.contains("wouldn't"));
  CHECK(stop.contains("ma"));
  CHECK_FALSE(stop.contains("cat"));
}

TEST_CASE("vocabulary document-frequency filters") {
  // 10 documents; "rare" occurs in exactly 1, "ubiq" in all 10 (100% > 90%),
  // "edge" in exactly 9 (90%, not > 90%), "pair" in 2.
  std::vector<std::vector<std::string>> docs(10);
  docs[0].push_back("rare");
  for (int i = 0; i < 10; ++i) docs[std::size_t(i)].push_back("ubiq");
  for (int i = 0; i < 9; ++i) docs[std::size_t(i)].push_back("edge");
  docs[0].push_back("pair");
  docs[1].push_back("pair");

  const auto v = build_vocabulary(docs);
  CHECK_FALSE(v.term_to_index.contains("rare"));
  CHECK_FALSE(v.term_to_index.contains("ubiq"));
  CHECK(v.term_to_index.contains("edge"));
  CHECK(v.term_to_index.contains("pair"));
  CHECK(v.doc_freq[v.term_to_index.at("edge")] == 9);

  // lexicographic term order and bijective index map
  CHECK(v.terms == std::vector<std::string>{"edge", "pair"});
  for (std::uint32_t i = 0; i < v.size(); ++i) CHECK(v.term_to_index.at(v.terms[i]) == i);
}

TEST_CASE("vocabulary of nothing but hapax terms is a hard error") {
  std::vector<std::vector<std::string>> docs = {{"one"}, {"two"}};
  CHECK_THROWS_AS(build_vocabulary(docs), DataError);
  CHECK_THROWS_AS(build_vocabulary({docs[0]}), DataError);  // < 2 documents
}

TEST_CASE("vocabulary cap keeps the highest-df terms") {
  std::vector<std::vector<std::string>> docs(10);
  for (int i = 0; i < 5; ++i) docs[std::size_t(i)].push_back("high");
  for (int i = 0; i < 3; ++i) docs[std::size_t(i)].push_back("mid");
  for (int i = 0; i < 2; ++i) docs[std::size_t(i)].push_back("low");
  const auto v = build_vocabulary(docs, 2);
  CHECK(v.terms == std::vector<std::string>{"high", "mid"});
}

TEST_CASE("tf-idf weights") {
  Vocabulary v;
  v.terms = {"x", "y"};
  v.term_to_index = {{"x", 0}, {"y", 1}};
  v.doc_freq = {1, 2};
  v.n_build_docs = 2;

  SUBCASE("tf=2, n=2, df=1 gives 2 ln 2") {
    const auto bow = vectorize_tfidf({"x", "x"}, v, 2);
    REQUIRE(bow.entries.size() == 1);
    CHECK(bow.entries[0].first == 0);
    CHECK(bow.entries[0].second == doctest::Approx(1.3863).epsilon(1e-4));
  }
  SUBCASE("ubiquitous term gets zero weight") {
    const auto bow = vectorize_tfidf({"y"}, v, 2);
    REQUIRE(bow.entries.size() == 1);
    CHECK(bow.entries[0].second == doctest::Approx(0.0));
  }
  SUBCASE("out-of-vocabulary tokens are ignored") {
    const auto bow = vectorize_tfidf({"z", "z"}, v, 2);
    CHECK(bow.entries.empty());
  }
}

TEST_CASE("splits are 80/10/10 with the remainder in train") {
  SUBCASE("100 documents") {
    const auto s = split_dataset(100, 7);
    CHECK(s.train.size() == 80);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 10);
  }
  SUBCASE("101 documents") {
    const auto s = split_dataset(101, 7);
    CHECK(s.train.size() == 81);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 10);
  }
  SUBCASE("too few documents") { CHECK_THROWS_AS(split_dataset(5, 7), DataError); }
}

TEST_CASE("splits are deterministic, seed-sensitive, disjoint and exhaustive") {
  const auto a = split_dataset(100, 42);
  const auto b = split_dataset(100, 42);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  const auto c = split_dataset(100, 43);
  CHECK(a.train != c.train);

  std::set<std::uint32_t> seen;
  for (const auto* part : {&a.train, &a.validation, &a.test})
    for (auto i : *part) CHECK(seen.insert(i).second);
  CHECK(seen.size() == 100);
  CHECK(*seen.rbegin() == 99);
}

TEST_CASE("assemble_split materializes disjoint (vector, labels) lists") {
  std::vector<LabeledVector> docs(20);
  for (std::uint32_t i = 0; i < 20; ++i) {
    docs[i].doc_id = 100 + i;
    docs[i].vec.dim = 4;
    docs[i].vec.entries = {{i % 4, 1.0f}};
    docs[i].labels = {i % 3};
  }
  const auto idx = split_dataset(20, 9);
  const auto s = assemble_split(docs, idx);
  CHECK(s.split_seed == 9);
  CHECK(s.train.size() == 16);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 2);
  std::set<std::uint32_t> ids;
  for (const auto* part : {&s.train, &s.validation, &s.test})
    for (const auto& d : *part) CHECK(ids.insert(d.doc_id).second);
  CHECK(ids.size() == 20);
}

TEST_CASE("vocabulary filtering is idempotent") {
  SplitRng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<std::string>> docs(30);
    for (auto& d : docs) {
      const int len = 3 + int(rng.next_below(20));
      for (int i = 0; i < len; ++i)
        d.push_back("w" + std::to_string(rng.next_below(40)));
    }
    const auto v1 = build_vocabulary(docs);

    std::vector<std::vector<std::string>> filtered(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i)
      for (const auto& t : docs[i])
        if (v1.term_to_index.contains(t)) filtered[i].push_back(t);

    const auto v2 = build_vocabulary(filtered);
    CHECK(v1.terms == v2.terms);
    CHECK(v1.doc_freq == v2.doc_freq);
  }
}

TEST_CASE("every kept term satisfies 1 < df <= 0.9 N") {
  SplitRng rng(123);
  std::vector<std::vector<std::string>> docs(25);
  for (auto& d : docs) {
    const int len = 2 + int(rng.next_below(15));
    for (int i = 0; i < len; ++i) d.push_back("t" + std::to_string(rng.next_below(30)));
  }
  const auto v = build_vocabulary(docs);
  for (auto df : v.doc_freq) {
    CHECK(df > 1);
    CHECK(double(df) <= 0.9 * double(docs.size()));
  }
}

TEST_CASE("jsonl corpus reading reports malformed lines") {
  const auto path = std::filesystem::temp_directory_path() / "rbsh_corpus_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id": 0, "text": "hello world", "labels": ["a"]})" << "\n";
    out << "not json\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl_corpus(path.string()),
                       doctest::Contains(":2:"), DataError);
  {
    std::ofstream out(path);
    out << R"({"id": 0, "text": "x", "labels": ["a"]})" << "\n";
    out << R"({"id": 0, "text": "y", "labels": ["b"]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl_corpus(path.string()),
                       doctest::Contains("duplicate"), DataError);
  {
    std::ofstream out(path);
    out << R"({"id": 1, "text": "x", "labels": []})" << "\n";
  }
  CHECK_THROWS_AS(read_jsonl_corpus(path.string()), DataError);
  std::filesystem::remove(path);
}
