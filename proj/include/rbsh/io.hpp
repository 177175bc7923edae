#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbsh/corpus.hpp"
#include "rbsh/sth.hpp"
#include "rbsh/types.hpp"

namespace rbsh::io {

// Binary artifact formats. All integers and floats are little-endian; magics
// are 8 ASCII bytes.

/// "RBSHBOW1": u32 V, u32 n_docs, then per doc u32 nnz + nnz x (u32, f32).
void write_bow_file(const std::string& path, std::uint32_t dim,
                    const std::vector<corpus::BowVector>& docs);
struct BowFile {
  std::uint32_t dim = 0;
  std::vector<corpus::BowVector> docs;
};
BowFile read_bow_file(const std::string& path);

/// "RBSHCODE": u32 m, u32 n, then n packed codes of ceil(m/8) bytes,
/// bit 0 in the least significant bit of byte 0.
void write_codes_file(const std::string& path, const std::vector<HashCode>& codes);
std::vector<HashCode> read_codes_file(const std::string& path);

/// "RBSHTRI1": u32 count, then (u32 anchor, u32 cand1, u32 cand2, f32 s1, f32 s2).
void write_triplets_file(const std::string& path, const std::vector<sth::Triplet>& triplets);
std::vector<sth::Triplet> read_triplets_file(const std::string& path);

/// Vocabulary as term<TAB>df lines, one per term, in index order.
void write_vocab_tsv(const std::string& path, const corpus::Vocabulary& vocab);
corpus::Vocabulary read_vocab_tsv(const std::string& path);

/// "RBSHCKPT": u32 format version, u32 V, u32 m, then named tensors until
/// EOF: u32 name_len, name bytes, u32 rank, u32 dims[rank], f32 data
/// (row-major).
struct NamedTensors {
  std::uint32_t version = 1;
  std::uint32_t vocab = 0;
  std::uint32_t bits = 0;
  std::vector<std::pair<std::string, MatF>> tensors;

  const MatF* find(const std::string& name) const;
  void add(std::string name, MatF value) { tensors.emplace_back(std::move(name), std::move(value)); }
};
void write_checkpoint(const std::string& path, const NamedTensors& ckpt);
NamedTensors read_checkpoint(const std::string& path);

/// Split manifest (JSON): split seed, document order of the BOW file with
/// labels, and the id lists of the three splits.
struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> doc_ids;                   // BOW-file row order
  std::vector<std::vector<std::uint32_t>> doc_labels;   // aligned with doc_ids
  std::vector<std::string> label_names;                 // label id -> name
  std::vector<std::uint32_t> train, validation, test;   // doc ids
  std::uint64_t dropped = 0;

  std::uint32_t row_of(std::uint32_t doc_id) const;  // DataError when unknown
};
void write_split_manifest(const std::string& path, const SplitManifest& m);
SplitManifest read_split_manifest(const std::string& path);

std::string read_file_bytes(const std::string& path);

/// Hex SHA-1 of the git blob framing ("blob <len>\0" + content), matching
/// `git hash-object`.
std::string sha1_git_blob(const std::string& content);
std::string file_git_sha1(const std::string& path);

}  // namespace rbsh::io
