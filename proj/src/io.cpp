#include "rbsh/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary artifact formats assume a little-endian host");

namespace rbsh::io {

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    check_data(out_.good(), "cannot open for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), std::streamsize(n));
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }
  void magic(const char m[9]) { bytes(m, 8); }
  void close() {
    out_.close();
    check_data(out_.good(), "write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    check_data(in_.good(), "cannot open: " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    check_data(in_.gcount() == std::streamsize(n), "truncated file: " + path_);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  float f32() {
    float v;
    bytes(&v, 4);
    return v;
  }
  void expect_magic(const char m[9]) {
    char got[8];
    bytes(got, 8);
    check_data(std::memcmp(got, m, 8) == 0,
               path_ + ": bad magic (expected " + std::string(m, 8) + ")");
  }
  bool at_eof() { return in_.peek() == std::ifstream::traits_type::eof(); }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void write_bow_file(const std::string& path, std::uint32_t dim,
                    const std::vector<corpus::BowVector>& docs) {
  Writer w(path);
  w.magic("RBSHBOW1");
  w.u32(dim);
  w.u32(std::uint32_t(docs.size()));
  for (const auto& d : docs) {
    check_data(d.dim == dim, "write_bow_file: inconsistent dimension");
    w.u32(std::uint32_t(d.entries.size()));
    for (const auto& [idx, weight] : d.entries) {
      w.u32(idx);
      w.f32(weight);
    }
  }
  w.close();
}

BowFile read_bow_file(const std::string& path) {
  Reader r(path);
  r.expect_magic("RBSHBOW1");
  BowFile f;
  f.dim = r.u32();
  const std::uint32_t n = r.u32();
  f.docs.resize(n);
  for (auto& d : f.docs) {
    d.dim = f.dim;
    const std::uint32_t nnz = r.u32();
    d.entries.resize(nnz);
    for (auto& [idx, weight] : d.entries) {
      idx = r.u32();
      weight = r.f32();
      check_data(idx < f.dim, path + ": term index out of range");
    }
  }
  return f;
}

void write_codes_file(const std::string& path, const std::vector<HashCode>& codes) {
  check_data(!codes.empty(), "write_codes_file: no codes");
  Writer w(path);
  w.magic("RBSHCODE");
  const int m = codes.front().bits();
  w.u32(std::uint32_t(m));
  w.u32(std::uint32_t(codes.size()));
  std::vector<unsigned char> buf(std::size_t(codes.front().packed_bytes()));
  for (const auto& c : codes) {
    check_data(c.bits() == m, "write_codes_file: inconsistent code length");
    c.to_bytes(buf.data());
    w.bytes(buf.data(), buf.size());
  }
  w.close();
}

std::vector<HashCode> read_codes_file(const std::string& path) {
  Reader r(path);
  r.expect_magic("RBSHCODE");
  const std::uint32_t m = r.u32();
  const std::uint32_t n = r.u32();
  check_data(m >= 1 && m <= HashCode::kMaxBits, path + ": unsupported code length");
  std::vector<HashCode> codes;
  codes.reserve(n);
  std::vector<unsigned char> buf((m + 7) / 8);
  for (std::uint32_t i = 0; i < n; ++i) {
    r.bytes(buf.data(), buf.size());
    codes.push_back(HashCode::from_bytes(buf.data(), int(m)));
  }
  return codes;
}

void write_triplets_file(const std::string& path, const std::vector<sth::Triplet>& triplets) {
  Writer w(path);
  w.magic("RBSHTRI1");
  w.u32(std::uint32_t(triplets.size()));
  for (const auto& t : triplets) {
    w.u32(t.anchor);
    w.u32(t.cand1);
    w.u32(t.cand2);
    w.f32(t.s1);
    w.f32(t.s2);
  }
  w.close();
}

std::vector<sth::Triplet> read_triplets_file(const std::string& path) {
  Reader r(path);
  r.expect_magic("RBSHTRI1");
  const std::uint32_t n = r.u32();
  std::vector<sth::Triplet> out(n);
  for (auto& t : out) {
    t.anchor = r.u32();
    t.cand1 = r.u32();
    t.cand2 = r.u32();
    t.s1 = r.f32();
    t.s2 = r.f32();
  }
  return out;
}

void write_vocab_tsv(const std::string& path, const corpus::Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  check_data(out.good(), "cannot open for writing: " + path);
  for (std::uint32_t i = 0; i < vocab.size(); ++i)
    out << vocab.terms[i] << '\t' << vocab.doc_freq[i] << '\n';
  out.close();
  check_data(out.good(), "write failed: " + path);
}

corpus::Vocabulary read_vocab_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_data(in.good(), "cannot open: " + path);
  corpus::Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    check_data(tab != std::string::npos, path + ":" + std::to_string(lineno) + ": missing tab");
    const std::string term = line.substr(0, tab);
    std::uint32_t df = 0;
    try {
      df = std::uint32_t(std::stoul(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad document frequency");
    }
    v.term_to_index.emplace(term, std::uint32_t(v.terms.size()));
    v.terms.push_back(term);
    v.doc_freq.push_back(df);
  }
  check_data(!v.terms.empty(), path + ": empty vocabulary");
  return v;
}

const MatF* NamedTensors::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void write_checkpoint(const std::string& path, const NamedTensors& ckpt) {
  Writer w(path);
  w.magic("RBSHCKPT");
  w.u32(ckpt.version);
  w.u32(ckpt.vocab);
  w.u32(ckpt.bits);
  for (const auto& [name, t] : ckpt.tensors) {
    w.u32(std::uint32_t(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(2);
    w.u32(std::uint32_t(t.rows()));
    w.u32(std::uint32_t(t.cols()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) w.f32(t(i, j));
  }
  w.close();
}

NamedTensors read_checkpoint(const std::string& path) {
  Reader r(path);
  r.expect_magic("RBSHCKPT");
  NamedTensors ckpt;
  ckpt.version = r.u32();
  check_data(ckpt.version == 1, path + ": unsupported checkpoint version");
  ckpt.vocab = r.u32();
  ckpt.bits = r.u32();
  while (!r.at_eof()) {
    const std::uint32_t name_len = r.u32();
    check_data(name_len > 0 && name_len < 4096, path + ": implausible tensor name length");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const std::uint32_t rank = r.u32();
    check_data(rank >= 1 && rank <= 2, path + ": unsupported tensor rank");
    std::uint32_t rows = r.u32();
    std::uint32_t cols = rank == 2 ? r.u32() : 1;
    MatF t(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) t(i, j) = r.f32();
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

std::uint32_t SplitManifest::row_of(std::uint32_t doc_id) const {
  for (std::uint32_t i = 0; i < doc_ids.size(); ++i)
    if (doc_ids[i] == doc_id) return i;
  throw DataError("split manifest: unknown doc id " + std::to_string(doc_id));
}

void write_split_manifest(const std::string& path, const SplitManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["dropped"] = m.dropped;
  j["label_names"] = m.label_names;
  nlohmann::json docs = nlohmann::json::array();
  for (std::size_t i = 0; i < m.doc_ids.size(); ++i)
    docs.push_back({{"id", m.doc_ids[i]}, {"labels", m.doc_labels[i]}});
  j["documents"] = std::move(docs);
  j["splits"] = {{"train", m.train}, {"validation", m.validation}, {"test", m.test}};

  std::ofstream out(path, std::ios::binary);
  check_data(out.good(), "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  out.close();
  check_data(out.good(), "write failed: " + path);
}

SplitManifest read_split_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_data(in.good(), "cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed manifest: " + e.what());
  }
  SplitManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dropped = j.value("dropped", std::uint64_t(0));
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    for (const auto& d : j.at("documents")) {
      m.doc_ids.push_back(d.at("id").get<std::uint32_t>());
      m.doc_labels.push_back(d.at("labels").get<std::vector<std::uint32_t>>());
    }
    m.train = j.at("splits").at("train").get<std::vector<std::uint32_t>>();
    m.validation = j.at("splits").at("validation").get<std::vector<std::uint32_t>>();
    m.test = j.at("splits").at("test").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad manifest fields: " + e.what());
  }
  return m;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_data(in.good(), "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

namespace {

// Compact SHA-1 (FIPS 180-1), enough to hash artifacts for the run manifest.
class Sha1 {
 public:
  void update(const unsigned char* data, std::size_t len) {
    total_ += len;
    while (len > 0) {
      const std::size_t take = std::min(len, std::size_t(64) - fill_);
      std::memcpy(buf_ + fill_, data, take);
      fill_ += take;
      data += take;
      len -= take;
      if (fill_ == 64) {
        process(buf_);
        fill_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bits = total_ * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    const unsigned char zero = 0;
    while (fill_ != 56) update(&zero, 1);
    unsigned char len_be[8];
    for (int i = 0; i < 8; ++i) len_be[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len_be, 8);

    static const char* hexc = "0123456789abcdef";
    std::string out(40, '0');
    for (int i = 0; i < 5; ++i)
      for (int b = 0; b < 4; ++b) {
        const unsigned byte = (h_[i] >> (24 - 8 * b)) & 0xffu;
        out[std::size_t(i * 8 + b * 2)] = hexc[byte >> 4];
        out[std::size_t(i * 8 + b * 2 + 1)] = hexc[byte & 0xf];
      }
    return out;
  }

 private:
  static std::uint32_t rol(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

  void process(const unsigned char* p) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5a827999;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ed9eba1;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8f1bbcdc;
      } else {
        f = b ^ c ^ d;
        k = 0xca62c1d6;
      }
      const std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  std::uint32_t h_[5] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476, 0xc3d2e1f0};
  unsigned char buf_[64];
  std::size_t fill_ = 0;
  std::uint64_t total_ = 0;
};

}  // namespace

std::string sha1_git_blob(const std::string& content) {
  Sha1 h;
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  h.update(reinterpret_cast<const unsigned char*>(header.data()), header.size());
  h.update(reinterpret_cast<const unsigned char*>(content.data()), content.size());
  return h.hex_digest();
}

std::string file_git_sha1(const std::string& path) {
  return sha1_git_blob(read_file_bytes(path));
}

}  // namespace rbsh::io
