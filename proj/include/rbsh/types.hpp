#pragma once

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rbsh {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;

// Error taxonomy. The CLI maps these onto process exit codes:
// usage errors -> 1, DataError -> 2, NumericError -> 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_data(bool ok, const std::string& msg) {
  if (!ok) throw DataError(msg);
}
inline void check_numeric(bool ok, const std::string& msg) {
  if (!ok) throw NumericError(msg);
}

/// Packed binary hash code of up to 128 bits.
///
/// Bit i lives in word i/64 at position i%64, so the little-endian byte
/// serialization puts bit 0 into the least significant bit of byte 0.
/// Unused high bits are kept at zero.
class HashCode {
 public:
  static constexpr int kMaxBits = 128;

  HashCode() = default;
  explicit HashCode(int nbits) : nbits_(static_cast<std::uint16_t>(nbits)) {
    check_data(nbits >= 1 && nbits <= kMaxBits, "hash code length out of range");
  }

  int bits() const { return nbits_; }
  int packed_bytes() const { return (nbits_ + 7) / 8; }

  bool get(int i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(int i, bool v) {
    const std::uint64_t m = std::uint64_t(1) << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

  const std::array<std::uint64_t, 2>& words() const { return words_; }

  void to_bytes(unsigned char* out) const {
    for (int b = 0; b < packed_bytes(); ++b)
      out[b] = static_cast<unsigned char>(words_[b >> 3] >> ((b & 7) * 8));
  }
  static HashCode from_bytes(const unsigned char* in, int nbits) {
    HashCode c(nbits);
    for (int b = 0; b < c.packed_bytes(); ++b)
      c.words_[b >> 3] |= std::uint64_t(in[b]) << ((b & 7) * 8);
    // mask padding bits of the last byte
    const int tail = nbits & 63;
    if (tail) c.words_[nbits >> 6] &= (std::uint64_t(1) << tail) - 1;
    if (nbits <= 64) c.words_[1] = 0;
    return c;
  }

  std::string to_string() const {
    std::string s(nbits_, '0');
    for (int i = 0; i < nbits_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  bool operator==(const HashCode&) const = default;

  friend int hamming(const HashCode& a, const HashCode& b);

 private:
  std::array<std::uint64_t, 2> words_{0, 0};
  std::uint16_t nbits_ = 0;
};

/// Number of differing bits, popcount of the XOR.
inline int hamming(const HashCode& a, const HashCode& b) {
  check_data(a.nbits_ == b.nbits_, "hamming: code length mismatch");
  return std::popcount(a.words_[0] ^ b.words_[0]) +
         std::popcount(a.words_[1] ^ b.words_[1]);
}

}  // namespace rbsh
