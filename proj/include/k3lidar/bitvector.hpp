#ifndef K3LIDAR_BITVECTOR_HPP
#define K3LIDAR_BITVECTOR_HPP

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "k3lidar/io.hpp"

namespace k3lidar {

// Plain bit sequence with rank/select support. Bits are appended with
// push_back(); rank/select become available after build_index(), which adds a
// cumulative popcount every SUPERBLOCK_BITS bits (64/512 = 12.5% overhead).
// select1 binary-searches the superblock counts and scans one superblock.
class BitVector {
 public:
  static constexpr std::uint64_t SUPERBLOCK_BITS = 512;

  BitVector() { build_index(); }

  explicit BitVector(const std::vector<bool>& bits) {
    words_.resize((bits.size() + 63) / 64, 0);
    n_bits_ = bits.size();
    for (std::uint64_t i = 0; i < bits.size(); ++i)
      if (bits[i]) words_[i / 64] |= 1ULL << (i % 64);
    build_index();
  }

  void push_back(bool bit) {
    if (n_bits_ % 64 == 0) words_.push_back(0);
    if (bit) words_[n_bits_ / 64] |= 1ULL << (n_bits_ % 64);
    ++n_bits_;
    indexed_ = false;
  }

  // Append value in unary: (value-1) zeros followed by a single one.
  void push_unary(std::uint64_t value) {
    if (value == 0) throw std::invalid_argument("unary code needs value >= 1");
    for (std::uint64_t i = 1; i < value; ++i) push_back(false);
    push_back(true);
  }

  void build_index() {
    constexpr std::uint64_t WORDS_PER_SUPER = SUPERBLOCK_BITS / 64;
    std::uint64_t n_super = n_bits_ / SUPERBLOCK_BITS + 1;
    super_ranks_.assign(n_super + 1, 0);
    std::uint64_t ones = 0;
    std::uint64_t next = 0;
    for (std::uint64_t w = 0; w < words_.size(); ++w) {
      if (w % WORDS_PER_SUPER == 0 && w / WORDS_PER_SUPER <= n_super) {
        super_ranks_[w / WORDS_PER_SUPER] = ones;
        next = w / WORDS_PER_SUPER + 1;
      }
      ones += std::popcount(words_[w]);
    }
    for (std::uint64_t s = next; s <= n_super; ++s) super_ranks_[s] = ones;
    n_ones_ = ones;
    indexed_ = true;
  }

  std::uint64_t size() const { return n_bits_; }
  std::uint64_t ones() const { return n_ones_; }
  std::uint64_t zeros() const { return n_bits_ - n_ones_; }
  bool empty() const { return n_bits_ == 0; }

  bool operator[](std::uint64_t i) const {
    return (words_[i / 64] >> (i % 64)) & 1;
  }

  bool access(std::uint64_t i) const {
    if (i >= n_bits_) throw std::out_of_range("BitVector::access");
    return (*this)[i];
  }

  // Number of 1-bits in positions [0, i).
  std::uint64_t rank1(std::uint64_t i) const {
    if (i > n_bits_) throw std::out_of_range("BitVector::rank1");
    check_indexed();
    std::uint64_t n = super_ranks_[i / SUPERBLOCK_BITS];
    std::uint64_t w = (i / SUPERBLOCK_BITS) * (SUPERBLOCK_BITS / 64);
    for (std::uint64_t stop = i / 64; w < stop; ++w)
      n += std::popcount(words_[w]);
    if (i % 64 != 0)
      n += std::popcount(words_[i / 64] & ((1ULL << (i % 64)) - 1));
    return n;
  }

  std::uint64_t rank0(std::uint64_t i) const { return i - rank1(i); }

  // 0-based position of the j-th 1-bit, j is 1-based.
  std::uint64_t select1(std::uint64_t j) const {
    check_indexed();
    if (j == 0 || j > n_ones_) throw std::out_of_range("BitVector::select1");
    // Superblock s covers ones with 1-based ordinals (super_ranks_[s], super_ranks_[s+1]].
    std::uint64_t lo = 0, hi = super_ranks_.size() - 1;
    while (lo + 1 < hi) {
      std::uint64_t mid = (lo + hi) / 2;
      if (super_ranks_[mid] < j)
        lo = mid;
      else
        hi = mid;
    }
    std::uint64_t remaining = j - super_ranks_[lo];
    std::uint64_t w = lo * (SUPERBLOCK_BITS / 64);
    for (;; ++w) {
      std::uint64_t pops = std::popcount(words_[w]);
      if (pops >= remaining) break;
      remaining -= pops;
    }
    std::uint64_t word = words_[w];
    for (std::uint64_t b = 0;; ++b) {
      if (word & 1) {
        if (--remaining == 0) return w * 64 + b;
      }
      word >>= 1;
    }
  }

  bool operator==(const BitVector& other) const {
    if (n_bits_ != other.n_bits_) return false;
    for (std::uint64_t i = 0; i < words_.size(); ++i)
      if (words_[i] != other.words_[i]) return false;
    return true;
  }

  // Layout: bit count (u64 LE), then bits packed LSB-first within bytes,
  // zero-padded to a byte boundary. The rank index is rebuilt on load.
  void serialize(std::ostream& os) const {
    io::write_le<std::uint64_t>(os, n_bits_);
    io::write_packed_words(os, words_, (n_bits_ + 7) / 8);
  }

  static BitVector deserialize(std::istream& is) {
    BitVector bv;
    bv.n_bits_ = io::read_le<std::uint64_t>(is);
    bv.words_ = io::read_packed_words(is, (bv.n_bits_ + 63) / 64,
                                      (bv.n_bits_ + 7) / 8);
    bv.build_index();
    return bv;
  }

  std::uint64_t serialized_size() const { return 8 + (n_bits_ + 7) / 8; }

 private:
  void check_indexed() const {
    if (!indexed_) throw std::logic_error("BitVector: build_index() not called");
  }

  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> super_ranks_;
  std::uint64_t n_bits_ = 0;
  std::uint64_t n_ones_ = 0;
  bool indexed_ = false;
};

}  // namespace k3lidar

#endif  // K3LIDAR_BITVECTOR_HPP
