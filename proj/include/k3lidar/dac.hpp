#ifndef K3LIDAR_DAC_HPP
#define K3LIDAR_DAC_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "k3lidar/bitvector.hpp"
#include "k3lidar/io.hpp"

namespace k3lidar {

// Packed array of fixed-width (1..32 bit) unsigned values.
class PackedArray {
 public:
  PackedArray() = default;
  explicit PackedArray(unsigned width) : width_(width) {
    if (width == 0 || width > 32) throw std::invalid_argument("chunk width");
  }

  void push_back(std::uint32_t value) {
    std::uint64_t bit = size_ * width_;
    words_.resize((bit + width_ + 63) / 64, 0);
    words_[bit / 64] |= static_cast<std::uint64_t>(value) << (bit % 64);
    if (bit % 64 + width_ > 64)
      words_[bit / 64 + 1] |= static_cast<std::uint64_t>(value) >> (64 - bit % 64);
    ++size_;
  }

  std::uint32_t operator[](std::uint64_t i) const {
    std::uint64_t bit = i * width_;
    std::uint64_t v = words_[bit / 64] >> (bit % 64);
    if (bit % 64 + width_ > 64) v |= words_[bit / 64 + 1] << (64 - bit % 64);
    return static_cast<std::uint32_t>(v & mask());
  }

  std::uint64_t size() const { return size_; }
  unsigned width() const { return width_; }

  bool operator==(const PackedArray& other) const {
    if (size_ != other.size_ || width_ != other.width_) return false;
    for (std::uint64_t i = 0; i < size_; ++i)
      if ((*this)[i] != other[i]) return false;
    return true;
  }

  // chunk count (u64 LE), then chunks packed LSB-first, byte padded.
  void serialize(std::ostream& os) const {
    io::write_le<std::uint64_t>(os, size_);
    io::write_packed_words(os, words_, (size_ * width_ + 7) / 8);
  }

  static PackedArray deserialize(std::istream& is, unsigned width) {
    PackedArray arr(width);
    arr.size_ = io::read_le<std::uint64_t>(is);
    std::uint64_t n_bits = arr.size_ * width;
    arr.words_ = io::read_packed_words(is, (n_bits + 63) / 64, (n_bits + 7) / 8);
    return arr;
  }

  std::uint64_t serialized_size() const { return 8 + (size_ * width_ + 7) / 8; }

 private:
  std::uint64_t mask() const {
    return width_ == 64 ? ~0ULL : (1ULL << width_) - 1;
  }

  std::vector<std::uint64_t> words_;
  std::uint64_t size_ = 0;
  unsigned width_ = 1;
};

// Directly Addressable Codes: each value is split into b-bit chunks, least
// significant chunk at level 0. A continuation bit of 1 at level t means the
// value has more chunks at level t+1; the last level carries no continuation
// bitmap. access() walks levels using rank1 on the continuation bitmaps.
class DacSequence {
 public:
  DacSequence() : DacSequence(2) {}

  explicit DacSequence(unsigned chunk_width) : chunk_width_(chunk_width) {
    if (chunk_width == 0 || chunk_width > 32)
      throw std::invalid_argument("DacSequence: chunk width must be in 1..32");
    levels_.emplace_back(chunk_width_);
    cont_.emplace_back();
  }

  static DacSequence encode(const std::vector<std::uint32_t>& values,
                            unsigned chunk_width) {
    DacSequence seq(chunk_width);
    unsigned max_levels = 1;
    for (std::uint32_t v : values)
      max_levels = std::max(max_levels, seq.chunk_count(v));
    seq.levels_.assign(max_levels, PackedArray(chunk_width));
    seq.cont_.assign(max_levels, BitVector());
    std::vector<std::uint64_t> pending(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) pending[i] = values[i];
    std::vector<std::uint64_t> next;
    std::uint64_t chunk_mask = (1ULL << chunk_width) - 1;
    for (unsigned level = 0; !pending.empty(); ++level) {
      next.clear();
      for (std::uint64_t v : pending) {
        seq.levels_[level].push_back(static_cast<std::uint32_t>(v & chunk_mask));
        std::uint64_t rest = v >> chunk_width;
        bool more = rest != 0;
        if (level + 1 < max_levels) seq.cont_[level].push_back(more);
        if (more) next.push_back(rest);
      }
      pending.swap(next);
    }
    for (auto& bv : seq.cont_) bv.build_index();
    seq.length_ = values.size();
    return seq;
  }

  // Smallest encoded size among chunk widths {2, 4, 8, 16}, computed exactly
  // from the value bit-length histogram; ties go to the narrower width.
  static unsigned choose_chunk_width(const std::vector<std::uint32_t>& values) {
    if (values.empty())
      throw std::invalid_argument("choose_chunk_width: empty sequence");
    std::uint64_t bitlen_hist[33] = {};
    for (std::uint32_t v : values) ++bitlen_hist[bit_length(v)];
    unsigned best_b = 2;
    std::uint64_t best_bits = ~0ULL;
    for (unsigned b : {2u, 4u, 8u, 16u}) {
      // chunks_at[t] = number of values with more than t chunks.
      std::uint64_t total_chunks = 0, cont_bits = 0;
      unsigned n_levels = (32 + b - 1) / b;
      std::vector<std::uint64_t> chunks_at(n_levels, 0);
      for (unsigned len = 0; len <= 32; ++len) {
        if (bitlen_hist[len] == 0) continue;
        unsigned chunks = std::max(1u, (len + b - 1) / b);
        for (unsigned t = 0; t < chunks; ++t) chunks_at[t] += bitlen_hist[len];
      }
      unsigned used_levels = 0;
      for (unsigned t = 0; t < n_levels; ++t)
        if (chunks_at[t] > 0) used_levels = t + 1;
      for (unsigned t = 0; t < used_levels; ++t) {
        total_chunks += chunks_at[t];
        if (t + 1 < used_levels) cont_bits += chunks_at[t];
      }
      std::uint64_t bits = total_chunks * b + cont_bits;
      if (bits < best_bits) {
        best_bits = bits;
        best_b = b;
      }
    }
    return best_b;
  }

  static DacSequence encode_auto(const std::vector<std::uint32_t>& values) {
    return values.empty() ? encode(values, 2)
                          : encode(values, choose_chunk_width(values));
  }

  std::uint32_t access(std::uint64_t i) const {
    if (i >= length_) throw std::out_of_range("DacSequence::access");
    std::uint64_t pos = i;
    std::uint64_t value = 0;
    unsigned shift = 0;
    for (std::size_t level = 0;; ++level) {
      value |= static_cast<std::uint64_t>(levels_[level][pos]) << shift;
      shift += chunk_width_;
      if (level + 1 >= levels_.size() || !cont_[level][pos]) break;
      pos = cont_[level].rank1(pos);
    }
    return static_cast<std::uint32_t>(value);
  }

  std::vector<std::uint32_t> decode_all() const {
    std::vector<std::uint32_t> out(length_);
    for (std::uint64_t i = 0; i < length_; ++i) out[i] = access(i);
    return out;
  }

  std::uint64_t size() const { return length_; }
  unsigned chunk_width() const { return chunk_width_; }
  std::size_t level_count() const { return levels_.size(); }

  bool operator==(const DacSequence& other) const {
    if (length_ != other.length_ || chunk_width_ != other.chunk_width_ ||
        levels_.size() != other.levels_.size())
      return false;
    for (std::size_t t = 0; t < levels_.size(); ++t) {
      if (!(levels_[t] == other.levels_[t])) return false;
      if (t + 1 < levels_.size() && !(cont_[t] == other.cont_[t])) return false;
    }
    return true;
  }

  // length (u64 LE), chunk width (u8), level count (u8), then per level the
  // packed chunks and, except for the last level, the continuation bitmap.
  void serialize(std::ostream& os) const {
    io::write_le<std::uint64_t>(os, length_);
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(chunk_width_));
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(levels_.size()));
    for (std::size_t t = 0; t < levels_.size(); ++t) {
      levels_[t].serialize(os);
      if (t + 1 < levels_.size()) cont_[t].serialize(os);
    }
  }

  static DacSequence deserialize(std::istream& is) {
    std::uint64_t length = io::read_le<std::uint64_t>(is);
    unsigned width = io::read_le<std::uint8_t>(is);
    unsigned n_levels = io::read_le<std::uint8_t>(is);
    if (width == 0 || width > 32 || n_levels == 0)
      throw std::runtime_error("DacSequence: corrupt header");
    DacSequence seq(width);
    seq.length_ = length;
    seq.levels_.clear();
    seq.cont_.assign(n_levels, BitVector());
    for (unsigned t = 0; t < n_levels; ++t) {
      seq.levels_.push_back(PackedArray::deserialize(is, width));
      if (t + 1 < n_levels) seq.cont_[t] = BitVector::deserialize(is);
    }
    return seq;
  }

  std::uint64_t serialized_size() const {
    std::uint64_t n = 8 + 1 + 1;
    for (std::size_t t = 0; t < levels_.size(); ++t) {
      n += levels_[t].serialized_size();
      if (t + 1 < levels_.size()) n += cont_[t].serialized_size();
    }
    return n;
  }

 private:
  unsigned chunk_count(std::uint32_t v) const {
    return std::max(1u, (bit_length(v) + chunk_width_ - 1) / chunk_width_);
  }

  static unsigned bit_length(std::uint32_t v) {
    unsigned len = 0;
    while (v != 0) {
      ++len;
      v >>= 1;
    }
    return len;
  }

  unsigned chunk_width_;
  std::vector<PackedArray> levels_;
  std::vector<BitVector> cont_;  // cont_[last] stays empty
  std::uint64_t length_ = 0;
};

}  // namespace k3lidar

#endif  // K3LIDAR_DAC_HPP
