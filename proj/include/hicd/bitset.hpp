#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hicd {

/// Fixed-length bitset over example positions, stored as 64-bit words.
/// Bits beyond size() are always zero so popcounts and comparisons stay exact.
class Bitset {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  Bitset() = default;
  explicit Bitset(std::size_t n, bool value = false)
      : n_(n), words_((n + kWordBits - 1) / kWordBits, value ? ~Word{0} : Word{0}) {
    trim();
  }

  static Bitset from_words(std::size_t n, std::vector<Word> words) {
    if (words.size() != (n + kWordBits - 1) / kWordBits) {
      throw std::invalid_argument("Bitset::from_words: word count does not match size");
    }
    Bitset b;
    b.n_ = n;
    b.words_ = std::move(words);
    b.trim();
    return b;
  }

  std::size_t size() const { return n_; }
  std::span<const Word> words() const { return words_; }

  bool test(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  void set(std::size_t i, bool v = true) {
    const Word mask = Word{1} << (i % kWordBits);
    if (v) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }
  void reset(std::size_t i) { set(i, false); }

  std::size_t count() const {
    std::size_t c = 0;
    for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool any() const {
    for (Word w : words_)
      if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  Bitset& operator&=(const Bitset& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  Bitset& operator|=(const Bitset& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  Bitset& operator^=(const Bitset& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
    return *this;
  }
  /// this &= ~o
  Bitset& and_not(const Bitset& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }
  Bitset& flip() {
    for (Word& w : words_) w = ~w;
    trim();
    return *this;
  }

  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }
  friend Bitset operator^(Bitset a, const Bitset& b) { return a ^= b; }
  friend Bitset operator~(Bitset a) { return a.flip(); }
  friend bool operator==(const Bitset& a, const Bitset& b) = default;

  /// |a & b|
  static std::size_t count_and(const Bitset& a, const Bitset& b) {
    a.check(b);
    std::size_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += static_cast<std::size_t>(std::popcount(a.words_[i] & b.words_[i]));
    return c;
  }
  /// |a & ~b|
  static std::size_t count_and_not(const Bitset& a, const Bitset& b) {
    a.check(b);
    std::size_t c = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      c += static_cast<std::size_t>(std::popcount(a.words_[i] & ~b.words_[i]));
    return c;
  }
  /// |a & b & ~c|
  static std::size_t count_and_and_not(const Bitset& a, const Bitset& b, const Bitset& c) {
    a.check(b);
    a.check(c);
    std::size_t r = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      r += static_cast<std::size_t>(std::popcount(a.words_[i] & b.words_[i] & ~c.words_[i]));
    return r;
  }

  template <class Fn>
  void for_each_set(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      Word w = words_[wi];
      while (w) {
        const int bit = std::countr_zero(w);
        fn(wi * kWordBits + static_cast<std::size_t>(bit));
        w &= w - 1;
      }
    }
  }

  std::size_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ n_;
    for (Word w : words_) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }

  /// Lowercase hex of the little-endian byte image; bit i lives in byte i/8.
  std::string to_hex() const;
  static Bitset from_hex(std::size_t n, const std::string& hex);

  /// Little-endian byte image, ceil(n/64)*8 bytes.
  void append_bytes(std::vector<unsigned char>& out) const;
  static Bitset from_bytes(std::size_t n, std::span<const unsigned char> bytes);

 private:
  void trim() {
    if (n_ % kWordBits != 0 && !words_.empty()) {
      words_.back() &= (Word{1} << (n_ % kWordBits)) - 1;
    }
  }
  void check(const Bitset& o) const {
    if (o.n_ != n_) throw std::invalid_argument("Bitset: size mismatch");
  }

  std::size_t n_ = 0;
  std::vector<Word> words_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const { return b.hash(); }
};

}  // namespace hicd
