#include "hicd/bitset.hpp"

#include <algorithm>

namespace hicd {

void Bitset::append_bytes(std::vector<unsigned char>& out) const {
  for (Word w : words_) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((w >> (8 * b)) & 0xFFU));
  }
}

Bitset Bitset::from_bytes(std::size_t n, std::span<const unsigned char> bytes) {
  const std::size_t nw = (n + kWordBits - 1) / kWordBits;
  if (bytes.size() != nw * 8) throw std::invalid_argument("Bitset::from_bytes: wrong byte count");
  std::vector<Word> words(nw, 0);
  for (std::size_t i = 0; i < nw; ++i) {
    Word w = 0;
    for (int b = 0; b < 8; ++b) w |= Word{bytes[i * 8 + static_cast<std::size_t>(b)]} << (8 * b);
    words[i] = w;
  }
  Bitset out = from_words(n, std::move(words));
  // Reject stray bits past n; a silent trim would break the round-trip contract.
  std::vector<unsigned char> check;
  out.append_bytes(check);
  if (!std::equal(check.begin(), check.end(), bytes.begin())) {
    throw std::invalid_argument("Bitset::from_bytes: bits set beyond size");
  }
  return out;
}

std::string Bitset::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::vector<unsigned char> bytes;
  append_bytes(bytes);
  bytes.resize((n_ + 7) / 8);
  std::string s;
  s.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    s.push_back(kDigits[c >> 4]);
    s.push_back(kDigits[c & 0xF]);
  }
  return s;
}

Bitset Bitset::from_hex(std::size_t n, const std::string& hex) {
  if (hex.size() != ((n + 7) / 8) * 2) throw std::invalid_argument("Bitset::from_hex: wrong length");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw std::invalid_argument("Bitset::from_hex: invalid digit");
  };
  std::vector<unsigned char> bytes(((n + kWordBits - 1) / kWordBits) * 8, 0);
  for (std::size_t i = 0; i < hex.size() / 2; ++i) {
    bytes[i] = static_cast<unsigned char>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return from_bytes(n, bytes);
}

}  // namespace hicd
