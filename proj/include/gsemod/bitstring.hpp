#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsemod {

// Fixed-length bit string. Bit index k (0-based) is position k+1, i.e. the
// k-th character of the textual form, read left to right.
class BitString {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitString() = default;

  explicit BitString(std::size_t n, bool value = false)
      : size_(n), words_(word_count(n), value ? ~Word{0} : Word{0}) {
    trim();
  }

  // Parses '0'/'1' characters without separators.
  static BitString from_string(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("bit string must have at least one position");
    BitString x(text.size());
    for (std::size_t k = 0; k < text.size(); ++k) {
      if (text[k] == '1') {
        x.set(k);
      } else if (text[k] != '0') {
        throw std::invalid_argument("bit string contains a character other than '0'/'1': " +
                                    std::string(text));
      }
    }
    return x;
  }

  // Low `n` bits of `mask`, bit k of the mask being index k.
  static BitString from_mask(std::size_t n, std::uint64_t mask) {
    if (n > kWordBits) throw std::invalid_argument("from_mask supports at most 64 bits");
    BitString x(n);
    if (n > 0) x.words_[0] = n == kWordBits ? mask : (mask & ((Word{1} << n) - 1));
    return x;
  }

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t k) const noexcept { return (words_[k / kWordBits] >> (k % kWordBits)) & 1U; }
  bool operator[](std::size_t k) const noexcept { return test(k); }

  void set(std::size_t k, bool value = true) noexcept {
    const Word bit = Word{1} << (k % kWordBits);
    if (value) {
      words_[k / kWordBits] |= bit;
    } else {
      words_[k / kWordBits] &= ~bit;
    }
  }

  void flip(std::size_t k) noexcept { words_[k / kWordBits] ^= Word{1} << (k % kWordBits); }

  std::size_t count() const noexcept {
    std::size_t total = 0;
    for (Word w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  BitString complement() const {
    BitString x = *this;
    for (Word& w : x.words_) w = ~w;
    x.trim();
    return x;
  }

  BitString& operator^=(const BitString& other) {
    require_same_size(other);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
    return *this;
  }

  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  // Calls fn(k) for every index where *this and other differ, ascending.
  template <class Fn>
  void for_each_difference(const BitString& other, Fn&& fn) const {
    require_same_size(other);
    for (std::size_t w = 0; w < words_.size(); ++w) {
      Word diff = words_[w] ^ other.words_[w];
      while (diff != 0) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(diff));
        fn(w * kWordBits + bit);
        diff &= diff - 1;
      }
    }
  }

  // |{k : this[k] = 1 and other[k] = 0}|
  std::size_t count_and_not(const BitString& other) const {
    require_same_size(other);
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      total += static_cast<std::size_t>(std::popcount(words_[w] & ~other.words_[w]));
    }
    return total;
  }

  std::string to_string() const {
    std::string text(size_, '0');
    for (std::size_t k = 0; k < size_; ++k) {
      if (test(k)) text[k] = '1';
    }
    return text;
  }

  std::span<const Word> words() const noexcept { return words_; }

  friend bool operator==(const BitString&, const BitString&) = default;

  // Orders by textual form; used only to make enumerated sets canonical.
  friend bool operator<(const BitString& a, const BitString& b) { return a.to_string() < b.to_string(); }

  void require_same_size(const BitString& other) const {
    if (other.size_ != size_) {
      throw std::invalid_argument("bit strings of different lengths: " + std::to_string(size_) +
                                  " vs " + std::to_string(other.size_));
    }
  }

 private:
  static std::size_t word_count(std::size_t n) { return (n + kWordBits - 1) / kWordBits; }

  void trim() noexcept {
    if (size_ % kWordBits != 0 && !words_.empty()) {
      words_.back() &= (Word{1} << (size_ % kWordBits)) - 1;
    }
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
};

inline std::size_t one_count(const BitString& x) noexcept { return x.count(); }
inline std::size_t zero_count(const BitString& x) noexcept { return x.size() - x.count(); }

inline std::size_t hamming(const BitString& x, const BitString& y) {
  x.require_same_size(y);
  std::size_t total = 0;
  const auto a = x.words();
  const auto b = y.words();
  for (std::size_t w = 0; w < a.size(); ++w) total += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  return total;
}

}  // namespace gsemod

template <>
struct std::hash<gsemod::BitString> {
  std::size_t operator()(const gsemod::BitString& x) const noexcept {
    std::size_t h = x.size();
    for (auto w : x.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};
