#ifndef ALGOTHERMO_BITS_HPP
#define ALGOTHERMO_BITS_HPP

#include <cassert>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace algothermo {

// A finite bit string, possibly empty.  Bits are packed MSB-first into a
// single 64-bit word, so that for strings of equal length lexicographic
// order coincides with numeric order of the payload.  Capacity is 63 bits,
// far beyond the enumeration caps (max program length 26).
class BitString {
 public:
  static constexpr int kMaxBits = 63;

  constexpr BitString() = default;

  static BitString from_string(std::string_view s) {
    BitString out;
    for (char c : s) {
      if (c != '0' && c != '1')
        throw std::invalid_argument("BitString: expected only '0'/'1', got '" +
                                    std::string(1, c) + "'");
      out.push_back(c - '0');
    }
    return out;
  }

  // The len-bit string whose natural binary reading equals value.
  static constexpr BitString from_index(uint64_t value, int len) {
    assert(len >= 0 && len <= kMaxBits);
    assert(len == 64 || (value >> len) == 0);
    BitString out;
    out.len_ = static_cast<uint8_t>(len);
    out.word_ = (len == 0) ? 0 : (value << (64 - len));
    return out;
  }

  constexpr int size() const { return len_; }
  constexpr bool empty() const { return len_ == 0; }

  // i-th bit, 0-indexed from the front.
  constexpr int bit(int i) const {
    assert(i >= 0 && i < len_);
    return static_cast<int>((word_ >> (63 - i)) & 1u);
  }

  constexpr void push_back(int b) {
    assert(b == 0 || b == 1);
    if (len_ >= kMaxBits) throw std::length_error("BitString: capacity exceeded");
    if (b) word_ |= (uint64_t{1} << (63 - len_));
    ++len_;
  }

  constexpr BitString child(int b) const {
    BitString c = *this;
    c.push_back(b);
    return c;
  }

  constexpr bool is_prefix_of(const BitString& other) const {
    if (len_ > other.len_) return false;
    if (len_ == 0) return true;
    const uint64_t mask = ~uint64_t{0} << (64 - len_);
    return (other.word_ & mask) == word_;
  }

  std::string str() const {
    std::string s;
    s.reserve(len_);
    for (int i = 0; i < len_; ++i) s.push_back(static_cast<char>('0' + bit(i)));
    return s;
  }

  constexpr uint64_t packed() const { return word_; }

  friend constexpr bool operator==(const BitString&, const BitString&) = default;

  // Length-lexicographic: shorter first, then lexicographic.
  friend constexpr std::strong_ordering operator<=>(const BitString& a,
                                                    const BitString& b) {
    if (a.len_ != b.len_) return a.len_ <=> b.len_;
    return a.word_ <=> b.word_;
  }

 private:
  uint64_t word_ = 0;
  uint8_t len_ = 0;
};

}  // namespace algothermo

#endif  // ALGOTHERMO_BITS_HPP
