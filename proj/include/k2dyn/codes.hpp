#ifndef K2DYN_CODES_HPP_
#define K2DYN_CODES_HPP_

#include <array>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "k2dyn/morton.hpp"

namespace k2dyn {

// 4-bit child-presence mask of one trie node. Bit i is the child reached by
// symbol i, so the mask reads left to right in its textual form: "0110" has
// children 1 and 2. At the deepest level the four bits are grid cells.
struct NodeCode {
  std::uint8_t mask = 0;

  friend bool operator==(const NodeCode&, const NodeCode&) = default;
};

namespace detail {

constexpr std::array<std::uint8_t, 16> make_popcount4() {
  std::array<std::uint8_t, 16> t{};
  for (unsigned m = 0; m < 16; ++m) {
    t[m] = static_cast<std::uint8_t>((m & 1) + ((m >> 1) & 1) + ((m >> 2) & 1) +
                                     ((m >> 3) & 1));
  }
  return t;
}

// skip[mask][i]: set bits of `mask` at positions strictly below symbol i,
// i.e. how many earlier sibling subtrees a scan must pass over.
constexpr std::array<std::array<std::uint8_t, 4>, 16> make_skip_table() {
  std::array<std::array<std::uint8_t, 4>, 16> t{};
  for (unsigned m = 0; m < 16; ++m) {
    for (unsigned i = 0; i < 4; ++i) {
      std::uint8_t n = 0;
      for (unsigned j = 0; j < i; ++j) n += (m >> j) & 1u;
      t[m][i] = n;
    }
  }
  return t;
}

inline constexpr auto kPopcount4 = make_popcount4();
inline constexpr auto kSkipTable = make_skip_table();

}  // namespace detail

constexpr bool has_child(NodeCode c, Symbol s) {
  return ((c.mask >> s) & 1u) != 0;
}

constexpr std::uint32_t children_to_skip(NodeCode c, Symbol s) {
  return detail::kSkipTable[c.mask][s];
}

constexpr std::uint32_t child_count(NodeCode c) {
  return detail::kPopcount4[c.mask];
}

// Code of a fresh single-child node, e.g. unary_code(0) = "1000".
constexpr NodeCode unary_code(Symbol s) {
  return NodeCode{static_cast<std::uint8_t>(1u << s)};
}

constexpr NodeCode with_child(NodeCode c, Symbol s) {
  return NodeCode{static_cast<std::uint8_t>(c.mask | (1u << s))};
}

inline NodeCode without_child(NodeCode c, Symbol s) {
  assert(has_child(c, s));
  return NodeCode{static_cast<std::uint8_t>(c.mask & ~(1u << s))};
}

// Textual form used by the serializer and in debug dumps: leftmost
// character is the symbol-0 bit.
inline std::string to_bit_string(NodeCode c) {
  std::string s(4, '0');
  for (unsigned i = 0; i < 4; ++i) {
    if (has_child(c, static_cast<Symbol>(i))) s[i] = '1';
  }
  return s;
}

inline NodeCode code_from_bits(std::string_view bits) {
  if (bits.size() != 4) {
    throw std::invalid_argument("node code string must have 4 characters");
  }
  NodeCode c;
  for (unsigned i = 0; i < 4; ++i) {
    if (bits[i] == '1') {
      c.mask |= static_cast<std::uint8_t>(1u << i);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("node code string must be binary");
    }
  }
  return c;
}

}  // namespace k2dyn

#endif  // K2DYN_CODES_HPP_
