#ifndef K2DYN_IO_HPP_
#define K2DYN_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "k2dyn/codes.hpp"
#include "k2dyn/morton.hpp"

namespace k2dyn {

// Text form of a code sequence: space-separated 4-bit strings,
// e.g. "1001 1110 0100".
std::string codes_to_text(std::span<const NodeCode> codes);
std::vector<NodeCode> codes_from_text(const std::string& text);

// Packed form: 16-byte header (magic "K2T1", then side, point count and
// code count as 32-bit little-endian words) followed by the codes at 4 bits
// each, first code in the low nibble of the first byte. Shared between the
// dynamic trie and the static tree.
struct PackedImage {
  GridShape shape = GridShape::from_side(2);
  std::uint64_t points = 0;
  std::vector<NodeCode> codes;
};

void write_packed(std::ostream& os, const GridShape& g, std::uint64_t points,
                  std::span<const NodeCode> codes);
PackedImage read_packed(std::istream& is);

}  // namespace k2dyn

#endif  // K2DYN_IO_HPP_
