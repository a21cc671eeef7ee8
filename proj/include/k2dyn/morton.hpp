#ifndef K2DYN_MORTON_HPP_
#define K2DYN_MORTON_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace k2dyn {

// Quadrant symbol in {0,1,2,3}: 2*row_bit + col_bit, so 0 = top-left,
// 1 = top-right, 2 = bottom-left, 3 = bottom-right.
using Symbol = std::uint8_t;

struct Point {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// A power-of-two square grid. `levels` is the trie height: side = 2^levels.
class GridShape {
 public:
  static GridShape from_side(std::uint32_t side) {
    if (side < 2 || (side & (side - 1)) != 0) {
      throw std::invalid_argument("grid side must be a power of two >= 2");
    }
    GridShape g;
    g.side_ = side;
    g.levels_ = 0;
    for (std::uint32_t s = side; s > 1; s >>= 1) ++g.levels_;
    return g;
  }

  std::uint32_t side() const { return side_; }
  std::uint32_t levels() const { return levels_; }
  // Depth of the last represented node level; its code bits are grid cells.
  std::uint32_t leaf_depth() const { return levels_ - 1; }

  bool in_range(const Point& p) const { return p.row < side_ && p.col < side_; }

  friend bool operator==(const GridShape&, const GridShape&) = default;

 private:
  std::uint32_t side_ = 2;
  std::uint32_t levels_ = 1;
};

// Root-to-leaf quadrant path of a point: `length` symbols, most significant
// (coarsest split) first. Packed two bits per symbol.
class MortonCode {
 public:
  MortonCode() = default;
  MortonCode(std::uint64_t packed, std::uint32_t length)
      : packed_(packed), length_(length) {}

  static MortonCode from_symbols(std::span<const Symbol> syms) {
    std::uint64_t packed = 0;
    for (Symbol s : syms) {
      if (s > 3) throw std::invalid_argument("morton symbol out of range");
      packed = (packed << 2) | s;
    }
    return MortonCode(packed, static_cast<std::uint32_t>(syms.size()));
  }

  std::uint32_t length() const { return length_; }
  std::uint64_t packed() const { return packed_; }

  Symbol symbol(std::uint32_t level) const {
    return static_cast<Symbol>((packed_ >> (2 * (length_ - 1 - level))) & 3u);
  }

  std::vector<Symbol> symbols() const {
    std::vector<Symbol> out(length_);
    for (std::uint32_t i = 0; i < length_; ++i) out[i] = symbol(i);
    return out;
  }

  friend bool operator==(const MortonCode&, const MortonCode&) = default;
  friend bool operator<(const MortonCode& a, const MortonCode& b) {
    return a.packed_ < b.packed_;
  }

 private:
  std::uint64_t packed_ = 0;
  std::uint32_t length_ = 0;
};

// Interlaces the row and column bits, highest bit first.
inline MortonCode morton_encode(const Point& p, const GridShape& g) {
  if (!g.in_range(p)) {
    throw std::invalid_argument("point coordinates out of grid range");
  }
  std::uint64_t packed = 0;
  for (std::uint32_t level = 0; level < g.levels(); ++level) {
    std::uint32_t shift = g.levels() - 1 - level;
    std::uint32_t rbit = (p.row >> shift) & 1u;
    std::uint32_t cbit = (p.col >> shift) & 1u;
    packed = (packed << 2) | (rbit << 1) | cbit;
  }
  return MortonCode(packed, g.levels());
}

// Splits the interlaced bits back into (row, col).
inline Point morton_decode(const MortonCode& m, const GridShape& g) {
  if (m.length() != g.levels()) {
    throw std::invalid_argument("morton code length does not match grid");
  }
  Point p;
  for (std::uint32_t level = 0; level < g.levels(); ++level) {
    Symbol s = m.symbol(level);
    p.row = (p.row << 1) | (s >> 1);
    p.col = (p.col << 1) | (s & 1u);
  }
  return p;
}

}  // namespace k2dyn

#endif  // K2DYN_MORTON_HPP_
