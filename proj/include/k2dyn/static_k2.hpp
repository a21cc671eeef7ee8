#ifndef K2DYN_STATIC_K2_HPP_
#define K2DYN_STATIC_K2_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "k2dyn/codes.hpp"
#include "k2dyn/morton.hpp"

namespace k2dyn {

// Classical static k^2-tree: node codes concatenated levelwise, navigated by
// prefix popcounts. Immutable after construction; serves as the correctness
// oracle and serialization target for the dynamic trie.
class StaticK2 {
 public:
  // Breadth-first construction from a point set (duplicates collapse).
  static StaticK2 build(std::span<const Point> points, const GridShape& g);

  // Reassembles the structure from a levelwise code sequence.
  static StaticK2 from_codes(std::span<const NodeCode> codes,
                             const GridShape& g, std::uint64_t points);

  const GridShape& shape() const { return shape_; }
  std::uint64_t point_count() const { return points_; }
  std::uint32_t node_count() const {
    return static_cast<std::uint32_t>(codes_.size());
  }
  const std::vector<NodeCode>& codes() const { return codes_; }
  NodeCode code(std::uint32_t node) const { return codes_[node]; }
  const std::vector<std::uint32_t>& level_offsets() const {
    return level_offsets_;
  }

  // Set bits in the code sequence before node `node` (rank over the
  // levelwise bitvector at a node boundary).
  std::uint32_t rank_before(std::uint32_t node) const {
    return cum_ones_[node];
  }

  // Node index of child `s` of `node`: one plus the number of set bits
  // strictly before the child's bit. The bit must be set and the node must
  // lie above the last level.
  std::uint32_t child_index(std::uint32_t node, Symbol s) const;

  bool contains(const Point& p) const;

 private:
  GridShape shape_ = GridShape::from_side(2);
  std::uint64_t points_ = 0;
  std::vector<NodeCode> codes_;
  std::vector<std::uint32_t> level_offsets_;  // first node index per level
  std::vector<std::uint32_t> cum_ones_;       // set bits before each node

  void build_index();
};

}  // namespace k2dyn

#endif  // K2DYN_STATIC_K2_HPP_
