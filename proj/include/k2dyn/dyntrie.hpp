#ifndef K2DYN_DYNTRIE_HPP_
#define K2DYN_DYNTRIE_HPP_

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "k2dyn/block.hpp"
#include "k2dyn/codes.hpp"
#include "k2dyn/morton.hpp"

namespace k2dyn {

// Block capacity policy: epsilon drives the size-class ladder built from
// n_max; blocks rooted at depth <= d1 are capped at n2_max, depths in
// (d1, d2] at n1_max, deeper ones at n_max. n2_max = 1 turns the top of the
// trie into an explicit pointer tree.
struct TrieConfig {
  double epsilon = 0.05;
  std::uint32_t n_max = 512;
  std::uint32_t n1_max = 96;
  std::uint32_t n2_max = 1;
  std::uint32_t d1 = 8;
  std::uint32_t d2 = 12;
  SizeLadder ladder;

  static TrieConfig make(double epsilon, std::uint32_t n_max,
                         std::uint32_t n1_max, std::uint32_t n2_max,
                         std::uint32_t d1, std::uint32_t d2,
                         const GridShape& g);
  static TrieConfig defaults(const GridShape& g) {
    return make(0.05, 512, 96, 1, 8, 12, g);
  }

  std::uint32_t limit_for_depth(std::uint32_t depth) const {
    if (depth <= d1) return n2_max;
    if (depth <= d2) return n1_max;
    return n_max;
  }
};

// Exact bit accounting of the structure. topology_used_bits counts each
// trie node once (stored frontier duplicates excluded), so it equals the
// static levelwise bitvector length. topology_bits counts the allocated
// node slots, duplicates included. Frontier entries and child handles are
// 32-bit words; bookkeeping is 3 words (depth, occupancy, capacity) per
// block.
struct SpaceReport {
  std::uint64_t topology_bits = 0;
  std::uint64_t topology_used_bits = 0;
  std::uint64_t frontier_bits = 0;
  std::uint64_t handle_bits = 0;
  std::uint64_t bookkeeping_bits = 0;
  std::uint64_t blocks = 0;
  std::uint64_t nodes = 0;
  std::uint64_t points = 0;
  double bits_per_point = 0.0;

  std::uint64_t total_bits() const {
    return topology_bits + frontier_bits + handle_bits + bookkeeping_bits;
  }
};

// Dynamic k^2-tree over an n x n grid: a tree of blocks, each a DFS-laid-out
// connected component of the quadrant trie of the stored points' Morton
// codes. Single writer; concurrent readers only between mutations.
class K2Trie {
 public:
  K2Trie(const GridShape& shape, const TrieConfig& config);

  const GridShape& shape() const { return shape_; }
  const TrieConfig& config() const { return config_; }
  std::uint64_t point_count() const { return points_; }

  bool contains(const Point& p) const;

  // True when newly added; false (structure untouched) for duplicates.
  bool insert(const Point& p);

  // True when the point was present and removed.
  bool erase(const Point& p);

  // Stored points inside [r1..r2] x [c1..c2], in Morton order.
  std::vector<Point> range(std::uint32_t r1, std::uint32_t r2,
                           std::uint32_t c1, std::uint32_t c2) const;

  // Columns with a point in `row` / rows with a point in `col`, ascending.
  std::vector<std::uint32_t> neighbors(std::uint32_t row) const;
  std::vector<std::uint32_t> reverse_neighbors(std::uint32_t col) const;

  // Breadth-first concatenation of all node codes; identical to the static
  // levelwise tree of the same point set.
  std::vector<NodeCode> serialize_levelwise() const;

  SpaceReport space_report() const;

  // Read-only block access for diagnostics and tests.
  BlockHandle root_handle() const { return root_; }
  const Block& block(BlockHandle h) const { return store_[h]; }
  std::uint64_t block_count() const;

  // Handles touched by the most recent insert/erase, for incremental
  // invariant checking in stress harnesses.
  const std::vector<BlockHandle>& touched_blocks() const { return touched_; }

  // Full structural check of one block or of the whole tree of blocks
  // (reachability, frontier duplication, depth limits, point count).
  void validate_block(BlockHandle h) const;
  void validate() const;

 private:
  struct PathStep {
    BlockHandle blk = kNoBlock;
    std::uint32_t idx = 0;
    bool block_root = false;
    BlockHandle parent_blk = kNoBlock;
    std::uint32_t parent_slot = 0;
  };

  BlockHandle allocate(Block&& b);
  void free_block(BlockHandle h);
  Block& at(BlockHandle h) { return store_[h]; }
  const Block& at(BlockHandle h) const { return store_[h]; }

  void touch(BlockHandle h);

  // Propagates a changed root code to the stored duplicate in the parent.
  void mirror_root_code(const PathStep& step);

  // Builds block(s) holding the unary chain for `symbols`, the first of
  // which sits at trie depth `first_depth`; segments per the depth limits.
  BlockHandle build_chain(std::uint32_t first_depth,
                          std::span<const Symbol> symbols);

  // Splices the Morton suffix z at node x of block h (which lacks child
  // z[0]), growing or splitting h as required.
  void splice_at(BlockHandle h, std::uint32_t x, std::uint32_t depth,
                 std::span<const Symbol> z, PathStep step);

  void collect_range(BlockHandle h, std::uint32_t x, std::uint32_t depth,
                     std::uint32_t row_base, std::uint32_t col_base,
                     std::uint32_t r1, std::uint32_t r2, std::uint32_t c1,
                     std::uint32_t c2, std::vector<Point>& out) const;

  void collect_levelwise(BlockHandle h,
                         std::vector<std::vector<NodeCode>>& by_depth) const;
  std::uint32_t walk_levelwise(const Block& b, std::uint32_t pos,
                               std::uint32_t depth, std::uint32_t& slot,
                               std::vector<std::vector<NodeCode>>& by_depth)
      const;

  void validate_subtree(BlockHandle h, std::uint32_t expected_depth,
                        NodeCode expected_root, bool has_expectation,
                        std::vector<bool>& seen, std::uint64_t& leaf_bits)
      const;

  GridShape shape_;
  TrieConfig config_;
  std::deque<Block> store_;
  std::vector<std::uint8_t> live_;
  std::vector<BlockHandle> free_;
  BlockHandle root_ = 0;
  std::uint64_t points_ = 0;
  std::vector<BlockHandle> touched_;
};

}  // namespace k2dyn

#endif  // K2DYN_DYNTRIE_HPP_
