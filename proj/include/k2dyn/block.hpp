#ifndef K2DYN_BLOCK_HPP_
#define K2DYN_BLOCK_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "k2dyn/codes.hpp"
#include "k2dyn/morton.hpp"
#include "k2dyn/nibble_vector.hpp"

namespace k2dyn {

// Thrown when a structural well-formedness check fails. Never swallowed:
// a malformed block must surface, not answer queries wrong.
struct corruption_error : std::runtime_error {
  explicit corruption_error(const std::string& what)
      : std::runtime_error(what) {}
};

using BlockHandle = std::uint32_t;
inline constexpr BlockHandle kNoBlock = 0xFFFFFFFFu;

// Allowed block capacities N1 < N2 < ... < Nmax, with Nmax = 4*N1 and
// consecutive classes within a 1/(1-epsilon) growth step, so a grown block
// is always at least (1-epsilon) full.
class SizeLadder {
 public:
  SizeLadder() = default;
  SizeLadder(double epsilon, std::vector<std::uint32_t> classes);

  static SizeLadder geometric(std::uint32_t n_max, double epsilon);

  double epsilon() const { return epsilon_; }
  const std::vector<std::uint32_t>& classes() const { return classes_; }
  std::uint32_t max_class() const { return classes_.back(); }

  // Smallest class >= n; n must not exceed the largest class.
  std::uint32_t smallest_class_at_least(std::uint32_t n) const;

  // Capacity for a block of `occupancy` nodes under a depth limit: the
  // smallest fitting class, clamped to the limit when the class overshoots.
  std::uint32_t fit(std::uint32_t occupancy, std::uint32_t limit) const;

 private:
  double epsilon_ = 0.0;
  std::vector<std::uint32_t> classes_;
};

// Scan cursor for one left-to-right pass over a block: current DFS index,
// trie depth of that node, the frontier finger (smallest frontier slot whose
// entry is >= index), and the remaining-children stack used while skipping
// subtrees (always empty between calls).
struct ScanState {
  std::uint32_t index = 0;
  std::uint32_t depth = 0;
  std::uint32_t finger = 0;

  std::array<std::uint8_t, 40> pending{};
  int pending_top = -1;
};

struct ChildLocation {
  std::uint32_t index = 0;
  bool frontier = false;
  std::uint32_t frontier_slot = 0;
};

struct ChildEntry {
  Symbol symbol = 0;
  std::uint32_t index = 0;
  bool frontier = false;
  std::uint32_t frontier_slot = 0;
};

struct SplitInfo {
  std::uint32_t subtree_begin = 0;  // = w
  std::uint32_t subtree_end = 0;    // one past the moved subtree
  std::uint32_t parent_slot = 0;    // slot of the new frontier entry
};

// One connected component of the trie, stored as its depth-first sequence of
// node codes plus frontier bookkeeping:
//   codes     preorder node codes; a node's id is its index here
//   frontier  sorted preorder indices of nodes whose subtree lives in a
//             child block (they read as leaves during scans)
//   children  child-block handles aligned with frontier
//   root_depth  trie depth of the block's root node
//
// A frontier node's code is duplicated as the root code of its child block.
// Exception: a block capped at one node (explicit-pointer top region) keeps
// only its root code, and its children sit at the frontier indices they
// would occupy as size-1 leaves (1 + rank of symbol); those indices lie at
// or past the occupancy and are never dereferenced, because every scan
// checks frontier status before reading a code.
class Block {
 public:
  Block() = default;

  // Builds a block with the given preorder codes; capacity must hold them.
  static Block from_parts(std::span<const NodeCode> codes,
                          std::vector<std::uint32_t> frontier,
                          std::vector<BlockHandle> children,
                          std::uint32_t root_depth, std::uint32_t capacity);

  // Fresh single-code block (trie root, or a chain segment root).
  static Block single(NodeCode code, std::uint32_t root_depth,
                      std::uint32_t capacity);

  // Chain of unary nodes: codes[k] = unary_code(symbols[k]).
  static Block chain(std::span<const Symbol> symbols, std::uint32_t root_depth,
                     std::uint32_t capacity);

  std::uint32_t occupancy() const { return codes_.size(); }
  std::uint32_t capacity() const { return capacity_; }
  std::uint32_t root_depth() const { return root_depth_; }

  NodeCode code(std::uint32_t i) const { return NodeCode{codes_.get(i)}; }
  void set_code(std::uint32_t i, NodeCode c) { codes_.set(i, c.mask); }

  std::uint32_t frontier_count() const {
    return static_cast<std::uint32_t>(frontier_.size());
  }
  std::uint32_t frontier_pos(std::uint32_t slot) const {
    return frontier_[slot];
  }
  BlockHandle child_handle(std::uint32_t slot) const { return children_[slot]; }
  const std::vector<std::uint32_t>& frontier() const { return frontier_; }
  const std::vector<BlockHandle>& children() const { return children_; }

  bool is_frontier(std::uint32_t pos) const;
  // Slot whose entry equals pos, if any.
  std::optional<std::uint32_t> frontier_slot_at(std::uint32_t pos) const;

  // Nodes in the subtree of x, counting x; frontier and leaf-depth nodes
  // count as one.
  std::uint32_t subtree_size(std::uint32_t x, std::uint32_t node_depth,
                             const GridShape& g) const;

  // Absolute trie depth of node x (>= root_depth).
  std::uint32_t node_depth(std::uint32_t x, const GridShape& g) const;

  // Absolute trie depth of every stored node, from one reference parse.
  std::vector<std::uint32_t> node_depths(const GridShape& g) const;

  // DFS index of child s of x, reached by skipping the earlier sibling
  // subtrees from x+1. x must not be a frontier node, must lie above the
  // leaf level, and must have the child. `st` carries the finger across
  // successive calls of one descent; it ends positioned at the child.
  ChildLocation scan_to_child(std::uint32_t x, std::uint32_t node_depth,
                              Symbol s, const GridShape& g,
                              ScanState& st) const;

  // All children of x in symbol order, located in one forward pass.
  std::uint32_t children_of(std::uint32_t x, std::uint32_t node_depth,
                            const GridShape& g,
                            std::array<ChildEntry, 4>& out) const;

  // DFS position where a new chain starting with symbol s belongs under x:
  // x+1 plus the subtree sizes of x's children with smaller symbols.
  std::uint32_t locate_insertion(std::uint32_t x, std::uint32_t node_depth,
                                 Symbol s, const GridShape& g) const;

  // Gives x a child bit z[0] and writes the unary chain for z[1..] at `at`.
  // The capacity must already accommodate the |z|-1 new codes.
  void splice_chain(std::uint32_t x, std::uint32_t at,
                    std::span<const Symbol> z, const GridShape& g);

  // Reallocates to the smallest class holding occupancy+needed, capped at
  // `limit`. Returns false when even the limit cannot fit (caller splits).
  bool grow(std::uint32_t needed, const SizeLadder& ladder,
            std::uint32_t limit);

  // Shrinks capacity back to the smallest fitting class.
  void refit(const SizeLadder& ladder, std::uint32_t limit);

  // Leftmost non-root, non-frontier, non-leaf-depth node whose subtree is
  // 25%-75% of the block; otherwise the non-root non-frontier node whose
  // subtree halves the block best (ties to the smaller index). nullopt when
  // no candidate exists.
  std::optional<std::uint32_t> choose_split_node(const GridShape& g) const;

  // Moves w's subtree into a new block (w's code duplicated as its root),
  // leaves w behind as a frontier leaf bound to child_handle, and re-fits
  // both capacities.
  Block split(std::uint32_t w, const GridShape& g, BlockHandle child_handle,
              const SizeLadder& ladder, std::uint32_t own_limit,
              std::uint32_t child_limit, SplitInfo* info = nullptr);

  // Removes the code at pos (not a frontier entry); later frontier entries
  // shift left by one.
  void erase_code(std::uint32_t pos);

  // Registers a child block at DFS position pos; entries at or after pos
  // shift right by one slot. Used for the explicit-pointer (capacity-1)
  // region, where the child code is not stored locally.
  void attach_virtual_child(std::uint32_t pos, BlockHandle child);

  // Drops frontier entry `slot`, erasing the duplicated code when stored.
  void detach_child(std::uint32_t slot);

  // Full structural check: the DFS scan must consume exactly the occupancy
  // with a clean stack, depths must stay above `levels`, the frontier must
  // be sorted and in range. Throws corruption_error with a description.
  void validate(const GridShape& g, std::uint32_t limit,
                const SizeLadder& ladder, bool is_trie_root) const;

  // "1001 1110 [0110] [1100] ..." — frontier codes bracketed; trailing
  // pointer-only entries rendered as [@pos].
  std::string debug_render() const;

 private:
  friend class BlockParser;

  bool frontier_at(std::uint32_t pos, std::uint32_t& finger) const {
    while (finger < frontier_.size() && frontier_[finger] < pos) ++finger;
    return finger < frontier_.size() && frontier_[finger] == pos;
  }

  std::uint32_t finger_for(std::uint32_t pos) const;

  // First position after the subtree rooted at pos (node depth d). Uses and
  // advances the state's finger; the pending stack enters and leaves empty.
  std::uint32_t skip_subtree(std::uint32_t pos, std::uint32_t d,
                             std::uint32_t leaf_depth, ScanState& st) const;

  // Subtree sizes and depths of every node, by one recursive parse.
  void parse_all(const GridShape& g, std::vector<std::uint32_t>& size,
                 std::vector<std::uint32_t>& depth) const;
  std::uint32_t parse_node(std::uint32_t pos, std::uint32_t d,
                           std::uint32_t leaf_depth,
                           std::vector<std::uint32_t>& size,
                           std::vector<std::uint32_t>& depth) const;

  NibbleVector codes_;
  std::vector<std::uint32_t> frontier_;
  std::vector<BlockHandle> children_;
  std::uint32_t capacity_ = 0;
  std::uint32_t root_depth_ = 0;
};

}  // namespace k2dyn

#endif  // K2DYN_BLOCK_HPP_
