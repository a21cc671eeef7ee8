#include "k2dyn/block.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace k2dyn {

SizeLadder::SizeLadder(double epsilon, std::vector<std::uint32_t> classes)
    : epsilon_(epsilon), classes_(std::move(classes)) {
  if (epsilon_ <= 0.0 || epsilon_ >= 1.0) {
    throw std::invalid_argument("epsilon must lie in (0,1)");
  }
  if (classes_.empty()) throw std::invalid_argument("empty size ladder");
  for (std::size_t i = 1; i < classes_.size(); ++i) {
    if (classes_[i] <= classes_[i - 1]) {
      throw std::invalid_argument("ladder classes must strictly increase");
    }
    auto step = static_cast<std::uint32_t>(
        std::ceil(classes_[i - 1] / (1.0 - epsilon_)));
    if (classes_[i] > step) {
      throw std::invalid_argument("ladder class exceeds 1/(1-epsilon) step");
    }
  }
  if (classes_.back() != 4 * classes_.front()) {
    throw std::invalid_argument("largest class must be 4x smallest");
  }
}

SizeLadder SizeLadder::geometric(std::uint32_t n_max, double epsilon) {
  if (n_max < 4 || n_max % 4 != 0) {
    throw std::invalid_argument("n_max must be a positive multiple of 4");
  }
  std::vector<std::uint32_t> classes;
  std::uint32_t c = n_max / 4;
  while (c < n_max) {
    classes.push_back(c);
    auto next = static_cast<std::uint32_t>(std::ceil(c / (1.0 - epsilon)));
    c = std::max(next, c + 1);
  }
  classes.push_back(n_max);
  return SizeLadder(epsilon, std::move(classes));
}

std::uint32_t SizeLadder::smallest_class_at_least(std::uint32_t n) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), n);
  assert(it != classes_.end());
  return *it;
}

std::uint32_t SizeLadder::fit(std::uint32_t occupancy,
                              std::uint32_t limit) const {
  assert(occupancy <= limit);
  if (occupancy > classes_.back()) return limit;
  std::uint32_t cls = smallest_class_at_least(occupancy);
  return std::min(cls, limit);
}

Block Block::from_parts(std::span<const NodeCode> codes,
                        std::vector<std::uint32_t> frontier,
                        std::vector<BlockHandle> children,
                        std::uint32_t root_depth, std::uint32_t capacity) {
  if (codes.empty() || codes.size() > capacity) {
    throw std::invalid_argument("block codes must fit its capacity");
  }
  if (frontier.size() != children.size()) {
    throw std::invalid_argument("frontier/children size mismatch");
  }
  Block b;
  b.capacity_ = capacity;
  b.root_depth_ = root_depth;
  b.codes_.set_capacity(capacity);
  for (NodeCode c : codes) b.codes_.push_back(c.mask);
  b.frontier_ = std::move(frontier);
  b.children_ = std::move(children);
  return b;
}

Block Block::single(NodeCode code, std::uint32_t root_depth,
                    std::uint32_t capacity) {
  return from_parts(std::span<const NodeCode>(&code, 1), {}, {}, root_depth,
                    capacity);
}

Block Block::chain(std::span<const Symbol> symbols, std::uint32_t root_depth,
                   std::uint32_t capacity) {
  Block b;
  b.capacity_ = capacity;
  b.root_depth_ = root_depth;
  b.codes_.set_capacity(capacity);
  for (Symbol s : symbols) b.codes_.push_back(unary_code(s).mask);
  return b;
}

bool Block::is_frontier(std::uint32_t pos) const {
  return std::binary_search(frontier_.begin(), frontier_.end(), pos);
}

std::optional<std::uint32_t> Block::frontier_slot_at(std::uint32_t pos) const {
  auto it = std::lower_bound(frontier_.begin(), frontier_.end(), pos);
  if (it != frontier_.end() && *it == pos) {
    return static_cast<std::uint32_t>(it - frontier_.begin());
  }
  return std::nullopt;
}

std::uint32_t Block::finger_for(std::uint32_t pos) const {
  auto it = std::lower_bound(frontier_.begin(), frontier_.end(), pos);
  return static_cast<std::uint32_t>(it - frontier_.begin());
}

std::uint32_t Block::skip_subtree(std::uint32_t pos, std::uint32_t d,
                                  std::uint32_t leaf_depth,
                                  ScanState& st) const {
  // Remaining-children stack: push the child count on entering an internal
  // node; a frontier or leaf-depth node closes one pending slot, cascading
  // pops when an ancestor's count hits zero. The stack returning to empty
  // marks the end of the subtree. It enters and leaves this routine empty.
  assert(st.pending_top == -1);
  while (true) {
    if (pos >= occupancy() + children_.size()) {
      throw corruption_error("block scan ran past the stored codes");
    }
    bool leaf_like = frontier_at(pos, st.finger);
    if (!leaf_like) {
      if (pos >= occupancy()) {
        throw corruption_error("non-frontier position past occupancy");
      }
      leaf_like = (d == leaf_depth);
    }
    if (!leaf_like) {
      std::uint32_t cc = child_count(code(pos));
      if (cc == 0) throw corruption_error("internal node with empty code");
      if (st.pending_top + 1 >= static_cast<int>(st.pending.size())) {
        throw corruption_error("block deeper than the grid allows");
      }
      st.pending[++st.pending_top] = static_cast<std::uint8_t>(cc);
      ++d;
    } else {
      while (st.pending_top >= 0 && --st.pending[st.pending_top] == 0) {
        --st.pending_top;
        --d;
      }
      if (st.pending_top < 0) return pos + 1;
    }
    ++pos;
  }
}

std::uint32_t Block::subtree_size(std::uint32_t x, std::uint32_t node_depth,
                                  const GridShape& g) const {
  ScanState st;
  st.finger = finger_for(x);
  return skip_subtree(x, node_depth, g.leaf_depth(), st) - x;
}

std::uint32_t Block::node_depth(std::uint32_t x, const GridShape& g) const {
  std::vector<std::uint32_t> size, depth;
  parse_all(g, size, depth);
  if (x >= depth.size()) throw corruption_error("node index out of block");
  return depth[x];
}

std::vector<std::uint32_t> Block::node_depths(const GridShape& g) const {
  std::vector<std::uint32_t> size, depth;
  parse_all(g, size, depth);
  return depth;
}

ChildLocation Block::scan_to_child(std::uint32_t x, std::uint32_t node_depth,
                                   Symbol s, const GridShape& g,
                                   ScanState& st) const {
  assert(!is_frontier(x));
  assert(has_child(code(x), s));
  assert(node_depth < g.leaf_depth());
  std::uint32_t skip = children_to_skip(code(x), s);
  std::uint32_t pos = x + 1;
  // The finger only moves forward; successive calls of one descent resume
  // where the previous scan stopped.
  for (std::uint32_t k = 0; k < skip; ++k) {
    pos = skip_subtree(pos, node_depth + 1, g.leaf_depth(), st);
  }
  ChildLocation loc;
  loc.index = pos;
  loc.frontier = frontier_at(pos, st.finger);
  if (loc.frontier) loc.frontier_slot = st.finger;
  st.index = pos;
  st.depth = node_depth + 1;
  return loc;
}

std::uint32_t Block::children_of(std::uint32_t x, std::uint32_t node_depth,
                                 const GridShape& g,
                                 std::array<ChildEntry, 4>& out) const {
  assert(!is_frontier(x));
  NodeCode cx = code(x);
  std::uint32_t n = 0;
  std::uint32_t pos = x + 1;
  ScanState st;
  st.finger = finger_for(pos);
  for (Symbol s = 0; s < 4; ++s) {
    if (!has_child(cx, s)) continue;
    ChildEntry e;
    e.symbol = s;
    e.index = pos;
    if (frontier_at(pos, st.finger)) {
      e.frontier = true;
      e.frontier_slot = st.finger;
    }
    out[n++] = e;
    pos = skip_subtree(pos, node_depth + 1, g.leaf_depth(), st);
  }
  return n;
}

std::uint32_t Block::locate_insertion(std::uint32_t x, std::uint32_t node_depth,
                                      Symbol s, const GridShape& g) const {
  assert(!is_frontier(x));
  assert(!has_child(code(x), s));
  NodeCode cx = code(x);
  std::uint32_t pos = x + 1;
  ScanState st;
  st.finger = finger_for(pos);
  for (Symbol t = 0; t < s; ++t) {
    if (!has_child(cx, t)) continue;
    pos = skip_subtree(pos, node_depth + 1, g.leaf_depth(), st);
  }
  return pos;
}

void Block::splice_chain(std::uint32_t x, std::uint32_t at,
                         std::span<const Symbol> z,
                         [[maybe_unused]] const GridShape& g) {
  assert(!z.empty());
  assert(node_depth(x, g) + z.size() == g.levels());
  std::uint32_t added = static_cast<std::uint32_t>(z.size()) - 1;
  if (occupancy() + added > capacity_) {
    throw std::length_error("block splice exceeds capacity");
  }
  set_code(x, with_child(code(x), z[0]));
  if (added == 0) return;
  codes_.open_gap(at, added);
  for (std::uint32_t j = 0; j < added; ++j) {
    codes_.set(at + j, unary_code(z[j + 1]).mask);
  }
  for (auto& f : frontier_) {
    if (f >= at) f += added;
  }
}

bool Block::grow(std::uint32_t needed, const SizeLadder& ladder,
                 std::uint32_t limit) {
  std::uint64_t need = static_cast<std::uint64_t>(occupancy()) + needed;
  if (need <= capacity_) return true;
  if (need > limit) return false;
  capacity_ = ladder.fit(static_cast<std::uint32_t>(need), limit);
  codes_.set_capacity(capacity_);
  return true;
}

void Block::refit(const SizeLadder& ladder, std::uint32_t limit) {
  std::uint32_t cap = ladder.fit(occupancy(), limit);
  if (cap != capacity_) {
    capacity_ = cap;
    codes_.set_capacity(cap);
  }
}

std::uint32_t Block::parse_node(std::uint32_t pos, std::uint32_t d,
                                std::uint32_t leaf_depth,
                                std::vector<std::uint32_t>& size,
                                std::vector<std::uint32_t>& depth) const {
  bool virtual_child = pos >= occupancy();
  if (virtual_child && !is_frontier(pos)) {
    throw corruption_error("position past occupancy is not a frontier entry");
  }
  if (!virtual_child) depth[pos] = d;
  if (is_frontier(pos) || d == leaf_depth) {
    if (!virtual_child) size[pos] = 1;
    return pos + 1;
  }
  if (d > leaf_depth) throw corruption_error("node below the leaf level");
  NodeCode c = code(pos);
  if (child_count(c) == 0 && pos != 0) {
    throw corruption_error("stored non-root node without children");
  }
  std::uint32_t end = pos + 1;
  for (Symbol s = 0; s < 4; ++s) {
    if (has_child(c, s)) end = parse_node(end, d + 1, leaf_depth, size, depth);
  }
  size[pos] = end - pos;
  return end;
}

void Block::parse_all(const GridShape& g, std::vector<std::uint32_t>& size,
                      std::vector<std::uint32_t>& depth) const {
  size.assign(occupancy(), 0);
  depth.assign(occupancy(), 0);
  std::uint32_t end = parse_node(0, root_depth_, g.leaf_depth(), size, depth);
  // The parse must consume every stored code plus every pointer-only slot.
  std::uint32_t pointer_only = 0;
  for (auto f : frontier_) {
    if (f >= occupancy()) ++pointer_only;
  }
  if (end != occupancy() + pointer_only) {
    throw corruption_error("DFS scan does not consume the block exactly");
  }
}

std::optional<std::uint32_t> Block::choose_split_node(
    const GridShape& g) const {
  std::vector<std::uint32_t> size, depth;
  parse_all(g, size, depth);
  std::uint32_t occ = occupancy();
  // Window pass: leftmost inner node holding 25%-75% of the block.
  for (std::uint32_t w = 1; w < occ; ++w) {
    if (is_frontier(w) || depth[w] == g.leaf_depth()) continue;
    std::uint64_t s4 = 4ull * size[w];
    if (s4 >= occ && s4 <= 3ull * occ) return w;
  }
  // Fallback: best size balance among all non-root, non-frontier nodes.
  std::optional<std::uint32_t> best;
  std::uint64_t best_diff = 0;
  for (std::uint32_t w = 1; w < occ; ++w) {
    if (is_frontier(w)) continue;
    std::uint64_t two = 2ull * size[w];
    std::uint64_t diff = two > occ ? two - occ : occ - two;
    if (!best || diff < best_diff) {
      best = w;
      best_diff = diff;
    }
  }
  return best;
}

Block Block::split(std::uint32_t w, const GridShape& g,
                   BlockHandle child_handle, const SizeLadder& ladder,
                   std::uint32_t own_limit, std::uint32_t child_limit,
                   SplitInfo* info) {
  assert(w != 0 && w < occupancy());
  assert(!is_frontier(w));
  std::vector<std::uint32_t> size, depth;
  parse_all(g, size, depth);  // depths are absolute trie depths
  std::uint32_t w_end = w + size[w];

  Block child;
  child.root_depth_ = depth[w];
  std::uint32_t child_occ = w_end - w;
  child.capacity_ = ladder.fit(child_occ, child_limit);
  child.codes_.set_capacity(child.capacity_);
  for (std::uint32_t i = w; i < w_end; ++i) child.codes_.push_back(code(i).mask);

  // Partition the frontier: entries inside (w, w_end) move with the subtree,
  // re-based to child-local indices; later entries shift left by the removed
  // code count; then w itself becomes a frontier leaf.
  std::uint32_t removed = w_end - w - 1;
  std::vector<std::uint32_t> kept_f, moved_f;
  std::vector<BlockHandle> kept_c, moved_c;
  for (std::uint32_t slot = 0; slot < frontier_.size(); ++slot) {
    std::uint32_t f = frontier_[slot];
    if (f > w && f < w_end) {
      moved_f.push_back(f - w);
      moved_c.push_back(children_[slot]);
    } else {
      kept_f.push_back(f >= w_end ? f - removed : f);
      kept_c.push_back(children_[slot]);
    }
  }
  child.frontier_ = std::move(moved_f);
  child.children_ = std::move(moved_c);

  codes_.erase(w + 1, removed);
  auto it = std::lower_bound(kept_f.begin(), kept_f.end(), w);
  std::uint32_t slot = static_cast<std::uint32_t>(it - kept_f.begin());
  kept_f.insert(it, w);
  kept_c.insert(kept_c.begin() + slot, child_handle);
  frontier_ = std::move(kept_f);
  children_ = std::move(kept_c);
  refit(ladder, own_limit);

  if (info) {
    info->subtree_begin = w;
    info->subtree_end = w_end;
    info->parent_slot = slot;
  }
  return child;
}

void Block::erase_code(std::uint32_t pos) {
  assert(pos < occupancy());
  assert(!is_frontier(pos));
  codes_.erase(pos, 1);
  for (auto& f : frontier_) {
    if (f > pos) --f;
  }
}

void Block::attach_virtual_child(std::uint32_t pos, BlockHandle child) {
  for (auto& f : frontier_) {
    if (f >= pos) ++f;
  }
  auto it = std::lower_bound(frontier_.begin(), frontier_.end(), pos);
  std::uint32_t slot = static_cast<std::uint32_t>(it - frontier_.begin());
  frontier_.insert(it, pos);
  children_.insert(children_.begin() + slot, child);
}

void Block::detach_child(std::uint32_t slot) {
  assert(slot < frontier_.size());
  std::uint32_t f = frontier_[slot];
  frontier_.erase(frontier_.begin() + slot);
  children_.erase(children_.begin() + slot);
  if (f < occupancy()) {
    erase_code(f);
  } else {
    for (auto& e : frontier_) {
      if (e > f) --e;
    }
  }
}

void Block::validate(const GridShape& g, std::uint32_t limit,
                     const SizeLadder& ladder, bool is_trie_root) const {
  if (occupancy() == 0) throw corruption_error("empty block");
  if (occupancy() > capacity_) throw corruption_error("occupancy > capacity");
  if (capacity_ > limit) throw corruption_error("capacity above depth limit");
  if (capacity_ != ladder.fit(occupancy(), limit)) {
    throw corruption_error("capacity is not the smallest fitting class");
  }
  for (std::size_t i = 0; i < frontier_.size(); ++i) {
    if (i > 0 && frontier_[i] <= frontier_[i - 1]) {
      throw corruption_error("frontier not strictly increasing");
    }
    if (frontier_[i] == 0) throw corruption_error("block root in frontier");
    if (frontier_[i] >= occupancy() && capacity_ != 1) {
      throw corruption_error("frontier entry past occupancy");
    }
    if (children_[i] == kNoBlock) throw corruption_error("null child handle");
  }
  if (child_count(code(0)) == 0 && !(is_trie_root && occupancy() == 1)) {
    throw corruption_error("empty code outside the empty trie root");
  }
  // parse_all checks scan totality, depth bounds, and zero interior codes.
  std::vector<std::uint32_t> size, depth;
  parse_all(g, size, depth);
  if (capacity_ == 1 && !frontier_.empty()) {
    // Pointer-only children must occupy exactly the slots 1..count.
    for (std::size_t i = 0; i < frontier_.size(); ++i) {
      if (frontier_[i] != i + 1) {
        throw corruption_error("pointer-region frontier slots not contiguous");
      }
    }
    if (frontier_.size() != child_count(code(0))) {
      throw corruption_error("pointer-region child count mismatch");
    }
  }
}

std::string Block::debug_render() const {
  std::ostringstream os;
  for (std::uint32_t i = 0; i < occupancy(); ++i) {
    if (i > 0) os << ' ';
    bool f = is_frontier(i);
    if (f) os << '[';
    os << to_bit_string(code(i));
    if (f) os << ']';
  }
  for (auto fpos : frontier_) {
    if (fpos >= occupancy()) os << " [@" << fpos << ']';
  }
  return os.str();
}

}  // namespace k2dyn
