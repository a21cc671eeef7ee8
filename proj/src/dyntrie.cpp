#include "k2dyn/dyntrie.hpp"

#include <algorithm>
#include <array>
#include <cassert>

namespace k2dyn {

TrieConfig TrieConfig::make(double epsilon, std::uint32_t n_max,
                            std::uint32_t n1_max, std::uint32_t n2_max,
                            std::uint32_t d1, std::uint32_t d2,
                            const GridShape& g) {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument("epsilon must lie in (0,1)");
  }
  if (!(n2_max < n1_max && n1_max < n_max)) {
    throw std::invalid_argument("capacity limits must satisfy n2 < n1 < nmax");
  }
  if (d1 >= d2) throw std::invalid_argument("depth thresholds need d1 < d2");
  // A suffix chain has up to `levels` nodes and a block being spliced can be
  // reduced (by splits) to its root plus at most three frontier leaves, so
  // every limit that hosts chains needs this much headroom.
  std::uint32_t floor = g.levels() + 4;
  if (n_max < floor || n1_max < floor || (n2_max != 1 && n2_max < floor)) {
    throw std::invalid_argument("capacity limit too small for this grid");
  }
  TrieConfig c;
  c.epsilon = epsilon;
  c.n_max = n_max;
  c.n1_max = n1_max;
  c.n2_max = n2_max;
  c.d1 = d1;
  c.d2 = d2;
  c.ladder = SizeLadder::geometric(n_max, epsilon);
  return c;
}

K2Trie::K2Trie(const GridShape& shape, const TrieConfig& config)
    : shape_(shape),
      config_(TrieConfig::make(config.epsilon, config.n_max, config.n1_max,
                               config.n2_max, config.d1, config.d2, shape)) {
  std::uint32_t cap = config_.ladder.fit(1, config_.limit_for_depth(0));
  root_ = allocate(Block::single(NodeCode{0}, 0, cap));
}

BlockHandle K2Trie::allocate(Block&& b) {
  BlockHandle h;
  if (!free_.empty()) {
    h = free_.back();
    free_.pop_back();
    store_[h] = std::move(b);
  } else {
    h = static_cast<BlockHandle>(store_.size());
    store_.push_back(std::move(b));
    live_.push_back(0);
  }
  live_[h] = 1;
  return h;
}

void K2Trie::free_block(BlockHandle h) {
  live_[h] = 0;
  store_[h] = Block{};
  free_.push_back(h);
  std::erase(touched_, h);
}

void K2Trie::touch(BlockHandle h) { touched_.push_back(h); }

std::uint64_t K2Trie::block_count() const {
  return store_.size() - free_.size();
}

bool K2Trie::contains(const Point& p) const {
  MortonCode m = morton_encode(p, shape_);
  BlockHandle h = root_;
  std::uint32_t x = 0;
  ScanState st;
  for (std::uint32_t depth = 0;; ++depth) {
    const Block& b = at(h);
    Symbol s = m.symbol(depth);
    NodeCode c = b.code(x);
    if (depth == shape_.leaf_depth()) return has_child(c, s);
    if (!has_child(c, s)) return false;
    ChildLocation loc = b.scan_to_child(x, depth, s, shape_, st);
    if (loc.frontier) {
      h = b.child_handle(loc.frontier_slot);
      x = 0;
      st = ScanState{};
    } else {
      x = loc.index;
    }
  }
}

void K2Trie::mirror_root_code(const PathStep& step) {
  if (!step.block_root || step.parent_blk == kNoBlock) return;
  Block& pb = at(step.parent_blk);
  std::uint32_t f = pb.frontier_pos(step.parent_slot);
  if (f < pb.occupancy()) {
    pb.set_code(f, at(step.blk).code(0));
    touch(step.parent_blk);
  }
}

BlockHandle K2Trie::build_chain(std::uint32_t first_depth,
                                std::span<const Symbol> symbols) {
  assert(!symbols.empty());
  std::uint32_t limit = config_.limit_for_depth(first_depth);
  if (limit == 1) {
    BlockHandle h = allocate(Block::single(unary_code(symbols[0]), first_depth, 1));
    touch(h);
    if (symbols.size() > 1) {
      BlockHandle child = build_chain(first_depth + 1, symbols.subspan(1));
      at(h).attach_virtual_child(1, child);
    }
    return h;
  }
  auto len = static_cast<std::uint32_t>(symbols.size());
  BlockHandle h = allocate(
      Block::chain(symbols, first_depth, config_.ladder.fit(len, limit)));
  touch(h);
  return h;
}

void K2Trie::splice_at(BlockHandle h, std::uint32_t x, std::uint32_t depth,
                       std::span<const Symbol> z, PathStep step) {
  auto needed = static_cast<std::uint32_t>(z.size()) - 1;
  Block* b = &at(h);
  std::uint32_t limit = config_.limit_for_depth(b->root_depth());

  if (limit == 1) {
    // Explicit-pointer region: the block stores only its root; the suffix
    // becomes a child block hooked in as the pointer for symbol z[0].
    assert(x == 0 && b->occupancy() == 1);
    b->set_code(0, with_child(b->code(0), z[0]));
    touch(h);
    if (needed > 0) {
      BlockHandle child = build_chain(depth + 1, z.subspan(1));
      Block& bb = at(h);
      std::uint32_t pos = 1 + children_to_skip(bb.code(0), z[0]);
      bb.attach_virtual_child(pos, child);
    }
    mirror_root_code(step);
    return;
  }

  while (b->occupancy() + needed > b->capacity()) {
    if (b->grow(needed, config_.ladder, limit)) {
      touch(h);
      break;
    }
    auto wopt = b->choose_split_node(shape_);
    if (!wopt) {
      throw corruption_error("insert cannot make room: block has no split node");
    }
    std::uint32_t w = *wopt;
    // node_depth is the absolute trie depth, the child block's root depth.
    std::uint32_t child_limit =
        config_.limit_for_depth(b->node_depth(w, shape_));
    BlockHandle ch = allocate(Block{});
    b = &at(h);
    SplitInfo info;
    Block child = b->split(w, shape_, ch, config_.ladder, limit, child_limit,
                           &info);
    if (info.subtree_end - info.subtree_begin < 2) {
      throw corruption_error("split made no room");
    }
    store_[ch] = std::move(child);
    touch(h);
    touch(ch);
    if (x >= info.subtree_begin && x < info.subtree_end) {
      // The failure node moved into the child block.
      step.blk = ch;
      step.idx = x - info.subtree_begin;
      step.block_root = (x == info.subtree_begin);
      step.parent_blk = h;
      step.parent_slot = info.parent_slot;
      h = ch;
      x -= info.subtree_begin;
      b = &at(h);
      limit = config_.limit_for_depth(b->root_depth());
    } else if (x >= info.subtree_end) {
      x -= info.subtree_end - info.subtree_begin - 1;
      step.idx = x;
    }
  }

  std::uint32_t pos = b->locate_insertion(x, depth, z[0], shape_);
  b->splice_chain(x, pos, z, shape_);
  touch(h);
  if (x == 0) mirror_root_code(step);
}

bool K2Trie::insert(const Point& p) {
  MortonCode m = morton_encode(p, shape_);
  touched_.clear();
  BlockHandle h = root_;
  std::uint32_t x = 0;
  ScanState st;
  PathStep step{root_, 0, true, kNoBlock, 0};
  for (std::uint32_t depth = 0;; ++depth) {
    Block& b = at(h);
    Symbol s = m.symbol(depth);
    NodeCode c = b.code(x);
    if (depth == shape_.leaf_depth()) {
      if (has_child(c, s)) return false;
      b.set_code(x, with_child(c, s));
      touch(h);
      if (x == 0) mirror_root_code(step);
      ++points_;
      return true;
    }
    if (!has_child(c, s)) {
      std::array<Symbol, 32> z;
      std::uint32_t len = 0;
      for (std::uint32_t j = depth; j < shape_.levels(); ++j) {
        z[len++] = m.symbol(j);
      }
      splice_at(h, x, depth, std::span<const Symbol>(z.data(), len), step);
      ++points_;
      return true;
    }
    ChildLocation loc = b.scan_to_child(x, depth, s, shape_, st);
    if (loc.frontier) {
      step = PathStep{b.child_handle(loc.frontier_slot), 0, true, h,
                      loc.frontier_slot};
      h = step.blk;
      x = 0;
      st = ScanState{};
    } else {
      x = loc.index;
      step.idx = x;
      step.block_root = false;
    }
  }
}

bool K2Trie::erase(const Point& p) {
  MortonCode m = morton_encode(p, shape_);
  touched_.clear();
  std::uint32_t levels = shape_.levels();
  std::vector<PathStep> steps(levels);
  steps[0] = PathStep{root_, 0, true, kNoBlock, 0};
  {
    BlockHandle h = root_;
    std::uint32_t x = 0;
    ScanState st;
    for (std::uint32_t depth = 0;; ++depth) {
      const Block& b = at(h);
      Symbol s = m.symbol(depth);
      if (!has_child(b.code(x), s)) return false;
      if (depth == shape_.leaf_depth()) break;
      ChildLocation loc = b.scan_to_child(x, depth, s, shape_, st);
      if (loc.frontier) {
        steps[depth + 1] = PathStep{b.child_handle(loc.frontier_slot), 0, true,
                                    h, loc.frontier_slot};
        h = steps[depth + 1].blk;
        x = 0;
        st = ScanState{};
      } else {
        steps[depth + 1] = PathStep{h, loc.index, false, kNoBlock, 0};
        x = loc.index;
      }
    }
  }

  // Clear the leaf bit, then peel empty nodes bottom-up along the path.
  {
    Block& b = at(steps[levels - 1].blk);
    std::uint32_t idx = steps[levels - 1].idx;
    b.set_code(idx, without_child(b.code(idx), m.symbol(levels - 1)));
    touch(steps[levels - 1].blk);
    if (idx == 0) mirror_root_code(steps[levels - 1]);
  }
  std::uint32_t j = levels - 1;
  while (j > 0 && at(steps[j].blk).code(steps[j].idx).mask == 0) {
    const PathStep& cur = steps[j];
    if (cur.block_root) {
      if (at(cur.blk).occupancy() != 1 || at(cur.blk).frontier_count() != 0) {
        throw corruption_error("emptied block root still owns content");
      }
      Block& pb = at(cur.parent_blk);
      pb.detach_child(cur.parent_slot);
      pb.refit(config_.ladder, config_.limit_for_depth(pb.root_depth()));
      touch(cur.parent_blk);
      free_block(cur.blk);
    } else {
      Block& b = at(cur.blk);
      b.erase_code(cur.idx);
      b.refit(config_.ladder, config_.limit_for_depth(b.root_depth()));
      touch(cur.blk);
    }
    const PathStep& par = steps[j - 1];
    Block& b = at(par.blk);
    b.set_code(par.idx, without_child(b.code(par.idx), m.symbol(j - 1)));
    touch(par.blk);
    if (par.idx == 0) mirror_root_code(par);
    --j;
  }
  --points_;
  return true;
}

std::vector<Point> K2Trie::range(std::uint32_t r1, std::uint32_t r2,
                                 std::uint32_t c1, std::uint32_t c2) const {
  if (r1 > r2 || c1 > c2 || r2 >= shape_.side() || c2 >= shape_.side()) {
    throw std::invalid_argument("invalid query rectangle");
  }
  std::vector<Point> out;
  collect_range(root_, 0, 0, 0, 0, r1, r2, c1, c2, out);
  return out;
}

void K2Trie::collect_range(BlockHandle h, std::uint32_t x, std::uint32_t depth,
                           std::uint32_t row_base, std::uint32_t col_base,
                           std::uint32_t r1, std::uint32_t r2,
                           std::uint32_t c1, std::uint32_t c2,
                           std::vector<Point>& out) const {
  const Block& b = at(h);
  NodeCode c = b.code(x);
  if (depth == shape_.leaf_depth()) {
    for (Symbol s = 0; s < 4; ++s) {
      if (!has_child(c, s)) continue;
      std::uint32_t r = row_base + (s >> 1);
      std::uint32_t col = col_base + (s & 1u);
      if (r >= r1 && r <= r2 && col >= c1 && col <= c2) {
        out.push_back(Point{r, col});
      }
    }
    return;
  }
  std::uint32_t half = (shape_.side() >> depth) >> 1;
  std::array<ChildEntry, 4> kids;
  std::uint32_t n = b.children_of(x, depth, shape_, kids);
  for (std::uint32_t i = 0; i < n; ++i) {
    const ChildEntry& e = kids[i];
    std::uint32_t rb = row_base + (e.symbol >> 1) * half;
    std::uint32_t cb = col_base + (e.symbol & 1u) * half;
    if (rb > r2 || rb + half - 1 < r1 || cb > c2 || cb + half - 1 < c1) {
      continue;
    }
    if (e.frontier) {
      collect_range(b.child_handle(e.frontier_slot), 0, depth + 1, rb, cb, r1,
                    r2, c1, c2, out);
    } else {
      collect_range(h, e.index, depth + 1, rb, cb, r1, r2, c1, c2, out);
    }
  }
}

std::vector<std::uint32_t> K2Trie::neighbors(std::uint32_t row) const {
  std::vector<std::uint32_t> cols;
  for (const Point& p : range(row, row, 0, shape_.side() - 1)) {
    cols.push_back(p.col);
  }
  return cols;
}

std::vector<std::uint32_t> K2Trie::reverse_neighbors(std::uint32_t col) const {
  std::vector<std::uint32_t> rows;
  for (const Point& p : range(0, shape_.side() - 1, col, col)) {
    rows.push_back(p.row);
  }
  return rows;
}

std::vector<NodeCode> K2Trie::serialize_levelwise() const {
  std::vector<std::vector<NodeCode>> by_depth(shape_.levels());
  collect_levelwise(root_, by_depth);
  std::vector<NodeCode> out;
  for (const auto& level : by_depth) {
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

void K2Trie::collect_levelwise(
    BlockHandle h, std::vector<std::vector<NodeCode>>& by_depth) const {
  const Block& b = at(h);
  std::uint32_t slot = 0;
  walk_levelwise(b, 0, b.root_depth(), slot, by_depth);
}

std::uint32_t K2Trie::walk_levelwise(
    const Block& b, std::uint32_t pos, std::uint32_t depth,
    std::uint32_t& slot, std::vector<std::vector<NodeCode>>& by_depth) const {
  // Frontier entries appear in preorder, so one advancing slot cursor
  // suffices; the node itself is emitted from the child block it roots.
  if (slot < b.frontier_count() && b.frontier_pos(slot) == pos) {
    BlockHandle child = b.child_handle(slot);
    ++slot;
    collect_levelwise(child, by_depth);
    return pos + 1;
  }
  NodeCode c = b.code(pos);
  by_depth[depth].push_back(c);
  if (depth == shape_.leaf_depth()) return pos + 1;
  std::uint32_t end = pos + 1;
  for (Symbol s = 0; s < 4; ++s) {
    if (has_child(c, s)) end = walk_levelwise(b, end, depth + 1, slot, by_depth);
  }
  return end;
}

SpaceReport K2Trie::space_report() const {
  SpaceReport r;
  std::uint64_t occ_sum = 0;
  std::uint64_t dup = 0;
  for (BlockHandle h = 0; h < store_.size(); ++h) {
    if (!live_[h]) continue;
    const Block& b = store_[h];
    ++r.blocks;
    r.topology_bits += 4ull * b.capacity();
    occ_sum += b.occupancy();
    for (std::uint32_t f : b.frontier()) {
      if (f < b.occupancy()) ++dup;
    }
    r.frontier_bits += 32ull * b.frontier_count();
    r.handle_bits += 32ull * b.children().size();
    r.bookkeeping_bits += 96;
  }
  r.nodes = occ_sum - dup;
  r.topology_used_bits = 4ull * r.nodes;
  r.points = points_;
  if (points_ > 0) {
    r.bits_per_point =
        static_cast<double>(r.total_bits()) / static_cast<double>(points_);
  }
  return r;
}

void K2Trie::validate_block(BlockHandle h) const {
  if (h >= store_.size() || !live_[h]) {
    throw corruption_error("validating a dead block handle");
  }
  const Block& b = store_[h];
  b.validate(shape_, config_.limit_for_depth(b.root_depth()), config_.ladder,
             h == root_);
  // Downward duplication: stored frontier codes must equal child roots.
  std::vector<std::uint32_t> depths = b.node_depths(shape_);
  for (std::uint32_t slot = 0; slot < b.frontier_count(); ++slot) {
    std::uint32_t f = b.frontier_pos(slot);
    BlockHandle ch = b.child_handle(slot);
    if (ch >= store_.size() || !live_[ch]) {
      throw corruption_error("frontier entry points at a dead block");
    }
    const Block& cb = store_[ch];
    std::uint32_t expected_depth =
        f < b.occupancy() ? depths[f] : b.root_depth() + 1;
    if (cb.root_depth() != expected_depth) {
      throw corruption_error("child block depth mismatch");
    }
    if (f < b.occupancy() && cb.code(0) != b.code(f)) {
      throw corruption_error("frontier code differs from child root");
    }
  }
}

void K2Trie::validate_subtree(BlockHandle h, std::uint32_t expected_depth,
                              NodeCode expected_root, bool has_expectation,
                              std::vector<bool>& seen,
                              std::uint64_t& leaf_bits) const {
  if (h >= store_.size() || !live_[h]) {
    throw corruption_error("dangling block handle");
  }
  if (seen[h]) throw corruption_error("block reachable twice");
  seen[h] = true;
  const Block& b = store_[h];
  if (b.root_depth() != expected_depth) {
    throw corruption_error("block root depth mismatch");
  }
  if (has_expectation && b.code(0) != expected_root) {
    throw corruption_error("frontier code differs from child root");
  }
  b.validate(shape_, config_.limit_for_depth(b.root_depth()), config_.ladder,
             h == root_);
  std::vector<std::uint32_t> depths = b.node_depths(shape_);
  for (std::uint32_t i = 0; i < b.occupancy(); ++i) {
    if (depths[i] == shape_.leaf_depth() && !b.is_frontier(i)) {
      leaf_bits += child_count(b.code(i));
    }
  }
  for (std::uint32_t slot = 0; slot < b.frontier_count(); ++slot) {
    std::uint32_t f = b.frontier_pos(slot);
    bool stored = f < b.occupancy();
    validate_subtree(b.child_handle(slot),
                     stored ? depths[f] : b.root_depth() + 1,
                     stored ? b.code(f) : NodeCode{}, stored, seen, leaf_bits);
  }
}

void K2Trie::validate() const {
  std::vector<bool> seen(store_.size(), false);
  std::uint64_t leaf_bits = 0;
  validate_subtree(root_, 0, NodeCode{}, false, seen, leaf_bits);
  for (BlockHandle h = 0; h < store_.size(); ++h) {
    if (live_[h] && !seen[h]) throw corruption_error("unreachable live block");
    if (!live_[h] && seen[h]) throw corruption_error("reachable dead block");
  }
  if (leaf_bits != points_) {
    throw corruption_error("stored point count disagrees with leaf bits");
  }
}

}  // namespace k2dyn
