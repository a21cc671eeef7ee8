#include "k2dyn/static_k2.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace k2dyn {

StaticK2 StaticK2::build(std::span<const Point> points, const GridShape& g) {
  std::vector<std::uint64_t> keys;
  keys.reserve(points.size());
  for (const Point& p : points) keys.push_back(morton_encode(p, g).packed());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  StaticK2 s;
  s.shape_ = g;
  s.points_ = keys.size();
  s.level_offsets_.assign(g.levels(), 0);

  // Level by level: the nodes of level d are the distinct d-symbol prefixes,
  // already in left-to-right order because the keys are sorted. Each node's
  // code collects the distinct next symbols of its key run.
  std::uint32_t levels = g.levels();
  for (std::uint32_t d = 0; d < levels; ++d) {
    s.level_offsets_[d] = static_cast<std::uint32_t>(s.codes_.size());
    std::uint32_t prefix_shift = 2 * (levels - d);
    std::uint32_t symbol_shift = 2 * (levels - d - 1);
    if (keys.empty()) {
      if (d == 0) s.codes_.push_back(NodeCode{0});
      continue;
    }
    std::size_t i = 0;
    while (i < keys.size()) {
      std::uint64_t prefix = d == 0 ? 0 : (keys[i] >> prefix_shift);
      NodeCode c{};
      std::size_t j = i;
      while (j < keys.size() &&
             (d == 0 || (keys[j] >> prefix_shift) == prefix)) {
        c = with_child(c, static_cast<Symbol>((keys[j] >> symbol_shift) & 3u));
        ++j;
      }
      s.codes_.push_back(c);
      i = j;
    }
  }
  s.build_index();
  return s;
}

StaticK2 StaticK2::from_codes(std::span<const NodeCode> codes,
                              const GridShape& g, std::uint64_t points) {
  if (codes.empty()) throw std::invalid_argument("empty code sequence");
  StaticK2 s;
  s.shape_ = g;
  s.points_ = points;
  s.codes_.assign(codes.begin(), codes.end());
  s.level_offsets_.assign(g.levels(), 0);
  // Recover the level boundaries: each level's set bits, except at the last
  // level, spawn exactly one node on the next one.
  std::uint32_t start = 0;
  std::uint32_t count = 1;
  for (std::uint32_t d = 0; d < g.levels(); ++d) {
    s.level_offsets_[d] = start;
    if (start + count > s.codes_.size()) {
      throw std::invalid_argument("code sequence shorter than its levels");
    }
    std::uint32_t ones = 0;
    for (std::uint32_t i = start; i < start + count; ++i) {
      ones += child_count(s.codes_[i]);
    }
    start += count;
    count = ones;
    if (d + 1 == g.levels()) {
      if (start != s.codes_.size()) {
        throw std::invalid_argument("code sequence length mismatch");
      }
    } else if (count == 0) {
      if (start != s.codes_.size()) {
        throw std::invalid_argument("dangling codes after an empty level");
      }
      for (std::uint32_t e = d + 1; e < g.levels(); ++e) {
        s.level_offsets_[e] = start;
      }
      break;
    }
  }
  s.build_index();
  return s;
}

void StaticK2::build_index() {
  cum_ones_.assign(codes_.size() + 1, 0);
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    cum_ones_[i + 1] = cum_ones_[i] + child_count(codes_[i]);
  }
}

std::uint32_t StaticK2::child_index(std::uint32_t node, Symbol s) const {
  assert(node < codes_.size());
  assert(has_child(codes_[node], s));
  assert(node < level_offsets_.back() || shape_.levels() == 1);
  return cum_ones_[node] + children_to_skip(codes_[node], s) + 1;
}

bool StaticK2::contains(const Point& p) const {
  MortonCode m = morton_encode(p, shape_);
  std::uint32_t node = 0;
  for (std::uint32_t d = 0;; ++d) {
    Symbol s = m.symbol(d);
    if (!has_child(codes_[node], s)) return false;
    if (d == shape_.leaf_depth()) return true;
    node = child_index(node, s);
  }
}

}  // namespace k2dyn
