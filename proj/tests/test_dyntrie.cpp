#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>
#include <unordered_set>

#include "k2dyn/bench.hpp"
#include "k2dyn/static_k2.hpp"
#include "oracles.hpp"

using namespace k2dyn;
using k2test::levelwise_text;
using k2test::sample16_points;

namespace {

const GridShape g16 = GridShape::from_side(16);

TrieConfig roomy16() {
  // Single-block friendly: the root region holds the whole sample.
  return TrieConfig::make(0.05, 64, 32, 16, 0, 1, g16);
}

TrieConfig pointer16() { return TrieConfig::defaults(g16); }

K2Trie sample_trie(const TrieConfig& cfg) {
  K2Trie t(g16, cfg);
  for (const Point& p : sample16_points()) t.insert(p);
  return t;
}

std::uint64_t pack(const Point& p) {
  return (static_cast<std::uint64_t>(p.row) << 32) | p.col;
}

}  // namespace

TEST_CASE("a fresh trie is empty") {
  K2Trie t(g16, roomy16());
  CHECK(t.point_count() == 0);
  for (std::uint32_t r = 0; r < 16; ++r) {
    for (std::uint32_t c = 0; c < 16; ++c) {
      REQUIRE_FALSE(t.contains(Point{r, c}));
    }
  }
  CHECK(levelwise_text(t) == "0000");
  t.validate();
}

TEST_CASE("a two-by-two grid stores cells in the root code") {
  GridShape g2 = GridShape::from_side(2);
  K2Trie t(g2, TrieConfig::make(0.05, 8, 7, 1, 0, 1, g2));
  CHECK(levelwise_text(t) == "0000");
  CHECK(t.insert(Point{1, 0}));
  CHECK(t.insert(Point{0, 1}));
  CHECK_FALSE(t.insert(Point{1, 0}));
  CHECK(t.contains(Point{1, 0}));
  CHECK_FALSE(t.contains(Point{0, 0}));
  CHECK(levelwise_text(t) == "0110");
  CHECK(t.erase(Point{0, 1}));
  CHECK(levelwise_text(t) == "0010");
  t.validate();
}

TEST_CASE("inserting the sample reproduces its levelwise layout") {
  for (const TrieConfig& cfg : {roomy16(), pointer16()}) {
    K2Trie t = sample_trie(cfg);
    CHECK(t.point_count() == 13);
    CHECK(levelwise_text(t) == k2test::kSample16Levelwise);
    CHECK(t.contains(Point{0, 2}));
    CHECK_FALSE(t.contains(Point{15, 15}));
    t.validate();
  }
}

TEST_CASE("duplicate inserts leave the structure untouched") {
  K2Trie t = sample_trie(roomy16());
  std::string before = levelwise_text(t);
  CHECK_FALSE(t.insert(Point{0, 2}));
  CHECK(t.point_count() == 13);
  CHECK(levelwise_text(t) == before);
}

TEST_CASE("the pointer-region default stores one code per shallow block") {
  K2Trie t = sample_trie(pointer16());
  // d1 = 8 covers every depth of a 16x16 grid: explicit pointers everywhere.
  for (BlockHandle h : k2test::all_blocks(t)) {
    CHECK(t.block(h).occupancy() == 1);
    CHECK(t.block(h).capacity() == 1);
  }
  CHECK(levelwise_text(t) == k2test::kSample16Levelwise);
}

TEST_CASE("contains agrees with a hash-set oracle on a 1024 grid") {
  GridShape g = GridShape::from_side(1024);
  TrieConfig cfg = TrieConfig::make(0.05, 64, 32, 1, 1, 3, g);
  K2Trie t(g, cfg);
  std::unordered_set<std::uint64_t> oracle;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    Point p = k2test::random_point(rng, g.side());
    t.insert(p);
    oracle.insert(pack(p));
  }
  for (int i = 0; i < 100000; ++i) {
    Point p = k2test::random_point(rng, g.side());
    REQUIRE(t.contains(p) == (oracle.count(pack(p)) > 0));
  }
}

TEST_CASE("erase rolls an insert back to the empty serialization") {
  for (const TrieConfig& cfg : {roomy16(), pointer16()}) {
    K2Trie t(g16, cfg);
    CHECK(t.insert(Point{4, 0}));
    CHECK(t.erase(Point{4, 0}));
    CHECK(t.point_count() == 0);
    CHECK(levelwise_text(t) == "0000");
    CHECK(t.block_count() == 1);  // collapsed chain blocks were freed
    t.validate();
  }
}

TEST_CASE("erase prunes emptied nodes and matches a static rebuild") {
  K2Trie t = sample_trie(roomy16());
  CHECK(t.erase(Point{7, 3}));
  CHECK_FALSE(t.erase(Point{7, 3}));
  CHECK(t.point_count() == 12);
  std::vector<Point> rest;
  for (const Point& p : sample16_points()) {
    if (!(p == Point{7, 3})) rest.push_back(p);
  }
  StaticK2 s = StaticK2::build(rest, g16);
  CHECK(t.serialize_levelwise() == s.codes());
  // The emptied leaf is gone and its parent lost the symbol-3 bit.
  CHECK(levelwise_text(t) ==
        "1001 1110 0100 0110 1100 1000 1010 1101 0100 1100 1001 1100 1000 "
        "0010");
  t.validate();
}

TEST_CASE("erase of an absent point reports false and changes nothing") {
  K2Trie t = sample_trie(pointer16());
  std::string before = levelwise_text(t);
  CHECK_FALSE(t.erase(Point{9, 9}));
  CHECK(t.point_count() == 13);
  CHECK(levelwise_text(t) == before);
}

TEST_CASE("range returns the points of a rectangle in Morton order") {
  K2Trie t = sample_trie(roomy16());
  SUBCASE("single row") {
    auto got = t.range(4, 4, 0, 15);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == Point{4, 0});
    CHECK(got[1] == Point{4, 1});
  }
  SUBCASE("full grid recovers every point") {
    auto got = t.range(0, 15, 0, 15);
    CHECK(got.size() == 13);
    std::set<std::uint64_t> keys;
    for (const Point& p : got) keys.insert(pack(p));
    for (const Point& p : sample16_points()) CHECK(keys.count(pack(p)) == 1);
    // Morton order: packed codes strictly increase.
    for (std::size_t i = 1; i < got.size(); ++i) {
      CHECK(morton_encode(got[i - 1], g16).packed() <
            morton_encode(got[i], g16).packed());
    }
  }
  SUBCASE("an empty quadrant yields nothing") {
    CHECK(t.range(12, 15, 0, 7).empty());
  }
  SUBCASE("rectangle validation") {
    CHECK_THROWS_AS(t.range(4, 3, 0, 15), std::invalid_argument);
    CHECK_THROWS_AS(t.range(0, 16, 0, 15), std::invalid_argument);
  }
}

TEST_CASE("neighbors and reverse neighbors specialize range") {
  K2Trie t = sample_trie(pointer16());
  CHECK(t.neighbors(0) == std::vector<std::uint32_t>{2, 3, 4, 5, 6});
  CHECK(t.reverse_neighbors(1) == std::vector<std::uint32_t>{2, 4});
  CHECK(t.neighbors(15).empty());
}

TEST_CASE("levelwise serialization of a single deep point") {
  GridShape g4 = GridShape::from_side(4);
  K2Trie t(g4, TrieConfig::make(0.05, 8, 7, 1, 0, 1, g4));
  t.insert(Point{0, 0});
  CHECK(levelwise_text(t) == "1000 1000");
}

TEST_CASE("space report counts static-equivalent topology bits") {
  K2Trie t = sample_trie(roomy16());
  SpaceReport r = t.space_report();
  CHECK(r.topology_used_bits == 60);  // 15 nodes at 4 bits
  CHECK(r.nodes == 15);
  CHECK(r.points == 13);
  CHECK(r.bits_per_point > 0.0);
  CHECK(r.topology_bits >= r.topology_used_bits);

  K2Trie empty(g16, roomy16());
  SpaceReport re = empty.space_report();
  CHECK(re.topology_used_bits == 4);
  CHECK(re.bits_per_point == 0.0);
}

TEST_CASE("node count never exceeds points times levels") {
  std::mt19937_64 rng(9);
  GridShape g = GridShape::from_side(256);
  K2Trie t(g, TrieConfig::make(0.05, 64, 32, 1, 1, 3, g));
  for (int i = 0; i < 400; ++i) t.insert(k2test::random_point(rng, g.side()));
  SpaceReport r = t.space_report();
  CHECK(r.nodes <= t.point_count() * g.levels());
  CHECK(r.nodes >= t.point_count());
}

TEST_CASE("any insertion order serializes identically") {
  std::mt19937_64 rng(10);
  GridShape g = GridShape::from_side(128);
  TrieConfig cfg = TrieConfig::make(0.05, 32, 24, 1, 1, 3, g);
  for (int round = 0; round < 5; ++round) {
    std::vector<Point> pts;
    auto n = 1 + k2test::rand_below(rng, 300);
    for (std::uint64_t i = 0; i < n; ++i) {
      pts.push_back(k2test::random_point(rng, g.side()));
    }
    K2Trie first(g, cfg);
    for (const Point& p : pts) first.insert(p);
    std::string want = levelwise_text(first);
    for (int perm = 0; perm < 4; ++perm) {
      for (std::size_t i = pts.size(); i > 1; --i) {
        std::swap(pts[i - 1], pts[k2test::rand_below(rng, i)]);
      }
      K2Trie t(g, cfg);
      for (const Point& p : pts) t.insert(p);
      REQUIRE(levelwise_text(t) == want);
      t.validate();
    }
  }
}

TEST_CASE("insert followed by erase restores the serialization") {
  std::mt19937_64 rng(12);
  GridShape g = GridShape::from_side(64);
  for (const TrieConfig& cfg : k2test::config_pool(g)) {
    K2Trie t(g, cfg);
    for (int i = 0; i < 200; ++i) {
      t.insert(k2test::random_point(rng, g.side()));
    }
    std::string before = levelwise_text(t);
    for (int i = 0; i < 50; ++i) {
      Point p = k2test::random_point(rng, g.side());
      if (t.contains(p)) continue;
      REQUIRE(t.insert(p));
      REQUIRE(t.erase(p));
      REQUIRE(levelwise_text(t) == before);
    }
    t.validate();
  }
}

TEST_CASE("mixed workload matches the oracle with validation every op") {
  GridShape g = GridShape::from_side(256);
  TrieConfig cfg = TrieConfig::make(0.05, 32, 24, 1, 1, 3, g);
  K2Trie t(g, cfg);
  std::set<std::uint64_t> oracle;
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t pick = k2test::rand_below(rng, 100);
    Point p = k2test::random_point(rng, g.side());
    if (pick < 45) {
      REQUIRE(t.insert(p) == oracle.insert(pack(p)).second);
    } else if (pick < 75) {
      REQUIRE(t.erase(p) == (oracle.erase(pack(p)) > 0));
    } else if (pick < 95) {
      REQUIRE(t.contains(p) == (oracle.count(pack(p)) > 0));
    } else {
      std::uint32_t r1 = p.row, c1 = p.col;
      std::uint32_t r2 = std::min(g.side() - 1, r1 + 16);
      std::uint32_t c2 = std::min(g.side() - 1, c1 + 16);
      auto got = t.range(r1, r2, c1, c2);
      std::vector<std::uint64_t> keys;
      for (const Point& q : got) keys.push_back(pack(q));
      std::vector<std::uint64_t> want;
      for (std::uint64_t k : oracle) {
        std::uint32_t r = static_cast<std::uint32_t>(k >> 32);
        std::uint32_t c = static_cast<std::uint32_t>(k);
        if (r >= r1 && r <= r2 && c >= c1 && c <= c2) want.push_back(k);
      }
      std::sort(keys.begin(), keys.end());
      REQUIRE(keys == want);
    }
    t.validate();
    REQUIRE(t.point_count() == oracle.size());
    if (i % 1000 == 999) {
      std::vector<Point> pts;
      for (std::uint64_t k : oracle) {
        pts.push_back(Point{static_cast<std::uint32_t>(k >> 32),
                            static_cast<std::uint32_t>(k)});
      }
      REQUIRE(t.serialize_levelwise() == StaticK2::build(pts, g).codes());
    }
  }
}

TEST_CASE("configuration validation rejects bad parameter sets") {
  CHECK_THROWS_AS(TrieConfig::make(0.0, 64, 32, 1, 0, 1, g16),
                  std::invalid_argument);
  CHECK_THROWS_AS(TrieConfig::make(0.05, 62, 32, 1, 0, 1, g16),
                  std::invalid_argument);  // not a multiple of 4
  CHECK_THROWS_AS(TrieConfig::make(0.05, 64, 64, 1, 0, 1, g16),
                  std::invalid_argument);  // n1 == nmax
  CHECK_THROWS_AS(TrieConfig::make(0.05, 64, 32, 2, 0, 1, g16),
                  std::invalid_argument);  // 1 < n2 < levels+4
  CHECK_THROWS_AS(TrieConfig::make(0.05, 64, 32, 1, 1, 1, g16),
                  std::invalid_argument);  // d1 == d2
  CHECK_THROWS_AS(TrieConfig::make(0.05, 64, 6, 1, 0, 1, g16),
                  std::invalid_argument);  // n1 below levels+4
  CHECK_NOTHROW(TrieConfig::make(0.05, 64, 32, 8, 0, 1, g16));
}

TEST_CASE("coordinates outside the grid raise domain errors") {
  K2Trie t(g16, roomy16());
  CHECK_THROWS_AS(t.insert(Point{16, 0}), std::invalid_argument);
  CHECK_THROWS_AS(t.contains(Point{0, 99}), std::invalid_argument);
  CHECK_THROWS_AS(t.erase(Point{16, 16}), std::invalid_argument);
}

TEST_CASE("pointer blocks keep children slot-aligned with their symbols") {
  // Fill all four children of the root in a scrambled order; the entries
  // must end up at slots 1..4 with the handles in symbol order.
  K2Trie t(g16, pointer16());
  t.insert(Point{12, 4});   // symbol 2 first
  t.insert(Point{0, 0});    // symbol 0
  t.insert(Point{12, 12});  // symbol 3
  t.insert(Point{0, 12});   // symbol 1
  const Block& root = t.block(t.root_handle());
  CHECK(to_bit_string(root.code(0)) == "1111");
  CHECK(root.frontier() == std::vector<std::uint32_t>{1, 2, 3, 4});
  for (std::uint32_t slot = 0; slot < 4; ++slot) {
    const Block& child = t.block(root.child_handle(slot));
    CHECK(child.root_depth() == 1);
  }
  // Each child block must hold the quadrant of the matching point.
  CHECK(t.contains(Point{0, 0}));
  CHECK(t.contains(Point{0, 12}));
  CHECK(t.contains(Point{12, 4}));
  CHECK(t.contains(Point{12, 12}));
  t.validate();
}

TEST_CASE("tiny grids survive a randomized workload") {
  for (std::uint32_t side : {4u, 8u}) {
    GridShape g = GridShape::from_side(side);
    TrieConfig cfg = TrieConfig::make(0.5, 8, 7, 1, 0, 1, g);
    auto res = k2dyn::bench::verify_trie(g, cfg, 20000, 17, 500);
    CHECK(res.pass);
    if (!res.pass) MESSAGE(res.failure);
  }
}

TEST_CASE("deep grids handle the corner coordinates") {
  GridShape g = GridShape::from_side(1u << 20);
  K2Trie t(g, TrieConfig::defaults(g));
  std::uint32_t last = g.side() - 1;
  std::vector<Point> corners = {
      {0, 0}, {0, last}, {last, 0}, {last, last}, {last / 2, last / 2 + 1}};
  for (const Point& p : corners) CHECK(t.insert(p));
  for (const Point& p : corners) CHECK(t.contains(p));
  t.validate();
  CHECK(t.range(0, last, 0, last).size() == corners.size());
  for (const Point& p : corners) CHECK(t.erase(p));
  CHECK(t.point_count() == 0);
  CHECK(levelwise_text(t) == "0000");
  t.validate();
}

TEST_CASE("read-only queries are safe to run from several threads") {
  GridShape g = GridShape::from_side(512);
  K2Trie t(g, TrieConfig::make(0.05, 64, 32, 1, 1, 3, g));
  std::mt19937_64 rng(31);
  std::vector<Point> pts;
  for (int i = 0; i < 2000; ++i) {
    Point p = k2test::random_point(rng, g.side());
    if (t.insert(p)) pts.push_back(p);
  }
  std::vector<NodeCode> expected = t.serialize_levelwise();
  std::atomic<int> mismatches{0};
  auto reader = [&](std::uint64_t seed) {
    std::mt19937_64 local(seed);
    for (int i = 0; i < 5000; ++i) {
      const Point& p = pts[k2test::rand_below(local, pts.size())];
      if (!t.contains(p)) mismatches.fetch_add(1);
      Point q = k2test::random_point(local, g.side());
      t.contains(q);
    }
    if (t.serialize_levelwise() != expected) mismatches.fetch_add(1);
    if (t.range(0, 99, 0, 99).size() !=
        t.range(0, 99, 0, 99).size()) {
      mismatches.fetch_add(1);
    }
  };
  std::vector<std::thread> threads;
  for (std::uint64_t s = 0; s < 4; ++s) threads.emplace_back(reader, s);
  for (auto& th : threads) th.join();
  CHECK(mismatches.load() == 0);
}

TEST_CASE("erase refits block capacities to the smallest class") {
  GridShape g = GridShape::from_side(64);
  TrieConfig cfg = TrieConfig::make(0.5, 64, 32, 16, 0, 1, g);
  K2Trie t(g, cfg);
  std::mt19937_64 rng(14);
  std::vector<Point> pts;
  for (int i = 0; i < 300; ++i) {
    Point p = k2test::random_point(rng, g.side());
    if (t.insert(p)) pts.push_back(p);
  }
  for (const Point& p : pts) {
    t.erase(p);
    t.validate();  // capacity discipline is part of validate()
  }
  CHECK(t.point_count() == 0);
  CHECK(levelwise_text(t) == "0000");
}
