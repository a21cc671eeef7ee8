#include "k2dyn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "k2dyn/io.hpp"
#include "k2dyn/static_k2.hpp"

namespace k2dyn::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

std::uint64_t pack_point(const Point& p) {
  return (static_cast<std::uint64_t>(p.row) << 32) | p.col;
}

// rng() % n is biased for enormous n, which is irrelevant here; what
// matters is that the sequence is pinned by the seed.
std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rand_below(rng, i)]);
  }
}

}  // namespace

std::uint32_t EdgeListDataset::effective_side() const {
  if (declared_side) return *declared_side;
  std::uint32_t max_coord = 0;
  for (const Point& p : points) {
    max_coord = std::max({max_coord, p.row, p.col});
  }
  std::uint32_t side = 2;
  while (side <= max_coord) side <<= 1;
  return side;
}

EdgeListDataset ingest(std::istream& in, const std::string& name,
                       std::optional<std::uint32_t> declared_side) {
  EdgeListDataset ds;
  ds.name = name;
  ds.declared_side = declared_side;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::int64_t row, col;
    if (!(ls >> row)) {
      std::string leftover;
      if (ls.clear(), ls >> leftover) {
        throw std::runtime_error(name + ":" + std::to_string(line_no) +
                                 ": expected two integers");
      }
      continue;  // blank or comment-only line
    }
    if (!(ls >> col)) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": expected two integers");
    }
    std::string extra;
    if (ls >> extra) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": trailing junk after coordinates");
    }
    if (row < 0 || col < 0) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": negative coordinate");
    }
    if (declared_side &&
        (row >= static_cast<std::int64_t>(*declared_side) ||
         col >= static_cast<std::int64_t>(*declared_side))) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": coordinate exceeds declared side");
    }
    ds.points.push_back(Point{static_cast<std::uint32_t>(row),
                              static_cast<std::uint32_t>(col)});
  }
  return ds;
}

EdgeListDataset ingest_file(const std::string& path,
                            std::optional<std::uint32_t> declared_side) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return ingest(in, path, declared_side);
}

std::string csv_header() {
  return "dataset,side,total_points,unique_points,epsilon,n_max,n1_max,"
         "n2_max,d1,d2,seed,mode,op_count,mean_insert_us,mean_query_us,"
         "true_answers,bits_per_point,topology_bits,topology_used_bits,"
         "frontier_bits,handle_bits,bookkeeping_bits,blocks,nodes";
}

std::string csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << r.dataset << ',' << r.side << ',' << r.total_points << ','
     << r.unique_points << ',' << r.epsilon << ',' << r.n_max << ','
     << r.n1_max << ',' << r.n2_max << ',' << r.d1 << ',' << r.d2 << ','
     << r.seed << ',' << r.mode << ',' << r.op_count << ',' << r.mean_insert_us
     << ',' << r.mean_query_us << ',' << r.true_answers << ','
     << r.space.bits_per_point << ',' << r.space.topology_bits << ','
     << r.space.topology_used_bits << ',' << r.space.frontier_bits << ','
     << r.space.handle_bits << ',' << r.space.bookkeeping_bits << ','
     << r.space.blocks << ',' << r.space.nodes;
  return os.str();
}

static void fill_config(BenchRecord& rec, const TrieConfig& c) {
  rec.epsilon = c.epsilon;
  rec.n_max = c.n_max;
  rec.n1_max = c.n1_max;
  rec.n2_max = c.n2_max;
  rec.d1 = c.d1;
  rec.d2 = c.d2;
}

BenchRecord bench_insert(const EdgeListDataset& ds, const TrieConfig& config,
                         std::uint64_t seed, K2Trie* out_trie) {
  GridShape g = GridShape::from_side(ds.effective_side());
  K2Trie trie(g, config);

  std::vector<Point> order = ds.points;
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);

  BenchRecord rec;
  rec.dataset = ds.name;
  rec.side = g.side();
  rec.total_points = order.size();
  fill_config(rec, trie.config());
  rec.seed = seed;
  rec.mode = "insert";
  rec.op_count = order.size();

  auto t0 = Clock::now();
  for (const Point& p : order) trie.insert(p);
  auto t1 = Clock::now();

  if (!order.empty()) {
    rec.mean_insert_us = elapsed_us(t0, t1) / static_cast<double>(order.size());
  }
  rec.unique_points = trie.point_count();
  rec.space = trie.space_report();
  if (out_trie) *out_trie = std::move(trie);
  return rec;
}

BenchRecord bench_query(const K2Trie& trie, QueryMode mode,
                        std::uint64_t count, std::uint64_t seed) {
  BenchRecord rec;
  rec.side = trie.shape().side();
  rec.unique_points = trie.point_count();
  fill_config(rec, trie.config());
  rec.seed = seed;
  rec.mode = mode == QueryMode::kExisting ? "query-existing" : "query-random";
  rec.op_count = count;
  rec.space = trie.space_report();
  if (count == 0) return rec;

  std::mt19937_64 rng(seed);
  std::vector<Point> probes;
  probes.reserve(count);
  if (mode == QueryMode::kExisting) {
    std::vector<Point> stored =
        trie.range(0, trie.shape().side() - 1, 0, trie.shape().side() - 1);
    if (stored.empty()) return rec;
    for (std::uint64_t i = 0; i < count; ++i) {
      probes.push_back(stored[rand_below(rng, stored.size())]);
    }
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      probes.push_back(
          Point{static_cast<std::uint32_t>(rand_below(rng, rec.side)),
                static_cast<std::uint32_t>(rand_below(rng, rec.side))});
    }
  }

  std::uint64_t hits = 0;
  auto t0 = Clock::now();
  for (const Point& p : probes) hits += trie.contains(p) ? 1 : 0;
  auto t1 = Clock::now();
  rec.mean_query_us = elapsed_us(t0, t1) / static_cast<double>(probes.size());
  rec.true_answers = hits;
  return rec;
}

VerifyResult verify_trie(const GridShape& shape, const TrieConfig& config,
                         std::uint64_t ops, std::uint64_t seed,
                         std::uint64_t checkpoint_every,
                         const VerifyHooks* hooks) {
  VerifyResult res;
  res.seed = seed;
  K2Trie trie(shape, config);
  std::unordered_set<std::uint64_t> oracle;
  std::vector<std::uint64_t> pool;  // stored points, for sampling
  std::mt19937_64 rng(seed);
  std::uint32_t side = shape.side();

  auto fail = [&](std::uint64_t i, const std::string& what) {
    res.pass = false;
    res.ops_run = i;
    res.failure = what;
    return res;
  };

  auto random_point = [&] {
    return Point{static_cast<std::uint32_t>(rand_below(rng, side)),
                 static_cast<std::uint32_t>(rand_below(rng, side))};
  };
  auto pool_point = [&]() -> Point {
    std::uint64_t k = pool[rand_below(rng, pool.size())];
    return Point{static_cast<std::uint32_t>(k >> 32),
                 static_cast<std::uint32_t>(k & 0xFFFFFFFFu)};
  };

  for (std::uint64_t i = 1; i <= ops; ++i) {
    std::uint64_t pick = rand_below(rng, 100);
    try {
      if (pick < 40) {  // insert
        Point p = random_point();
        bool added = trie.insert(p);
        bool expected = oracle.insert(pack_point(p)).second;
        if (added != expected) {
          return fail(i, "insert return value diverged");
        }
        if (added) pool.push_back(pack_point(p));
        for (BlockHandle h : trie.touched_blocks()) trie.validate_block(h);
      } else if (pick < 65) {  // delete
        Point p = (pick < 55 && !pool.empty()) ? pool_point() : random_point();
        bool removed = trie.erase(p);
        bool expected = oracle.erase(pack_point(p)) > 0;
        if (removed != expected) {
          return fail(i, "erase return value diverged");
        }
        for (BlockHandle h : trie.touched_blocks()) trie.validate_block(h);
      } else if (pick < 90) {  // contains
        Point p = (pick < 78 && !pool.empty()) ? pool_point() : random_point();
        bool got = trie.contains(p);
        if (hooks && hooks->contains_filter) {
          got = hooks->contains_filter(i, got);
        }
        bool expected = oracle.count(pack_point(p)) > 0;
        if (got != expected) {
          return fail(i, "contains diverged on (" + std::to_string(p.row) +
                             "," + std::to_string(p.col) + ")");
        }
      } else {  // small range
        std::uint32_t span = static_cast<std::uint32_t>(
            1 + rand_below(rng, std::min<std::uint64_t>(side, 64)));
        std::uint32_t r1 =
            static_cast<std::uint32_t>(rand_below(rng, side - span + 1));
        std::uint32_t c1 =
            static_cast<std::uint32_t>(rand_below(rng, side - span + 1));
        std::uint32_t r2 = r1 + span - 1, c2 = c1 + span - 1;
        std::vector<Point> got = trie.range(r1, r2, c1, c2);
        std::vector<std::uint64_t> got_keys;
        got_keys.reserve(got.size());
        for (const Point& p : got) got_keys.push_back(pack_point(p));
        std::sort(got_keys.begin(), got_keys.end());
        std::vector<std::uint64_t> want;
        for (std::uint64_t k : oracle) {
          std::uint32_t r = static_cast<std::uint32_t>(k >> 32);
          std::uint32_t c = static_cast<std::uint32_t>(k & 0xFFFFFFFFu);
          if (r >= r1 && r <= r2 && c >= c1 && c <= c2) want.push_back(k);
        }
        std::sort(want.begin(), want.end());
        if (got_keys != want) return fail(i, "range result diverged");
      }
      if (checkpoint_every != 0 && i % checkpoint_every == 0) {
        trie.validate();
        if (trie.point_count() != oracle.size()) {
          return fail(i, "point count diverged at checkpoint");
        }
        std::vector<Point> pts;
        pts.reserve(oracle.size());
        for (std::uint64_t k : oracle) {
          pts.push_back(Point{static_cast<std::uint32_t>(k >> 32),
                              static_cast<std::uint32_t>(k & 0xFFFFFFFFu)});
        }
        StaticK2 s = StaticK2::build(pts, shape);
        if (trie.serialize_levelwise() != s.codes()) {
          return fail(i, "levelwise serialization diverged at checkpoint");
        }
      }
    } catch (const std::exception& e) {
      return fail(i, std::string("exception: ") + e.what());
    }
  }
  res.ops_run = ops;
  return res;
}

void dump_text(const K2Trie& trie, std::ostream& os) {
  os << codes_to_text(trie.serialize_levelwise()) << '\n';
  if (!os) throw std::runtime_error("text dump failed");
}

void dump_binary(const K2Trie& trie, std::ostream& os) {
  write_packed(os, trie.shape(), trie.point_count(),
               trie.serialize_levelwise());
}

std::vector<Point> clustered_points(std::uint64_t count, std::uint32_t side,
                                    std::uint64_t seed,
                                    std::uint32_t clusters) {
  std::mt19937_64 rng(seed);
  std::vector<Point> centers;
  centers.reserve(clusters);
  for (std::uint32_t i = 0; i < clusters; ++i) {
    centers.push_back(
        Point{static_cast<std::uint32_t>(rand_below(rng, side)),
              static_cast<std::uint32_t>(rand_below(rng, side))});
  }
  double sigma = std::max(2.0, side / 4096.0);
  std::normal_distribution<double> gauss(0.0, sigma);
  auto clamp = [&](double v) {
    if (v < 0) return 0u;
    if (v >= side) return side - 1;
    return static_cast<std::uint32_t>(v);
  };
  std::vector<Point> pts;
  pts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const Point& c = centers[rand_below(rng, clusters)];
    pts.push_back(Point{clamp(c.row + gauss(rng)), clamp(c.col + gauss(rng))});
  }
  return pts;
}

}  // namespace k2dyn::bench
