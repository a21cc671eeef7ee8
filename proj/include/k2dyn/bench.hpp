#ifndef K2DYN_BENCH_HPP_
#define K2DYN_BENCH_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "k2dyn/dyntrie.hpp"
#include "k2dyn/morton.hpp"

namespace k2dyn::bench {

struct EdgeListDataset {
  std::string name;
  std::vector<Point> points;            // duplicates preserved
  std::optional<std::uint32_t> declared_side;

  // Declared side, or the smallest power of two above the largest
  // coordinate.
  std::uint32_t effective_side() const;
};

// Parses "row col" lines; '#' comments and blank lines are skipped. Errors
// carry the 1-based line number.
EdgeListDataset ingest(std::istream& in, const std::string& name,
                       std::optional<std::uint32_t> declared_side);
EdgeListDataset ingest_file(const std::string& path,
                            std::optional<std::uint32_t> declared_side);

// One benchmark run; every configuration field rides along so a CSV row is
// reproducible on its own. Timings come from a monotonic clock.
struct BenchRecord {
  std::string dataset;
  std::uint32_t side = 0;
  std::uint64_t total_points = 0;   // dataset rows offered
  std::uint64_t unique_points = 0;  // points stored afterwards
  double epsilon = 0.0;
  std::uint32_t n_max = 0;
  std::uint32_t n1_max = 0;
  std::uint32_t n2_max = 0;
  std::uint32_t d1 = 0;
  std::uint32_t d2 = 0;
  std::uint64_t seed = 0;
  std::string mode;  // "insert", "query-existing" or "query-random"
  std::uint64_t op_count = 0;
  double mean_insert_us = 0.0;
  double mean_query_us = 0.0;
  std::uint64_t true_answers = 0;
  SpaceReport space;
};

std::string csv_header();
std::string csv_row(const BenchRecord& rec);

// Deterministic shuffle-and-insert of the whole dataset; fills the insert
// timing and the space report.
BenchRecord bench_insert(const EdgeListDataset& ds, const TrieConfig& config,
                         std::uint64_t seed, K2Trie* out_trie = nullptr);

enum class QueryMode { kExisting, kRandom };

// Point-probe benchmark over a built trie. kExisting samples stored points
// (every answer true); kRandom samples uniform cells.
BenchRecord bench_query(const K2Trie& trie, QueryMode mode,
                        std::uint64_t count, std::uint64_t seed);

// Test-only instrumentation for the verification harness.
struct VerifyHooks {
  // May rewrite a contains() answer before it is checked, to prove the
  // harness catches divergence.
  std::function<bool(std::uint64_t op_index, bool actual)> contains_filter;
};

struct VerifyResult {
  bool pass = true;
  std::uint64_t ops_run = 0;
  std::uint64_t seed = 0;
  std::string failure;  // first divergence, empty on pass
};

// Random insert/delete/contains/range workload checked op by op against a
// plain point-set oracle, with structural validation of the touched blocks
// after every mutation and a full levelwise-equality checkpoint (against
// the static builder) every `checkpoint_every` ops.
VerifyResult verify_trie(const GridShape& shape, const TrieConfig& config,
                         std::uint64_t ops, std::uint64_t seed,
                         std::uint64_t checkpoint_every = 1000,
                         const VerifyHooks* hooks = nullptr);

// Levelwise dump of a built trie in either text or packed form.
void dump_text(const K2Trie& trie, std::ostream& os);
void dump_binary(const K2Trie& trie, std::ostream& os);

// Synthetic clustered point cloud: points normally scattered around
// uniformly seeded cluster centers.
std::vector<Point> clustered_points(std::uint64_t count, std::uint32_t side,
                                    std::uint64_t seed,
                                    std::uint32_t clusters = 1000);

}  // namespace k2dyn::bench

#endif  // K2DYN_BENCH_HPP_
