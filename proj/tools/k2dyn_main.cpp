// Command-line harness: dataset checking, randomized insertion and query
// benchmarks (CSV output), oracle-checked verification runs, and levelwise
// dumps of the dynamic k^2-tree.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "k2dyn/bench.hpp"
#include "k2dyn/dyntrie.hpp"
#include "k2dyn/io.hpp"

namespace {

struct ConfigFlags {
  double epsilon = 0.05;
  std::uint32_t n_max = 512;
  std::uint32_t n1_max = 96;
  std::uint32_t n2_max = 1;
  std::uint32_t d1 = 8;
  std::uint32_t d2 = 12;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epsilon", epsilon, "Fill-slack parameter in (0,1)");
    cmd->add_option("--nmax", n_max, "Deep-block capacity limit");
    cmd->add_option("--n1max", n1_max, "Mid-depth block capacity limit");
    cmd->add_option("--n2max", n2_max,
                    "Shallow block capacity limit (1 = pointer region)");
    cmd->add_option("--d1", d1, "Deepest root depth using --n2max");
    cmd->add_option("--d2", d2, "Deepest root depth using --n1max");
  }

  k2dyn::TrieConfig build(const k2dyn::GridShape& g) const {
    return k2dyn::TrieConfig::make(epsilon, n_max, n1_max, n2_max, d1, d2, g);
  }
};

std::ostream& open_out(std::ofstream& file, const std::string& path,
                       bool binary = false) {
  if (path.empty()) return std::cout;
  file.open(path, binary ? std::ios::binary : std::ios::out);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

std::optional<std::uint32_t> side_opt(std::uint32_t side) {
  if (side == 0) return std::nullopt;
  return side;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic k^2-tree benchmark harness"};
  app.require_subcommand(1);

  std::string path, out_path, mode = "existing", format = "text";
  std::uint32_t side = 0;
  std::uint64_t seed = 1;
  std::uint64_t count = 0;
  ConfigFlags cfg;

  auto* ingest_cmd =
      app.add_subcommand("ingest-check", "Parse a dataset and report on it");
  ingest_cmd->add_option("path", path, "Edge list file")->required();
  ingest_cmd->add_option("--side", side, "Declared grid side (power of two)");

  auto* bi = app.add_subcommand("bench-insert",
                                "Shuffled one-by-one insertion benchmark");
  bi->add_option("path", path, "Edge list file")->required();
  bi->add_option("--side", side, "Declared grid side");
  bi->add_option("--seed", seed, "Shuffle seed");
  bi->add_option("--out", out_path, "CSV output file (default stdout)");
  cfg.attach(bi);

  auto* bq = app.add_subcommand("bench-query", "Point-probe query benchmark");
  bq->add_option("path", path, "Edge list file")->required();
  bq->add_option("--side", side, "Declared grid side");
  bq->add_option("--seed", seed, "Sampling seed");
  bq->add_option("--mode", mode, "existing | random")
      ->check(CLI::IsMember({"existing", "random"}));
  bq->add_option("--count", count, "Number of probes")->required();
  bq->add_option("--out", out_path, "CSV output file (default stdout)");
  cfg.attach(bq);

  auto* ver = app.add_subcommand(
      "verify", "Random workload checked against a point-set oracle");
  ver->add_option("--side", side, "Grid side (power of two)")->required();
  ver->add_option("--count", count, "Number of operations")->required();
  ver->add_option("--seed", seed, "Workload seed");
  cfg.attach(ver);

  auto* dp = app.add_subcommand("dump", "Write the levelwise serialization");
  dp->add_option("path", path, "Edge list file")->required();
  dp->add_option("--side", side, "Declared grid side");
  dp->add_option("--format", format, "text | binary")
      ->check(CLI::IsMember({"text", "binary"}));
  dp->add_option("--out", out_path, "Output file (default stdout)");
  cfg.attach(dp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      auto ds = k2dyn::bench::ingest_file(path, side_opt(side));
      std::cout << "dataset: " << ds.name << "\npoints:  " << ds.points.size()
                << "\nside:    " << ds.effective_side() << '\n';
      return 0;
    }

    if (*bi) {
      auto ds = k2dyn::bench::ingest_file(path, side_opt(side));
      auto g = k2dyn::GridShape::from_side(ds.effective_side());
      auto rec = k2dyn::bench::bench_insert(ds, cfg.build(g), seed);
      std::ofstream file;
      auto& os = open_out(file, out_path);
      os << k2dyn::bench::csv_header() << '\n'
         << k2dyn::bench::csv_row(rec) << '\n';
      return 0;
    }

    if (*bq) {
      auto ds = k2dyn::bench::ingest_file(path, side_opt(side));
      auto g = k2dyn::GridShape::from_side(ds.effective_side());
      k2dyn::K2Trie trie(g, cfg.build(g));
      auto rec = k2dyn::bench::bench_insert(ds, cfg.build(g), seed, &trie);
      auto qmode = mode == "existing" ? k2dyn::bench::QueryMode::kExisting
                                      : k2dyn::bench::QueryMode::kRandom;
      auto qrec = k2dyn::bench::bench_query(trie, qmode, count, seed);
      qrec.dataset = ds.name;
      qrec.total_points = ds.points.size();
      std::ofstream file;
      auto& os = open_out(file, out_path);
      os << k2dyn::bench::csv_header() << '\n'
         << k2dyn::bench::csv_row(qrec) << '\n';
      return 0;
    }

    if (*ver) {
      auto g = k2dyn::GridShape::from_side(side);
      auto res = k2dyn::bench::verify_trie(g, cfg.build(g), count, seed);
      if (res.pass) {
        std::cout << "verify: pass (" << res.ops_run << " ops, seed "
                  << res.seed << ")\n";
        return 0;
      }
      std::cerr << "verify: FAIL at op " << res.ops_run << " (seed "
                << res.seed << "): " << res.failure << '\n';
      return 1;
    }

    if (*dp) {
      auto ds = k2dyn::bench::ingest_file(path, side_opt(side));
      auto g = k2dyn::GridShape::from_side(ds.effective_side());
      k2dyn::K2Trie trie(g, cfg.build(g));
      for (const auto& p : ds.points) trie.insert(p);
      std::ofstream file;
      auto& os = open_out(file, out_path, format == "binary");
      if (format == "binary") {
        k2dyn::bench::dump_binary(trie, os);
      } else {
        k2dyn::bench::dump_text(trie, os);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
