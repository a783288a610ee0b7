// lanehash-bench: workload driver, step breakdown and hash-uniformity sweeps.
//
// Human-readable summaries go to stderr. CSV goes to --csv PATH, or to stdout
// when no path is given. Exit codes: 0 audit passed, 1 audit failed, 2 usage
// or runtime error.

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanehash/bench.hpp"
#include "lanehash/hashing.hpp"

namespace {

using lanehash::WorkloadKind;
using lanehash::WorkloadSpec;
using json = nlohmann::json;

struct Options {
  std::string mode = "mixed";
  std::optional<std::uint64_t> buckets;
  std::optional<std::uint64_t> ops;
  std::string ratio = "0.5:0.3:0.2";
  unsigned workers = 1;
  std::uint64_t seed = 1;
  std::uint32_t max_evictions = 16;
  double stash_frac = 0.02;
  std::size_t batch_k = 1024;
  std::optional<double> target_load;
  unsigned reps = 10;
  std::string csv_path;
  std::string json_path;
};

lanehash::MixRatio parse_ratio(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() != 3) throw std::invalid_argument("--ratio expects I:L:D");
  return {parts[0], parts[1], parts[2]};
}

std::ostream& csv_stream(const Options& opt, std::ofstream& file) {
  if (opt.csv_path.empty()) return std::cout;
  file.open(opt.csv_path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + opt.csv_path);
  return file;
}

void write_json(const Options& opt, const json& doc) {
  if (opt.json_path.empty()) return;
  std::ofstream out(opt.json_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + opt.json_path);
  out << doc.dump(2) << '\n';
}

json counters_json(const lanehash::StepCounters& c) {
  return {{"step1", c.step1_hits},
          {"step2", c.step2_hits},
          {"step3", c.step3_hits},
          {"step3_entries", c.step3_entries},
          {"step3_rounds_total", c.step3_rounds_total},
          {"step4", c.step4_hits},
          {"failed_pending", c.failed_pending},
          {"lock_acquisitions", c.lock_acquisitions},
          {"timed_samples", c.timed_samples},
          {"step_time_ns",
           {c.step_time[0].count(), c.step_time[1].count(), c.step_time[2].count(),
            c.step_time[3].count()}}};
}

int run_csr(const Options& opt) {
  const std::uint64_t m = opt.buckets.value_or(std::uint64_t{1} << 18);
  const std::uint64_t max_n = opt.ops.value_or(std::uint64_t{1} << 20);
  std::vector<std::uint64_t> n_values;
  for (std::uint64_t n = 512; n <= max_n; n *= 2) n_values.push_back(n);
  const std::vector<lanehash::HashFn> fns{lanehash::HashFn::BitHash1,
                                          lanehash::HashFn::BitHash2,
                                          lanehash::HashFn::Crc32};
  const auto rows = lanehash::csr_sweep(fns, m, n_values, opt.seed);

  std::ofstream file;
  lanehash::write_csr_csv(csv_stream(opt, file), rows);

  json doc = {{"mode", "csr"}, {"m", m}, {"seed", opt.seed}, {"rows", json::array()}};
  for (const auto& r : rows) {
    doc["rows"].push_back({{"fn", lanehash::to_string(r.fn)},
                           {"n", r.n},
                           {"expected_Y", r.expected_y},
                           {"observed_Y", r.observed_y},
                           {"csr", std::isinf(r.csr) ? json("inf") : json(r.csr)},
                           {"low_signal", r.low_signal}});
    std::cerr << lanehash::to_string(r.fn) << " n=" << r.n << " csr=" << r.csr
              << (r.low_signal ? " (low signal)" : "") << '\n';
  }
  write_json(opt, doc);
  return 0;
}

int run_table_mode(const Options& opt) {
  static const std::map<std::string, WorkloadKind> kinds{
      {"bulk-insert", WorkloadKind::BulkInsert},
      {"bulk-lookup", WorkloadKind::BulkLookup},
      {"mixed", WorkloadKind::Mixed},
      {"breakdown", WorkloadKind::BulkInsert},
      {"resize-stress", WorkloadKind::ResizeStress}};

  WorkloadSpec spec;
  spec.kind = kinds.at(opt.mode);
  spec.initial_buckets = opt.buckets.value_or(1024);
  spec.n_ops = opt.ops.value_or(std::uint64_t{1} << 20);
  spec.seed = opt.seed;
  spec.workers = opt.workers;
  spec.reps = opt.reps;
  spec.ratio = parse_ratio(opt.ratio);
  spec.table.max_evictions = opt.max_evictions;
  spec.table.stash_fraction = opt.stash_frac;
  spec.table.batch_k = opt.batch_k;
  if (opt.mode == "breakdown") {
    spec.target_load = opt.target_load.value_or(0.75);
  } else if (opt.mode == "bulk-insert" && opt.target_load) {
    spec.target_load = *opt.target_load;
  }
  // A load target means filling the fixed initial capacity.
  if (spec.target_load > 0.0) spec.resize_enabled = false;

  const lanehash::RunReport r = lanehash::run_workload(spec);

  std::ofstream file;
  std::ostream& csv = csv_stream(opt, file);
  lanehash::write_run_csv_header(csv);
  lanehash::write_run_csv_row(csv, opt.mode, spec, r, spec.workers > 1);

  json doc = {{"mode", opt.mode},
              {"ops", r.ops_executed},
              {"workers", spec.workers},
              {"seed", spec.seed},
              {"reps", r.reps},
              {"initial_buckets", spec.initial_buckets},
              {"final_buckets", r.final_buckets},
              {"ops_per_sec", r.ops_per_second},
              {"wall_time_s", std::chrono::duration<double>(r.wall_time).count()},
              {"load_factor", r.final_load_factor},
              {"stash_peak", r.stash_peak},
              {"stash_capacity", r.stash_capacity},
              {"resizes", r.resize_events},
              {"inserts_ok", r.inserts_ok},
              {"deletes_ok", r.deletes_ok},
              {"lookups", r.lookups},
              {"lookup_hits", r.lookup_hits},
              {"count_entries", r.count_entries},
              {"counters", counters_json(r.counters)},
              {"audit",
               {{"ok", r.audit.ok()},
                {"consistent", r.audit.consistent},
                {"conservation", r.audit.conservation},
                {"exact_contents", r.audit.exact_contents},
                {"findable", r.audit.findable},
                {"detail", r.audit.detail}}}};

  std::cerr << opt.mode << ": " << r.ops_executed << " ops, " << r.ops_per_second / 1e6
            << " Mops/s (mean of " << r.reps << "), load " << r.final_load_factor
            << ", buckets " << r.final_buckets << ", stash peak " << r.stash_peak
            << ", resizes " << r.resize_events << '\n';

  const std::uint64_t total = r.counters.total();
  if (total > 0) {
    const auto b = lanehash::step_breakdown_report(r.counters, total);
    doc["breakdown"] = {{"count_pct", b.count_pct},
                        {"time_pct", b.time_pct},
                        {"step3_entry_rate", b.step3_entry_rate},
                        {"lock_rate", b.lock_rate},
                        {"failed_pct", b.failed_pct}};
    if (opt.mode == "breakdown") {
      for (int i = 0; i < 4; ++i) {
        std::cerr << "  step" << (i + 1) << ": " << b.count_pct[i] << "% of inserts, "
                  << b.time_pct[i] << "% of sampled time\n";
      }
      std::cerr << "  step3 entry rate " << 100.0 * b.step3_entry_rate << "%, lock rate "
                << 100.0 * b.lock_rate << "%\n";
    }
  }
  write_json(opt, doc);

  std::cerr << "audit: " << (r.audit.ok() ? "pass" : "FAIL " + r.audit.detail) << '\n';
  return r.audit.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent bucketized cuckoo hash table benchmark"};
  Options opt;
  app.add_option("--mode", opt.mode, "Workload to run")
      ->check(CLI::IsMember(
          {"bulk-insert", "bulk-lookup", "mixed", "csr", "breakdown", "resize-stress"}));
  app.add_option("--buckets", opt.buckets,
                 "Initial bucket count (csr: bin count m), power of two")
      ->check([](const std::string& s) {
        const auto v = std::stoull(s);
        return std::has_single_bit(v) ? std::string{} : "must be a power of two";
      });
  app.add_option("--ops", opt.ops, "Operations per run (csr: largest key count)");
  app.add_option("--ratio", opt.ratio, "insert:lookup:delete mix");
  app.add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "Workload seed");
  app.add_option("--max-evictions", opt.max_evictions, "Eviction rounds before stashing")
      ->check(CLI::PositiveNumber);
  app.add_option("--stash-frac", opt.stash_frac, "Stash size as a fraction of slots")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--batch-k", opt.batch_k, "Buckets per resize step")
      ->check(CLI::PositiveNumber);
  app.add_option("--target-load", opt.target_load,
                 "Fill the fixed-size table to this load (bulk-insert, breakdown)")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--reps", opt.reps, "Measured repetitions")->check(CLI::PositiveNumber);
  app.add_option("--csv", opt.csv_path, "CSV output path (default: stdout)");
  app.add_option("--json", opt.json_path, "JSON report path");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help exits 0
  }

  try {
    return opt.mode == "csr" ? run_csr(opt) : run_table_mode(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
