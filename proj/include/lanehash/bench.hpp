#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lanehash/hashing.hpp"
#include "lanehash/ops.hpp"
#include "lanehash/table.hpp"

namespace lanehash {

/// splitmix64. All workload randomness flows through this generator so that a
/// seed fully determines a single-worker run.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound) by multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t state_;
};

/// Largest key space: every key except the reserved one.
inline constexpr std::uint64_t kFullKeySpace = 0xFFFFFFFFull;

/// n distinct keys, uniform over [0, key_space), deterministic per seed.
std::vector<Key> gen_keys(std::size_t n, std::uint64_t seed,
                          std::uint64_t key_space = kFullKeySpace);

enum class WorkloadKind { BulkInsert, BulkLookup, Mixed, ResizeStress };

const char* to_string(WorkloadKind k) noexcept;

struct MixRatio {
  double insert = 0.5;
  double lookup = 0.3;
  double erase = 0.2;
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Mixed;
  std::size_t n_ops = std::size_t{1} << 20;
  /// 0 picks a default: the full key space for bulk kinds, n_ops for Mixed.
  std::uint64_t key_space = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// BulkInsert only: when > 0, n_ops becomes ceil(target_load * slots) of
  /// the initial table.
  double target_load = 0.0;
  MixRatio ratio;
  std::size_t initial_buckets = 1024;
  TableConfig table;
  bool resize_enabled = true;
  unsigned reps = 1;
  /// One insert in this many is timed per step; 0 disables timing.
  unsigned timing_sample = 64;

  /// Throws std::invalid_argument on an inconsistent spec.
  void validate() const;
  std::size_t effective_ops() const;
  std::uint64_t effective_key_space() const;
};

struct AuditResult {
  bool consistent = false;    // mask/slot agreement and occupancy counter
  bool conservation = false;  // inserts_ok - deletes_ok == count_entries
  bool exact_contents = false;  // buckets + stash == model, no duplicates
  bool findable = false;      // lookup returns the model value for every key
  std::string detail;

  bool ok() const noexcept {
    return consistent && conservation && exact_contents && findable;
  }
};

/// Quiescent audit of a table against the expected contents.
AuditResult audit_table(const Table& t, const std::unordered_map<Key, Value>& model,
                        std::uint64_t inserts_ok, std::uint64_t deletes_ok);

struct RunReport {
  double ops_per_second = 0.0;
  std::chrono::nanoseconds wall_time{0};
  StepCounters counters;
  double final_load_factor = 0.0;
  std::size_t final_buckets = 0;
  std::size_t stash_peak = 0;
  std::size_t stash_capacity = 0;
  std::size_t slot_capacity = 0;  // slots of the initial table
  std::size_t resize_events = 0;
  std::uint64_t ops_executed = 0;
  std::uint64_t inserts_ok = 0;   // inserts that added a new entry
  std::uint64_t deletes_ok = 0;
  std::uint64_t lookups = 0;
  std::uint64_t lookup_hits = 0;
  std::uint64_t count_entries = 0;
  unsigned reps = 0;
  AuditResult audit;
};

/// One repetition on a fresh table.
RunReport run_once(const WorkloadSpec& spec);

/// Warm-up (when reps > 1) followed by `reps` measured runs. Throughput is
/// the mean over the measured runs; everything else comes from the last one.
RunReport run_workload(const WorkloadSpec& spec);

struct CsrRow {
  HashFn fn;
  std::uint64_t n;
  std::uint64_t m;
  double expected_y;
  std::uint64_t observed_y;
  double csr;
  bool low_signal;  // expected_y < 1: excluded from pass/fail
};

std::vector<CsrRow> csr_sweep(std::span<const HashFn> fns, std::uint64_t m,
                              std::span<const std::uint64_t> n_values,
                              std::uint64_t seed);

struct StepBreakdown {
  std::uint64_t total_inserts = 0;
  std::array<double, 4> count_pct{};  // share of successful inserts per step
  std::array<double, 4> time_pct{};   // share of sampled step time
  double step3_entry_rate = 0.0;      // inserts entering Step 3 / total
  double lock_rate = 0.0;             // lock acquisitions / total
  double failed_pct = 0.0;
};

StepBreakdown step_breakdown_report(const StepCounters& c, std::uint64_t total_inserts);

void write_run_csv_header(std::ostream& os);
/// `include_timing` false leaves ops_per_sec empty so the row is reproducible.
void write_run_csv_row(std::ostream& os, std::string_view mode, const WorkloadSpec& spec,
                       const RunReport& r, bool include_timing);
void write_csr_csv(std::ostream& os, std::span<const CsrRow> rows);

}  // namespace lanehash
