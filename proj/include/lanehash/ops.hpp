#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>

#include "lanehash/packed_kv.hpp"
#include "lanehash/table.hpp"

namespace lanehash {

/// Counts of the atomic operations an operation issued on shared words.
struct OpTrace {
  std::uint32_t slot_cas = 0;
  std::uint32_t slot_stores = 0;
  std::uint32_t mask_rmw = 0;
  std::uint32_t lock_acquisitions = 0;

  std::uint32_t rmw_total() const noexcept {
    return slot_cas + mask_rmw + lock_acquisitions;
  }
};

enum class InsertKind {
  ReplacedExisting,
  ClaimedSlot,
  PlacedViaEviction,
  Stashed,
  FailedPending,
};

const char* to_string(InsertKind kind) noexcept;

struct InsertOutcome {
  InsertKind kind = InsertKind::FailedPending;
  std::uint32_t rounds = 0;       // evictions performed in Step 3
  bool entered_step3 = false;
  /// For FailedPending: the word that could not be stored. It is the
  /// caller's entry or, after evictions, a displaced resident.
  PackedEntry pending = kEmpty;
  OpTrace trace;
  /// Elapsed time per step; all zero unless timing was requested.
  std::array<std::chrono::nanoseconds, 4> step_time{};
};

/// Aggregated insert statistics.
struct StepCounters {
  std::uint64_t step1_hits = 0;
  std::uint64_t step2_hits = 0;
  std::uint64_t step3_entries = 0;
  std::uint64_t step3_hits = 0;
  std::uint64_t step3_rounds_total = 0;
  std::uint64_t step4_hits = 0;
  std::uint64_t failed_pending = 0;
  std::uint64_t lock_acquisitions = 0;
  std::uint64_t timed_samples = 0;
  std::array<std::chrono::nanoseconds, 4> step_time{};

  void record(const InsertOutcome& o) noexcept;
  StepCounters& operator+=(const StepCounters& o) noexcept;

  std::uint64_t successful() const noexcept {
    return step1_hits + step2_hits + step3_hits + step4_hits;
  }
  std::uint64_t total() const noexcept { return successful() + failed_pending; }
};

enum class ReplaceStatus { NoMatch, Replaced, LostRace };

/// Step 1 on one bucket: gather, ballot on key match, elect the first
/// matching lane, single CAS from the cached word.
ReplaceStatus replace_path(Table& t, std::size_t b, Key k, Value v,
                           OpTrace* trace = nullptr) noexcept;

/// Step 2 on one bucket: one mask load, elect the lowest free lane, one mask
/// RMW, one slot store. Single attempt.
std::optional<unsigned> claim_then_commit(Table& t, std::size_t b, PackedEntry e,
                                          OpTrace* trace = nullptr) noexcept;

struct EvictResult {
  bool placed = false;
  std::uint32_t rounds = 0;  // evictions performed
  PackedEntry in_hand = kEmpty;  // entry left homeless when !placed
};

/// Step 3: bounded cuckoo displacement starting at bucket b0.
EvictResult cuckoo_evict_and_insert(Table& t, std::size_t b0, PackedEntry e0,
                                    OpTrace* trace = nullptr) noexcept;

struct InsertOptions {
  bool timed = false;
  /// Replace-path attempts per candidate bucket before moving on.
  unsigned replace_attempts = 3;
};

/// Insert or replace. Throws std::invalid_argument on the reserved key.
InsertOutcome insert(Table& t, Key k, Value v, const InsertOptions& opts = {});

std::optional<Value> lookup(const Table& t, Key k, OpTrace* trace = nullptr) noexcept;

/// Removes k. False when absent or when the elected CAS lost a race.
bool erase(Table& t, Key k, OpTrace* trace = nullptr) noexcept;

}  // namespace lanehash
