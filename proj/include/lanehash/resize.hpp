#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lanehash/table.hpp"

namespace lanehash {

// All functions in this header are exclusive-phase: the caller guarantees
// that no insert/lookup/erase runs on the table concurrently.

enum class ResizeAction { None, Expand, Contract };

const char* to_string(ResizeAction a) noexcept;

/// Optional instrumentation: every bucket index a split or merge read or wrote.
struct ResizeTrace {
  std::vector<std::size_t> touched;
  std::size_t rerouted = 0;  // entries whose residence matched neither hash
};

ResizeAction maybe_resize(const Table& t) noexcept;

/// True when more than half of the stash ring is consumed. Mid-round, unsplit buckets
/// carry twice the hash density and can push entries to the stash well below
/// the grow threshold; an expand batch both splits them and drains the stash.
bool stash_pressure(const Table& t) noexcept;

/// Moves the entries of b_src whose next hash bit selects b_dst, compacted
/// into b_dst slots [0, movers). `round_level` is m with b_dst = b_src + 2^m.
/// Entries that are not addressed to b_src at all are removed and appended to
/// `strays` for reinsertion.
void split_pair(Table& t, std::size_t b_src, std::size_t b_dst, unsigned round_level,
                std::vector<PackedEntry>& strays, ResizeTrace* trace = nullptr);

/// Moves every live entry of b_src = b_dst + 2^m into the free slots of b_dst,
/// the r-th mover taking the r-th free slot. Returns false without touching
/// either bucket when b_dst lacks room.
bool merge_pair(Table& t, std::size_t b_dst, std::size_t b_src, unsigned round_level,
                ResizeTrace* trace = nullptr);

/// Splits up to k buckets from the split pointer, clamped to the end of the
/// current round, then reinserts the stash. Returns the number split.
std::size_t expand_batch(Table& t, std::size_t k, ResizeTrace* trace = nullptr);

/// Merges up to k pairs from the most recently split bucket backwards, stops
/// at the first aborted pair, then reinserts the stash. Returns the number
/// merged. No-op at the minimum size.
std::size_t contract_batch(Table& t, std::size_t k, ResizeTrace* trace = nullptr);

/// Drains the stash through the four-step insert. Returns how many landed in
/// buckets; the rest are re-stashed (or returned in `unplaced` if the stash
/// itself overflows).
std::size_t reinsert_stash(Table& t, std::vector<PackedEntry>* unplaced = nullptr);

struct RebalanceResult {
  std::size_t expand_batches = 0;
  std::size_t contract_batches = 0;
  bool contraction_stalled = false;  // a contraction was due but merged nothing
  bool stash_relief = false;         // an expand batch ran for stash pressure
  std::size_t events() const noexcept { return expand_batches + contract_batches; }
};

/// Runs batches until the load factor is back inside the thresholds, the
/// table reaches its minimum size, or a contraction makes no progress. Then
/// runs one more expand batch if the stash is still under pressure.
RebalanceResult rebalance(Table& t);

}  // namespace lanehash
