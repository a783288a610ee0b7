#include "lanehash/ops.hpp"

#include <stdexcept>
#include <string>

#include "lanehash/lane_group.hpp"

namespace lanehash {

namespace {

using Clock = std::chrono::steady_clock;

// Attempts per candidate bucket when the elected delete CAS loses a race.
constexpr unsigned kEraseAttempts = 3;

// Lanes whose cached word carries key k. kEmpty decodes to the reserved key,
// so empty slots never match a valid key.
LaneMask match_mask(const LaneVector<PackedEntry>& kv, Key k) noexcept {
  return ballot_if([&](unsigned lane) { return unpack_key(kv[lane]) == k; });
}

class StepTimer {
 public:
  explicit StepTimer(bool enabled) : enabled_(enabled) {
    if (enabled_) last_ = Clock::now();
  }
  void lap(std::array<std::chrono::nanoseconds, 4>& out, int step) {
    if (!enabled_) return;
    const auto now = Clock::now();
    out[step] += std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_);
    last_ = now;
  }

 private:
  bool enabled_;
  Clock::time_point last_{};
};

}  // namespace

const char* to_string(InsertKind kind) noexcept {
  switch (kind) {
    case InsertKind::ReplacedExisting:
      return "replaced";
    case InsertKind::ClaimedSlot:
      return "claimed";
    case InsertKind::PlacedViaEviction:
      return "evicted";
    case InsertKind::Stashed:
      return "stashed";
    case InsertKind::FailedPending:
      return "failed_pending";
  }
  return "unknown";
}

void StepCounters::record(const InsertOutcome& o) noexcept {
  switch (o.kind) {
    case InsertKind::ReplacedExisting:
      ++step1_hits;
      break;
    case InsertKind::ClaimedSlot:
      ++step2_hits;
      break;
    case InsertKind::PlacedViaEviction:
      ++step3_hits;
      break;
    case InsertKind::Stashed:
      ++step4_hits;
      break;
    case InsertKind::FailedPending:
      ++failed_pending;
      break;
  }
  if (o.entered_step3) {
    ++step3_entries;
    step3_rounds_total += o.rounds;
  }
  lock_acquisitions += o.trace.lock_acquisitions;
  bool timed = false;
  for (int i = 0; i < 4; ++i) {
    step_time[i] += o.step_time[i];
    timed = timed || o.step_time[i].count() != 0;
  }
  if (timed) ++timed_samples;
}

StepCounters& StepCounters::operator+=(const StepCounters& o) noexcept {
  step1_hits += o.step1_hits;
  step2_hits += o.step2_hits;
  step3_entries += o.step3_entries;
  step3_hits += o.step3_hits;
  step3_rounds_total += o.step3_rounds_total;
  step4_hits += o.step4_hits;
  failed_pending += o.failed_pending;
  lock_acquisitions += o.lock_acquisitions;
  timed_samples += o.timed_samples;
  for (int i = 0; i < 4; ++i) step_time[i] += o.step_time[i];
  return *this;
}

ReplaceStatus replace_path(Table& t, std::size_t b, Key k, Value v,
                           OpTrace* trace) noexcept {
  const LaneVector<PackedEntry> cached = t.gather(b);
  const LaneMask matches = match_mask(cached, k);
  const auto winner = first_set(matches);
  if (!winner) return ReplaceStatus::NoMatch;

  if (trace) ++trace->slot_cas;
  const bool ok = t.slot_cas(b, *winner, cached[*winner], pack(k, v));
  return ok ? ReplaceStatus::Replaced : ReplaceStatus::LostRace;
}

std::optional<unsigned> claim_then_commit(Table& t, std::size_t b, PackedEntry e,
                                          OpTrace* trace) noexcept {
  // Lane 0 loads the mask and every lane sees the same word.
  const LaneMask mask = t.load_free_mask(b) & kFullMask;
  if (mask == 0) return std::nullopt;

  const LaneMask claimable =
      ballot_if([&](unsigned lane) { return (mask & (LaneMask{1} << lane)) != 0; });
  const unsigned winner = *first_set(claimable);

  if (trace) ++trace->mask_rmw;
  if (!t.claim_bit(b, winner)) return std::nullopt;
  t.store_slot(b, winner, e);
  if (trace) ++trace->slot_stores;
  return winner;
}

EvictResult cuckoo_evict_and_insert(Table& t, std::size_t b0, PackedEntry e0,
                                    OpTrace* trace) noexcept {
  EvictResult r;
  PackedEntry kv = e0;
  std::size_t b = b0;
  const std::uint32_t bound = t.config().max_evictions;

  for (std::uint32_t kick = 0; kick < bound; ++kick) {
    if (claim_then_commit(t, b, kv, trace)) {
      r.placed = true;
      return r;
    }

    t.lock_bucket(b);
    if (trace) ++trace->lock_acquisitions;
    bool placed = false;
    PackedEntry victim = kEmpty;
    while (!placed && is_empty(victim)) {
      const LaneMask fm = t.load_free_mask(b) & kFullMask;
      if (const auto s = first_set(fm)) {
        if (trace) ++trace->mask_rmw;
        if (t.claim_bit(b, *s)) {
          t.store_slot(b, *s, kv);
          if (trace) ++trace->slot_stores;
          placed = true;
        }
        continue;
      }
      // Lock-free writers still run beside the lock holder: a slot can be
      // claimed but unpublished, or deleted/replaced under us. Swap with a CAS
      // on the first occupied slot that holds a published word.
      for (LaneMask occ = ~fm; occ != 0; occ &= occ - 1) {
        const unsigned s = *first_set(occ);
        const PackedEntry w = t.load_slot(b, s, std::memory_order_acquire);
        if (is_empty(w)) continue;
        if (trace) ++trace->slot_cas;
        if (t.slot_cas(b, s, w, kv)) victim = w;
        break;
      }
    }
    t.unlock_bucket(b);

    if (placed) {
      r.placed = true;
      return r;
    }
    ++r.rounds;
    kv = victim;
    b = alt_bucket(unpack_key(kv), static_cast<std::uint32_t>(b), t.addressing());
  }
  r.in_hand = kv;
  return r;
}

InsertOutcome insert(Table& t, Key k, Value v, const InsertOptions& opts) {
  if (!is_valid_key(k)) {
    throw std::invalid_argument("key " + std::to_string(k) + " is reserved");
  }
  InsertOutcome out;
  StepTimer timer(opts.timed);
  const CandidatePair c = t.candidates(k);
  const std::array<std::size_t, 2> buckets{c.first, c.second};
  const std::size_t n_distinct = c.degenerate() ? 1 : 2;

  // Step 1: replace in place.
  for (std::size_t i = 0; i < n_distinct; ++i) {
    for (unsigned attempt = 0; attempt < opts.replace_attempts; ++attempt) {
      const ReplaceStatus st = replace_path(t, buckets[i], k, v, &out.trace);
      if (st == ReplaceStatus::Replaced) {
        out.kind = InsertKind::ReplacedExisting;
        timer.lap(out.step_time, 0);
        return out;
      }
      if (st == ReplaceStatus::NoMatch) break;
    }
  }
  if (t.stash_replace(k, v)) {
    out.kind = InsertKind::ReplacedExisting;
    timer.lap(out.step_time, 0);
    return out;
  }
  timer.lap(out.step_time, 0);

  // Step 2: claim a free slot.
  const PackedEntry e = pack(k, v);
  for (std::size_t i = 0; i < n_distinct; ++i) {
    if (claim_then_commit(t, buckets[i], e, &out.trace)) {
      out.kind = InsertKind::ClaimedSlot;
      timer.lap(out.step_time, 1);
      return out;
    }
  }
  timer.lap(out.step_time, 1);

  // Step 3: bounded displacement from the first candidate.
  out.entered_step3 = true;
  const EvictResult ev = cuckoo_evict_and_insert(t, c.first, e, &out.trace);
  out.rounds = ev.rounds;
  timer.lap(out.step_time, 2);
  if (ev.placed) {
    out.kind = InsertKind::PlacedViaEviction;
    return out;
  }

  // Step 4: overflow stash.
  if (t.stash_push(ev.in_hand)) {
    out.kind = InsertKind::Stashed;
  } else {
    out.kind = InsertKind::FailedPending;
    out.pending = ev.in_hand;
  }
  timer.lap(out.step_time, 3);
  return out;
}

std::optional<Value> lookup(const Table& t, Key k, OpTrace*) noexcept {
  if (!is_valid_key(k)) return std::nullopt;  // would match empty slots
  const CandidatePair c = t.candidates(k);
  const std::array<std::size_t, 2> buckets{c.first, c.second};
  const std::size_t n_distinct = c.degenerate() ? 1 : 2;
  for (std::size_t i = 0; i < n_distinct; ++i) {
    const LaneVector<PackedEntry> kv = t.gather(buckets[i]);
    if (const auto w = first_set(match_mask(kv, k))) {
      return unpack_value(broadcast(kv, *w));
    }
  }
  return t.stash_find(k);
}

bool erase(Table& t, Key k, OpTrace* trace) noexcept {
  if (!is_valid_key(k)) return false;
  const CandidatePair c = t.candidates(k);
  const std::array<std::size_t, 2> buckets{c.first, c.second};
  const std::size_t n_distinct = c.degenerate() ? 1 : 2;
  for (std::size_t i = 0; i < n_distinct; ++i) {
    for (unsigned attempt = 0; attempt < kEraseAttempts; ++attempt) {
      const LaneVector<PackedEntry> kv = t.gather(buckets[i]);
      const auto w = first_set(match_mask(kv, k));
      if (!w) break;
      if (trace) ++trace->slot_cas;
      if (t.slot_cas(buckets[i], *w, kv[*w], kEmpty)) {
        if (trace) ++trace->mask_rmw;
        t.release_bit(buckets[i], *w);
        return true;
      }
    }
  }
  return t.stash_remove(k);
}

}  // namespace lanehash
