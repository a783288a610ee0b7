#include "lanehash/resize.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "lanehash/lane_group.hpp"
#include "lanehash/ops.hpp"

namespace lanehash {

namespace {

constexpr LaneMask low_bits(unsigned n) noexcept {
  return n >= kLanes ? kFullMask : (LaneMask{1} << n) - 1u;
}

void reinsert_all(Table& t, const std::vector<PackedEntry>& items) {
  for (const PackedEntry e : items) {
    const InsertOutcome o = insert(t, unpack_key(e), unpack_value(e));
    if (o.kind == InsertKind::FailedPending) {
      throw std::runtime_error("stash overflow while reinserting during resize");
    }
  }
}

void finish_phase(Table& t, const std::vector<PackedEntry>& strays) {
  reinsert_all(t, strays);
  std::vector<PackedEntry> unplaced;
  reinsert_stash(t, &unplaced);
  if (!unplaced.empty()) {
    throw std::runtime_error("stash overflow while reinserting during resize");
  }
}

}  // namespace

const char* to_string(ResizeAction a) noexcept {
  switch (a) {
    case ResizeAction::None:
      return "none";
    case ResizeAction::Expand:
      return "expand";
    case ResizeAction::Contract:
      return "contract";
  }
  return "unknown";
}

ResizeAction maybe_resize(const Table& t) noexcept {
  const double lf = t.load_factor();
  if (lf > t.config().grow_threshold) return ResizeAction::Expand;
  if (lf < t.config().shrink_threshold && t.bucket_count() > t.min_buckets()) {
    return ResizeAction::Contract;
  }
  return ResizeAction::None;
}

bool stash_pressure(const Table& t) noexcept {
  return 2 * t.stash_used() > t.stash_capacity();
}

void split_pair(Table& t, std::size_t b_src, std::size_t b_dst, unsigned round_level,
                std::vector<PackedEntry>& strays, ResizeTrace* trace) {
  const std::uint32_t index_mask = static_cast<std::uint32_t>(low_bits(round_level));
  const std::uint32_t next_mask = (index_mask << 1) | 1u;
  const auto src = static_cast<std::uint32_t>(b_src);
  const auto dst = static_cast<std::uint32_t>(b_dst);

  if (trace) {
    trace->touched.push_back(b_src);
    trace->touched.push_back(b_dst);
  }

  const LaneVector<PackedEntry> kv = t.gather(b_src);

  // The residence of an entry came from whichever hash addresses b_src this
  // round; h1 wins when both do.
  LaneVector<std::uint32_t> residence_hash{};
  const LaneMask stray_mask = ballot_if([&](unsigned lane) {
    if (is_empty(kv[lane])) return false;
    const Key k = unpack_key(kv[lane]);
    const std::uint32_t h1 = bit_hash1(k);
    if ((h1 & index_mask) == src) {
      residence_hash[lane] = h1;
      return false;
    }
    const std::uint32_t h2 = bit_hash2(k);
    residence_hash[lane] = h2;
    return (h2 & index_mask) != src;
  });
  const LaneMask move_mask = ballot_if([&](unsigned lane) {
    if (is_empty(kv[lane]) || ((stray_mask >> lane) & 1u)) return false;
    return (residence_hash[lane] & next_mask) == dst;
  });

  for (LaneMask m = move_mask; m != 0; m &= m - 1) {
    const unsigned lane = *first_set(m);
    t.store_slot(b_dst, prefix_rank(move_mask, lane), kv[lane]);  // compacted
    t.store_slot(b_src, lane, kEmpty);
  }
  const auto n_movers = static_cast<unsigned>(std::popcount(move_mask));
  t.set_free_mask(b_src, t.load_free_mask(b_src) | move_mask);
  t.set_free_mask(b_dst, t.load_free_mask(b_dst) & ~low_bits(n_movers));

  for (LaneMask m = stray_mask; m != 0; m &= m - 1) {
    const unsigned lane = *first_set(m);
    strays.push_back(kv[lane]);
    t.store_slot(b_src, lane, kEmpty);
    t.release_bit(b_src, lane);
    if (trace) ++trace->rerouted;
  }
}

bool merge_pair(Table& t, std::size_t b_dst, std::size_t b_src, unsigned,
                ResizeTrace* trace) {
  if (trace) {
    trace->touched.push_back(b_dst);
    trace->touched.push_back(b_src);
  }
  const LaneVector<PackedEntry> kv = t.gather(b_src);
  const LaneMask occ_mask = ballot_if([&](unsigned lane) { return !is_empty(kv[lane]); });
  const LaneMask dst_free = t.load_free_mask(b_dst);
  if (std::popcount(occ_mask) > std::popcount(dst_free)) return false;

  LaneMask used_mask = 0;
  for (LaneMask m = occ_mask; m != 0; m &= m - 1) {
    const unsigned lane = *first_set(m);
    const unsigned pos = *select_nth_one(dst_free, prefix_rank(occ_mask, lane));
    t.store_slot(b_dst, pos, kv[lane]);
    t.store_slot(b_src, lane, kEmpty);
    used_mask |= LaneMask{1} << pos;
  }
  t.set_free_mask(b_src, kFullMask);
  t.set_free_mask(b_dst, dst_free & ~used_mask);
  return true;
}

std::size_t expand_batch(Table& t, std::size_t k, ResizeTrace* trace) {
  AddressingState a = t.addressing();
  if (a.split_ptr == a.round_size()) a = {a.next_mask(), 0};
  const std::size_t round = a.round_size();
  const auto level = static_cast<unsigned>(std::countr_zero(round));
  const std::size_t count = std::min(k, round - a.split_ptr);
  if (count == 0) return 0;

  const std::size_t first = a.split_ptr;
  AddressingState next = a;
  next.split_ptr = static_cast<std::uint32_t>(first + count);
  if (next.split_ptr == round) next = {a.next_mask(), 0};
  t.set_addressing(next);  // allocates the partner buckets

  std::vector<PackedEntry> strays;
  for (std::size_t b = first; b < first + count; ++b) {
    split_pair(t, b, b + round, level, strays, trace);
  }
  finish_phase(t, strays);
  return count;
}

std::size_t contract_batch(Table& t, std::size_t k, ResizeTrace* trace) {
  AddressingState a = t.addressing();
  if (a.split_ptr == 0) {
    if (a.round_size() <= t.min_buckets()) return 0;
    // Regress the round; the bucket count is unchanged.
    const std::uint32_t lower = a.index_mask >> 1;
    a = {lower, lower + 1};
    t.set_addressing(a);
  }
  const std::size_t round = a.round_size();
  const auto level = static_cast<unsigned>(std::countr_zero(round));

  std::size_t merged = 0;
  while (merged < k && a.split_ptr > 0) {
    const std::size_t b_dst = a.split_ptr - 1;
    if (!merge_pair(t, b_dst, b_dst + round, level, trace)) break;
    --a.split_ptr;
    ++merged;
  }
  t.set_addressing(a);
  finish_phase(t, {});
  return merged;
}

std::size_t reinsert_stash(Table& t, std::vector<PackedEntry>* unplaced) {
  const std::vector<PackedEntry> drained = t.stash_drain();
  std::size_t failed = 0;
  for (const PackedEntry e : drained) {
    const InsertOutcome o = insert(t, unpack_key(e), unpack_value(e));
    if (o.kind == InsertKind::FailedPending) {
      ++failed;
      if (unplaced) unplaced->push_back(o.pending);
    }
  }
  return drained.size() - t.stash_size() - failed;
}

RebalanceResult rebalance(Table& t) {
  RebalanceResult r;
  for (;;) {
    const ResizeAction act = maybe_resize(t);
    if (act == ResizeAction::Expand) {
      expand_batch(t, t.config().batch_k);
      ++r.expand_batches;
    } else if (act == ResizeAction::Contract) {
      if (contract_batch(t, t.config().batch_k) == 0) {
        r.contraction_stalled = true;
        break;
      }
      ++r.contract_batches;
    } else {
      break;
    }
  }
  if (stash_pressure(t)) {
    expand_batch(t, t.config().batch_k);
    ++r.expand_batches;
    r.stash_relief = true;
  }
  return r;
}

}  // namespace lanehash
