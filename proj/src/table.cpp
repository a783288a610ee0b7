#include "lanehash/table.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace lanehash {

namespace {

void validate(const TableConfig& cfg) {
  if (cfg.max_evictions < 1) {
    throw std::invalid_argument("max_evictions must be >= 1");
  }
  if (!(cfg.shrink_threshold > 0.0 && cfg.shrink_threshold < cfg.grow_threshold &&
        cfg.grow_threshold < 1.0)) {
    throw std::invalid_argument(
        "thresholds must satisfy 0 < shrink < grow < 1");
  }
  if (cfg.batch_k < 1) throw std::invalid_argument("batch_k must be >= 1");
  if (!(cfg.stash_fraction >= 0.0 && cfg.stash_fraction <= 1.0)) {
    throw std::invalid_argument("stash_fraction must lie in [0, 1]");
  }
}

}  // namespace

Table::Table(std::size_t initial_buckets, TableConfig cfg) : cfg_(cfg) {
  if (initial_buckets < 2 || !std::has_single_bit(initial_buckets) ||
      initial_buckets > (std::size_t{1} << 31)) {
    throw std::invalid_argument("initial bucket count must be a power of two >= 2, got " +
                                std::to_string(initial_buckets));
  }
  validate(cfg_);
  addr_ = {static_cast<std::uint32_t>(initial_buckets - 1), 0};
  min_buckets_ = initial_buckets;
  reserve_buckets(initial_buckets);

  const double scaled = std::round(cfg_.stash_fraction *
                                   static_cast<double>(initial_buckets * kSlotsPerBucket));
  stash_capacity_ = std::max(cfg_.min_stash_capacity, static_cast<std::size_t>(scaled));
  if (stash_capacity_ == 0) stash_capacity_ = 1;
  stash_ = std::make_unique<std::atomic<PackedEntry>[]>(stash_capacity_);
  for (std::size_t i = 0; i < stash_capacity_; ++i) {
    stash_[i].store(kEmpty, std::memory_order_relaxed);
  }
}

void Table::reserve_buckets(std::size_t n) {
  while (allocated_buckets() < n) {
    Segment seg;
    seg.buckets = std::make_unique<BucketSlots[]>(kSegmentBuckets);
    seg.free_mask = std::make_unique<std::atomic<LaneMask>[]>(kSegmentBuckets);
    seg.lock = std::make_unique<std::atomic<bool>[]>(kSegmentBuckets);
    for (std::size_t b = 0; b < kSegmentBuckets; ++b) {
      for (auto& s : seg.buckets[b].slot) s.store(kEmpty, std::memory_order_relaxed);
      seg.free_mask[b].store(kFullMask, std::memory_order_relaxed);
      seg.lock[b].store(false, std::memory_order_relaxed);
    }
    segments_.push_back(std::move(seg));
  }
}

double Table::load_factor() const noexcept {
  return static_cast<double>(occupied_slots()) / static_cast<double>(slot_count());
}

std::size_t Table::occupied_slots() const noexcept {
  const auto n = occupied_.load(std::memory_order_relaxed);
  return n < 0 ? 0 : static_cast<std::size_t>(n);
}

PackedEntry Table::load_slot(std::size_t b, unsigned slot,
                             std::memory_order order) const noexcept {
  assert(slot < kSlotsPerBucket);
  return bucket(b).slot[slot].load(order);
}

void Table::store_slot(std::size_t b, unsigned slot, PackedEntry e) noexcept {
  assert(slot < kSlotsPerBucket);
  bucket(b).slot[slot].store(e, std::memory_order_release);
}

bool Table::slot_cas(std::size_t b, unsigned slot, PackedEntry expected,
                     PackedEntry desired) noexcept {
  assert(slot < kSlotsPerBucket);
  return bucket(b).slot[slot].compare_exchange_strong(
      expected, desired, std::memory_order_acq_rel, std::memory_order_acquire);
}

LaneVector<PackedEntry> Table::gather(std::size_t b) const noexcept {
  LaneVector<PackedEntry> out;
  const auto& bk = bucket(b);
  for (unsigned lane = 0; lane < kLanes; ++lane) {
    out[lane] = bk.slot[lane].load(std::memory_order_acquire);
  }
  return out;
}

LaneMask Table::load_free_mask(std::size_t b) const noexcept {
  return mask(b).load(std::memory_order_relaxed);
}

bool Table::claim_bit(std::size_t b, unsigned slot) noexcept {
  assert(slot < kSlotsPerBucket);
  const LaneMask bit = LaneMask{1} << slot;
  const LaneMask old = mask(b).fetch_and(~bit, std::memory_order_acq_rel);
  if ((old & bit) != 0) {
    occupied_.fetch_add(1, std::memory_order_relaxed);
    return true;
  }
  // The bit was already clear, so the fetch_and changed nothing and the mask
  // is already back to its prior state. Setting the bit here would free a
  // slot that another claimer owns.
  return false;
}

void Table::release_bit(std::size_t b, unsigned slot) noexcept {
  assert(slot < kSlotsPerBucket);
  const LaneMask bit = LaneMask{1} << slot;
  [[maybe_unused]] const LaneMask old =
      mask(b).fetch_or(bit, std::memory_order_acq_rel);
  assert((old & bit) == 0 && "double release of a slot");
  occupied_.fetch_sub(1, std::memory_order_relaxed);
}

void Table::lock_bucket(std::size_t b) noexcept {
  auto& flag = segments_[b >> kSegmentShift].lock[b & (kSegmentBuckets - 1)];
  for (;;) {
    bool expected = false;
    if (flag.compare_exchange_weak(expected, true, std::memory_order_acquire,
                                   std::memory_order_relaxed)) {
      break;
    }
    while (flag.load(std::memory_order_relaxed)) std::this_thread::yield();
  }
  lock_acquisitions_.fetch_add(1, std::memory_order_relaxed);
}

void Table::unlock_bucket(std::size_t b) noexcept {
  segments_[b >> kSegmentShift].lock[b & (kSegmentBuckets - 1)].store(
      false, std::memory_order_release);
}

bool Table::stash_push(PackedEntry e) noexcept {
  assert(!is_empty(e));
  const std::uint64_t head = stash_head_.load(std::memory_order_relaxed);
  std::uint64_t tail = stash_tail_.load(std::memory_order_acquire);
  // Reserve with a bounded CAS instead of a blind fetch-add so that two
  // producers racing for the last free cell cannot wrap onto a live entry.
  do {
    if (tail - head >= stash_capacity_) return false;
  } while (!stash_tail_.compare_exchange_weak(tail, tail + 1, std::memory_order_acq_rel,
                                              std::memory_order_acquire));
  stash_[tail % stash_capacity_].store(e, std::memory_order_release);

  const std::size_t live = stash_live_.fetch_add(1, std::memory_order_relaxed) + 1;
  std::size_t peak = stash_peak_.load(std::memory_order_relaxed);
  while (live > peak &&
         !stash_peak_.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
  }
  return true;
}

std::optional<Value> Table::stash_find(Key k) const noexcept {
  const std::uint64_t head = stash_head_.load(std::memory_order_relaxed);
  const std::uint64_t tail = stash_tail_.load(std::memory_order_acquire);
  for (std::uint64_t i = head; i < tail; ++i) {
    const PackedEntry e = stash_[i % stash_capacity_].load(std::memory_order_acquire);
    if (!is_empty(e) && unpack_key(e) == k) return unpack_value(e);
  }
  return std::nullopt;
}

bool Table::stash_remove(Key k) noexcept {
  const std::uint64_t head = stash_head_.load(std::memory_order_relaxed);
  const std::uint64_t tail = stash_tail_.load(std::memory_order_acquire);
  for (std::uint64_t i = head; i < tail; ++i) {
    auto& cell = stash_[i % stash_capacity_];
    PackedEntry e = cell.load(std::memory_order_acquire);
    if (is_empty(e) || unpack_key(e) != k) continue;
    if (cell.compare_exchange_strong(e, kEmpty, std::memory_order_acq_rel)) {
      stash_live_.fetch_sub(1, std::memory_order_relaxed);
      return true;
    }
  }
  return false;
}

bool Table::stash_replace(Key k, Value v) noexcept {
  const std::uint64_t head = stash_head_.load(std::memory_order_relaxed);
  const std::uint64_t tail = stash_tail_.load(std::memory_order_acquire);
  for (std::uint64_t i = head; i < tail; ++i) {
    auto& cell = stash_[i % stash_capacity_];
    PackedEntry e = cell.load(std::memory_order_acquire);
    if (is_empty(e) || unpack_key(e) != k) continue;
    if (cell.compare_exchange_strong(e, pack(k, v), std::memory_order_acq_rel)) {
      return true;
    }
  }
  return false;
}

std::vector<PackedEntry> Table::stash_drain() {
  std::vector<PackedEntry> out;
  const std::uint64_t head = stash_head_.load(std::memory_order_relaxed);
  const std::uint64_t tail = stash_tail_.load(std::memory_order_relaxed);
  for (std::uint64_t i = head; i < tail; ++i) {
    auto& cell = stash_[i % stash_capacity_];
    const PackedEntry e = cell.exchange(kEmpty, std::memory_order_relaxed);
    if (!is_empty(e)) out.push_back(e);
  }
  stash_head_.store(tail, std::memory_order_relaxed);
  stash_live_.store(0, std::memory_order_relaxed);
  return out;
}

std::vector<PackedEntry> Table::entries() const {
  std::vector<PackedEntry> out;
  const std::size_t n = bucket_count();
  for (std::size_t b = 0; b < n; ++b) {
    for (unsigned s = 0; s < kSlotsPerBucket; ++s) {
      const PackedEntry e = load_slot(b, s, std::memory_order_acquire);
      if (!is_empty(e)) out.push_back(e);
    }
  }
  const std::uint64_t head = stash_head_.load(std::memory_order_acquire);
  const std::uint64_t tail = stash_tail_.load(std::memory_order_acquire);
  for (std::uint64_t i = head; i < tail; ++i) {
    const PackedEntry e = stash_[i % stash_capacity_].load(std::memory_order_acquire);
    if (!is_empty(e)) out.push_back(e);
  }
  return out;
}

std::size_t Table::count_entries() const { return entries().size(); }

bool Table::check_consistency() const {
  const std::size_t n = bucket_count();
  for (std::size_t b = 0; b < allocated_buckets(); ++b) {
    const LaneMask m = load_free_mask(b);
    for (unsigned s = 0; s < kSlotsPerBucket; ++s) {
      const bool free_bit = (m >> s) & 1u;
      const bool empty = is_empty(load_slot(b, s, std::memory_order_acquire));
      if (free_bit != empty) return false;
      if (b >= n && !empty) return false;
    }
  }
  std::size_t occupied = 0;
  for (std::size_t b = 0; b < n; ++b) {
    occupied += static_cast<std::size_t>(std::popcount(~load_free_mask(b)));
  }
  return occupied == occupied_slots();
}

void Table::set_free_mask(std::size_t b, LaneMask m) noexcept {
  mask(b).store(m, std::memory_order_release);
}

void Table::set_addressing(const AddressingState& s) {
  if (!s.valid()) throw std::logic_error("invalid addressing state");
  reserve_buckets(s.n_buckets());
  addr_ = s;
}

}  // namespace lanehash
