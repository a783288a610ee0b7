#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lanehash/hashing.hpp"
#include "lanehash/lane_group.hpp"
#include "lanehash/packed_kv.hpp"

namespace lanehash {

inline constexpr unsigned kSlotsPerBucket = kLanes;

/// Tunables. Validated by the Table constructor.
struct TableConfig {
  std::uint32_t max_evictions = 16;
  double grow_threshold = 0.9;
  double shrink_threshold = 0.25;
  std::size_t batch_k = 1024;  // buckets per resize step
  double stash_fraction = 0.02;
  std::size_t min_stash_capacity = 1024;
};

/// The concurrent storage every protocol operates on.
///
/// Buckets hold 32 packed slots each; the free mask and lock of a bucket live
/// in separate arrays. Slot, mask, lock and stash primitives are safe under
/// concurrent use. Everything documented as "exclusive" requires that no
/// other operation runs on the table (the resize phase).
///
/// Quiescent invariant: bit i of free_mask(b) is set iff slot (b, i) is kEmpty.
class Table {
 public:
  explicit Table(std::size_t initial_buckets, TableConfig cfg = {});

  Table(const Table&) = delete;
  Table& operator=(const Table&) = delete;

  const TableConfig& config() const noexcept { return cfg_; }
  const AddressingState& addressing() const noexcept { return addr_; }
  std::size_t bucket_count() const noexcept { return addr_.n_buckets(); }
  std::size_t slot_count() const noexcept {
    return bucket_count() * kSlotsPerBucket;
  }
  std::size_t min_buckets() const noexcept { return min_buckets_; }

  /// Occupied bucket slots over total slots. Exact at quiescence.
  double load_factor() const noexcept;
  std::size_t occupied_slots() const noexcept;

  CandidatePair candidates(Key k) const noexcept {
    return candidate_buckets(k, addr_);
  }

  // -- slot words ------------------------------------------------------------
  PackedEntry load_slot(std::size_t b, unsigned slot,
                        std::memory_order order = std::memory_order_relaxed) const noexcept;
  void store_slot(std::size_t b, unsigned slot, PackedEntry e) noexcept;
  bool slot_cas(std::size_t b, unsigned slot, PackedEntry expected,
                PackedEntry desired) noexcept;
  /// All 32 slots of a bucket, one load per lane.
  LaneVector<PackedEntry> gather(std::size_t b) const noexcept;

  // -- free masks ------------------------------------------------------------
  LaneMask load_free_mask(std::size_t b) const noexcept;
  /// Clears the slot bit; true iff it was set. A lost claim leaves the mask as is.
  bool claim_bit(std::size_t b, unsigned slot) noexcept;
  /// Publishes a vacancy. The caller has just turned the slot into kEmpty.
  void release_bit(std::size_t b, unsigned slot) noexcept;

  // -- bucket locks ----------------------------------------------------------
  void lock_bucket(std::size_t b) noexcept;
  void unlock_bucket(std::size_t b) noexcept;
  std::uint64_t lock_acquisitions() const noexcept {
    return lock_acquisitions_.load(std::memory_order_relaxed);
  }

  // -- overflow stash --------------------------------------------------------
  bool stash_push(PackedEntry e) noexcept;
  std::optional<Value> stash_find(Key k) const noexcept;
  bool stash_remove(Key k) noexcept;
  /// Swaps in a new value for a stashed key; false when the key is not stashed.
  bool stash_replace(Key k, Value v) noexcept;
  /// Exclusive. Returns the live entries and empties the ring.
  std::vector<PackedEntry> stash_drain();
  std::size_t stash_size() const noexcept {
    return stash_live_.load(std::memory_order_relaxed);
  }
  std::size_t stash_peak() const noexcept {
    return stash_peak_.load(std::memory_order_relaxed);
  }
  std::size_t stash_capacity() const noexcept { return stash_capacity_; }
  /// Ring cells consumed since the last drain, removed entries included.
  /// stash_push fails once this reaches the capacity.
  std::size_t stash_used() const noexcept {
    return static_cast<std::size_t>(stash_tail_.load(std::memory_order_relaxed) -
                                    stash_head_.load(std::memory_order_relaxed));
  }

  // -- exclusive-phase access ------------------------------------------------
  /// Live entries in buckets [0, bucket_count()) followed by the stash.
  std::vector<PackedEntry> entries() const;
  std::size_t count_entries() const;
  /// Checks the mask/slot invariant on every addressable bucket and that the
  /// allocated-but-unaddressed buckets are empty.
  bool check_consistency() const;

  void set_free_mask(std::size_t b, LaneMask m) noexcept;
  /// Moves the addressing state; grows storage when needed. Exclusive.
  void set_addressing(const AddressingState& s);

 private:
  struct alignas(256) BucketSlots {
    std::array<std::atomic<PackedEntry>, kSlotsPerBucket> slot;
  };

  struct Segment {
    std::unique_ptr<BucketSlots[]> buckets;
    std::unique_ptr<std::atomic<LaneMask>[]> free_mask;
    std::unique_ptr<std::atomic<bool>[]> lock;
  };

  static constexpr unsigned kSegmentShift = 8;
  static constexpr std::size_t kSegmentBuckets = std::size_t{1} << kSegmentShift;

  BucketSlots& bucket(std::size_t b) noexcept {
    return segments_[b >> kSegmentShift].buckets[b & (kSegmentBuckets - 1)];
  }
  const BucketSlots& bucket(std::size_t b) const noexcept {
    return segments_[b >> kSegmentShift].buckets[b & (kSegmentBuckets - 1)];
  }
  std::atomic<LaneMask>& mask(std::size_t b) noexcept {
    return segments_[b >> kSegmentShift].free_mask[b & (kSegmentBuckets - 1)];
  }
  const std::atomic<LaneMask>& mask(std::size_t b) const noexcept {
    return segments_[b >> kSegmentShift].free_mask[b & (kSegmentBuckets - 1)];
  }

  void reserve_buckets(std::size_t n);
  std::size_t allocated_buckets() const noexcept {
    return segments_.size() * kSegmentBuckets;
  }

  TableConfig cfg_;
  AddressingState addr_;
  std::size_t min_buckets_;
  std::vector<Segment> segments_;

  std::atomic<std::int64_t> occupied_{0};
  std::atomic<std::uint64_t> lock_acquisitions_{0};

  std::size_t stash_capacity_;
  std::unique_ptr<std::atomic<PackedEntry>[]> stash_;
  std::atomic<std::uint64_t> stash_head_{0};
  std::atomic<std::uint64_t> stash_tail_{0};
  std::atomic<std::size_t> stash_live_{0};
  std::atomic<std::size_t> stash_peak_{0};
};

}  // namespace lanehash
