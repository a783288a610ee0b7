#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "lanehash/packed_kv.hpp"

namespace lanehash {

enum class HashFn { BitHash1, BitHash2, Crc32 };

std::string_view to_string(HashFn fn) noexcept;

/// Shift/xor/add mixer with a 2057 multiply. Returns the full 32-bit word.
constexpr std::uint32_t bit_hash1(std::uint32_t key) noexcept {
  key = ~key + (key << 15);
  key ^= (key >> 12);
  key += (key << 2);
  key ^= (key >> 4);
  key *= 2057u;
  key ^= (key >> 16);
  return key;
}

/// Six-round add/xor mixer with fixed constants. Returns the full word.
constexpr std::uint32_t bit_hash2(std::uint32_t key) noexcept {
  key = (key + 0x7ed55d16u) + (key << 12);
  key = (key ^ 0xc761c23cu) ^ (key >> 19);
  key = (key + 0x165667b1u) + (key << 5);
  key = (key + 0xd3a2646cu) ^ (key << 9);
  key = (key + 0xfd7046c5u) + (key << 3);
  key = (key ^ 0xb55a4f09u) ^ (key >> 16);
  return key;
}

/// Reflected CRC-32 (0xEDB88320) of the key's four little-endian bytes.
std::uint32_t crc32_key(std::uint32_t key) noexcept;

std::uint32_t hash(HashFn fn, Key k) noexcept;

/// Linear-hashing address state. n_buckets = index_mask + 1 + split_ptr.
struct AddressingState {
  std::uint32_t index_mask = 0;
  std::uint32_t split_ptr = 0;

  constexpr std::size_t round_size() const noexcept {
    return std::size_t{index_mask} + 1;
  }
  constexpr std::size_t n_buckets() const noexcept {
    return round_size() + split_ptr;
  }
  constexpr std::uint32_t next_mask() const noexcept {
    return (index_mask << 1) | 1u;
  }
  bool valid() const noexcept;

  friend constexpr bool operator==(const AddressingState&,
                                   const AddressingState&) = default;
};

constexpr std::uint32_t bucket_index(std::uint32_t h,
                                     const AddressingState& s) noexcept {
  std::uint32_t b = h & s.index_mask;
  if (b < s.split_ptr) b = h & s.next_mask();
  return b;
}

struct CandidatePair {
  std::uint32_t first;
  std::uint32_t second;

  constexpr bool degenerate() const noexcept { return first == second; }
  friend constexpr bool operator==(const CandidatePair&,
                                   const CandidatePair&) = default;
};

/// Two-choice addressing: BitHash1 and BitHash2 through the linear-hashing rule.
CandidatePair candidate_buckets(Key k, const AddressingState& s) noexcept;

/// The other candidate of `k`. Falls back to the first candidate when
/// `current` is no longer a candidate (e.g. right after a resize round).
std::uint32_t alt_bucket(Key k, std::uint32_t current,
                         const AddressingState& s) noexcept;
std::uint32_t alt_bucket(const CandidatePair& c, std::uint32_t current) noexcept;

/// Expectations for n keys thrown uniformly into m single-slot bins.
struct ModelStats {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  double lambda = 0.0;
  double expected_collisions = 0.0;    // E[Y] = n - m(1 - (1 - 1/m)^n)
  double collision_probability = 0.0;  // 1 - (1 - 1/m)^(n-1)
  double expected_empty = 0.0;         // m e^-lambda
  double expected_collisions_poisson = 0.0;  // n^2 / 2m
};

ModelStats uniform_model(std::uint64_t n, std::uint64_t m);

/// Y = sum over bins of (load - 1)+, binning by hash mod m.
std::uint64_t observed_collisions(std::span<const Key> keys, HashFn fn,
                                  std::uint64_t m);
/// Same statistic over precomputed hash words.
std::uint64_t observed_collisions_of(std::span<const std::uint32_t> hashes,
                                     std::uint64_t m);

/// Collision speedup ratio E[Y] / Y_observed. +inf when only the observed
/// count is zero, 1.0 when both are.
double csr(double expected, std::uint64_t observed) noexcept;

}  // namespace lanehash
