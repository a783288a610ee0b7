#pragma once

#include <cassert>
#include <cstdint>
#include <utility>

namespace lanehash {

using Key = std::uint32_t;
using Value = std::uint32_t;

/// One 64-bit slot word: value in the high half, key in the low half.
using PackedEntry = std::uint64_t;

/// Sentinel for an unoccupied slot. Only reachable through the reserved key.
inline constexpr PackedEntry kEmpty = ~PackedEntry{0};

/// Keys equal to this are rejected so that kEmpty stays unambiguous.
inline constexpr Key kReservedKey = 0xFFFFFFFFu;

struct KeyValue {
  Key key;
  Value value;

  friend constexpr bool operator==(const KeyValue&, const KeyValue&) = default;
};

constexpr bool is_valid_key(Key k) noexcept { return k != kReservedKey; }

constexpr PackedEntry pack(Key k, Value v) noexcept {
  assert(is_valid_key(k));
  return (static_cast<PackedEntry>(v) << 32) | k;
}

constexpr Key unpack_key(PackedEntry e) noexcept {
  return static_cast<Key>(e & 0xFFFFFFFFu);
}

constexpr Value unpack_value(PackedEntry e) noexcept {
  return static_cast<Value>(e >> 32);
}

constexpr KeyValue unpack(PackedEntry e) noexcept {
  assert(e != kEmpty);
  return {unpack_key(e), unpack_value(e)};
}

constexpr bool is_empty(PackedEntry e) noexcept { return e == kEmpty; }

}  // namespace lanehash
