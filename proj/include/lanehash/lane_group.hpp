#pragma once

// Lockstep emulation of the warp-wide primitives used by the bucket
// protocols. A lane group is 32 logical lanes evaluated by one worker, so
// every lane observes the same ballot result and the same elected winner.

#include <array>
#include <bit>
#include <cassert>
#include <cstdint>
#include <optional>

namespace lanehash {

inline constexpr unsigned kLanes = 32;
inline constexpr std::uint32_t kFullMask = 0xFFFFFFFFu;

/// Bit i corresponds to lane i.
using LaneMask = std::uint32_t;

template <class T>
using LaneVector = std::array<T, kLanes>;

constexpr LaneMask ballot(const LaneVector<bool>& preds) noexcept {
  LaneMask m = 0;
  for (unsigned lane = 0; lane < kLanes; ++lane) {
    if (preds[lane]) m |= LaneMask{1} << lane;
  }
  return m;
}

/// Evaluates pred(lane) for every lane and aggregates the results.
template <class Pred>
constexpr LaneMask ballot_if(Pred&& pred) {
  LaneMask m = 0;
  for (unsigned lane = 0; lane < kLanes; ++lane) {
    if (pred(lane)) m |= LaneMask{1} << lane;
  }
  return m;
}

/// Lowest set lane, i.e. the elected winner.
constexpr std::optional<unsigned> first_set(LaneMask mask) noexcept {
  if (mask == 0) return std::nullopt;
  return static_cast<unsigned>(std::countr_zero(mask));
}

/// Number of set bits strictly below `lane`.
constexpr unsigned prefix_rank(LaneMask mask, unsigned lane) noexcept {
  assert(lane < kLanes);
  const LaneMask below = (LaneMask{1} << lane) - 1u;
  return static_cast<unsigned>(std::popcount(mask & below));
}

/// Position of the (rank+1)-th set bit counting from bit 0.
constexpr std::optional<unsigned> select_nth_one(LaneMask mask,
                                                 unsigned rank) noexcept {
  if (rank >= static_cast<unsigned>(std::popcount(mask))) return std::nullopt;
  for (unsigned i = 0; i < rank; ++i) mask &= mask - 1;  // drop lowest set bit
  return static_cast<unsigned>(std::countr_zero(mask));
}

template <class T>
constexpr T broadcast(const LaneVector<T>& vals, unsigned src) noexcept {
  assert(src < kLanes);
  return vals[src];
}

}  // namespace lanehash
