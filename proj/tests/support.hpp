#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lanehash/ops.hpp"
#include "lanehash/table.hpp"

namespace lanehash::testing {

/// First `count` keys (scanning upward from `start`) whose candidates under
/// `t`'s addressing satisfy `pred`.
template <class Pred>
std::vector<Key> keys_where(const Table& t, std::size_t count, Pred pred,
                            Key start = 0) {
  std::vector<Key> out;
  for (Key k = start; out.size() < count; ++k) {
    if (pred(t.candidates(k))) out.push_back(k);
  }
  return out;
}

/// Contents of buckets + stash as an ordered map. Duplicated keys are
/// reported through `duplicates`.
inline std::map<Key, Value> contents(const Table& t, std::size_t* duplicates = nullptr) {
  std::map<Key, Value> out;
  std::size_t dup = 0;
  for (const PackedEntry e : t.entries()) {
    if (!out.emplace(unpack_key(e), unpack_value(e)).second) ++dup;
  }
  if (duplicates) *duplicates = dup;
  return out;
}

/// Every stored key sits in one of its candidate buckets or in the stash.
inline bool residences_valid(const Table& t) {
  for (std::size_t b = 0; b < t.bucket_count(); ++b) {
    for (unsigned s = 0; s < kSlotsPerBucket; ++s) {
      const PackedEntry e = t.load_slot(b, s);
      if (is_empty(e)) continue;
      const CandidatePair c = t.candidates(unpack_key(e));
      if (c.first != b && c.second != b) return false;
    }
  }
  return true;
}

}  // namespace lanehash::testing
