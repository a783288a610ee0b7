#include "lanehash/hashing.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lanehash {

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int bit = 0; bit < 8; ++bit) {
      c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
    }
    table[i] = c;
  }
  return table;
}

constexpr std::array<std::uint32_t, 256> kCrcTable = make_crc_table();

}  // namespace

std::string_view to_string(HashFn fn) noexcept {
  switch (fn) {
    case HashFn::BitHash1:
      return "bithash1";
    case HashFn::BitHash2:
      return "bithash2";
    case HashFn::Crc32:
      return "crc32";
  }
  return "unknown";
}

std::uint32_t crc32_key(std::uint32_t key) noexcept {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (int i = 0; i < 4; ++i) {
    const auto byte = static_cast<std::uint8_t>(key >> (8 * i));
    crc = kCrcTable[(crc ^ byte) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

std::uint32_t hash(HashFn fn, Key k) noexcept {
  switch (fn) {
    case HashFn::BitHash1:
      return bit_hash1(k);
    case HashFn::BitHash2:
      return bit_hash2(k);
    case HashFn::Crc32:
      return crc32_key(k);
  }
  return 0;
}

bool AddressingState::valid() const noexcept {
  const std::uint64_t round = round_size();
  return std::has_single_bit(round) && split_ptr <= round;
}

CandidatePair candidate_buckets(Key k, const AddressingState& s) noexcept {
  return {bucket_index(bit_hash1(k), s), bucket_index(bit_hash2(k), s)};
}

std::uint32_t alt_bucket(const CandidatePair& c, std::uint32_t current) noexcept {
  if (current == c.first) return c.second;
  if (current == c.second) return c.first;
  return c.first;
}

std::uint32_t alt_bucket(Key k, std::uint32_t current,
                         const AddressingState& s) noexcept {
  return alt_bucket(candidate_buckets(k, s), current);
}

ModelStats uniform_model(std::uint64_t n, std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("uniform_model: m must be >= 1");
  ModelStats st;
  st.n = n;
  st.m = m;
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  st.lambda = nd / md;
  // (1 - 1/m)^x through log1p keeps precision for large m.
  const double log_miss = std::log1p(-1.0 / md);
  const double p_bin_empty = m == 1 ? (n == 0 ? 1.0 : 0.0) : std::exp(nd * log_miss);
  st.expected_collisions = nd - md * (1.0 - p_bin_empty);
  if (n <= 1) {
    st.expected_collisions = 0.0;
    st.collision_probability = 0.0;
  } else {
    st.collision_probability =
        m == 1 ? 1.0 : -std::expm1((nd - 1.0) * log_miss);
  }
  st.expected_empty = md * std::exp(-st.lambda);
  st.expected_collisions_poisson = nd * nd / (2.0 * md);
  return st;
}

std::uint64_t observed_collisions_of(std::span<const std::uint32_t> hashes,
                                     std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("observed_collisions: m must be >= 1");
  std::vector<std::uint32_t> load(m, 0);
  std::uint64_t y = 0;
  for (std::uint32_t h : hashes) {
    // Every arrival after the first in a bin adds one collision.
    if (load[h % m]++ > 0) ++y;
  }
  return y;
}

std::uint64_t observed_collisions(std::span<const Key> keys, HashFn fn,
                                  std::uint64_t m) {
  std::vector<std::uint32_t> hashes;
  hashes.reserve(keys.size());
  for (Key k : keys) hashes.push_back(hash(fn, k));
  return observed_collisions_of(hashes, m);
}

double csr(double expected, std::uint64_t observed) noexcept {
  if (observed == 0) {
    return expected > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return expected / static_cast<double>(observed);
}

}  // namespace lanehash
