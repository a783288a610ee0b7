#include <doctest.h>

#include <stdexcept>

#include <random>

#include "lanehash/packed_kv.hpp"

using namespace lanehash;

TEST_CASE("empty sentinel is all ones and never a packed pair") {
  CHECK(kEmpty == ~std::uint64_t{0});
  CHECK(is_empty(kEmpty));
  CHECK_FALSE(is_valid_key(kReservedKey));
  CHECK(pack(0xFFFFFFFEu, 0xFFFFFFFFu) != kEmpty);
  CHECK_FALSE(is_empty(pack(0xFFFFFFFEu, 0xFFFFFFFFu)));
}

TEST_CASE("key zero is an ordinary key") {
  CHECK(is_valid_key(0));
  CHECK(pack(0, 0) == 0);
  CHECK_FALSE(is_empty(pack(0, 0)));
  CHECK(unpack_key(pack(0, 7)) == 0);
}

TEST_CASE("value occupies the high word, key the low word") {
  CHECK(pack(0x11223344u, 0xAABBCCDDu) == 0xAABBCCDD11223344ull);
  CHECK(unpack_key(0xAABBCCDD11223344ull) == 0x11223344u);
  CHECK(unpack_value(0xAABBCCDD11223344ull) == 0xAABBCCDDu);
}

TEST_CASE("pack and unpack round-trip over random pairs") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100000; ++i) {
    const auto k = static_cast<Key>(rng() % kReservedKey);
    const auto v = static_cast<Value>(rng());
    const PackedEntry e = pack(k, v);
    CHECK_FALSE(is_empty(e));
    const KeyValue kv = unpack(e);
    REQUIRE(kv.key == k);
    REQUIRE(kv.value == v);
  }
}

static_assert(unpack_value(pack(3, 9)) == 9);
static_assert(unpack_key(pack(3, 9)) == 3);
