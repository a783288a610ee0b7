"""Concurrent bucketized cuckoo hash table with linear-hashing resize."""

from ._core import (
    EMPTY,
    RESERVED_KEY,
    HashFn,
    Table,
    bit_hash1,
    bit_hash2,
    crc32,
    csr,
    csr_sweep,
    gen_keys,
    hash,
    is_empty,
    observed_collisions,
    pack,
    run_workload,
    uniform_model,
    unpack,
)

__all__ = [
    "EMPTY",
    "RESERVED_KEY",
    "HashFn",
    "Table",
    "bit_hash1",
    "bit_hash2",
    "crc32",
    "csr",
    "csr_sweep",
    "gen_keys",
    "hash",
    "is_empty",
    "observed_collisions",
    "pack",
    "run_workload",
    "uniform_model",
    "unpack",
]
