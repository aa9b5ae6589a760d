"""Deterministic seed derivation for grid cells, repeats and trees."""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def stable_hash(*keys) -> int:
    """64-bit hash of ``keys`` that is stable across processes and platforms."""
    payload = "\x1f".join(repr(k) for k in keys).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def derive_seed(master: int, *keys) -> int:
    """Child seed = master XOR hash(keys), kept in the unsigned 64-bit range."""
    return (int(master) ^ stable_hash(*keys)) & MASK64


def rng_for(seed: int, *keys) -> np.random.Generator:
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.default_rng(int(seed) & MASK64)
