"""Deterministic seed derivation.

Every stochastic stage gets its own 64-bit seed derived from one master seed
with the SplitMix64 finalizer::

    mix(x) = splitmix64(x)
    derive(master, k1, k2, ...) = mix(... mix(mix(master) ^ key(k1)) ^ key(k2) ...)

Integer keys are used as-is (masked to 64 bits); string keys are hashed with
blake2b (8-byte digest, little endian). Simulation runs draw from a PCG64
stream seeded from four SplitMix64 words, so a run's outcome depends only on
``(master_seed, run_index)``::

    x = splitmix64(derive(master, "run") ^ run_index)
    w_j = the j-th output of the SplitMix64 sequence started at x  (j = 0..3)
    state = w0 << 64 | w1;  inc = (w2 << 64 | w3) | 1
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return int.from_bytes(hashlib.blake2b(k.encode(), digest_size=8).digest(), "little")
    return int(k) & MASK64


def derive_seed(master: int, *keys: int | str) -> int:
    h = splitmix64(int(master) & MASK64)
    for k in keys:
        h = splitmix64(h ^ _key(k))
    return h


class RunStreams:
    """Hands out one reproducible generator per run index.

    A single PCG64 instance is reseeded in place, which is much cheaper than
    building a fresh generator for each of ~1e5 tiny runs.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._bitgen = np.random.PCG64(0)
        self._gen = np.random.Generator(self._bitgen)
        self._base = derive_seed(self.master_seed, "run")

    def for_run(self, run_index: int) -> np.random.Generator:
        x = splitmix64(self._base ^ (int(run_index) & MASK64))
        words = []
        for _ in range(4):
            words.append(splitmix64(x))
            x = (x + 0x9E3779B97F4A7C15) & MASK64
        self._bitgen.state = {
            "bit_generator": "PCG64",
            "state": {
                "state": (words[0] << 64) | words[1],
                "inc": ((words[2] << 64) | words[3]) | 1,
            },
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen
