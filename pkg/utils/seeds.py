# dynkin/utils/seeds.py
from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(run_seed: int, *keys: int) -> int:
    """Mix a 64-bit run seed with integer keys, e.g. (level n, simplex node m).

    The chain is splitmix64(splitmix64(seed) ^ k1) ^ k2 ... so each key
    sequence gets its own independent stream.
    """
    z = splitmix64(run_seed & _MASK64)
    for k in keys:
        z = splitmix64(z ^ (k & _MASK64))
    return z
