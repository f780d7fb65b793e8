"""Shared helpers: seed derivation, deterministic parallel map, numerics."""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

U64 = np.uint64
_U64_MASK = 0xFFFFFFFFFFFFFFFF


def derive_seed(root_seed: int, *components) -> int:
    """Derive a 64-bit stage seed from the single run seed.

    Components may be strings (hashed with crc32) or ints. The same
    (root, components) tuple always yields the same seed, independent of
    platform, so parallel and serial execution agree.
    """
    entropy = [int(root_seed) & _U64_MASK]
    for c in components:
        if isinstance(c, str):
            entropy.append(zlib.crc32(c.encode("utf-8")))
        else:
            entropy.append(int(c) & _U64_MASK)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(root_seed: int, *components) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, *components))


def parallel_map(fn, items, threads: int = 1) -> list:
    """Apply fn over items, preserving order; results are independent of
    the thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log1p_exp(z):
    """log(1 + exp(z)), stable for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z > 0
    out[pos] = z[pos] + np.log1p(np.exp(-z[pos]))
    out[~pos] = np.log1p(np.exp(z[~pos]))
    return out


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator.

    Returns (new_state, output). Used for all tree-level randomness so the
    compiled and pure-python forest builders draw identical streams.
    """
    state = (state + 0x9E3779B97F4A7C15) & _U64_MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
    z = z ^ (z >> 31)
    return state, z
