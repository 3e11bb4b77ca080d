# Seeded pseudo-random bit interleaver, applied identically to LLR vectors
# and to the boolean RWC flag sequence so the two stay aligned.
from dataclasses import dataclass

import numpy as np

__all__ = ["Permutation", "build", "interleave", "deinterleave"]


@dataclass(frozen=True)
class Permutation:
    forward: np.ndarray  # demapper position i holds decoder position forward[i]
    inverse: np.ndarray

    @property
    def size(self) -> int:
        return self.forward.size


def build(k: int, seed: int) -> Permutation:
    """Uniform random permutation over k positions, deterministic under seed."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    forward = np.random.default_rng(np.random.SeedSequence([int(seed), k])).permutation(k)
    inverse = np.empty(k, dtype=forward.dtype)
    inverse[forward] = np.arange(k)
    return Permutation(forward=forward, inverse=inverse)


def interleave(p: Permutation, v: np.ndarray) -> np.ndarray:
    """Decoder-order vector -> demapper-order vector."""
    v = np.asarray(v)
    if v.shape != (p.size,):
        raise ValueError(f"expected length {p.size}, got shape {v.shape}")
    return v[p.forward]


def deinterleave(p: Permutation, v: np.ndarray) -> np.ndarray:
    """Demapper-order vector -> decoder-order vector."""
    v = np.asarray(v)
    if v.shape != (p.size,):
        raise ValueError(f"expected length {p.size}, got shape {v.shape}")
    out = np.empty_like(v)
    out[p.forward] = v
    return out
