"""Deterministic low-discrepancy sequences for quadrature."""

from __future__ import annotations

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13)


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(indices.shape, dtype=float)
    f = 1.0 / base
    idx = indices.copy()
    while np.any(idx > 0):
        out += f * (idx % base)
        idx //= base
        f /= base
    return out


def halton(n: int, dims: int, start: int = 0) -> np.ndarray:
    """n Halton points in [0, 1)^dims, skipping the first `start` indices."""
    if dims > len(_PRIMES):
        raise ValueError(f"at most {len(_PRIMES)} dimensions supported")
    indices = np.arange(start + 1, start + n + 1, dtype=np.int64)
    return np.stack([_radical_inverse(indices, p) for p in _PRIMES[:dims]], axis=-1)
