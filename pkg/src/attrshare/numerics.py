"""Deterministic numeric primitives: seeded PRNG, stable elementwise maps,
and the small dense linear algebra the rest of the package is built on.

All randomness flows through :class:`Rng` (SplitMix64), which produces the
same bit-exact sequence for a given seed on every platform. Matrices and
vectors are plain float64 numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, DegenerateVectorError, ShapeError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class Rng:
    """SplitMix64 generator.

    Chosen for cross-language reproducibility: the recurrence is three
    integer operations with published test vectors, so any consumer can
    replay a stream from the 64-bit seed alone. Instances are single-owner;
    never share one across concurrent tasks.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        """Advance the state and return the next 64-bit output."""
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float, hi: float) -> float:
        """Draw from [lo, hi)."""
        if not lo < hi:
            raise ConfigError(f"uniform range is empty: lo={lo!r} hi={hi!r}")
        return lo + (self.next_u64() / 2.0**64) * (hi - lo)

    def gaussian(self) -> float:
        """Standard normal draw via Box-Muller.

        u1 is mapped into (0, 1] so log(u1) is always finite; each call
        consumes exactly two raw outputs.
        """
        u1 = 1.0 - self.uniform(0.0, 1.0)
        u2 = self.uniform(0.0, 1.0)
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """n uniform draws as a float64 vector, in stream order."""
        return np.array([self.uniform(lo, hi) for _ in range(n)], dtype=np.float64)

    def gaussians(self, n: int) -> np.ndarray:
        """n standard normal draws as a float64 vector, in stream order."""
        return np.array([self.gaussian() for _ in range(n)], dtype=np.float64)


def sigmoid(x):
    """Numerically stable logistic function; scalar in, scalar out."""
    arr = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(arr))
    out = np.where(arr >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ShapeError(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine of a zero-norm vector is undefined")
    return float(u @ v) / (nu * nv)


def mat_transpose_vec(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """out[c] = sum_i a[i, c] * s[i]."""
    a = np.asarray(a, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if a.ndim != 2 or s.ndim != 1 or a.shape[0] != s.shape[0]:
        raise ShapeError(f"cannot apply transpose of {a.shape} to vector of {s.shape}")
    return a.T @ s


def unit(v: np.ndarray) -> np.ndarray:
    """v scaled to unit L2 norm."""
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DegenerateVectorError("cannot normalize a zero vector")
    return v / n


def unit_rows(m: np.ndarray) -> np.ndarray:
    """Each row of m scaled to unit L2 norm."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateVectorError("matrix has a zero-norm row")
    return m / norms[:, None]


def require_finite(arr: np.ndarray, what: str) -> None:
    """Raise DataError-compatible check for NaN/Inf entries."""
    if not np.all(np.isfinite(arr)):
        from .errors import DataError

        raise DataError(f"{what} contains non-finite values")
