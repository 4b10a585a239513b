"""Finite real filters and the linear signal operations built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Filter:
    """Finite tap sequence; tap ``k`` sits at time ``offset + k``."""

    taps: np.ndarray
    offset: int = 0

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float).reshape(-1)
        if taps.size == 0:
            raise ValueError("filter needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValueError("filter taps must be finite")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "offset", int(self.offset))

    @property
    def len(self) -> int:
        return self.taps.size

    def __len__(self) -> int:
        return self.taps.size

    @property
    def support(self) -> tuple[int, int]:
        return self.offset, self.offset + self.taps.size - 1

    def scaled(self, c: float) -> "Filter":
        return Filter(c * self.taps, self.offset)

    def shifted(self, k: int) -> "Filter":
        return Filter(self.taps, self.offset + k)

    def allclose(self, other: "Filter", atol: float = 1e-12) -> bool:
        return (
            self.offset == other.offset
            and self.len == other.len
            and bool(np.allclose(self.taps, other.taps, rtol=0, atol=atol))
        )

    def to_json(self) -> dict:
        return {"taps": [float(t) for t in self.taps], "offset": self.offset}

    @classmethod
    def from_json(cls, obj: dict) -> "Filter":
        return cls(obj["taps"], obj.get("offset", 0))

    def __repr__(self) -> str:
        return f"Filter(taps={np.array2string(self.taps, precision=6)}, offset={self.offset})"


def delta(offset: int = 0) -> Filter:
    return Filter([1.0], offset)


def convolve(a: Filter, b: Filter) -> Filter:
    return Filter(np.convolve(a.taps, b.taps), a.offset + b.offset)


def dtft(f: Filter, omega):
    """Evaluate sum_k taps[k] exp(-j (offset+k) omega); vectorised over omega."""
    omega = np.asarray(omega, dtype=float)
    n = f.offset + np.arange(f.len)
    out = np.exp(-1j * np.multiply.outer(omega, n)) @ f.taps
    return complex(out) if out.ndim == 0 else out


def downsample2(x) -> np.ndarray:
    return np.asarray(x)[::2].copy()


def upsample2(x) -> np.ndarray:
    x = np.asarray(x)
    out = np.zeros(2 * x.size, dtype=x.dtype)
    out[::2] = x
    return out


def conv_matrix(f: Filter, s: int) -> np.ndarray:
    """Toeplitz matrix T with T @ x == np.convolve(f.taps, x) for len(x) == s."""
    if s < 1:
        raise ValueError("conv_matrix needs s >= 1")
    T = np.zeros((f.len + s - 1, s))
    for j in range(s):
        T[j:j + f.len, j] = f.taps
    return T


def autocorrelation(f: Filter) -> np.ndarray:
    """r[k] = sum_n taps[n] taps[n+k] for k = -(len-1)..(len-1); index 0 is lag -(len-1)."""
    return np.correlate(f.taps, f.taps, mode="full")


def bspline(p: int) -> Filter:
    """Discrete B-spline ((1 + z^-1)/2)^p, normalised to unit sum."""
    if p < 0:
        raise ValueError("bspline order must be >= 0")
    return Filter([math.comb(p, k) / 2.0**p for k in range(p + 1)], 0)


def flip(f: Filter) -> Filter:
    """Time reversal n -> -n."""
    return Filter(f.taps[::-1], -(f.offset + f.len - 1))


def alt_flip(f: Filter, pivot: int = 1) -> Filter:
    """g[n] = (-1)^(pivot-n) f[pivot-n]."""
    lo = pivot - (f.offset + f.len - 1)
    n = lo + np.arange(f.len)
    signs = np.where((pivot - n) % 2 == 0, 1.0, -1.0)
    return Filter(signs * f.taps[::-1], lo)


def palindrome_residual(taps) -> np.ndarray:
    taps = np.asarray(taps, dtype=float)
    return taps - taps[::-1]


def deflate_binomial(f: Filter) -> tuple[Filter, float]:
    """Divide f(z) by (1 + z^-1)/2; returns (quotient, remainder at the last tap).

    The remainder is zero exactly when f has a zero at omega = pi.
    """
    if f.len < 2:
        return Filter([0.0], f.offset), float(f.taps[0])
    q = np.empty(f.len - 1)
    acc = 0.0
    for k in range(f.len - 1):
        acc = 2.0 * f.taps[k] - acc
        q[k] = acc
    return Filter(q, f.offset), float(f.taps[-1] - q[-1] / 2.0)
