"""Perfect-reconstruction measures, cascade stability screening and concentration checks."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .autoencoder import forward
from .params import FilterBank
from .signal import Filter, autocorrelation, deflate_binomial, dtft

SQRT2 = math.sqrt(2.0)


class NumericalError(ArithmeticError):
    pass


# -- reconstruction quality --------------------------------------------------

def srer(fb: FilterBank, n_vectors: int = 1000, dim: int = 1000, seed: int = 12345) -> float:
    """Signal-to-reconstruction error ratio in dB; +inf when any reconstruction is exact."""
    X = np.random.default_rng(seed).standard_normal((n_vectors, dim))
    Xhat, _ = forward(X, fb)
    return srer_from(X, Xhat)


def srer_from(X, Xhat) -> float:
    X, Xhat = np.atleast_2d(X), np.atleast_2d(Xhat)
    err = np.linalg.norm(X - Xhat, axis=1)
    if np.any(err == 0):
        return math.inf
    return float(20.0 * np.log10(np.mean(np.linalg.norm(X, axis=1) / err)))


def pr1_residual(h: Filter, h_dual: Filter, omega) -> np.ndarray:
    """conj(h^(w)) h~^(w) + conj(h^(w+pi)) h~^(w+pi) - 2 (complex)."""
    omega = np.asarray(omega, dtype=float)
    return (np.conj(dtft(h, omega)) * dtft(h_dual, omega)
            + np.conj(dtft(h, omega + np.pi)) * dtft(h_dual, omega + np.pi) - 2.0)


def delta_pr(h: Filter, h_dual: Filter, strict: bool = False) -> float:
    """Mean squared PR-1 residual on l + l~ - 1 equispaced frequencies.

    The residual is real for PR, orthogonal or linear-phase pairs; for other pairs its
    squared modulus is averaged. ``strict`` instead insists that it be real.
    """
    n = h.len + h_dual.len - 1
    res = np.atleast_1d(pr1_residual(h, h_dual, 2 * np.pi * np.arange(n) / n))
    if strict and np.max(np.abs(res.imag)) >= 1e-12:
        raise NumericalError(f"PR-1 residual has imaginary part {np.max(np.abs(res.imag)):.3g}")
    return float(np.mean(np.abs(res) ** 2))


def cmf_residual(h: Filter, grid: int = 256) -> float:
    omega = 2 * np.pi * np.arange(grid) / grid
    return float(np.max(np.abs(np.abs(dtft(h, omega)) ** 2 + np.abs(dtft(h, omega + np.pi)) ** 2 - 2.0)))


def vanishing_moment_count(h: Filter, tol: float = 1e-6) -> int:
    """Multiplicity of the zero of h^ at omega = pi."""
    count, f = 0, h
    while f.len > 1 and abs(dtft(f, np.pi)) <= tol:
        f, _ = deflate_binomial(f)
        count += 1
    return count


@dataclass(frozen=True)
class PrReport:
    srer_db: float
    delta_pr: float
    cmf_residual: float | None
    h_sum: float
    h_dual_sum: float
    vm_count: int
    vm_count_dual: int

    def to_json(self) -> dict:
        out = asdict(self)
        if math.isinf(self.srer_db):
            out["srer_db"] = "inf"
        return out


def pr_report(fb: FilterBank, orthogonal: bool = False, **srer_kwargs) -> PrReport:
    return PrReport(
        srer_db=srer(fb, **srer_kwargs),
        delta_pr=delta_pr(fb.h, fb.h_dual),
        cmf_residual=cmf_residual(fb.h) if orthogonal else None,
        h_sum=float(fb.h.taps.sum()),
        h_dual_sum=float(fb.h_dual.taps.sum()),
        vm_count=vanishing_moment_count(fb.h),
        vm_count_dual=vanishing_moment_count(fb.h_dual),
    )


# -- cascade stability -------------------------------------------------------

def lawton_matrix(h: Filter) -> np.ndarray:
    """(2l-1) x (2l-1) transition matrix with entry (i, j) = r[j - 2i + l] (1-based)."""
    if abs(h.taps.sum() - SQRT2) > 1e-8:
        raise ValueError(f"Lawton matrix needs h^(0) = sqrt(2), got {h.taps.sum():.12g}")
    l = h.len
    r = autocorrelation(h)  # r[k] at index k + l - 1
    n = 2 * l - 1
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    lag = j - 2 * i + l
    ok = np.abs(lag) <= l - 1
    out = np.zeros((n, n))
    out[ok] = r[lag[ok] + l - 1]
    return out


@dataclass(frozen=True)
class LawtonReport:
    matrix_size: int
    eigenvalues: list[complex]
    unit_eig_multiplicity: int
    stable: bool
    tol: float = 1e-8

    @property
    def outside_unit(self) -> int:
        """Eigenvalues other than 1 whose magnitude is not safely below one."""
        ev = np.asarray(self.eigenvalues)
        return int(np.sum((np.abs(ev) >= 1 - self.tol) & (np.abs(ev - 1) >= self.tol)))

    def to_json(self) -> dict:
        return {
            "matrix_size": self.matrix_size,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "unit_eig_multiplicity": self.unit_eig_multiplicity,
            "stable": self.stable,
        }


def lawton_report(h: Filter, tol: float = 1e-8) -> LawtonReport:
    M = lawton_matrix(h)
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    near_one = np.abs(ev - 1.0) < tol
    unit = int(near_one.sum())
    stable = unit == 1 and bool(np.all(np.abs(ev[~near_one]) < 1.0 - tol))
    return LawtonReport(M.shape[0], [complex(z) for z in ev], unit, stable, tol)


def lawton_check(h: Filter, h_dual: Filter, tol: float = 1e-8
                 ) -> tuple[LawtonReport, LawtonReport, bool]:
    a, b = lawton_report(h, tol), lawton_report(h_dual, tol)
    return a, b, a.stable and b.stable


# -- concentration of the loss -----------------------------------------------

@dataclass(frozen=True)
class ConcentrationTable:
    k: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    frob2: float
    spec2: float
    mean: float
    std_err: float

    @property
    def within_bound(self) -> bool:
        return bool(np.all(self.empirical <= self.bound))

    @property
    def mean_ok(self) -> bool:
        """Sample mean of the loss within three standard errors of ||B||_F^2."""
        return abs(self.mean - self.frob2) <= 3 * self.std_err

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "empirical", "bound"])
            w.writerows(zip(self.k.tolist(), self.empirical.tolist(), self.bound.tolist()))


def tail_bound(k, frob2: float, spec2: float, s: int) -> np.ndarray:
    """Two-regime (sub-Gaussian then sub-exponential) bound on P(|L - ||B||_F^2| >= k)."""
    k = np.asarray(k, dtype=float)
    if spec2 == 0:
        return np.where(k > 0, 0.0, 2.0)
    small = 2 * np.exp(-k**2 * s / (8 * spec2 * frob2)) if frob2 > 0 else np.zeros_like(k)
    large = 2 * np.exp(-k * s / (8 * spec2))
    return np.where(k <= frob2, small, large)


def concentration_trial(B, trials: int = 10_000, seed: int = 0, k=None,
                        chunk: int = 256) -> ConcentrationTable:
    """Monte-Carlo tails of L = (1/s) sum_j ||B x_j||^2 over s Gaussian vectors per trial."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    s = B.shape[0]
    rng = np.random.default_rng(seed)
    losses = np.empty(trials)
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        X = rng.standard_normal((n, s, s))  # trial, vector, coordinate
        BX = X @ B.T
        losses[start:start + n] = np.einsum("tjc,tjc->t", BX, BX) / s
    frob2 = float(np.sum(B * B))
    spec2 = float(np.linalg.norm(B, 2) ** 2) if frob2 > 0 else 0.0
    if k is None:
        k = np.linspace(0, 2 * max(frob2, 1e-300), 41)[1:]
    k = np.asarray(k, dtype=float)
    dev = np.abs(losses - frob2)
    empirical = np.array([np.mean(dev >= kk) for kk in k])
    return ConcentrationTable(k, empirical, tail_bound(k, frob2, spec2, s), frob2, spec2,
                              float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(trials)))


def mgf_inequality_check(grid=None) -> bool:
    """exp(-x) / sqrt(1 - 2x) <= exp(2 x^2) on a grid inside [-1/4, 1/4]."""
    x = np.linspace(-0.25, 0.25, 1000) if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.abs(x) > 0.25):
        raise ValueError("grid must lie in [-1/4, 1/4]")
    lhs = np.exp(-x) / np.sqrt(1 - 2 * x)
    # equality holds at x = 0, so allow for rounding there
    return bool(np.all(lhs <= np.exp(2 * x**2) * (1 + 4 * np.finfo(float).eps)))


def annulus_fraction(X, k: float) -> float:
    """Fraction of rows whose norm lies within k of sqrt(dim)."""
    X = np.atleast_2d(X)
    r = np.linalg.norm(X, axis=1)
    root = math.sqrt(X.shape[1])
    return float(np.mean((r >= root - k) & (r <= root + k)))


def annulus_bound(k: float) -> float:
    """Lower bound on the mass inside the annulus of half-width k (for k <= sqrt(dim))."""
    return 1.0 - 3.0 * math.exp(-k * k / 96.0)


def pairwise_coherence(X) -> np.ndarray:
    """|<u_i, u_j>| for i < j after scaling every row to unit norm."""
    X = np.atleast_2d(X)
    U = X / np.linalg.norm(X, axis=1, keepdims=True)
    G = np.abs(U @ U.T)
    return G[np.triu_indices(X.shape[0], 1)]


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_json() if hasattr(obj, "to_json") else obj, fh, indent=2)
