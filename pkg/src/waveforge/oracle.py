"""Closed-form reference filters: Daubechies and Cohen-Daubechies-Feauveau families.

Everything here is built from polynomial algebra alone (no training, no autoencoder
code) so that it can serve as ground truth for learned filters.

Convention: with y = cos^2(w/2), an orthogonal lowpass filter with p zeros at pi has
|h^(w)|^2 = y^p Q(y) where Q(y) = 2 sum_{k<p} C(p-1+k, k) (1-y)^k, the unique
degree p-1 solution of y^p Q(y) + (1-y)^p Q(1-y) = 2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .params import FilterBank, flip_pivot
from .signal import Filter, alt_flip

SQRT2 = math.sqrt(2.0)


class OracleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PolynomialQ:
    """Q(y) stored as ascending coefficients in y."""

    coeffs: np.ndarray
    p: int

    def __call__(self, y):
        return P.polyval(y, self.coeffs)

    def in_x(self) -> np.ndarray:
        """Ascending coefficients of Q as a polynomial in x = 1 - y."""
        return _compose_one_minus(self.coeffs)

    def identity_residual(self) -> float:
        """Max coefficient of y^p Q(y) + (1-y)^p Q(1-y) - 2."""
        yp = P.polypow([0.0, 1.0], self.p)
        one_minus_p = P.polypow([1.0, -1.0], self.p)
        total = P.polyadd(P.polymul(yp, self.coeffs),
                          P.polymul(one_minus_p, _compose_one_minus(self.coeffs)))
        total = P.polysub(total, [2.0])
        return float(np.max(np.abs(total)))


def _compose_one_minus(c) -> np.ndarray:
    """Coefficients of q(1 - y) given those of q(y)."""
    out = np.zeros(1)
    for k, ck in enumerate(c):
        out = P.polyadd(out, ck * P.polypow([1.0, -1.0], k))
    return out


def bezout_q(p: int) -> PolynomialQ:
    if p < 1:
        raise ValueError("p must be >= 1")
    in_x = np.array([2.0 * math.comb(p - 1 + k, k) for k in range(p)])
    return PolynomialQ(_compose_one_minus(in_x), p)


def _x_factor(x0: complex) -> np.ndarray:
    """Taps of x - x0 with x = (2 - z - 1/z) / 4, as a centred length-3 Laurent sequence."""
    return np.array([-0.25, 0.5 - x0, -0.25])


def _laurent_from_x(poly_x) -> np.ndarray:
    """Centred taps of sum_k c_k x^k, x = (2 - z - 1/z)/4 (length 2 deg + 1)."""
    deg = len(poly_x) - 1
    out = np.zeros(2 * deg + 1)
    x_taps = np.array([-0.25, 0.5, -0.25])
    power = np.array([1.0])
    for k, c in enumerate(poly_x):
        pad = deg - k
        out[pad:pad + power.size] += c * power
        power = np.convolve(power, x_taps)
    return out


def _binomial(p: int) -> np.ndarray:
    return np.array([math.comb(p, k) / 2.0**p for k in range(p + 1)])


def daubechies_filter(p: int) -> Filter:
    """Minimum-phase orthogonal lowpass filter of length 2p with p vanishing moments."""
    q = bezout_q(p)
    x_coeffs = q.in_x()
    laurent = _laurent_from_x(x_coeffs)
    if laurent.size == 1:
        ell = np.array([math.sqrt(laurent[0])])
    else:
        roots = np.roots(laurent)
        inside = roots[np.abs(roots) < 1]
        if inside.size != p - 1:
            raise OracleError(f"expected {p - 1} roots inside the unit circle, got {inside.size}")
        ell = np.real_if_close(np.poly(inside), tol=1e6)
        if np.iscomplexobj(ell):
            raise OracleError("spectral factor is not real")
    h = np.convolve(_binomial(p), ell)
    h *= SQRT2 / h.sum()
    # |h^|^2 must reproduce y^p Q(y)
    w = np.linspace(0, np.pi, 64)
    y = np.cos(w / 2) ** 2
    mag2 = np.abs(np.exp(-1j * np.outer(w, np.arange(h.size))) @ h) ** 2
    if np.max(np.abs(mag2 - y**p * q(y))) > 1e-9:
        raise OracleError("spectral factorisation residual too large")
    return Filter(h)


def daubechies_ell_roots(p: int) -> np.ndarray:
    """Roots (in z) of the non-binomial factor of the minimum-phase Daubechies filter."""
    laurent = _laurent_from_x(_compose_one_minus(bezout_q(p).coeffs))
    if laurent.size == 1:
        return np.zeros(0, dtype=complex)
    roots = np.roots(laurent)
    return roots[np.abs(roots) < 1]


def _pr1_cross(h, hd, shift: int) -> np.ndarray:
    """c[k] = sum_n h[n] hd[n + k] for h at offset 0 and hd at offset ``shift``."""
    full = np.correlate(hd, h, mode="full")  # lag k_index - (len(h) - 1)
    lags = np.arange(full.size) - (h.size - 1) + shift
    return full, lags


def cdf_spline_filter(p: int, p_dual: int) -> tuple[Filter, Filter]:
    """Spline biorthogonal pair: h~ = sqrt(2) beta_p~ and a symmetric h with p moments."""
    if p < 1 or p_dual < 1:
        raise ValueError("p and p_dual must be >= 1")
    if (p + p_dual) % 2:
        raise ValueError("p and p_dual must have the same parity")
    l, l_dual = 2 * p + p_dual - 1, p_dual + 1
    hd = SQRT2 * _binomial(p_dual)
    shift = (l - l_dual) // 2
    n_ell = l - p
    half = (n_ell + 1) // 2
    basis = np.zeros((n_ell, half))
    for i in range(n_ell):
        basis[i, min(i, n_ell - 1 - i)] = 1.0
    beta = _binomial(p)
    # columns: h for each symmetric basis vector; PR-1 is linear in h for fixed h~
    cols = [np.convolve(beta, basis[:, j]) for j in range(half)]
    cross = [_pr1_cross(c, hd, shift) for c in cols]
    lags = cross[0][1]
    even = lags % 2 == 0
    A = np.stack([full[even] for full, _ in cross], axis=1)
    b = (lags[even] == 0).astype(float)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.matrix_rank(A) < half:
        raise OracleError("PR-1 system is singular")
    if np.max(np.abs(A @ sol - b)) > 1e-12:
        raise OracleError("PR-1 system has no exact solution")
    h = sum(c * v for c, v in zip(cols, sol))
    return Filter(h), Filter(hd, shift)


def cdf97_filters() -> tuple[Filter, Filter]:
    """Symmetric 9/7 pair with four zeros at pi on each side."""
    x_coeffs = _compose_one_minus(bezout_q(4).coeffs)  # 2 (1 + 4x + 10x^2 + 20x^3)
    roots = np.roots(x_coeffs[::-1])
    real = roots[np.abs(roots.imag) < 1e-12].real
    pair = roots[np.abs(roots.imag) >= 1e-12]
    if real.size != 1 or pair.size != 2:
        raise OracleError("unexpected root structure for the degree-3 factor")
    ell_dual = _x_factor(real[0]).real
    ell = np.real_if_close(np.convolve(_x_factor(pair[0]), _x_factor(pair[1])), tol=1e6)
    if np.iscomplexobj(ell):
        raise OracleError("conjugate pair did not give a real factor")
    beta = _binomial(4)
    h = np.convolve(beta, ell)
    hd = np.convolve(beta, ell_dual)
    h *= SQRT2 / h.sum()
    hd *= SQRT2 / hd.sum()
    return Filter(h), Filter(hd, 1)


def _bank(h: Filter, hd: Filter) -> FilterBank:
    pivot = flip_pivot(h.len, h.offset)
    return FilterBank(h, alt_flip(hd, pivot), hd, alt_flip(h, pivot))


def family(name: str) -> FilterBank:
    """Reference filterbank by name: haar, db2, db4, cdf53, cdf97."""
    if name == "haar":
        h = daubechies_filter(1)
        return _bank(h, h)
    if name in ("db2", "db4"):
        h = daubechies_filter(int(name[2:]))
        return _bank(h, h)
    if name == "cdf53":
        return _bank(*cdf_spline_filter(2, 2))
    if name == "cdf97":
        return _bank(*cdf97_filters())
    raise KeyError(f"unknown family '{name}'; choose from {', '.join(FAMILIES)}")


FAMILIES = ("haar", "db2", "db4", "cdf53", "cdf97")


def write_family(name: str, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(json.dumps({"family": name, **family(name).to_json()}, indent=2))
    return path
