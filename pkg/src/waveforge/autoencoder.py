"""Linear two-channel filterbank autoencoder.

Analysis correlates the input with ``h`` and ``g`` (convolution with the time-reversed
filters), keeps the even-time samples, and synthesis convolves with ``h~`` and ``g~``.
All filters keep their true time offsets, so a perfect-reconstruction bank returns the
input with zero delay and the residual matrix ``B`` vanishes identically, boundaries
included (plain zero-padded linear convolution, no wrap-around).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .params import (FilterBank, Kind, ParamSet, assemble, flip_pivot,
                     symmetric_basis)
from .signal import Filter, alt_flip, bspline


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class CoeffPair:
    approx: np.ndarray
    detail: np.ndarray


@dataclass(frozen=True)
class ReconMatrix:
    B: np.ndarray
    s: int
    tau: int
    H: np.ndarray
    G: np.ndarray
    H_dual: np.ndarray
    G_dual: np.ndarray
    D: np.ndarray
    P: np.ndarray
    analysis_start: int  # time index of row 0 of H and G
    synthesis_start: int  # time index of row 0 of H~ and G~


def tau(fb: FilterBank) -> int:
    return max(fb.h.len, fb.h_dual.len)


def pad_align(fb: FilterBank) -> FilterBank:
    """Zero-pad every filter to tau taps, floor(d/2) zeros in front and ceil(d/2) behind.

    Offsets move with the left padding, so true tap positions (and every DTFT) are kept.
    """
    t = tau(fb)

    def pad(f: Filter) -> Filter:
        d = t - f.len
        if d <= 0:
            return f
        left = d // 2
        return Filter(np.pad(f.taps, (left, d - left)), f.offset - left)

    return FilterBank(*(pad(f) for f in (fb.h, fb.g, fb.h_dual, fb.g_dual)))


def _check_length(s: int, fb: FilterBank):
    if s < 2 * tau(fb):
        raise DimensionError(f"signal length {s} must be at least 2*tau = {2 * tau(fb)}")


# -- filtering path ----------------------------------------------------------

class _Channel:
    """One analysis/synthesis branch evaluated on a batch; keeps what backprop needs."""

    def __init__(self, X: np.ndarray, f: Filter, f_dual: Filter):
        m, s = X.shape
        l = f.len
        Xp = np.pad(X, ((0, 0), (l - 1, l - 1)))
        self.W = sliding_window_view(Xp, l, axis=1)  # W[:, i, k] = x[i + k - (l-1)]
        self.n0 = -f.offset - l + 1  # time of analysis sample i = 0
        self.mask = ((self.n0 + np.arange(s + l - 1)) % 2 == 0).astype(float)
        self.U = (self.W @ f.taps) * self.mask

        ld = f_dual.len
        i_min = -f_dual.offset - (ld - 1) - self.n0
        i_max = s - 1 - f_dual.offset - self.n0
        self.pad_l = max(0, -i_min)
        pad_r = max(0, i_max - (self.U.shape[1] - 1))
        Up = np.pad(self.U, ((0, 0), (self.pad_l, pad_r)))
        self.base = i_min + self.pad_l
        self.V = sliding_window_view(Up, ld, axis=1)[:, self.base:self.base + s]
        self.Up_shape = Up.shape
        self.f_dual = f_dual
        self.Y = self.V @ f_dual.taps[::-1]

    def backward(self, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradients w.r.t. (analysis taps, synthesis taps) given dL/dY."""
        s = E.shape[1]
        ld = self.f_dual.len
        d_dual = np.einsum("mt,mtj->j", E, self.V)[::-1]
        dUp = np.zeros(self.Up_shape)
        rev = self.f_dual.taps[::-1]
        for j in range(ld):
            dUp[:, self.base + j:self.base + j + s] += rev[j] * E
        dU = dUp[:, self.pad_l:self.pad_l + self.U.shape[1]] * self.mask
        d_an = np.einsum("mi,mik->k", dU, self.W)
        return d_an, d_dual


def _as_batch(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def forward(x, fb: FilterBank) -> tuple[np.ndarray, CoeffPair]:
    """Reconstruct ``x`` (1-D or a batch of rows) through the bank."""
    X = _as_batch(x)
    _check_length(X.shape[1], fb)
    low = _Channel(X, fb.h, fb.h_dual)
    high = _Channel(X, fb.g, fb.g_dual)
    Xhat = low.Y + high.Y

    # coefficients on a common even-time grid covering both channels
    lo = min(low.n0, high.n0)
    hi = max(low.n0 + low.U.shape[1], high.n0 + high.U.shape[1]) - 1
    lo += lo % 2
    times = np.arange(lo, hi + 1, 2)

    def pick(ch):
        idx = times - ch.n0
        ok = (idx >= 0) & (idx < ch.U.shape[1])
        out = np.zeros((X.shape[0], times.size))
        out[:, ok] = ch.U[:, idx[ok]]
        return out

    approx, detail = pick(low), pick(high)
    if np.ndim(x) == 1:
        return Xhat[0], CoeffPair(approx[0], detail[0])
    return Xhat, CoeffPair(approx, detail)


# -- matrix path -------------------------------------------------------------

def build_B(fb: FilterBank, s: int) -> ReconMatrix:
    """Materialise B = I - P (H~ D H + G~ D G) on windows covering every support."""
    _check_length(s, fb)
    an = [fb.h, fb.g]
    syn = [fb.h_dual, fb.g_dual]
    n_lo = min(-f.offset - f.len + 1 for f in an)
    n_hi = max(s - 1 - f.offset for f in an)
    N = n_hi - n_lo + 1
    t_lo = n_lo + min(f.offset for f in syn)
    t_hi = n_hi + max(f.offset + f.len - 1 for f in syn)
    T = t_hi - t_lo + 1

    def analysis_matrix(f):
        A = np.zeros((N, s))
        for j in range(s):
            for k, c in enumerate(f.taps):
                A[j - f.offset - k - n_lo, j] = c  # u[n] += f[j - n] x[j]
        return A

    def synthesis_matrix(f):
        S = np.zeros((T, N))
        for col in range(N):
            n = n_lo + col
            for k, c in enumerate(f.taps):
                S[n + f.offset + k - t_lo, col] = c
        return S

    H, G = analysis_matrix(fb.h), analysis_matrix(fb.g)
    Hd, Gd = synthesis_matrix(fb.h_dual), synthesis_matrix(fb.g_dual)
    D = np.diag(((n_lo + np.arange(N)) % 2 == 0).astype(float))
    P = np.zeros((s, T))
    P[np.arange(s), np.arange(s) - t_lo] = 1.0
    B = np.eye(s) - P @ (Hd @ D @ H + Gd @ D @ G)
    return ReconMatrix(B, s, tau(fb), H, G, Hd, Gd, D, P, n_lo, t_lo)


def save_B_csv(rm: ReconMatrix, path) -> None:
    np.savetxt(path, rm.B, delimiter=",")


# -- loss and gradient -------------------------------------------------------

def _bank(params) -> FilterBank:
    return params if isinstance(params, FilterBank) else assemble(params)


def _regularizer(h: Filter, lam: float) -> tuple[float, np.ndarray]:
    d = h.taps - h.taps[::-1]
    return float(lam * d @ d), 4.0 * lam * d


def loss(X, params, lam: float = 0.0) -> float:
    """Mean squared reconstruction error plus lam * ||h - flip(h)||^2."""
    X = _as_batch(X)
    fb = _bank(params)
    Xhat, _ = forward(X, fb)
    R = X - Xhat
    return float(np.einsum("ij,ij->", R, R) / X.shape[0]) + _regularizer(fb.h, lam)[0]


def loss_matrix(X, params, lam: float = 0.0) -> float:
    X = _as_batch(X)
    fb = _bank(params)
    BX = build_B(fb, X.shape[1]).B @ X.T
    return float(np.sum(BX * BX) / X.shape[0]) + _regularizer(fb.h, lam)[0]


def filter_grads(X, fb: FilterBank, lam: float = 0.0) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and its gradient with respect to the taps of each of the four filters."""
    X = _as_batch(X)
    _check_length(X.shape[1], fb)
    m = X.shape[0]
    low = _Channel(X, fb.h, fb.h_dual)
    high = _Channel(X, fb.g, fb.g_dual)
    R = X - low.Y - high.Y
    reg, dreg = _regularizer(fb.h, lam)
    value = float(np.einsum("ij,ij->", R, R) / m) + reg
    E = (-2.0 / m) * R
    dh, dhd = low.backward(E)
    dg, dgd = high.backward(E)
    return value, {"h": dh + dreg, "g": dg, "h_dual": dhd, "g_dual": dgd}


# -- polyphase statistics path (used for training) --------------------------

class PolyphaseLoss:
    """Loss and tap gradients from fixed second-order statistics of a dataset.

    The reconstruction operator is two-periodic and banded: row ``t`` of B holds the
    residual response ``b_{t mod 2}[t - j]``. The loss is therefore the quadratic form
    ``sum_par b_par^T K_par b_par`` with ``K`` accumulated once from the data, so each
    evaluation costs O(tau^2) regardless of the dataset size. The residual taps are
    formed directly (never as ``1 - something``), which keeps losses near 1e-30 exact.
    """

    def __init__(self, X, template: FilterBank):
        X = _as_batch(X)
        _check_length(X.shape[1], template)
        m, s = X.shape
        self.shape = X.shape
        self.supports = [(f.offset, f.len) for f in (template.h, template.g,
                                                      template.h_dual, template.g_dual)]
        pairs = [(template.h_dual, template.h), (template.g_dual, template.g)]
        self.d_lo = min(0, *(fs.offset - (fa.offset + fa.len - 1) for fs, fa in pairs))
        d_hi = max(0, *(fs.offset + fs.len - 1 - fa.offset for fs, fa in pairs))
        width = d_hi - self.d_lo + 1
        self.width = width

        # lag window V[:, t, i] = x[t - (d_lo + i)]
        Xp = np.pad(X, ((0, 0), (d_hi, max(0, -self.d_lo))))
        V = sliding_window_view(Xp, width, axis=1)[:, :s, ::-1]
        self.K = np.stack([
            np.einsum("mti,mtj->ij", V[:, par::2], V[:, par::2]) / m for par in (0, 1)
        ])

        # scatter index of each (synthesis tap, analysis tap) product into b
        self.index = []
        for fs, fa in pairs:
            k = fs.offset + np.arange(fs.len)[:, None]
            j = fa.offset + np.arange(fa.len)[None, :]
            self.index.append(((k % 2) * width + (k - j - self.d_lo)).ravel())
        self.identity = np.zeros(2 * width)
        self.identity[[-self.d_lo, width - self.d_lo]] = 1.0

    def _check(self, fb: FilterBank):
        got = [(f.offset, f.len) for f in (fb.h, fb.g, fb.h_dual, fb.g_dual)]
        if got != self.supports:
            raise DimensionError("filter supports differ from those the statistics were built for")

    def residual_taps(self, fb: FilterBank) -> np.ndarray:
        """(2, width) array; row par holds b_par[d] for d = d_lo .. d_lo + width - 1."""
        self._check(fb)
        b = self.identity.copy()
        for idx, (fs, fa) in zip(self.index, ((fb.h_dual, fb.h), (fb.g_dual, fb.g))):
            b -= np.bincount(idx, np.outer(fs.taps, fa.taps).ravel(), minlength=b.size)
        return b.reshape(2, self.width)

    def value(self, fb: FilterBank, lam: float = 0.0) -> float:
        b = self.residual_taps(fb)
        return float(np.einsum("pi,pij,pj->", b, self.K, b)) + _regularizer(fb.h, lam)[0]

    def value_and_grads(self, fb: FilterBank, lam: float = 0.0):
        b = self.residual_taps(fb)
        Kb = np.einsum("pij,pj->pi", self.K, b)
        reg, dreg = _regularizer(fb.h, lam)
        value = float(np.einsum("pi,pi->", b, Kb)) + reg
        gb = (-2.0 * Kb).ravel()
        out = {}
        for idx, (ns, na), (fs, fa) in zip(self.index, (("h_dual", "h"), ("g_dual", "g")),
                                           ((fb.h_dual, fb.h), (fb.g_dual, fb.g))):
            dM = gb[idx].reshape(fs.len, fa.len)
            out[ns] = dM @ fa.taps
            out[na] = dM.T @ fs.taps
        out["h"] = out["h"] + dreg
        return value, out


def _alt_flip_adjoint(f: Filter, pivot: int, grad_out: np.ndarray, scale: float) -> np.ndarray:
    signs = alt_flip(Filter(np.ones(f.len), f.offset), pivot).taps
    return scale * (signs * grad_out)[::-1]


def grad_loss(X, params: ParamSet, lam: float = 0.0, with_value: bool = False):
    """Exact gradient of ``loss`` with respect to each learnable vector of ``params``.

    ``X`` may be a dataset or a prebuilt ``PolyphaseLoss`` (the fast path for training).
    """
    fb = assemble(params)
    if isinstance(X, PolyphaseLoss):
        value, d = X.value_and_grads(fb, lam)
    else:
        value, d = filter_grads(X, fb, lam)
    grads = learnable_grads(params, fb, d)
    return (value, grads) if with_value else grads


def learnable_grads(params: ParamSet, fb: FilterBank, d: dict) -> dict:
    """Pull per-filter tap gradients back through ``assemble``."""
    if params.kind is Kind.UNCONSTRAINED:
        return {k: d[k].copy() for k in ("h", "g", "h_dual", "g_dual")}

    pivot = flip_pivot(fb.h.len, fb.h.offset)
    dh = d["h"] + _alt_flip_adjoint(fb.h, pivot, d["g_dual"], 1.0 / params.a)
    dhd = d["h_dual"] + _alt_flip_adjoint(fb.h_dual, pivot, d["g"], params.a)
    grads = {}
    if params.kind is Kind.ORTHOGONAL:
        dh = dh + dhd
    elif params.fixed_synthesis is None:
        dl = np.correlate(dhd, bspline(params.p_dual).taps, mode="valid")
        grads["ell_dual"] = _symmetric_adjoint(dl, params.symmetric)
    dl = np.correlate(dh, bspline(params.p).taps, mode="valid")
    grads["ell"] = _symmetric_adjoint(dl, params.symmetric)
    return grads


def _symmetric_adjoint(g: np.ndarray, symmetric: bool) -> np.ndarray:
    return symmetric_basis(g.size).T @ g if symmetric else g


__all__ = [
    "CoeffPair", "ReconMatrix", "DimensionError", "pad_align", "forward", "build_B",
    "loss", "loss_matrix", "grad_loss", "filter_grads", "learnable_grads", "save_B_csv",
    "tau", "PolyphaseLoss",
]
