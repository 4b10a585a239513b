"""Scaling and wavelet functions from filters, moments, and root-level factorization tools."""
from __future__ import annotations

import csv
import enum
import itertools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .signal import Filter, bspline, convolve, deflate_binomial

SQRT2 = math.sqrt(2.0)


class FunctionKind(str, enum.Enum):
    SCALING = "scaling"
    WAVELET = "wavelet"
    DUAL_SCALING = "dual_scaling"
    DUAL_WAVELET = "dual_wavelet"


@dataclass(frozen=True)
class FunctionSamples:
    """Samples on the grid t_min + k 2^-level, k = 0 .. (t_max - t_min) 2^level."""

    values: np.ndarray
    level: int
    support: tuple[float, float]
    kind: FunctionKind
    diagnostics: tuple[float, ...] = ()  # per-level sup change of the cascade
    energies: tuple[float, ...] = ()  # per-level sum(a^2) 2^-j, tends to ||phi||^2
    diverged: bool = False

    def __post_init__(self):
        n = round((self.support[1] - self.support[0]) * 2**self.level) + 1
        if self.values.size != n:
            raise ValueError(f"{self.values.size} samples do not fit support {self.support}")

    @property
    def t(self) -> np.ndarray:
        return self.support[0] + np.arange(self.values.size) / 2**self.level

    @property
    def step(self) -> float:
        return 2.0 ** -self.level

    def integral(self) -> float:
        return float(self.values.sum() * self.step)

    def __call__(self, t) -> np.ndarray:
        """Nearest-grid evaluation, zero outside the support."""
        t = np.asarray(t, dtype=float)
        k = np.rint((t - self.support[0]) * 2**self.level).astype(int)
        ok = (k >= 0) & (k < self.values.size)
        out = np.zeros(t.shape)
        out[ok] = self.values[k[ok]]
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            w.writerows(zip(self.t.tolist(), self.values.tolist()))


def cascade_scaling(h: Filter, J: int = 8, dual: bool = False) -> FunctionSamples:
    """Iterate a <- sqrt(2) (upsample2(a) * h) from a delta, J times.

    Sample k approximates phi(k 2^-J) to O(2^-J): the delta start lags the limit
    by up to one grid step, and consecutive levels satisfy the two-scale relation exactly.
    """
    if abs(h.taps.sum() - SQRT2) >= 1e-6:
        raise ValueError(f"cascade needs h^(0) = sqrt(2), got {h.taps.sum():.10g}")
    if J < 1:
        raise ValueError("J must be >= 1")
    a = np.array([1.0])
    diags, energies = [], [1.0]
    for j in range(1, J + 1):
        up = np.zeros(2 * a.size - 1)
        up[::2] = a
        nxt = SQRT2 * np.convolve(up, h.taps)
        # the previous level sits on the even samples of the new grid
        diags.append(float(np.max(np.abs(nxt[: 2 * a.size - 1: 2] - a))))
        a = nxt
        energies.append(float(a @ a) / 2**j)
    total = (h.len - 1) * 2**J + 1
    values = np.zeros(total)
    values[: a.size] = a
    kind = FunctionKind.DUAL_SCALING if dual else FunctionKind.SCALING
    return FunctionSamples(values, J, (float(h.offset), float(h.offset + h.len - 1)), kind,
                           tuple(diags), tuple(energies), _diverging(energies, a))


def _diverging(energies: list[float], a: np.ndarray) -> bool:
    """Energy that keeps growing by non-shrinking steps means no L2 limit."""
    if not np.all(np.isfinite(a)):
        return True
    if len(energies) < 4:
        return False
    steps = np.diff(energies[-4:])
    return bool(np.all(steps > 0) and steps[2] >= steps[1] >= steps[0])


def cascade_wavelet(g: Filter, phi: FunctionSamples) -> FunctionSamples:
    """psi(t) = sqrt(2) sum_n g[n] phi(2t - n) on phi's grid."""
    if phi.kind not in (FunctionKind.SCALING, FunctionKind.DUAL_SCALING):
        raise ValueError("cascade_wavelet needs scaling-function samples")
    J = phi.level
    scale = 2**J
    if abs(phi.support[0] * scale - round(phi.support[0] * scale)) > 1e-9:
        raise ValueError("scaling support is not on the dyadic grid")
    lo = (phi.support[0] + g.offset) / 2
    hi = (phi.support[1] + g.offset + g.len - 1) / 2
    n = round((hi - lo) * scale) + 1
    k = np.arange(n)
    out = np.zeros(n)
    for i, c in enumerate(g.taps):
        idx = 2 * k - i * scale
        ok = (idx >= 0) & (idx < phi.values.size)
        out[ok] += c * phi.values[idx[ok]]
    kind = FunctionKind.WAVELET if phi.kind is FunctionKind.SCALING else FunctionKind.DUAL_WAVELET
    return FunctionSamples(SQRT2 * out, J, (lo, hi), kind)


@dataclass(frozen=True)
class MomentReport:
    moments: np.ndarray
    thresholds: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.moments) < self.thresholds))


def moment_test(psi: FunctionSamples, p: int, rtol: float = 1e-6) -> MomentReport:
    """Riemann-sum moments about the support centre for orders 0..p-1.

    Moment k passes when it is below ``rtol`` times the absolute moment
    sum |t - c|^k |psi(t)| dt, which sets the natural scale of that order.
    """
    t = psi.t - 0.5 * (psi.support[0] + psi.support[1])
    k = np.arange(p)
    powers = t[None, :] ** k[:, None]
    moments = powers @ psi.values * psi.step
    scale = np.abs(powers) @ np.abs(psi.values) * psi.step
    return MomentReport(moments, rtol * scale)


# -- roots and factorizations ------------------------------------------------

class RootError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    leading: float

    def coefficients(self) -> np.ndarray:
        return self.leading * np.real_if_close(np.poly(self.roots), tol=1e6)

    def to_json(self) -> dict:
        return {"roots": [[float(z.real), float(z.imag)] for z in self.roots], "leading": self.leading}

    @classmethod
    def from_json(cls, obj) -> "RootSet":
        return cls(np.array([complex(re, im) for re, im in obj["roots"]]), float(obj["leading"]))


def poly_roots(coeffs) -> RootSet:
    """Roots of sum_k c_k z^-k via the eigenvalues of the companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size == 0:
        raise ValueError("polynomial is identically zero")
    # trailing zeros are roots at z = 0
    n_zero = c.size - np.trim_zeros(c, "b").size
    c_core = np.trim_zeros(c, "b")
    deg = c_core.size - 1
    if deg == 0:
        roots = np.zeros(0, dtype=complex)
    else:
        C = np.zeros((deg, deg))
        C[0, :] = -c_core[1:] / c_core[0]
        C[1:, :-1] = np.eye(deg - 1)
        roots = np.linalg.eigvals(C).astype(complex)
    roots = np.concatenate([roots, np.zeros(n_zero, dtype=complex)])
    rs = RootSet(roots, float(c[0]))
    back = rs.coefficients()
    err = np.max(np.abs(back - c)) / np.max(np.abs(c))
    if not np.iscomplexobj(back) and err > 1e-8:
        raise RootError(f"root reconstruction residual {err:.3g}")
    return rs


def deflate(h: Filter, p: int) -> Filter:
    """Remove p binomial factors (1 + z^-1)/2 from h, requiring exact division."""
    tol = 1e-6 * np.linalg.norm(h.taps)
    f = h
    for i in range(p):
        f, rem = deflate_binomial(f)
        if abs(rem) > tol:
            raise ValueError(f"h has fewer than {p} zeros at pi (remainder {rem:.3g} at step {i + 1})")
    return f


def min_phase_flip(h: Filter, p: int) -> Filter:
    """Move every root of h's non-binomial factor inside the unit disk."""
    ell = deflate(h, p)
    rs = poly_roots(ell.taps)
    roots = rs.roots.copy()
    on_circle = np.abs(np.abs(roots) - 1) < 1e-8
    if np.any(on_circle):
        warnings.warn("roots on the unit circle left in place", RuntimeWarning, stacklevel=2)
    outside = (np.abs(roots) > 1) & ~on_circle
    roots[outside] = 1.0 / roots[outside]
    coeffs = np.real_if_close(np.poly(roots), tol=1e6)
    if np.iscomplexobj(coeffs):
        raise RootError("flipped factor is not real")
    out = convolve(bspline(p), Filter(coeffs, h.offset))
    return out.scaled(SQRT2 / out.taps.sum())


@dataclass(frozen=True)
class FactorizationLabel:
    name: str
    inverted: tuple[int, ...]  # indices of the inverted root groups
    distance: float

    @property
    def classified(self) -> bool:
        return self.name != "unclassified"


def _root_groups(roots: np.ndarray) -> list[list[int]]:
    """Indices grouped as single real roots or conjugate pairs."""
    used, groups = set(), []
    for i, r in enumerate(roots):
        if i in used:
            continue
        used.add(i)
        if abs(r.imag) < 1e-9:
            groups.append([i])
            continue
        j = min((j for j in range(len(roots)) if j not in used),
                key=lambda j: abs(roots[j] - np.conj(r)))
        used.add(j)
        groups.append([i, j])
    return groups


def _asymmetry(roots: np.ndarray, p: int) -> float:
    taps = np.convolve(bspline(p).taps, np.real(np.poly(roots)))
    taps = taps / taps.sum()
    return float(np.sum((taps - taps[::-1]) ** 2))


def factorization_variants(oracle_roots: RootSet, p: int) -> dict[tuple[int, ...], str]:
    """Names for every selective inversion of the root groups.

    Inverting nothing is the minimum-phase filter and inverting everything its time
    reverse. Among the mixed choices, the ones with the least asymmetric filter form the
    Symmlet class; the member with fewer inverted roots is called ``symmlet``.
    """
    roots = np.asarray(oracle_roots.roots)
    groups = _root_groups(roots)
    g = len(groups)
    combos = [c for r in range(g + 1) for c in itertools.combinations(range(g), r)]
    names = {(): "min-phase", tuple(range(g)): "max-phase"}
    mixed = [c for c in combos if c not in names]
    if mixed:
        asym = {c: _asymmetry(_invert(roots, groups, c), p) for c in mixed}
        best = min(asym.values())
        sym = sorted((c for c in mixed if asym[c] <= best * (1 + 1e-9) + 1e-15),
                     key=lambda c: (sum(len(groups[i]) for i in c), c))
        for rank, c in enumerate(sym):
            names[c] = "symmlet" if rank == 0 else ("symmlet-reversed" if rank == 1 else f"symmlet-{rank}")
        for c in mixed:
            names.setdefault(c, "mixed-" + "-".join(map(str, c)))
    return names


def _invert(roots, groups, combo) -> np.ndarray:
    out = roots.astype(complex).copy()
    for gi in combo:
        out[groups[gi]] = 1.0 / out[groups[gi]]
    return out


def classify_factorization(h: Filter, p: int, oracle_roots: RootSet, tol: float = 1e-3
                           ) -> FactorizationLabel:
    """Which selective root inversion of the oracle factor h corresponds to."""
    roots = poly_roots(deflate(h, p).taps).roots
    ref = np.asarray(oracle_roots.roots)
    groups = _root_groups(ref)
    best = FactorizationLabel("unclassified", (), math.inf)
    if roots.size != ref.size:
        return best
    for combo, name in factorization_variants(oracle_roots, p).items():
        target = _invert(ref, groups, combo)
        if roots.size == 0:
            return FactorizationLabel(name, combo, 0.0)
        cost = np.abs(roots[:, None] - target[None, :])
        r, c = linear_sum_assignment(cost)
        d = float(cost[r, c].max())
        if d < best.distance:
            best = FactorizationLabel(name, combo, d)
    if best.distance > tol:
        return FactorizationLabel("unclassified", (), best.distance)
    return best


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_json(), fh, indent=2)
