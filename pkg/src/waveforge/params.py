"""Learnable parameter sets and their assembly into a two-channel filterbank.

Three families are supported:

* ``unconstrained``: four raw filters ``h, g~`` (length ``l``) and ``h~, g`` (length ``l~``).
* ``biorthogonal``: ``h = beta_p * ell`` and ``h~ = beta_p~ * ell~``; the highpass
  filters follow from the alternating-flip relations.
* ``orthogonal``: as biorthogonal with ``h~ = h``.

When the two lowpass filters differ in length, the shorter one is shifted right by
``floor(|l - l~| / 2)`` samples so that both are centred on a common origin. This is
the zero-padding alignment of the reconstruction-matrix construction expressed as an
offset; without it, odd-length symmetric pairs (5/3, 9/7) cannot satisfy PR-1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .signal import Filter, alt_flip, bspline, convolve


class Kind(str, enum.Enum):
    UNCONSTRAINED = "unconstrained"
    BIORTHOGONAL = "biorthogonal"
    ORTHOGONAL = "orthogonal"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FilterBank:
    h: Filter
    g: Filter
    h_dual: Filter
    g_dual: Filter

    def filters(self) -> dict[str, Filter]:
        return {"h": self.h, "g": self.g, "h_dual": self.h_dual, "g_dual": self.g_dual}

    def to_json(self) -> dict:
        return {k: f.to_json() for k, f in self.filters().items()}

    @classmethod
    def from_json(cls, obj: dict) -> "FilterBank":
        return cls(*(Filter.from_json(obj[k]) for k in ("h", "g", "h_dual", "g_dual")))


def symmetric_basis(n: int) -> np.ndarray:
    """n x ceil(n/2) 0/1 matrix whose range is the palindromic length-n vectors."""
    if n < 1:
        raise ValueError("symmetric_basis needs n >= 1")
    S = np.zeros((n, (n + 1) // 2))
    for i in range(n):
        S[i, min(i, n - 1 - i)] = 1.0
    return S


@dataclass(frozen=True, eq=False)
class ParamSet:
    kind: Kind
    l: int
    l_dual: int | None = None
    p: int = 0
    p_dual: int = 0
    symmetric: bool = False
    learnables: dict[str, np.ndarray] = field(default_factory=dict)
    fixed_synthesis: Filter | None = None
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.ORTHOGONAL:
            object.__setattr__(self, "l_dual", self.l)
            object.__setattr__(self, "p_dual", self.p)
        elif self.l_dual is None:
            object.__setattr__(self, "l_dual", self.l)
        if self.fixed_synthesis is not None:
            object.__setattr__(self, "l_dual", self.fixed_synthesis.len)
        self._validate()
        object.__setattr__(
            self, "learnables",
            {k: np.array(v, dtype=float).reshape(-1) for k, v in self.learnables.items()},
        )
        shapes = self.learnable_shapes()
        if set(self.learnables) != set(shapes):
            raise ConfigurationError(
                f"learnables {sorted(self.learnables)} do not match expected {sorted(shapes)}"
            )
        for name, n in shapes.items():
            if self.learnables[name].size != n:
                raise ConfigurationError(
                    f"learnable '{name}' has length {self.learnables[name].size}, expected {n}"
                )

    def _validate(self):
        if self.l < 1 or self.l_dual < 1:
            raise ConfigurationError("filter lengths must be positive")
        if self.p < 0 or self.p_dual < 0:
            raise ConfigurationError("vanishing moment counts must be >= 0")
        if self.a == 0:
            raise ConfigurationError("biorthogonal scale a must be nonzero")
        if self.kind is Kind.UNCONSTRAINED:
            if self.p or self.p_dual or self.symmetric or self.fixed_synthesis is not None:
                raise ConfigurationError("unconstrained sets take no moments, symmetry or pinning")
            return
        if self.l <= self.p:
            raise ConfigurationError(f"l={self.l} must exceed p={self.p}")
        if self.fixed_synthesis is None and self.l_dual <= self.p_dual:
            raise ConfigurationError(f"l_dual={self.l_dual} must exceed p_dual={self.p_dual}")
        if self.kind is Kind.ORTHOGONAL:
            if self.fixed_synthesis is not None:
                raise ConfigurationError("orthogonal sets cannot pin the synthesis filter")
            if self.l < 2 * self.p:
                raise ConfigurationError(f"orthogonal design needs l >= 2p (l={self.l}, p={self.p})")

    # -- shapes -------------------------------------------------------------
    def learnable_shapes(self) -> dict[str, int]:
        if self.kind is Kind.UNCONSTRAINED:
            return {"h": self.l, "g_dual": self.l, "h_dual": self.l_dual, "g": self.l_dual}

        def width(n):
            return math.ceil(n / 2) if self.symmetric else n

        shapes = {"ell": width(self.l - self.p)}
        if self.kind is Kind.BIORTHOGONAL and self.fixed_synthesis is None:
            shapes["ell_dual"] = width(self.l_dual - self.p_dual)
        return shapes

    def with_learnables(self, learnables: dict[str, np.ndarray]) -> "ParamSet":
        return replace(self, learnables={k: np.array(v, dtype=float) for k, v in learnables.items()})

    @classmethod
    def random(cls, kind, l, *, rng, l_dual=None, p=0, p_dual=0, symmetric=False,
               fixed_synthesis=None, a=1.0) -> "ParamSet":
        """Draw every learnable entry i.i.d. N(0, 1)."""
        stub = cls(kind, l, l_dual, p, p_dual, symmetric,
                   _zero_learnables(kind, l, l_dual, p, p_dual, symmetric, fixed_synthesis),
                   fixed_synthesis, a)
        return stub.with_learnables(
            {k: rng.standard_normal(n) for k, n in stub.learnable_shapes().items()}
        )

    # -- serialisation ------------------------------------------------------
    def to_json(self) -> dict:
        out = {
            "kind": self.kind.value, "l": self.l, "l_dual": self.l_dual,
            "p": self.p, "p_dual": self.p_dual, "symmetric": self.symmetric,
            "learnables": {k: v.tolist() for k, v in self.learnables.items()},
            "a": self.a,
        }
        if self.fixed_synthesis is not None:
            out["fixed_synthesis"] = self.fixed_synthesis.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ParamSet":
        fixed = obj.get("fixed_synthesis")
        return cls(
            kind=obj["kind"], l=int(obj["l"]), l_dual=obj.get("l_dual"),
            p=int(obj.get("p", 0)), p_dual=int(obj.get("p_dual", 0)),
            symmetric=bool(obj.get("symmetric", False)),
            learnables=obj.get("learnables", {}),
            fixed_synthesis=Filter.from_json(fixed) if fixed is not None else None,
            a=float(obj.get("a", 1.0)),
        )


def _zero_learnables(kind, l, l_dual, p, p_dual, symmetric, fixed_synthesis):
    kind = Kind(kind)
    if fixed_synthesis is not None:
        l_dual = fixed_synthesis.len
    elif l_dual is None or kind is Kind.ORTHOGONAL:
        l_dual = l
    if kind is Kind.UNCONSTRAINED:
        return {"h": np.zeros(l), "g_dual": np.zeros(l), "h_dual": np.zeros(l_dual), "g": np.zeros(l_dual)}

    def width(n):
        return math.ceil(n / 2) if symmetric else n

    out = {"ell": np.zeros(max(width(l - p), 0))}
    if kind is Kind.BIORTHOGONAL and fixed_synthesis is None:
        out["ell_dual"] = np.zeros(max(width(l_dual - p_dual), 0))
    return out


def alignment_offsets(l: int, l_dual: int) -> tuple[int, int]:
    """Offsets of (h, h~) that centre the shorter lowpass filter on the longer one."""
    if l >= l_dual:
        return 0, (l - l_dual) // 2
    return (l_dual - l) // 2, 0


def flip_pivot(l: int, offset_h: int = 0) -> int:
    """Odd pivot for the alternating flips that keeps g~ on (or next to) h's support.

    Any odd pivot cancels aliasing; moving g and g~ by the same even shift leaves the
    filterbank operator unchanged. This choice makes the orthogonal bank's matrices
    have exactly the (s + tau - 1) / (s + 2 tau - 2) shapes.
    """
    pivot = 2 * offset_h + l - 1
    return pivot if pivot % 2 else pivot - 1


def expand_symmetric(v: np.ndarray, n: int, symmetric: bool) -> np.ndarray:
    return symmetric_basis(n) @ v if symmetric else np.asarray(v, dtype=float)


def assemble(params: ParamSet) -> FilterBank:
    off_h, off_hd = alignment_offsets(params.l, params.l_dual)
    L = params.learnables
    if params.kind is Kind.UNCONSTRAINED:
        h = Filter(L["h"], off_h)
        h_dual = Filter(L["h_dual"], off_hd)
        # highpass filters sit where the alternating-flip relations would put them
        pivot = flip_pivot(params.l, off_h)
        g = Filter(L["g"], alt_flip(h_dual, pivot).offset)
        g_dual = Filter(L["g_dual"], alt_flip(h, pivot).offset)
        return FilterBank(h, g, h_dual, g_dual)

    ell = expand_symmetric(L["ell"], params.l - params.p, params.symmetric)
    h = convolve(bspline(params.p), Filter(ell)).shifted(off_h)
    if params.kind is Kind.ORTHOGONAL:
        h_dual = h
    elif params.fixed_synthesis is not None:
        h_dual = Filter(params.fixed_synthesis.taps, off_hd)
    else:
        ell_d = expand_symmetric(L["ell_dual"], params.l_dual - params.p_dual, params.symmetric)
        h_dual = convolve(bspline(params.p_dual), Filter(ell_d)).shifted(off_hd)
    if h.len != params.l or h_dual.len != params.l_dual:
        raise ConfigurationError(
            f"assembled lengths ({h.len}, {h_dual.len}) differ from declared ({params.l}, {params.l_dual})"
        )
    pivot = flip_pivot(params.l, off_h)
    g = alt_flip(h_dual, pivot).scaled(params.a)
    g_dual = alt_flip(h, pivot).scaled(1.0 / params.a)
    return FilterBank(h, g, h_dual, g_dual)


def normalize_bank(fb: FilterBank, a: float = 1.0) -> FilterBank:
    """Rescale h to sum sqrt(2) and h~ inversely; rebuild g, g~ from the flips.

    Only meaningful after convergence; PR is preserved because the product of the two
    lowpass scales is one.
    """
    c = math.sqrt(2.0) / fb.h.taps.sum()
    h = fb.h.scaled(c)
    h_dual = fb.h_dual.scaled(1.0 / c)
    pivot = flip_pivot(h.len, h.offset)
    return FilterBank(h, alt_flip(h_dual, pivot).scaled(a), h_dual, alt_flip(h, pivot).scaled(1.0 / a))


def regularized_loss_term(h: Filter, lam: float) -> float:
    """lam * ||h - reverse(h)||^2 (symmetry about the tap-array midpoint)."""
    if lam == 0:
        return 0.0
    d = h.taps - h.taps[::-1]
    return float(lam * d @ d)


def lambda_schedule(iteration: int, lambda0: float, decay: float = 10.0,
                    period: int = 1000, cutoff: int = 5000) -> float:
    if iteration >= cutoff:
        return 0.0
    return lambda0 / decay ** (iteration // period)
