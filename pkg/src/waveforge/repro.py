"""Pinned-seed reproduction scenarios for the learned wavelet families.

Each scenario trains (or evaluates) what it needs, then returns a list of named
checks. ``run_suite`` runs any subset, optionally in worker processes, and
``summary_markdown`` turns the results into a table.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, oracle, wavelets
from .autoencoder import build_B, grad_loss, loss, loss_matrix
from .params import FilterBank, Kind, ParamSet, assemble, regularized_loss_term
from .signal import Filter
from .trainer import TrainConfig, TrainState, gaussian_dataset, train


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioResult:
    name: str
    criterion: int
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, label: str) -> Check:
        for c in self.checks:
            if c.label == label:
                return c
        raise KeyError(label)

    def add(self, label: str, passed, detail: str = "") -> None:
        self.checks.append(Check(label, bool(passed), detail))

    def to_json(self) -> dict:
        return {
            "name": self.name, "criterion": self.criterion, "passed": self.passed,
            "seconds": round(self.seconds, 2),
            "checks": [c.__dict__ for c in self.checks],
            "data": self.data,
        }


# -- helpers -----------------------------------------------------------------

# Optimiser settings shared by every scenario. The relative stopping threshold is
# read as a percentage (1e-5 % = 1e-7): at 1e-5 the slow plateaus of the length-8
# orthogonal landscape trigger the stop long before the loss floor.
PROTOCOL = {"eta0": 1e-2, "delta": 1e-7}


def seeded_run(kind, seed: int, *, config: dict | None = None, **param_kw
               ) -> tuple[TrainState, FilterBank]:
    """Train from an N(0,1) initialisation drawn with ``seed`` on the dataset of ``seed``."""
    params = ParamSet.random(kind, rng=np.random.default_rng(seed), **param_kw)
    return train(TrainConfig(seed=seed, **{**PROTOCOL, **(config or {})}), params)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.3g}"


def _linf(a: Filter, b: Filter) -> float:
    if a.len != b.len:
        return math.inf
    return float(np.max(np.abs(a.taps - b.taps)))


def _run_summary(state: TrainState) -> dict:
    return {"stop": state.stop_reason.value, "iterations": len(state.loss_history),
            "best_loss": state.best_loss, "backoffs": state.backoffs}


# -- scenarios ---------------------------------------------------------------

def pr_learning(seed_shift: int = 0) -> ScenarioResult:
    """All three parameterisations at l = 8 learn PR filterbanks; constraints speed it up."""
    res = ScenarioResult("pr-learning", 1)
    budget = 40_000
    cfg = {"epsilon": 1e-30, "max_iters": budget}
    epochs: dict[str, list[int]] = {}
    for kind in Kind:
        epochs[kind.value] = []
        reached = []
        for seed in range(seed_shift, seed_shift + 3):
            state, fb = seeded_run(kind, seed, config=cfg, l=8)
            # a run that never converged is charged the full budget
            epochs[kind.value].append(len(state.loss_history) if state.converged else budget)
            if state.converged:
                rep = metrics.pr_report(fb)
                reached.append({"seed": seed, "srer_db": rep.srer_db, "delta_pr": rep.delta_pr,
                                **_run_summary(state)})
        res.data[kind.value] = reached
        ok = bool(reached) and all(r["srer_db"] > 200 and r["delta_pr"] < 1e-15 for r in reached)
        detail = ", ".join(f"seed {r['seed']}: {_fmt(r['srer_db'])} dB, dpr {_fmt(r['delta_pr'])}"
                           for r in reached) or "no seed converged"
        res.add(f"{kind.value} PR", ok, detail)
    res.data["epochs"] = epochs
    mean = {k: float(np.mean(v)) for k, v in epochs.items()}
    res.add("constrained faster", max(mean["biorthogonal"], mean["orthogonal"]) < mean["unconstrained"],
            ", ".join(f"{k} {v:.0f}" for k, v in mean.items()))
    return res


def db2_recovery(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("db2-recovery", 2)
    state, fb = seeded_run(Kind.ORTHOGONAL, seed_shift, config={"epsilon": 1e-30}, l=4, p=2)
    learned = wavelets.min_phase_flip(fb.h, 2)
    gap = _linf(learned, oracle.daubechies_filter(2))
    res.data = {**_run_summary(state), "h": learned.taps.tolist(), "linf": gap}
    res.add("matches db2", gap < 1e-4, f"linf {_fmt(gap)}")
    return res


DB4_CONFIG = {"epsilon": 1e-20, "max_iters": 60_000}


def four_factorizations(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("four-factorizations", 3)
    roots = wavelets.RootSet(oracle.daubechies_ell_roots(4), 1.0)
    labels = []
    for seed in range(seed_shift, seed_shift + 10):
        state, fb = seeded_run(Kind.ORTHOGONAL, seed, config=DB4_CONFIG, l=8, p=4)
        label = wavelets.classify_factorization(fb.h, 4, roots)
        labels.append(label.name)
        res.data[str(seed)] = {**_run_summary(state), "label": label.name, "distance": label.distance}
    classified = [x for x in labels if x != "unclassified"]
    res.add("every run classified", len(classified) == len(labels), " ".join(labels))
    res.add("at least two classes", len(set(classified)) >= 2, f"{len(set(classified))} distinct")
    return res


def _two_tap_form(h: Filter, tol: float = 1e-6) -> tuple[bool, str]:
    big = np.flatnonzero(np.abs(h.taps) > tol)
    if big.size != 2 or big[0] + big[1] != h.len - 1:
        return False, f"significant taps at {big.tolist()}"
    prod = float(h.taps[big[0]] * h.taps[big[1]])
    return abs(prod - 0.5) < tol, f"taps {big.tolist()}, ab = {prod:.9f}"


def symmetric_impossibility(seed_shift: int = 0) -> ScenarioResult:
    """Symmetric orthogonal designs at l = 8: PR only with a single vanishing moment."""
    res = ScenarioResult("symmetric-impossibility", 4)
    # p = 1: scan seeds for the first run that reaches the loss floor. Several
    # initialisations fall into a degenerate basin around the centred Haar filter
    # where progress is sublinear, so a bounded budget per seed is used.
    found = None
    for seed in range(seed_shift, seed_shift + 10):
        state, fb = seeded_run(Kind.ORTHOGONAL, seed, config={"epsilon": 1e-30, "max_iters": 10_000},
                               l=8, p=1, symmetric=True)
        if state.best_loss < 1e-15:
            found = (seed, state, fb)
            break
    if found is None:
        res.add("p=1 shifted Haar", False, "no seed reached loss < 1e-15")
    else:
        seed, state, fb = found
        ok, detail = _two_tap_form(fb.h)
        res.data["p1"] = {"seed": seed, **_run_summary(state), "h": fb.h.taps.tolist()}
        res.add("p=1 shifted Haar", ok, f"seed {seed}, loss {_fmt(state.best_loss)}, {detail}")
    for p, bound in ((2, 60.0), (3, 20.0)):
        state, fb = seeded_run(Kind.ORTHOGONAL, seed_shift, config={"epsilon": 1e-30},
                               l=8, p=p, symmetric=True)
        db = metrics.srer(fb)
        res.data[f"p{p}"] = {**_run_summary(state), "srer_db": db, "h": fb.h.taps.tolist()}
        res.add(f"p={p} below {bound:.0f} dB", db < bound, f"SRER {db:.2f} dB")
    return res


def symmlet(seed_shift: int = 0) -> ScenarioResult:
    """Symmetry-regularised run started from the initialisation that gave db4."""
    res = ScenarioResult("symmlet", 5)
    roots = wavelets.RootSet(oracle.daubechies_ell_roots(4), 1.0)
    start = None
    for seed in range(seed_shift, seed_shift + 10):
        _, fb = seeded_run(Kind.ORTHOGONAL, seed, config=DB4_CONFIG, l=8, p=4)
        if wavelets.classify_factorization(fb.h, 4, roots).name in ("min-phase", "max-phase"):
            start = seed
            break
    if start is None:
        res.add("db4 start found", False, "no seed in range produced db4 or its reversal")
        return res
    state, fb = seeded_run(Kind.ORTHOGONAL, start,
                           config={"epsilon": 1e-30, "max_iters": 60_000, "lambda0": 1e4}, l=8, p=4)
    label = wavelets.classify_factorization(fb.h, 4, roots)
    asym = regularized_loss_term(fb.h, 1.0)
    asym_db4 = regularized_loss_term(oracle.daubechies_filter(4), 1.0)
    res.data = {"start_seed": start, **_run_summary(state), "label": label.name,
                "asymmetry": asym, "asymmetry_db4": asym_db4, "h": fb.h.taps.tolist()}
    res.add("loss below 1e-15", state.best_loss < 1e-15, f"seed {start}, loss {_fmt(state.best_loss)}")
    res.add("more symmetric than db4", asym < asym_db4, f"{asym:.4f} vs {asym_db4:.4f}")
    res.add("symmlet class", label.name in ("symmlet", "symmlet-reversed"), label.name)
    return res


def cdf53(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("cdf53", 6)
    h_ref, hd_ref = oracle.cdf_spline_filter(2, 2)
    state, fb = seeded_run(Kind.BIORTHOGONAL, seed_shift, config={"epsilon": 1e-30},
                           l=5, p=2, p_dual=2, fixed_synthesis=hd_ref)
    gap = _linf(fb.h, h_ref)
    res.data = {**_run_summary(state), "h": fb.h.taps.tolist(), "linf": gap}
    res.add("matches CDF 5/3", gap < 1e-4, f"linf {_fmt(gap)}")
    res.add("lengths 2p+p~-1 and p~+1", (fb.h.len, fb.h_dual.len) == (2 * 2 + 2 - 1, 2 + 1),
            f"{fb.h.len}/{fb.h_dual.len}")
    return res


def cdf97(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("cdf97", 7)
    h_ref, hd_ref = oracle.cdf97_filters()
    cfg = {"epsilon": 1e-30, "max_iters": 60_000, "eta0": 3e-3}
    for seed in range(seed_shift, seed_shift + 3):
        state, fb = seeded_run(Kind.BIORTHOGONAL, seed, config=cfg,
                               l=9, l_dual=7, p=4, p_dual=4, symmetric=True)
        gap = max(_linf(fb.h, h_ref), _linf(fb.h_dual, hd_ref))
        res.data[str(seed)] = {**_run_summary(state), "linf": gap}
        res.add(f"seed {seed} matches CDF 9/7", gap < 1e-3, f"linf {_fmt(gap)}")
    return res


def lawton_screening(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("lawton-screening", 8)
    for name in oracle.FAMILIES:
        fb = oracle.family(name)
        res.add(f"{name} stable", metrics.lawton_check(fb.h, fb.h_dual)[2])
    found = None
    for seed in range(seed_shift, seed_shift + 5):
        state, fb = seeded_run(Kind.BIORTHOGONAL, seed, config={"epsilon": 1e-30},
                               l=5, l_dual=3, p=2, p_dual=1)
        if state.best_loss >= 1e-15:
            continue
        a, b, ok = metrics.lawton_check(fb.h, fb.h_dual)
        if not ok:
            found = (seed, fb, a, b)
            break
    if found is None:
        res.add("unstable PR bank found", False, "every PR solution in range was stable")
        return res
    seed, fb, a, b = found
    bad = [(f, r) for f, r in ((fb.h, a), (fb.h_dual, b)) if not r.stable]
    diverged = all(wavelets.cascade_scaling(f, 10).diverged for f, _ in bad)
    res.data = {"seed": seed, "srer_db": metrics.srer(fb), "h": fb.h.taps.tolist(),
                "h_dual": fb.h_dual.taps.tolist(),
                "outside_unit": [a.outside_unit, b.outside_unit]}
    res.add("unstable PR bank found", True, f"seed {seed}, outside-unit counts {a.outside_unit}/{b.outside_unit}")
    res.add("cascade flags divergence", diverged)
    return res


def _random_bank_params(rng) -> list[ParamSet]:
    return [
        ParamSet.random("unconstrained", 6, rng=rng, l_dual=4),
        ParamSet.random("biorthogonal", 7, rng=rng, l_dual=5, p=2, p_dual=1),
        ParamSet.random("biorthogonal", 9, rng=rng, l_dual=7, p=4, p_dual=4, symmetric=True),
        ParamSet.random("biorthogonal", 5, rng=rng, p=2, fixed_synthesis=Filter(np.array([0.5, 1.0, 0.5]))),
        ParamSet.random("orthogonal", 8, rng=rng, p=3),
        ParamSet.random("orthogonal", 8, rng=rng, p=2, symmetric=True),
    ]


def central_difference(X, params: ParamSet, lam: float = 0.0, step: float = 1e-6) -> dict:
    out = {}
    for name, theta in params.learnables.items():
        g = np.zeros_like(theta)
        for i in range(theta.size):
            plus, minus = theta.copy(), theta.copy()
            plus[i] += step
            minus[i] -= step
            lp = loss(X, params.with_learnables({**params.learnables, name: plus}), lam)
            lm = loss(X, params.with_learnables({**params.learnables, name: minus}), lam)
            g[i] = (lp - lm) / (2 * step)
        out[name] = g
    return out


def gradients(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("gradients", 9)
    rng = np.random.default_rng(900 + seed_shift)
    s = 32
    worst = 0.0
    for _ in range(100):
        params = ParamSet.random(list(Kind)[int(rng.integers(3))], 6, rng=rng)
        X = rng.standard_normal((4, s))
        a, b = loss(X, params), loss_matrix(X, params)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    res.add("forward equals matrix loss", worst < 1e-10, f"max relative gap {_fmt(worst)}")
    worst = 0.0
    for params in _random_bank_params(rng):
        X = rng.standard_normal((8, s))
        for lam in (0.0, 0.3):
            exact = grad_loss(X, params, lam)
            approx = central_difference(X, params, lam)
            for name in exact:
                err = np.linalg.norm(exact[name] - approx[name]) / np.linalg.norm(approx[name])
                worst = max(worst, float(err))
    res.add("gradient matches finite differences", worst < 1e-6, f"max relative error {_fmt(worst)}")
    return res


def concentration(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("concentration", 10)
    rng = np.random.default_rng(1000 + seed_shift)
    tails_ok, means_ok = [], []
    for i in range(10):
        fb = assemble(ParamSet.random("unconstrained", int(rng.integers(2, 9)), rng=rng,
                                      l_dual=int(rng.integers(2, 9))))
        B = build_B(fb, 64).B
        table = metrics.concentration_trial(B, trials=10_000, seed=int(rng.integers(2**31)))
        tails_ok.append(table.within_bound)
        means_ok.append(table.mean_ok)
    res.add("tails within bound", all(tails_ok), f"{sum(tails_ok)}/10")
    res.add("mean within 3 standard errors", all(means_ok), f"{sum(means_ok)}/10")
    s = 1024
    X = gaussian_dataset(64, s, 1100 + seed_shift)
    k = math.sqrt(s) / 2
    frac = metrics.annulus_fraction(X, k)
    res.add("annulus mass", frac >= metrics.annulus_bound(k), f"{frac:.3f} >= {metrics.annulus_bound(k):.3f}")
    coh = metrics.pairwise_coherence(X)
    limit = math.sqrt(6 * math.log(64)) / math.sqrt(s - 1)
    inside = float(np.mean(coh <= limit))
    res.add("near orthogonality", inside >= 1 - 1 / 64, f"{inside:.4f} of pairs below {limit:.3f}")
    res.add("mgf inequality", metrics.mgf_inequality_check(np.linspace(-0.25, 0.25, 1000)))
    return res


def cascade(seed_shift: int = 0) -> ScenarioResult:
    res = ScenarioResult("cascade", 11)
    haar = oracle.family("haar")
    phi = wavelets.cascade_scaling(haar.h, 8)
    inside = phi.t < 1.0
    gap = float(np.max(np.abs(phi.values[inside] - 1.0)))
    res.add("Haar scaling is the indicator", gap < 1e-12, f"max gap {_fmt(gap)}")
    for name, p in (("haar", 1), ("db2", 2), ("db4", 4)):
        fb = oracle.family(name)
        psi = wavelets.cascade_wavelet(fb.g, wavelets.cascade_scaling(fb.h, 10))
        below = wavelets.moment_test(psi, p).passed
        at = wavelets.moment_test(psi, p + 1).passed
        res.add(f"{name} moments below {p} vanish", below)
        res.add(f"{name} moment {p} does not vanish", not at)
    return res


SCENARIOS = {
    "pr-learning": pr_learning,
    "db2-recovery": db2_recovery,
    "four-factorizations": four_factorizations,
    "symmetric-impossibility": symmetric_impossibility,
    "symmlet": symmlet,
    "cdf53": cdf53,
    "cdf97": cdf97,
    "lawton-screening": lawton_screening,
    "gradients": gradients,
    "concentration": concentration,
    "cascade": cascade,
}


# -- suite -------------------------------------------------------------------

def worker_count() -> int:
    """Workers for concurrent scenarios: CPU count, capped by WAVEFORGE_THREADS."""
    n = os.cpu_count() or 1
    cap = os.environ.get("WAVEFORGE_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise ValueError(f"WAVEFORGE_THREADS must be an integer, got '{cap}'") from exc
    return n


def run_scenario(name: str, seed_shift: int = 0) -> ScenarioResult:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario '{name}'; choose from {', '.join(SCENARIOS)}")
    t0 = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        result = SCENARIOS[name](seed_shift)
    result.seconds = time.perf_counter() - t0
    return result


def run_suite(only: list[str] | None = None, seed_shift: int = 0, workers: int | None = None,
              out_dir=None) -> list[ScenarioResult]:
    names = list(only) if only else list(SCENARIOS)
    for n in names:
        if n not in SCENARIOS:
            raise KeyError(f"unknown scenario '{n}'; choose from {', '.join(SCENARIOS)}")
    workers = min(workers or worker_count(), len(names))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(run_scenario, names, [seed_shift] * len(names)))
    else:
        results = [run_scenario(n, seed_shift) for n in names]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            (out / f"{r.name}.json").write_text(json.dumps(r.to_json(), indent=2, default=_json_default))
        (out / "summary.md").write_text(summary_markdown(results))
    return results


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(type(obj).__name__)


def summary_markdown(results: list[ScenarioResult]) -> str:
    lines = ["| # | scenario | result | seconds | failed checks |", "|---|---|---|---|---|"]
    for r in sorted(results, key=lambda r: r.criterion):
        failed = "; ".join(f"{c.label} ({c.detail})" if c.detail else c.label
                           for c in r.checks if not c.passed)
        lines.append(f"| {r.criterion} | {r.name} | {'pass' if r.passed else 'FAIL'} "
                     f"| {r.seconds:.1f} | {failed} |")
    return "\n".join(lines) + "\n"
