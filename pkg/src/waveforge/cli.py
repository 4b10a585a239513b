"""Command-line entry point: run one experiment config, the reproduction suite, or dump oracles.

Exit codes for ``run``: 0 success, 1 invalid config, 2 optimiser did not converge,
3 the design failed validation (unstable cascade, oracle gap above tolerance).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics, oracle, repro, wavelets
from .autoencoder import build_B
from .params import ConfigurationError, FilterBank, ParamSet, assemble
from .signal import Filter
from .trainer import TrainConfig, train

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_INVALID = 0, 1, 2, 3
MODES = ("train", "cascade", "validate", "oracle-compare", "concentration")


class SchemaError(ValueError):
    """Invalid experiment config; the message names the offending field."""


@dataclass
class ExperimentConfig:
    mode: str
    outputs: Path
    params: dict | None = None
    train: dict = field(default_factory=dict)
    reference: str | None = None
    filters: dict | str | None = None  # inline FilterBank JSON or a path to filters.json
    levels: int = 8
    mra: bool = True
    tolerance: float = 1e-4
    concentration: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj, base_dir: Path = Path(".")) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise SchemaError("config: expected a JSON object")
        known = {f.name for f in fields(cls)}
        for key in obj:
            if key not in known:
                raise SchemaError(f"{key}: unknown field")
        for key in ("mode", "outputs"):
            if key not in obj:
                raise SchemaError(f"{key}: required field missing")
        mode = obj["mode"]
        if mode not in MODES:
            raise SchemaError(f"mode: must be one of {', '.join(MODES)}, got {mode!r}")
        out = Path(obj["outputs"])
        cfg = cls(mode=mode, outputs=out if out.is_absolute() else base_dir / out,
                  **{k: v for k, v in obj.items() if k not in ("mode", "outputs")})
        if isinstance(cfg.filters, str):
            path = Path(cfg.filters)
            cfg.filters = str(path if path.is_absolute() else base_dir / path)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        if self.reference is not None and self.reference not in oracle.FAMILIES:
            raise SchemaError(f"reference: unknown family {self.reference!r}")
        if not isinstance(self.train, dict):
            raise SchemaError("train: expected an object")
        trains = self.mode == "train" or (self.mode == "oracle-compare" and self.filters is None)
        if trains:
            if self.params is None:
                raise SchemaError("params: required for training")
            if "seed" not in self.train:
                raise SchemaError("train.seed: required for training")
        if self.mode == "oracle-compare" and self.reference is None:
            raise SchemaError("reference: required for oracle-compare")
        if self.mode in ("cascade", "validate") and self.filters is None and self.reference is None:
            raise SchemaError("filters: give filters or a reference family")
        if self.mode == "concentration" and "seed" not in self.concentration:
            raise SchemaError("concentration.seed: required for concentration")
        if not isinstance(self.levels, int) or self.levels < 1:
            raise SchemaError("levels: must be a positive integer")
        if not (isinstance(self.tolerance, (int, float)) and self.tolerance > 0):
            raise SchemaError("tolerance: must be positive")

    def param_set(self, seed: int) -> ParamSet:
        obj = dict(self.params)
        try:
            if obj.get("learnables"):
                return ParamSet.from_json(obj)
            kw = {k: obj[k] for k in ("l_dual", "p", "p_dual", "symmetric", "a") if k in obj}
            if obj.get("fixed_synthesis") is not None:
                kw["fixed_synthesis"] = Filter.from_json(obj["fixed_synthesis"])
            return ParamSet.random(obj["kind"], int(obj["l"]), rng=np.random.default_rng(seed), **kw)
        except KeyError as exc:
            raise SchemaError(f"params.{exc.args[0]}: required field missing") from exc
        except (ConfigurationError, ValueError, TypeError) as exc:
            raise SchemaError(f"params: {exc}") from exc

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig.from_json(self.train)
        except TypeError as exc:
            raise SchemaError(f"train: {exc}") from exc
        except ValueError as exc:
            raise SchemaError(f"train: {exc}") from exc

    def filterbank(self) -> FilterBank:
        if self.filters is None:
            return oracle.family(self.reference)
        obj = self.filters
        if isinstance(obj, str):
            try:
                obj = json.loads(Path(obj).read_text())
            except OSError as exc:
                raise SchemaError(f"filters: cannot read {obj}: {exc.strerror}") from exc
        try:
            return FilterBank.from_json(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"filters: not a filterbank ({exc})") from exc


# -- artifacts ---------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def _finite(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def validation_report(fb: FilterBank) -> dict:
    """PrReport fields plus the Lawton reports of both lowpass filters."""
    orthogonal = fb.h.len == fb.h_dual.len and fb.h.allclose(fb.h_dual, 1e-12)
    pr = metrics.pr_report(fb, orthogonal=orthogonal).to_json()
    report = {**pr, "stable": False}
    try:
        a, b, ok = metrics.lawton_check(fb.h, fb.h_dual)
    except ValueError as exc:
        report["lawton_error"] = str(exc)
        return report
    report.update(lawton_h=a.to_json(), lawton_h_dual=b.to_json(), stable=ok)
    return report


def write_cascades(fb: FilterBank, out: Path, levels: int) -> dict:
    diverged = {}
    for suffix, lo, hi, dual in (("", fb.h, fb.g, False), ("_dual", fb.h_dual, fb.g_dual, True)):
        try:
            phi = wavelets.cascade_scaling(lo, levels, dual=dual)
        except ValueError as exc:
            diverged["phi" + suffix] = str(exc)
            continue
        psi = wavelets.cascade_wavelet(hi, phi)
        phi.write_csv(out / f"samples_phi{suffix}.csv")
        psi.write_csv(out / f"samples_psi{suffix}.csv")
        diverged["phi" + suffix] = phi.diverged
    return diverged


def oracle_gap(fb: FilterBank, reference: str) -> float:
    ref = oracle.family(reference)
    gaps = []
    for mine, theirs in ((fb.h, ref.h), (fb.h_dual, ref.h_dual)):
        if mine.len != theirs.len:
            return math.inf
        gaps.append(float(np.max(np.abs(mine.taps - theirs.taps))))
    return max(gaps)


def run(config: ExperimentConfig) -> int:
    out = config.outputs
    out.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK

    if config.mode == "concentration":
        c = config.concentration
        rng = np.random.default_rng(int(c["seed"]))
        s = int(c.get("s", 64))
        if config.filters is not None or config.reference is not None:
            fb = config.filterbank()
        else:
            fb = assemble(ParamSet.random("unconstrained", int(c.get("l", 6)), rng=rng))
        B = build_B(fb, s).B
        table = metrics.concentration_trial(B, trials=int(c.get("trials", 10_000)),
                                            seed=int(rng.integers(2**31)))
        table.write_csv(out / "concentration.csv")
        _write_json(out / "report.json", {"frob2": table.frob2, "spec2": table.spec2,
                                          "mean": table.mean, "std_err": table.std_err,
                                          "within_bound": table.within_bound, "mean_ok": table.mean_ok})
        print(f"tails within bound: {table.within_bound}; mean within 3 SE: {table.mean_ok}")
        return EXIT_OK if table.within_bound and table.mean_ok else EXIT_INVALID

    if config.mode == "train" or (config.mode == "oracle-compare" and config.filters is None):
        tc = config.train_config()
        params = config.param_set(tc.seed)
        state, fb = train(tc, params)
        state.write_history_csv(out / "history.csv")
        _write_json(out / "params.json", state.params.to_json())
        print(f"{state.stop_reason.value} after {len(state.loss_history)} iterations, "
              f"best loss {state.best_loss:.3e}")
        if not state.converged:
            code = EXIT_NOT_CONVERGED
    else:
        fb = config.filterbank()
    _write_json(out / "filters.json", fb.to_json())

    if config.mode == "cascade":
        diverged = write_cascades(fb, out, config.levels)
        _write_json(out / "report.json", {"diverged": diverged})
        bad = [k for k, v in diverged.items() if v is not False]
        if bad:
            print(f"cascade did not settle for: {', '.join(bad)}")
            return EXIT_INVALID
        return code

    report = validation_report(fb)
    if config.mode == "oracle-compare":
        gap = oracle_gap(fb, config.reference)
        report["oracle_gap"] = _finite(gap)
        report["reference"] = config.reference
        print(f"max filter gap to {config.reference}: {gap:.3e}")
        if not gap < config.tolerance:
            code = code or EXIT_INVALID
    if report["stable"] and (config.mode == "validate" or config.mra):
        write_cascades(fb, out, config.levels)
    _write_json(out / "report.json", {k: _finite(v) if isinstance(v, float) else v
                                      for k, v in report.items()})
    print(f"SRER {report['srer_db']} dB, Lawton stable: {report['stable']}")
    if config.mra and not report["stable"] and config.mode in ("validate", "train"):
        code = code or EXIT_INVALID
    return code


# -- argument parsing --------------------------------------------------------

def _cmd_run(args) -> int:
    path = Path(args.config)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: {path} is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = ExperimentConfig.from_json(obj, path.parent)
        return run(config)
    except SchemaError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _cmd_repro(args) -> int:
    only = [n for part in (args.only or []) for n in part.split(",") if n]
    try:
        results = repro.run_suite(only or None, args.seed_shift, out_dir=args.out)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    for r in sorted(results, key=lambda r: r.criterion):
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion:>2} {r.name} ({r.seconds:.1f}s)")
        for c in r.checks:
            print(f"       {'ok ' if c.passed else 'BAD'} {c.label}" + (f": {c.detail}" if c.detail else ""))
    print()
    print(repro.summary_markdown(results), end="")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_oracle(args) -> int:
    if args.list or args.family is None:
        print("\n".join(oracle.FAMILIES))
        return 0
    path = oracle.write_family(args.family, args.out)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="path to an experiment JSON config")
    p_run.set_defaults(func=_cmd_run)

    p_repro = sub.add_parser("repro", help="run the pinned-seed reproduction suite")
    p_repro.add_argument("--only", action="append",
                         help=f"scenario name(s), comma separated: {', '.join(repro.SCENARIOS)}")
    p_repro.add_argument("--seed-shift", type=int, default=0, help="add k to every pinned seed")
    p_repro.add_argument("--out", help="directory for per-scenario JSON and summary.md")
    p_repro.set_defaults(func=_cmd_repro)

    p_or = sub.add_parser("oracle", help="write a closed-form reference filterbank as JSON")
    p_or.add_argument("--family", choices=oracle.FAMILIES)
    p_or.add_argument("--out", default=".", help="output directory")
    p_or.add_argument("--list", action="store_true", help="list the available families")
    p_or.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
