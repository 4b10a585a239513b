"""Full-batch Adam training of a filterbank autoencoder on Gaussian data."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .autoencoder import PolyphaseLoss, grad_loss
from .params import FilterBank, ParamSet, assemble, lambda_schedule, normalize_bank


class StopReason(str, enum.Enum):
    CONTINUE = "continue"
    REL_CONVERGED = "rel_converged"
    ABS_CONVERGED = "abs_converged"
    NOT_CONVERGED = "not_converged"


@dataclass(frozen=True)
class TrainConfig:
    eta0: float = 1e-3
    tau_dev: float = 6.0
    alpha: float = 10.0
    delta: float = 1e-5
    epsilon: float = 1e-15
    window: int = 100
    max_iters: int = 100_000
    seed: int = 0
    s: int = 128
    m: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # regulariser schedule; lambda0 == 0 disables it
    lambda0: float = 0.0
    lambda_decay: float = 10.0
    lambda_period: int = 1000
    lambda_cutoff: int = 5000

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        if self.delta <= 0 or self.epsilon <= 0:
            raise ValueError("delta and epsilon must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.eta0 <= 0 or self.max_iters < 1 or self.s < 1 or self.m < 1:
            raise ValueError("eta0, max_iters, s and m must be positive")

    def lam(self, iteration: int) -> float:
        if self.lambda0 == 0:
            return 0.0
        return lambda_schedule(iteration, self.lambda0, self.lambda_decay,
                               self.lambda_period, self.lambda_cutoff)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


@dataclass
class TrainState:
    params: ParamSet
    m1: dict[str, np.ndarray]
    m2: dict[str, np.ndarray]
    eta: float
    iter: int = 0
    step: int = 0  # Adam step count used for bias correction
    loss_history: list[float] = field(default_factory=list)
    eta_history: list[float] = field(default_factory=list)
    lambda_history: list[float] = field(default_factory=list)
    best_loss: float = math.inf
    best_iter: int = -1
    best_snapshot: tuple | None = None
    backoffs: int = 0
    stop_reason: StopReason = StopReason.CONTINUE

    @classmethod
    def initial(cls, params: ParamSet, eta: float) -> "TrainState":
        zeros = {k: np.zeros_like(v) for k, v in params.learnables.items()}
        return cls(params, zeros, {k: z.copy() for k, z in zeros.items()}, eta)

    @property
    def converged(self) -> bool:
        return self.stop_reason in (StopReason.REL_CONVERGED, StopReason.ABS_CONVERGED)

    def record(self, value: float, eta: float, lam: float) -> None:
        self.loss_history.append(value)
        self.eta_history.append(eta)
        self.lambda_history.append(lam)
        if value < self.best_loss:
            self.best_loss = value
            self.best_iter = len(self.loss_history) - 1
            self.best_snapshot = self._snapshot()

    def _snapshot(self) -> tuple:
        copy = lambda d: {k: v.copy() for k, v in d.items()}  # noqa: E731
        return self.params, copy(self.m1), copy(self.m2), self.step

    def restore_best(self) -> None:
        if self.best_snapshot is None:
            raise FloatingPointError("no finite loss was recorded")
        params, m1, m2, step = self.best_snapshot
        self.params = params
        self.m1 = {k: v.copy() for k, v in m1.items()}
        self.m2 = {k: v.copy() for k, v in m2.items()}
        self.step = step

    def write_history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "loss", "eta", "lambda"])
            for i, row in enumerate(zip(self.loss_history, self.eta_history, self.lambda_history)):
                w.writerow([i, *(repr(float(v)) for v in row)])


def gaussian_dataset(m: int, s: int, seed: int) -> np.ndarray:
    """m x s array of i.i.d. standard normal entries; same seed gives the same array."""
    if m < 1 or s < 1:
        raise ValueError("m and s must be >= 1")
    return np.random.default_rng(seed).standard_normal((m, s))


def adam_step(state: TrainState, grads: dict[str, np.ndarray], config: TrainConfig | None = None
              ) -> TrainState:
    cfg = config or TrainConfig()
    b1, b2 = cfg.beta1, cfg.beta2
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    new = {}
    for k, theta in state.params.learnables.items():
        g = grads[k]
        if g.shape != theta.shape:
            raise ValueError(f"gradient '{k}' has shape {g.shape}, expected {theta.shape}")
        state.m1[k] = b1 * state.m1[k] + (1 - b1) * g
        state.m2[k] = b2 * state.m2[k] + (1 - b2) * g * g
        new[k] = theta - state.eta * (state.m1[k] / c1) / (np.sqrt(state.m2[k] / c2) + cfg.adam_eps)
    state.params = state.params.with_learnables(new)
    return state


def lr_backoff(state: TrainState, config: TrainConfig) -> bool:
    """Divide eta by alpha and roll back to the best state after a large loss excursion."""
    if not state.loss_history:
        raise ValueError("lr_backoff needs at least one recorded loss")
    current = state.loss_history[-1]
    best = state.best_loss
    if best > 0 and math.isfinite(current):
        deviation = math.log10(current / best) if current > 0 else -math.inf
    else:
        deviation = math.inf if not math.isfinite(current) else 0.0
    if deviation > config.tau_dev:
        state.eta /= config.alpha
        state.restore_best()
        state.backoffs += 1
        return True
    return False


def should_stop(state: TrainState, config: TrainConfig) -> StopReason:
    L = state.loss_history
    if L and L[-1] < config.epsilon:
        return StopReason.ABS_CONVERGED
    if len(L) > config.window:
        recent = np.asarray(L[-config.window - 1:])
        prev, cur = recent[:-1], recent[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(cur - prev) / prev
        if np.all(rel < config.delta):
            return StopReason.REL_CONVERGED
    return StopReason.CONTINUE


def train(config: TrainConfig, params0: ParamSet, X: np.ndarray | None = None
          ) -> tuple[TrainState, FilterBank]:
    """Run the optimisation loop; returns the best state and its normalised filterbank."""
    if X is None:
        X = gaussian_dataset(config.m, config.s, config.seed)
    stats = PolyphaseLoss(X, assemble(params0))
    state = TrainState.initial(params0, config.eta0)
    for it in range(config.max_iters):
        state.iter = it
        lam = config.lam(it)
        value, grads = grad_loss(stats, state.params, lam, with_value=True)
        state.record(value, state.eta, lam)
        if not math.isfinite(value):
            # nothing usable to step from; fall back to the best state with a smaller rate
            lr_backoff(state, config)
            continue
        if lr_backoff(state, config):
            continue
        reason = should_stop(state, config)
        if reason is not StopReason.CONTINUE and not (config.lambda0 and it < config.lambda_cutoff):
            state.stop_reason = reason
            break
        adam_step(state, grads, config)
    else:
        state.stop_reason = StopReason.NOT_CONVERGED
    state.restore_best()
    return state, normalize_bank(assemble(state.params), state.params.a)
