"""Recovering Daubechies filters and the four ways to factor db4.

Asking the orthogonal parameterization for p vanishing moments at length 2p pins
down the magnitude response, but not the phase. Training lands on one of the real
spectral factors, and flipping roots into the unit disk maps each of them to the
minimum-phase Daubechies filter.
"""
# %%
import numpy as np

from waveforge.oracle import daubechies_ell_roots, daubechies_filter
from waveforge.params import ParamSet
from waveforge.repro import PROTOCOL
from waveforge.trainer import TrainConfig, train
from waveforge.wavelets import RootSet, classify_factorization, min_phase_flip

# %% db2 from scratch
params = ParamSet.random("orthogonal", 4, rng=np.random.default_rng(0), p=2)
state, fb = train(TrainConfig(seed=0, epsilon=1e-30, **PROTOCOL), params)
flipped = min_phase_flip(fb.h, 2)
print("learned    :", np.round(fb.h.taps, 6))
print("root-flipped:", np.round(flipped.taps, 6))
print("closed form :", np.round(daubechies_filter(2).taps, 6))

# %% [markdown]
# For p=4 the non-binomial factor has one real root and one conjugate pair. Each
# group can sit inside or outside the unit circle, which gives four real filters
# with the same magnitude response. A handful of seeds shows several of them.

# %%
ref = RootSet(daubechies_ell_roots(4), 1.0)
for seed in range(4):
    params = ParamSet.random("orthogonal", 8, rng=np.random.default_rng(seed), p=4)
    state, fb = train(TrainConfig(seed=seed, epsilon=1e-20, max_iters=60_000, **PROTOCOL), params)
    label = classify_factorization(fb.h, 4, ref)
    print(f"seed {seed}: loss {state.best_loss:.1e} -> {label.name}")
