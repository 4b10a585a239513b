"""Biorthogonal spline wavelets and why reconstruction is not enough.

Pinning the synthesis lowpass to a B-spline turns training into a linear
problem whose solution is the CDF 5/3 pair. Letting both symmetric filters learn
at lengths 9 and 7 gives the CDF 9/7 pair. Other small biorthogonal banks can
reconstruct perfectly and still fail to generate wavelets.
"""
# %%
import math

import numpy as np

from waveforge.metrics import lawton_check, srer
from waveforge.oracle import cdf97_filters, cdf_spline_filter
from waveforge.params import ParamSet
from waveforge.repro import PROTOCOL
from waveforge.signal import bspline
from waveforge.trainer import TrainConfig, train
from waveforge.wavelets import cascade_scaling

# %% CDF 5/3 with a pinned spline
spline = bspline(2).scaled(math.sqrt(2))
params = ParamSet.random("biorthogonal", 5, rng=np.random.default_rng(0), p=2, fixed_synthesis=spline)
_, fb = train(TrainConfig(seed=0, epsilon=1e-30), params)
print("learned h:", np.round(fb.h.taps / math.sqrt(2), 6), "x sqrt(2)")
print("oracle  h:", np.round(cdf_spline_filter(2, 2)[0].taps / math.sqrt(2), 6), "x sqrt(2)")

# %% CDF 9/7 from a random symmetric start
params = ParamSet.random("biorthogonal", 9, rng=np.random.default_rng(0), l_dual=7, p=4, p_dual=4,
                         symmetric=True)
_, fb = train(TrainConfig(seed=0, epsilon=1e-30, max_iters=60_000, **{**PROTOCOL, "eta0": 3e-3}), params)
h97, hd97 = cdf97_filters()
gap = max(np.abs(fb.h.taps - h97.taps).max(), np.abs(fb.h_dual.taps - hd97.taps).max())
print(f"9/7 gap to the closed form: {gap:.1e}")

# %% [markdown]
# A 5/3-length bank with only one moment on the synthesis side: seed 1 reaches
# machine-precision reconstruction, yet one lowpass filter has Lawton eigenvalues
# outside the unit disk and its cascade energy blows up.

# %%
params = ParamSet.random("biorthogonal", 5, rng=np.random.default_rng(1), l_dual=3, p=2, p_dual=1)
state, fb = train(TrainConfig(seed=1, epsilon=1e-30, **PROTOCOL), params)
a, b, ok = lawton_check(fb.h, fb.h_dual)
print(f"SRER {srer(fb):.0f} dB, both cascades stable: {ok}")
for name, f, rep in (("h", fb.h, a), ("h_dual", fb.h_dual, b)):
    phi = cascade_scaling(f, 10)
    print(f"{name:>6}: stable {rep.stable}, cascade energy at level 10 {phi.energies[-1]:.3g}")
