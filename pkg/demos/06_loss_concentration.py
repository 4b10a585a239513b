"""How random the training loss is.

With s Gaussian vectors of length s, the loss is a quadratic form in Gaussians.
Its mean is the squared Frobenius norm of the residual operator B, and it
concentrates around that mean with sub-exponential tails. This script measures
the tails by Monte Carlo and compares them with the bound.
"""
# %%
import math

import numpy as np

from waveforge.autoencoder import build_B
from waveforge.metrics import (annulus_bound, annulus_fraction, concentration_trial,
                               mgf_inequality_check, pairwise_coherence)
from waveforge.params import ParamSet, assemble
from waveforge.trainer import gaussian_dataset

# %%
fb = assemble(ParamSet.random("unconstrained", 6, rng=np.random.default_rng(0)))
B = build_B(fb, 64).B
table = concentration_trial(B, trials=5000, seed=1)
print(f"||B||_F^2 = {table.frob2:.3f}, sample mean {table.mean:.3f} +- {table.std_err:.3f}")
for k, emp, bound in list(zip(table.k, table.empirical, table.bound))[:10:2]:
    print(f"  P(|L - E L| >= {k:6.3f}) = {emp:.4f}  <= {min(bound, 1):.4f}")

# %% [markdown]
# High-dimensional Gaussians have norms close to sqrt(s) and are nearly orthogonal.

# %%
s = 1024
X = gaussian_dataset(64, s, 0)
k = math.sqrt(s) / 2
print(f"annulus mass {annulus_fraction(X, k):.3f} >= {annulus_bound(k):.3f}")
print(f"largest pairwise cosine {pairwise_coherence(X).max():.3f}")
print("moment generating function inequality holds:", mgf_inequality_check())
