"""From filters to functions: the cascade algorithm and vanishing moments.

Repeatedly upsampling and filtering a unit impulse converges to the scaling
function; one more filtering step with the highpass filter gives the wavelet.
The number of zeros of the lowpass response at pi equals the number of
polynomial moments the wavelet annihilates.
"""
# %%
import sys
from pathlib import Path

from waveforge.oracle import family
from waveforge.wavelets import cascade_scaling, cascade_wavelet, moment_test

out = Path(sys.argv[1]) if len(sys.argv) > 1 else None

# %%
for name, p in (("haar", 1), ("db2", 2), ("db4", 4)):
    fb = family(name)
    phi = cascade_scaling(fb.h, 10)
    psi = cascade_wavelet(fb.g, phi)
    below, at = moment_test(psi, p), moment_test(psi, p + 1)
    print(f"{name}: support {phi.support}, integral of phi {phi.integral():.4f}, "
          f"moments < {p} vanish: {below.passed}, moment {p}: {at.moments[-1]:+.3e}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        phi.write_csv(out / f"{name}_phi.csv")
        psi.write_csv(out / f"{name}_psi.csv")

# %% [markdown]
# The cascade also reports its own convergence: the sup-norm change per level
# halves roughly every level for db4, and stays flat for filters whose limit is
# not continuous.

# %%
for name in ("db4", "cdf53"):
    phi = cascade_scaling(family(name).h, 10)
    print(name, [f"{d:.1e}" for d in phi.diagnostics[-4:]])
