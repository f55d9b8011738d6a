"""
Piston coupling against oscillator temperature
==============================================

The piston pulls on the oscillator through an attractive Gaussian well. How
much energy that well holds depends on how spread out the oscillator is: a
hot oscillator sits mostly outside a narrow well. This is the lever the
engine uses.

Run with ``python notebooks/01_interaction_map.py``.
"""

# %%
import warnings

import numpy as np

from qpiston import EngineParams, interaction_energy_map
from qpiston.errors import CutoffWarning

warnings.simplefilter("ignore", CutoffWarning)

# %% [markdown]
# Thermal states over a grid of temperatures, piston at several distances
# (in units of the well width sigma).

# %%
omegas = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
y_over_sigma = np.array([0.0, 0.5, 1.0, 2.0, 3.0, 10.0])

for sigma in (0.25, 0.5, 2.0):
    p = EngineParams(sigma=sigma)
    energy = interaction_energy_map(p, omegas, y_over_sigma * sigma)
    print(f"\nsigma = {sigma}")
    print("omega_T  " + "".join(f"{r:>9.1f}" for r in y_over_sigma))
    for w, row in zip(omegas, energy):
        print(f"{w:7.1f}  " + "".join(f"{e:9.4f}" for e in row))

# %% [markdown]
# The well drains as the temperature rises for the narrow pistons; the wide
# one (sigma = 2) barely notices the temperature. At ten widths the piston is
# effectively gone.

# %%
p = EngineParams(sigma=0.5)
cold, hot = interaction_energy_map(p, [0.1, 5.0], [0.0])[:, 0]
print(f"\nsigma = 0.5, piston advanced: cold {cold:.4f}, hot {hot:.4f}, contrast {hot - cold:.4f}")
