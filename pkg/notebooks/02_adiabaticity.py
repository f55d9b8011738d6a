"""
How slow is slow enough?
========================

Move the piston between the advanced (y = 0) and retracted (y = 10 sigma)
positions at constant speed and look at the energy left in the oscillator.
Very fast strokes leave the state frozen; very slow ones follow the ground
state. Everything in between lies between those two bounds.
"""

# %%
import numpy as np

from qpiston import EngineParams, adiabaticity_scan

taus = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]

# %%
for sigma in (0.25, 0.5, 2.0):
    p = EngineParams(sigma=sigma)
    for direction in ("retract", "advance"):
        scan = adiabaticity_scan(p, taus, direction)
        span = scan.sudden_bound - scan.adiabatic_bound
        frac = (scan.final_energy - scan.adiabatic_bound) / span
        print(f"sigma={sigma:<5} {direction:<8} adiabatic {scan.adiabatic_bound:8.4f} "
              f"sudden {scan.sudden_bound:8.4f}")
        print("   tau_p  " + " ".join(f"{t:7.1f}" for t in taus))
        print("   E      " + " ".join(f"{e:7.4f}" for e in scan.final_energy))
        print("   frac   " + " ".join(f"{f:7.1e}" for f in frac))

# %% [markdown]
# By tau_p = 5 the leftover excitation is a tiny fraction of the
# sudden-limit excess, so strokes of that length count as slow. The narrow
# wells keep more excitation at short strokes.
