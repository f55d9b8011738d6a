"""
Bath-powered engine
===================

Heat the oscillator with the piston in, pull the piston out, cool the
oscillator, push the piston back in. The baths are single oscillator modes
reset before every contact. Eighty cycles from a cold start, two well widths
and two stroke durations.

Each configuration diagonalizes two 2601 x 2601 composite Hamiltonians, so
expect a minute or so in total.
"""

# %%
import warnings

import numpy as np

from qpiston import BATH, EngineParams, engine_theoretical_efficiency, run_engine
from qpiston.errors import CutoffWarning

warnings.simplefilter("ignore", CutoffWarning)

# %%
runs = {}
for sigma in (0.5, 2.0):
    for tau_p in (5.0, 10.0):
        runs[sigma, tau_p] = run_engine(EngineParams(sigma=sigma, tau_p=tau_p), BATH, 80)

# %% [markdown]
# Energies at the four corners of the cycle, every tenth cycle.

# %%
for (sigma, tau_p), run in runs.items():
    print(f"\nsigma={sigma} tau_p={tau_p}")
    print(" cycle  adv.cold  adv.hot  ret.hot  ret.cold")
    for i in range(0, 80, 10):
        e = run.energies()[i]
        print(f"{i:6d} " + " ".join(f"{v:8.4f}" for v in e))

# %% [markdown]
# Steady-state averages. Per-cycle efficiency is net work over heat drawn
# from the hot bath; power divides the net work by the four strokes.

# %%
print("\nsigma tau_p  steady  efficiency  net_work    power      theory")
for (sigma, tau_p), run in runs.items():
    s = run.summary()
    theory = engine_theoretical_efficiency(run.params).exact
    print(f"{sigma:5} {tau_p:5} {str(s['steady_state_index']):>7} {s['mean_efficiency']:10.4f} "
          f"{s['mean_net_work']:10.4e} {s['mean_power']:10.4e} {theory:8.4f}")

# %% [markdown]
# Slow drift of the fast narrow engine: slope of the advanced-cold energy
# over the last forty cycles.

# %%
for tau_p in (5.0, 10.0):
    e = runs[0.5, tau_p].column("e_advanced_cold")[40:]
    print(f"tau_p={tau_p}: slope {np.polyfit(np.arange(40, 80), e, 1)[0]:.3e}")
