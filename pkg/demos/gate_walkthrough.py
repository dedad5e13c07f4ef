"""Noiseless driven gate: calibration, phase-space loops, truth table and Bell error.

Run with ``python3 demos/gate_walkthrough.py``; takes a few seconds.
"""

# %% calibrated parameters
import math

import numpy as np

from drivengate import ion
from drivengate.analysis import (X_SIGNS, closure_phases, phase_space_trajectory,
                                 truth_table_phases)
from drivengate.experiments import ExperimentConfig, run_gate, run_oracle_check

setup = ion.default_setup()
plan = setup.plan
print(f"gate time            {plan.t_g * 1e6:.3f} us")
print(f"Omega_L scale        {plan.omega_L_scale:.6f}")
print(f"t_g * 2 J12 / (pi/4) {plan.t_g * 2 * plan.J[0, 1] / (math.pi / 4):.9f}")

# %% phase-space loops of the two modes for each sigma^x product state
times = np.linspace(0, plan.t_g, 2001)
for s in X_SIGNS:
    com, zz = phase_space_trajectory(plan.F, plan.delta, s, times)
    print(f"signs {s}: max |alpha| com {np.max(np.abs(com.alpha)):.3f}, "
          f"zz {np.max(np.abs(zz.alpha)):.3f}, closure {abs(com.alpha[-1]):.1e}")

# %% truth table: oracle, closure phases and full simulation agree
print("oracle phases ", np.round(truth_table_phases(plan.J, plan.t_g), 9))
cl = closure_phases(plan.F, plan.delta, plan.t_g)
print("closure phases", np.round((cl - cl[0]) % (2 * math.pi), 9))
for r in run_oracle_check(ExperimentConfig.defaults("oracle-check", n_max=5)):
    print(f"  {r.extra['label']}: simulated {r.extra['simulated_phase']:+.6f} rad, "
          f"error {r.epsilon:.1e}")

# %% Bell error against the Fock cutoff
for n in (3, 5, 7, 9):
    rec = run_gate(ExperimentConfig.defaults("gate", n_max=n))[0]
    print(f"n_max={n}: epsilon {rec.epsilon:.3e}, top-Fock population "
          f"{rec.extra['max_leakage']:.1e} [{rec.status}]")
