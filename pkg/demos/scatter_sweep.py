"""Spontaneous-emission error against Raman detuning.

The default cutoff n_max = 3 runs in about a minute; pass a larger cutoff as the
first argument for the production curve (n_max = 7 costs minutes per point).
"""

# %% sweep
import sys

from drivengate.experiments import ExperimentConfig, run_gate, run_scatter_sweep

n_max = int(sys.argv[1]) if len(sys.argv) > 1 else 3
base = run_gate(ExperimentConfig.defaults("gate", n_max=n_max))[0].epsilon
rows = run_scatter_sweep(ExperimentConfig.defaults("scatter-sweep", n_max=n_max))

# %% scattering error is the excess over the truncated noiseless gate
print(f"noiseless epsilon at n_max={n_max}: {base:.4e}")
print(" Delta/2pi [THz]   epsilon      excess       scatter prob.")
for r in rows:
    print(f"{r.extra['detuning_THz_cyclic']:10.2f}   {r.epsilon:.4e}   {r.epsilon - base:.4e}"
          f"   {r.extra['scatter_probability']:.3e}")
