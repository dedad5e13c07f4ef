"""Gate error under Ornstein-Uhlenbeck intensity noise on the Raman Rabi frequency.

Defaults (n_max = 5, 50 trajectories) take about a minute.
"""

# %% ensembles
import math

from drivengate.experiments import ExperimentConfig, IntensityNoiseRunner

cfg = ExperimentConfig.defaults("intensity-sweep", n_max=5, n_trajectories=50)
runner = IntensityNoiseRunner(cfg)
base = runner.ensemble(0.0).mean_error
print(f"noise step {runner.dt * 1e9:.4f} ns over {runner.n_steps} steps")
print(f"noiseless epsilon {base:.3e}")

# %% the excess error grows as zeta^2
prev = None
for zeta in cfg.zetas:
    res = runner.ensemble(zeta)
    excess = res.mean_error - base
    slope = "" if prev is None else f"  local slope {math.log(excess / prev[1]) / math.log(zeta / prev[0]):.2f}"
    print(f"zeta={zeta:.1e}: epsilon {res.mean_error:.3e} +- {res.sem:.1e}, excess {excess:.2e}{slope}")
    prev = (zeta, excess)
