"""Ornstein-Uhlenbeck intensity noise and seeded trajectory ensembles.

Per-trajectory seeds come from ``numpy.random.SeedSequence([master_seed, k])``
and drive a PCG64 generator, so every trajectory is reproducible on its own and
independent of how the ensemble is scheduled.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_DT_FRACTION = 0.01


@dataclass(frozen=True)
class OUParams:
    c: float
    tau: float
    zeta: float
    omega_L_ref: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.c < 0:
            raise ValueError("c must be non-negative")

    @classmethod
    def from_zeta(cls, zeta: float, tau: float, omega_L_ref: float) -> "OUParams":
        """Diffusion constant chosen so the stationary variance is (zeta Omega_L)^2."""
        return cls(c=2.0 * zeta**2 * omega_L_ref**2 / tau, tau=tau, zeta=zeta,
                   omega_L_ref=omega_L_ref)

    @property
    def stationary_variance(self) -> float:
        return 0.5 * self.c * self.tau


@dataclass(frozen=True, eq=False)
class OUPath:
    seed: int
    dt: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "delta_omega_L_rad_per_s"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])


def ou_step(x, dt: float, params: OUParams, n):
    """Exact OU transition over ``dt`` driven by standard normal draws ``n``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    decay = math.exp(-dt / params.tau)
    spread = math.sqrt(params.stationary_variance * -math.expm1(-2.0 * dt / params.tau))
    return x * decay + spread * n


def trajectory_seed(master_seed: int, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(k)])


def trajectory_rng(master_seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trajectory_seed(master_seed, k)))


def _draw_path(params: OUParams, n_values: int, dt: float, rng: np.random.Generator,
               start: str) -> np.ndarray:
    draws = rng.standard_normal(n_values)
    vals = np.empty(n_values)
    if start == "zero":
        x = 0.0
    elif start == "stationary":
        x = math.sqrt(params.stationary_variance) * draws[0]
    else:
        raise ValueError("start must be 'zero' or 'stationary'")
    vals[0] = x
    decay = math.exp(-dt / params.tau)
    spread = math.sqrt(params.stationary_variance * -math.expm1(-2.0 * dt / params.tau))
    for k in range(1, n_values):
        x = x * decay + spread * draws[k]
        vals[k] = x
    return vals


def sample_path(params: OUParams, t_final: float, dt: float, seed: int,
                start: str = "zero", master_seed: int | None = None) -> OUPath:
    """OU path on the grid ``0, dt, ..., >= t_final``.

    ``start='zero'`` begins at 0 so the variance grows as (c tau/2)(1 - e^{-2t/tau});
    ``start='stationary'`` draws the first value from N(0, c tau/2). With
    ``master_seed`` the generator is the ensemble's trajectory generator
    ``seed``; otherwise ``seed`` seeds PCG64 directly.
    """
    if dt > MAX_DT_FRACTION * params.tau * (1 + 1e-12):
        raise ValueError(f"dt = {dt:.3g} s exceeds tau/100 = {params.tau / 100:.3g} s")
    n_values = int(math.ceil(t_final / dt - 1e-9)) + 1
    if master_seed is not None:
        rng = trajectory_rng(master_seed, seed)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
    if params.c == 0:
        rng.standard_normal(n_values)
        return OUPath(seed=seed, dt=dt, values=np.zeros(n_values))
    return OUPath(seed=seed, dt=dt, values=_draw_path(params, n_values, dt, rng, start))


def step_values(path: OUPath, n_steps: int) -> np.ndarray:
    """Noise value held over each step [k dt, (k+1) dt): the left grid point."""
    if len(path.values) < n_steps:
        raise ValueError("path shorter than the integration grid")
    return path.values[:n_steps]


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    n_trajectories: int
    fidelities: np.ndarray
    master_seed: int

    @property
    def errors(self) -> np.ndarray:
        return 1.0 - self.fidelities

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def sem(self) -> float:
        if self.n_trajectories < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1) / math.sqrt(self.n_trajectories))


class TrajectoryFailure(RuntimeError):
    def __init__(self, index: int, seed_entropy, cause: Exception):
        super().__init__(f"trajectory {index} (seed {seed_entropy}) failed: {cause}")
        self.index = index
        self.seed_entropy = seed_entropy
        self.cause = cause


def run_ensemble(runner: Callable[[int], float] | None, n_traj: int, master_seed: int,
                 batch_runner: Callable[[Sequence[int]], Sequence[float]] | None = None,
                 batch_size: int = 50, workers: int = 1) -> EnsembleResult:
    """Run ``n_traj`` trajectories and collect their fidelities in index order.

    ``runner(k)`` returns the fidelity of trajectory ``k`` (it must draw its noise
    from ``trajectory_rng(master_seed, k)``). Alternatively ``batch_runner``
    receives fixed consecutive index blocks of ``batch_size``; block boundaries
    depend only on ``n_traj`` and ``batch_size``, never on ``workers``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if (runner is None) == (batch_runner is None):
        raise ValueError("give exactly one of runner and batch_runner")
    if batch_runner is not None:
        blocks = [list(range(s, min(s + batch_size, n_traj))) for s in range(0, n_traj, batch_size)]

        def work(block):
            try:
                return list(batch_runner(block))
            except Exception as exc:
                raise TrajectoryFailure(block[0], (master_seed, block), exc) from exc
    else:
        blocks = [[k] for k in range(n_traj)]

        def work(block):
            k = block[0]
            try:
                return [runner(k)]
            except Exception as exc:
                raise TrajectoryFailure(k, (master_seed, k), exc) from exc
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    fids = np.array([f for part in parts for f in part], dtype=float)
    if fids.shape != (n_traj,):
        raise RuntimeError("runner returned the wrong number of fidelities")
    return EnsembleResult(n_trajectories=n_traj, fidelities=fids, master_seed=master_seed)
