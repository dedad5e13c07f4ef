"""Single-ion three-level Raman reference dynamics (no motion).

Basis ``(|down>, |up>, |e>)``. Both beams are detuned by ``Delta`` from the
excited level; the two-photon detuning ``delta_L`` sits on ``|up>``. The
Liouvillian is time independent, so the trajectory is obtained by repeated
multiplication with its exact one-step propagator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import curve_fit

from ..tensor import HilbertLayout, Operator
from .hamiltonians import lambda_hamiltonian
from .master import DissipatorSet, Channel, liouvillian

LAYOUT = HilbertLayout((3,))
DOWN, UP, EXC = 0, 1, 2


def lambda_dissipators(Gamma_down: float, Gamma_up: float) -> DissipatorSet:
    chans = []
    for label, target, rate in (("down", DOWN, Gamma_down), ("up", UP, Gamma_up)):
        if rate <= 0:
            continue
        op = np.zeros((3, 3), dtype=complex)
        op[target, EXC] = np.sqrt(rate)
        chans.append(Channel(ion=0, label=label, kind="custom", rate=rate, op=Operator(op)))
    return DissipatorSet(tuple(chans))


@dataclass
class LambdaTrajectory:
    times: np.ndarray
    rho: np.ndarray  # shape (n_times, 3, 3)

    def population(self, level: int) -> np.ndarray:
        return self.rho[:, level, level].real


def lambda_reference(Omega1: complex, Omega2: complex, Delta: float, Gamma_down: float,
                     Gamma_up: float, delta_L: float, t_final: float, n_points: int = 2001,
                     rho0: np.ndarray | None = None) -> LambdaTrajectory:
    """Density-matrix trajectory of the driven three-level system on a uniform grid."""
    H = lambda_hamiltonian(Omega1, Omega2, Delta, delta_L)
    L = liouvillian(H, lambda_dissipators(Gamma_down, Gamma_up)).toarray()
    times = np.linspace(0.0, t_final, n_points)
    step = la.expm(L * (times[1] - times[0]))
    if rho0 is None:
        rho0 = np.zeros((3, 3), dtype=complex)
        rho0[DOWN, DOWN] = 1.0
    v = np.asarray(rho0, dtype=complex).reshape(-1)
    out = np.empty((n_points, 9), dtype=complex)
    out[0] = v
    for k in range(1, n_points):
        v = step @ v
        out[k] = v
    return LambdaTrajectory(times=times, rho=out.reshape(n_points, 3, 3))


def fit_rabi_frequency(times: np.ndarray, p_up: np.ndarray, guess: float) -> float:
    """Angular frequency of ``A sin^2(w t / 2 + phi) + B`` fitted to ``p_up``."""
    def model(t, w, a, phi, b):
        return a * np.sin(0.5 * w * t + phi) ** 2 + b
    popt, _ = curve_fit(model, times, p_up, p0=[guess, 1.0, 0.0, 0.0], xtol=1e-14, ftol=1e-14,
                        maxfev=20000)
    return abs(float(popt[0]))


def fit_photon_rate(traj: LambdaTrajectory, Gamma: float, skip: float = 0.1) -> float:
    """Photon scattering rate per unit |down> population.

    Emission proceeds at Gamma * P_e; after the fast excited-state transient
    this is proportional to P_down, and the least-squares slope is the rate.
    """
    mask = traj.times >= skip * traj.times[-1]
    pe = traj.population(EXC)[mask]
    pd = traj.population(DOWN)[mask]
    return float(Gamma * np.dot(pe, pd) / np.dot(pd, pd))


def fit_decay_rate(times: np.ndarray, pop: np.ndarray, floor: float = 0.0) -> float:
    """Exponential rate of ``pop - floor`` from a log-linear least-squares fit."""
    y = np.log(np.clip(pop - floor, 1e-300, None))
    slope = np.polyfit(times, y, 1)[0]
    return float(-slope)
