"""Schrodinger evolution for static and noise-sampled Hamiltonians.

Sampled Hamiltonians are piecewise constant on the noise grid,
H_k = H + x_k V. The exact method uses, for every step, the expansion

    exp(-i (H + x V) h) = U0 + x U1 + x^2 U2 + x^3 U3 + O((|x| |V| h)^4),

with U0..U3 read off one block-triangular matrix exponential, so a batch of
noise trajectories advances with a single dense product per step.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ..tensor import Operator, QuantumState
from .hamiltonians import FreeSplit, SampledHamiltonian, echo_operator
from .master import (DissipatorSet, IntegrationError, IntegratorConfig, LeakageError,
                     RunDiagnostics, Trajectory, _evolve, _frame_tools, top_fock_population)

DYSON_ORDER = 3
# accumulated amplitude error allowed from truncating the noise expansion
EXPANSION_TOL = 1e-8


def _echo_or_default(layout, echo_at, echo_op):
    if echo_at is not None and echo_op is None:
        return echo_operator(layout)
    return echo_op


def _check_grid(t: float, dt: float, what: str) -> int:
    n = round(t / dt)
    if n < 1 or abs(n * dt - t) > 1e-9 * t:
        raise ValueError(f"{what} ({t:.9g} s) is not a multiple of the noise step {dt:.9g} s")
    return int(n)


class EigenPropagator:
    """exp(-i H t) from a dense eigendecomposition of a static Hamiltonian."""

    def __init__(self, H: Operator):
        self.E, self.Q = np.linalg.eigh(H.dense())

    def to_eig(self, psi):
        return self.Q.conj().T @ psi

    def from_eig(self, c):
        return self.Q @ c

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.E * t)


def _integrate_static_eigen(H, psi0: QuantumState, t_final, config, echo_at, echo_op,
                            observables):
    layout = psi0.layout
    prop = EigenPropagator(H)
    segs = [t_final] if echo_at is None else [echo_at, t_final - echo_at]
    diag = RunDiagnostics()
    times, states = [0.0], ([psi0.data.copy()] if config.store_states else None)
    values = {k: [fn(psi0.data)] for k, fn in (observables or {}).items()}
    c = prop.to_eig(psi0.data)
    echo_eig = None
    if echo_op is not None:
        echo_eig = prop.to_eig(echo_op.csr() @ prop.Q)
    t = 0.0
    n_chk = max(1, config.n_checkpoints)

    def check(psi):
        diag.norm_error = max(diag.norm_error, abs(np.linalg.norm(psi) - 1.0))
        if diag.norm_error > config.trace_tolerance:
            raise IntegrationError(f"norm drift {diag.norm_error:.3g}")
        leak = top_fock_population(psi, layout)
        diag.max_leakage = max(diag.max_leakage, leak)
        if leak > config.leakage_threshold:
            if config.leakage_policy == "raise":
                raise LeakageError(f"top Fock population {leak:.3g} at t = {t:.6g} s")
            diag.leakage_flagged = True

    check(psi0.data)
    for si, seg in enumerate(segs):
        ph = prop.phases(seg / n_chk)
        for _ in range(n_chk):
            c = ph * c
            t += seg / n_chk
            psi = prop.from_eig(c)
            check(psi)
            times.append(t)
            if states is not None:
                states.append(psi)
            for k, fn in (observables or {}).items():
                values[k].append(fn(psi))
        if si == 0 and echo_eig is not None:
            c = echo_eig @ c
    return Trajectory(times=np.array(times), final=prop.from_eig(c), diagnostics=diag,
                      states=states, observables={k: np.array(v) for k, v in values.items()})


class DysonStepper:
    """Per-step propagator expansion in the noise amplitude, in the eigenbasis of H."""

    def __init__(self, H: Operator, V: Operator, h: float, order: int = DYSON_ORDER):
        self.E, self.Q = np.linalg.eigh(H.dense())
        Vd = self.Q.conj().T @ (V.csr() @ self.Q)
        D = len(self.E)
        n = order + 1
        A = np.diag(-1j * self.E)
        B = -1j * Vd
        big = np.zeros((n * D, n * D), dtype=complex)
        for k in range(n):
            big[k * D:(k + 1) * D, k * D:(k + 1) * D] = A
            if k + 1 < n:
                big[k * D:(k + 1) * D, (k + 1) * D:(k + 2) * D] = B
        ex = la.expm(big * h)
        self.U0 = np.diag(ex[:D, :D]).copy()
        self.U = np.vstack([ex[:D, k * D:(k + 1) * D] for k in range(1, n)])
        self.order = order
        self.D = D
        self.h = h
        self.v_norm = float(np.linalg.norm(Vd, 2))

    def truncation_bound(self, x_max: float) -> float:
        """Bound on the neglected next-order term per step."""
        a = abs(x_max) * self.v_norm * self.h
        return a ** (self.order + 1) / math.factorial(self.order + 1)

    def step(self, C: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Advance coefficient columns ``C`` (D x B) with per-column noise values ``x``."""
        Y = self.U @ C
        out = self.U0[:, None] * C
        xp = np.ones_like(x)
        D = self.D
        for k in range(self.order):
            xp = xp * x
            out += Y[k * D:(k + 1) * D] * xp[None, :]
        return out


def propagate_batch(sampled: SampledHamiltonian, psi0: QuantumState, paths: np.ndarray,
                    echo_at: float | None = None, config: IntegratorConfig = IntegratorConfig(),
                    echo_op: Operator | None = None, stepper: DysonStepper | None = None,
                    n_checkpoints: int | None = None) -> tuple[np.ndarray, list[RunDiagnostics]]:
    """Final states (D x B) for a batch of noise paths sharing one grid.

    ``paths`` has shape (B, n_steps). Column results do not depend on which
    other paths share the batch beyond floating-point summation order of the
    dense product, and each batch is formed deterministically by the caller.
    """
    layout = psi0.layout
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    B, n_steps = paths.shape
    dt = sampled.dt
    t_final = n_steps * dt
    echo_op = _echo_or_default(layout, echo_at, echo_op)
    k_echo = _check_grid(echo_at, dt, "echo time") if echo_at is not None else None
    if stepper is None:
        stepper = DysonStepper(sampled.static, sampled.noise_op, dt)
    bound = stepper.truncation_bound(np.max(np.abs(paths), initial=0.0)) * n_steps
    if bound > EXPANSION_TOL:
        raise IntegrationError(f"noise expansion error bound {bound:.3g} too large; "
                               "reduce the noise step")
    Q = stepper.Q
    C = np.repeat((Q.conj().T @ psi0.data)[:, None], B, axis=1)
    echo_eig = Q.conj().T @ (echo_op.csr() @ Q) if echo_op is not None else None
    n_chk = n_checkpoints or config.n_checkpoints
    chk_every = max(1, n_steps // n_chk)
    diags = [RunDiagnostics(dt=dt, n_steps=n_steps) for _ in range(B)]

    def check(Cm):
        psi = Q @ Cm
        for b in range(B):
            d = diags[b]
            d.norm_error = max(d.norm_error, abs(np.linalg.norm(psi[:, b]) - 1.0))
            leak = top_fock_population(psi[:, b], layout)
            d.max_leakage = max(d.max_leakage, leak)
            if leak > config.leakage_threshold:
                if config.leakage_policy == "raise":
                    raise LeakageError(f"top Fock population {leak:.3g} in batch column {b}")
                d.leakage_flagged = True
            if d.norm_error > config.trace_tolerance:
                raise IntegrationError(f"norm drift {d.norm_error:.3g} in batch column {b}")
        return psi

    for k in range(n_steps):
        if k == k_echo:
            C = echo_eig @ C
        C = stepper.step(C, paths[:, k])
        if (k + 1) % chk_every == 0 or k + 1 == n_steps:
            psi = check(C)
    return psi, diags


def integrate_pure(H: Operator | SampledHamiltonian, psi0: QuantumState, t_final: float,
                   config: IntegratorConfig = IntegratorConfig(), echo_at: float | None = None,
                   free: FreeSplit | None = None, echo_op: Operator | None = None,
                   observables: dict | None = None) -> Trajectory:
    """Evolve a pure state under a static or noise-sampled Hamiltonian.

    For a sampled Hamiltonian the noise value is held constant over each noise
    step; fixed-step methods use an integer number of sub-steps per noise step.
    """
    if psi0.kind != "pure":
        raise ValueError("integrate_pure needs a pure state")
    layout = psi0.layout
    echo_op = _echo_or_default(layout, echo_at, echo_op)
    if isinstance(H, SampledHamiltonian):
        n_steps = _check_grid(t_final, H.dt, "t_final")
        if n_steps > len(H.values):
            raise ValueError("noise path shorter than the integration window")
        if config.method == "exact":
            psi, diags = propagate_batch(H, psi0, H.values[None, :n_steps], echo_at, config,
                                         echo_op)
            return Trajectory(times=np.array([0.0, t_final]), final=psi[:, 0],
                              diagnostics=diags[0])
        return _integrate_sampled_stepping(H, psi0, n_steps, config, echo_at, free, echo_op,
                                           observables)
    if config.method == "exact":
        return _integrate_static_eigen(H, psi0, t_final, config, echo_at, echo_op, observables)
    gen, to_frame, to_lab, phases, echo_f, wfast = _frame_tools(
        H, DissipatorSet.empty(), free, config, echo_op, pure=True)
    return _evolve(psi0.data, to_frame, to_lab, gen, phases, echo_f, layout, t_final, config,
                   echo_at, wfast, observables)


def _integrate_sampled_stepping(H: SampledHamiltonian, psi0, n_steps, config, echo_at, free,
                                echo_op, observables):
    """Fixed-step RK4 over a sampled Hamiltonian, sub-steps aligned to the noise grid."""
    from .master import _rk4_steps, _rk4ip_steps, LindbladGenerator
    layout = psi0.layout
    k_echo = _check_grid(echo_at, H.dt, "echo time") if echo_at is not None else None
    gen0, to_frame, to_lab, phases_fn, echo_f, wfast = _frame_tools(
        H.static, DissipatorSet.empty(), free, config, echo_op, pure=True)
    noise_f = free.to_frame(H.noise_op.csr()) if free is not None else H.noise_op.csr()
    base = gen0.H
    h_max = config.step_size(wfast)
    sub = max(1, math.ceil(H.dt / h_max - 1e-9))
    h = H.dt / sub
    phases = phases_fn(h) if config.method == "rk4ip" else None
    y = to_frame(psi0.data)
    diag = RunDiagnostics(dt=h)
    for k in range(n_steps):
        if k == k_echo:
            y = echo_f @ y
        x = float(H.values[k])
        g = LindbladGenerator((base + x * noise_f).tocsr(), []) if x else gen0
        if config.method == "rk4":
            y = _rk4_steps(g, y, h, sub)
        else:
            y = _rk4ip_steps(g, phases, y, h, sub)
        diag.n_steps += sub
    psi = to_lab(y)
    diag.norm_error = abs(np.linalg.norm(psi) - 1.0)
    diag.max_leakage = top_fock_population(psi, layout)
    return Trajectory(times=np.array([0.0, n_steps * H.dt]), final=psi, diagnostics=diag)
