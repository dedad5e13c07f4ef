"""Bell-state fidelity, the ideal two-qubit gate, truth-table phases and phase-space loops."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import HilbertLayout, QuantumState, pure_reduced, partial_trace_keep

SQRT2 = np.sqrt(2.0)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
# sigma^x eigenbasis order used for truth tables: ++, +-, -+, --
X_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
SZZ = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)


@dataclass(frozen=True, eq=False)
class BellTarget:
    """Two-qubit target state; ``phi-minus`` is (|dd> - i|uu>)/sqrt(2)."""
    which: str = "phi-minus"

    @property
    def vector(self) -> np.ndarray:
        if self.which == "phi-minus":
            return np.array([1, 0, 0, -1j]) / SQRT2
        if self.which == "phi-plus":
            return np.array([1, 0, 0, 1j]) / SQRT2
        raise ValueError(f"unknown Bell target {self.which!r}")


def qubit_state(state, layout: HilbertLayout) -> np.ndarray:
    """Reduced two-qubit density matrix of a full state (vector or matrix)."""
    data = state.data if isinstance(state, QuantumState) else np.asarray(state)
    if data.shape[0] != layout.total_dim:
        raise ValueError("state does not match layout")
    if layout.factor_dims[:2] != (2, 2):
        raise ValueError("first two factors must be qubits")
    if data.ndim == 1:
        return pure_reduced(data, layout, [0, 1])
    return partial_trace_keep(data, layout, [0, 1])


def bell_fidelity(state, target: BellTarget = BellTarget(), layout: HilbertLayout | None = None,
                  clamp: bool = True) -> float:
    """tr[(|target><target| x 1_phonons) rho]."""
    if isinstance(state, QuantumState):
        layout = state.layout
    if layout is None:
        raise ValueError("layout required for raw arrays")
    rq = qubit_state(state, layout)
    phi = target.vector
    f = float(np.real(phi.conj() @ rq @ phi))
    if f < -1e-9 or f > 1 + 1e-9:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    return min(max(f, 0.0), 1.0) if clamp else f


def _x_phases(J: np.ndarray, t_g: float) -> np.ndarray:
    """Phase acquired by each sigma^x eigenstate: -t_g sum_ij J_ij s_i s_j."""
    J = np.asarray(J, dtype=float)
    return np.array([-t_g * (s @ J @ s) for s in map(np.array, X_SIGNS)])


def gate_unitary(J: np.ndarray, t_g: float) -> np.ndarray:
    """exp(-i t_g sum_ij J_ij sigma_i^x sigma_j^x) in the (|down>, |up>) product basis."""
    J = np.asarray(J, dtype=float)
    if np.max(np.abs(J - J.T)) > 1e-12 * max(np.max(np.abs(J)), 1e-300):
        raise ValueError("J must be symmetric")
    HH = np.kron(HADAMARD, HADAMARD)
    return HH @ np.diag(np.exp(1j * _x_phases(J, t_g))) @ HH


def gate_oracle(J: np.ndarray, t_g: float, psi_qubits: np.ndarray,
                with_echo: bool = False) -> np.ndarray:
    """Apply the ideal gate; ``with_echo`` appends the net sigma_1^z sigma_2^z of one echo pulse."""
    U = gate_unitary(J, t_g)
    if with_echo:
        U = SZZ @ U
    return U @ np.asarray(psi_qubits, dtype=complex)


def wrap(phase):
    """Map phases into (-pi, pi]."""
    p = np.mod(np.asarray(phase, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(p <= -np.pi + 1e-15, np.pi, p)


def truth_table_phases(J: np.ndarray, t_g: float) -> np.ndarray:
    """Phases of |++>, |+->, |-+>, |--> (sigma^x basis) relative to |++>, wrapped to (-pi, pi]."""
    ph = _x_phases(J, t_g)
    return wrap(ph - ph[0])


def x_eigenstate(s1: int, s2: int) -> np.ndarray:
    """|s1 s2>_x with |+-> = (|down> +- |up>)/sqrt(2)."""
    col = {1: 0, -1: 1}
    return np.kron(HADAMARD[:, col[s1]], HADAMARD[:, col[s2]])


def simulated_truth_table(propagate, layout: HilbertLayout, echo: bool = True) -> np.ndarray:
    """Relative phases of the four sigma^x eigenstates from a full propagation.

    ``propagate(psi0_full) -> psi_full`` runs the gate. Each input |s>_x x vacuum
    is projected at the end onto the output expected from the ideal gate (the
    echo maps |s>_x to |-s>_x) with both modes in vacuum.
    """
    n_ph = layout.total_dim // 4
    vac = np.zeros(n_ph, dtype=complex)
    vac[0] = 1.0
    amps = []
    for s1, s2 in X_SIGNS:
        psi0 = np.kron(x_eigenstate(s1, s2), vac)
        out = propagate(psi0)
        ref = x_eigenstate(-s1, -s2) if echo else x_eigenstate(s1, s2)
        amps.append(np.vdot(np.kron(ref, vac), out))
    ph = np.angle(np.array(amps))
    return wrap(ph - ph[0])


def qubit_infidelity(rho_q: np.ndarray, psi_q: np.ndarray) -> float:
    """1 - <psi|rho|psi> for a target pure two-qubit state."""
    return float(1.0 - np.real(np.vdot(psi_q, rho_q @ psi_q)))


@dataclass(frozen=True)
class PhaseSpacePoint:
    mode: str
    alpha: complex | np.ndarray
    phase: float | np.ndarray


def mode_force(F: np.ndarray, signs) -> np.ndarray:
    """f_n = sum_i s_i F_in / 2 for a sigma^x eigenstate with eigenvalues ``signs``."""
    s = np.asarray(signs, dtype=float)
    return 0.5 * (s @ np.asarray(F))


def phase_space_trajectory(F: np.ndarray, delta, signs, t, labels=("com", "zz")):
    """Interaction-picture displacement and geometric phase of each mode.

    For H_I = f a e^{-i delta t} + h.c. starting from vacuum the state is
    e^{i phi(t)} D(alpha(t))|0> with alpha = (conj(f)/delta)(1 - e^{i delta t})
    and phi = (|f|^2/delta)(t - sin(delta t)/delta).
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta == 0):
        raise ValueError("delta_n must be nonzero")
    f = mode_force(F, signs)
    t = np.asarray(t, dtype=float)
    out = []
    for n, lab in enumerate(labels):
        d = delta[n]
        alpha = (np.conj(f[n]) / d) * (1.0 - np.exp(1j * d * t))
        phi = (abs(f[n]) ** 2 / d) * (t - np.sin(d * t) / d)
        out.append(PhaseSpacePoint(mode=lab, alpha=alpha, phase=phi))
    return out


def closure_phases(F: np.ndarray, delta, t_g: float) -> np.ndarray:
    """Total geometric phase sum_n phi_n(t_g) for each sigma^x eigenstate (++, +-, -+, --)."""
    return np.array([sum(p.phase for p in phase_space_trajectory(F, delta, s, t_g))
                     for s in X_SIGNS])


def coherent_state_check(f: complex, delta: float, times, n_max: int = 15):
    """Numerically integrated (alpha, phi) for one forced mode starting in vacuum.

    Evolves H = delta a^+ a + f a + conj(f) a^+ exactly, moves to the frame
    rotating at delta and reads alpha = <a> and phi = arg <0|psi>.
    """
    from .dynamics.pure import EigenPropagator
    from .tensor import Operator, ladder
    a = ladder(n_max).dense()
    H = delta * (a.conj().T @ a) + f * a + np.conj(f) * a.conj().T
    prop = EigenPropagator(Operator(H, hermitian=True))
    vac = np.zeros(n_max + 1, dtype=complex)
    vac[0] = 1.0
    c0 = prop.to_eig(vac)
    nvec = np.arange(n_max + 1)
    alphas, phis = [], []
    for t in np.atleast_1d(times):
        psi = prop.from_eig(prop.phases(t) * c0)
        psi_i = np.exp(1j * delta * nvec * t) * psi
        alphas.append(np.vdot(psi_i, a @ psi_i))
        phis.append(np.angle(psi_i[0]))
    return np.array(alphas), np.unwrap(np.array(phis))


def extract_j12(propagate_x, layout: HilbertLayout, t_g: float) -> float:
    """J_12 from the phases the x-force propagator imprints on sigma^x eigenstates.

    phase(s) = -t_g (J_11 + J_22 + 2 J_12 s1 s2), so phase(+-) - phase(++) = 4 t_g J_12.
    Valid while |4 t_g J_12| < pi.
    """
    n_ph = layout.total_dim // 4
    vac = np.zeros(n_ph, dtype=complex)
    vac[0] = 1.0
    amp = {}
    for s in ((1, 1), (1, -1)):
        ket = np.kron(x_eigenstate(*s), vac)
        amp[s] = np.vdot(ket, propagate_x(ket))
    d = np.angle(amp[(1, -1)] / amp[(1, 1)])
    return float(d / (4 * t_g))

