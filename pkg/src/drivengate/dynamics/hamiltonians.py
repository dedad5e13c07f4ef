"""Model Hamiltonians of the driven sideband gate and the single-ion Raman system.

Gate models live on the layout ``(qubit, qubit, com, zz)`` in the frame where the
driven single-sideband Hamiltonian is static:

    H = sum_n delta_n a_n^+ a_n + (Omega_d/2) sum_i sigma_i^x
        + sum_{i,n} (F_in sigma_i^+ a_n + h.c.)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..tensor import HilbertLayout, Operator, embed, embed_many, ladder, number, pauli

KINDS = ("dss-prime", "x-force", "rsb", "lambda-full")


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Parameters of one model Hamiltonian.

    Gate kinds use ``F`` (rad/s, ``[ion, mode]``), ``delta`` and ``Omega_d``.
    ``lambda-full`` uses ``Omega1``, ``Omega2``, ``Delta`` and ``delta_L``.
    ``noise_values`` (rad/s, one per OU step) makes the spec sampled: each value
    is an offset of the effective Rabi frequency relative to ``omega_L_ref``.
    """
    kind: str
    F: np.ndarray | None = None
    delta: np.ndarray | None = None
    Omega_d: float = 0.0
    Omega1: complex = 0.0
    Omega2: complex = 0.0
    Delta: float = 0.0
    delta_L: float = 0.0
    omega_L_ref: float | None = None
    noise_values: np.ndarray | None = None
    noise_dt: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.kind != "lambda-full":
            if self.F is None or self.delta is None:
                raise ValueError(f"{self.kind} needs F and delta")
            F = np.asarray(self.F, dtype=complex)
            if F.shape != (2, 2):
                raise ValueError("F must be a 2x2 [ion, mode] matrix")
            object.__setattr__(self, "F", F)
            object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        if self.noise_values is not None:
            if self.omega_L_ref is None or not self.noise_dt:
                raise ValueError("sampled spec needs omega_L_ref and noise_dt")
            object.__setattr__(self, "noise_values", np.asarray(self.noise_values, dtype=float))

    @property
    def time_dependence(self) -> str:
        return "static" if self.noise_values is None else "sampled"

    @classmethod
    def from_plan(cls, plan, kind: str = "dss-prime", **kw) -> "HamiltonianSpec":
        return cls(kind=kind, F=plan.F, delta=plan.delta, Omega_d=plan.Omega_d, **kw)


def gate_layout_nmax(layout: HilbertLayout) -> int:
    dims = layout.factor_dims
    if len(dims) != 4 or dims[0] != 2 or dims[1] != 2 or dims[2] != dims[3]:
        raise ValueError(f"gate models need layout (2, 2, n+1, n+1), got {dims}")
    return dims[2] - 1


def _coupling(F: np.ndarray, layout: HilbertLayout, spin: Operator) -> Operator:
    """sum_{i,n} F_in S_i a_n + h.c."""
    n_max = gate_layout_nmax(layout)
    a = ladder(n_max)
    total = None
    for i in range(2):
        for n in range(2):
            if F[i, n] == 0:
                continue
            term = embed_many({i: spin, 2 + n: a}, layout) * F[i, n]
            total = term if total is None else total + term
    if total is None:
        return Operator(sp.csr_matrix((layout.total_dim, layout.total_dim), dtype=complex),
                        hermitian=True)
    return Operator((total + total.dag()).matrix, hermitian=True)


def free_hamiltonian(delta, Omega_d: float, layout: HilbertLayout) -> Operator:
    """Mode detunings plus carrier drive; diagonal in the sigma^x basis of both qubits."""
    n_max = gate_layout_nmax(layout)
    num = number(n_max)
    H = embed(num, 2, layout) * float(delta[0]) + embed(num, 3, layout) * float(delta[1])
    if Omega_d:
        sx = pauli("x")
        H = H + (embed(sx, 0, layout) + embed(sx, 1, layout)) * (Omega_d / 2)
    return H


def noise_operator(spec: HamiltonianSpec, layout: HilbertLayout) -> Operator:
    """dH/d(Delta Omega_L): every sideband coupling scales with the Rabi frequency."""
    if spec.omega_L_ref is None:
        raise ValueError("noise operator needs omega_L_ref")
    F = spec.F / spec.omega_L_ref
    spin = pauli("x") * 0.5 if spec.kind == "x-force" else pauli("plus")
    return _coupling(F, layout, spin)


def lambda_hamiltonian(Omega1, Omega2, Delta, delta_L) -> Operator:
    """Three-level Raman system on basis (|down>, |up>, |e>) in the two-photon frame."""
    H = np.zeros((3, 3), dtype=complex)
    H[1, 1] = -delta_L
    H[2, 2] = Delta
    H[2, 0] = Omega1 / 2
    H[2, 1] = Omega2 / 2
    H[0, 2] = np.conj(H[2, 0])
    H[1, 2] = np.conj(H[2, 1])
    return Operator(H, hermitian=True)


def build_hamiltonian(spec: HamiltonianSpec, layout: HilbertLayout,
                      noise_value: float = 0.0) -> Operator:
    """Static operator for ``spec``; ``noise_value`` adds that Rabi-frequency offset."""
    if spec.kind == "lambda-full":
        if layout.factor_dims != (3,):
            raise ValueError("lambda-full needs a single 3-level factor")
        return lambda_hamiltonian(spec.Omega1, spec.Omega2, spec.Delta, spec.delta_L)
    F = spec.F
    if noise_value:
        F = F * (1.0 + noise_value / spec.omega_L_ref)
    if spec.kind == "dss-prime":
        H = free_hamiltonian(spec.delta, spec.Omega_d, layout) + _coupling(F, layout, pauli("plus"))
    elif spec.kind == "rsb":
        H = free_hamiltonian(spec.delta, 0.0, layout) + _coupling(F, layout, pauli("plus"))
    else:
        H = free_hamiltonian(spec.delta, 0.0, layout) + _coupling(F, layout, pauli("x") * 0.5)
    return Operator(H.matrix, hermitian=True)


@dataclass(frozen=True, eq=False)
class SampledHamiltonian:
    """H(t) = H_static + x_k V on [k dt, (k+1) dt), x_k the sampled Rabi offset."""
    static: Operator
    noise_op: Operator
    values: np.ndarray
    dt: float

    def at(self, k: int) -> Operator:
        return Operator((self.static + self.noise_op * float(self.values[k])).matrix,
                        hermitian=True)

    @property
    def t_final(self) -> float:
        return len(self.values) * self.dt


def build_sampled(spec: HamiltonianSpec, layout: HilbertLayout) -> SampledHamiltonian:
    if spec.noise_values is None:
        raise ValueError("spec has no sampled noise values")
    base = HamiltonianSpec(kind=spec.kind, F=spec.F, delta=spec.delta, Omega_d=spec.Omega_d,
                           omega_L_ref=spec.omega_L_ref)
    return SampledHamiltonian(build_hamiltonian(base, layout), noise_operator(spec, layout),
                              spec.noise_values, spec.noise_dt)


def qubit_x_basis(layout: HilbertLayout) -> sp.csr_matrix:
    """Unitary W whose columns are sigma^x eigenstates on both qubits (identity on modes)."""
    gate_layout_nmax(layout)
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return embed_many({0: had, 1: had}, layout).csr()


@dataclass(frozen=True, eq=False)
class FreeSplit:
    """H = W (diag(energies) + V) W^+ with a diagonal free part."""
    W: sp.csr_matrix
    energies: np.ndarray
    V: sp.csr_matrix

    def to_frame(self, op: sp.spmatrix) -> sp.csr_matrix:
        m = (self.W.conj().T @ sp.csr_matrix(op) @ self.W).tocsr()
        m.eliminate_zeros()
        return m


def free_split(spec: HamiltonianSpec, layout: HilbertLayout, H: Operator | None = None) -> FreeSplit:
    """Split a gate Hamiltonian into its sigma^x-diagonal free part and the sideband coupling."""
    if spec.kind == "lambda-full":
        raise ValueError("no free split for the three-level model")
    if H is None:
        H = build_hamiltonian(spec, layout)
    Omega_d = spec.Omega_d if spec.kind == "dss-prime" else 0.0
    H0 = free_hamiltonian(spec.delta, Omega_d, layout)
    W = qubit_x_basis(layout)
    H0x = (W.conj().T @ H0.csr() @ W).tocsr()
    energies = H0x.diagonal().real.copy()
    off = H0x - sp.diags(energies)
    scale = max(np.max(np.abs(energies)), 1.0)
    if off.nnz and np.max(np.abs(off.data)) > 1e-12 * scale:
        raise RuntimeError("free part is not diagonal in the qubit x basis")
    V = (W.conj().T @ (H.csr() - H0.csr()) @ W).tocsr()
    V.data[np.abs(V.data) < 1e-14 * scale] = 0.0
    V.eliminate_zeros()
    return FreeSplit(W=W, energies=energies, V=V)


def echo_operator(layout: HilbertLayout) -> Operator:
    """Instantaneous refocusing pulse sigma_1^z sigma_2^z."""
    sz = pauli("z")
    return embed_many({0: sz, 1: sz}, layout)
