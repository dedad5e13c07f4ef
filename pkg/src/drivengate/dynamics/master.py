"""Lindblad master-equation integration with echo, checkpoints and health monitors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from ..ion import CHANNELS, RamanModel, effective_scattering_rates
from ..tensor import HilbertLayout, Operator, QuantumState, embed, pauli
from ..tensor import embed as embed_local
from .hamiltonians import FreeSplit

METHODS = ("rk4", "rk4ip", "exact")
LEAKAGE_POLICIES = ("flag", "raise")
MIN_STEPS_PER_PERIOD = 20


class IntegrationError(RuntimeError):
    """Raised when a run violates a monitored tolerance."""


class LeakageError(IntegrationError):
    pass


@dataclass(frozen=True)
class Channel:
    ion: int
    label: str
    kind: str
    rate: float
    op: Operator
    layout: HilbertLayout | None = None


@dataclass(frozen=True)
class DissipatorSet:
    channels: tuple[Channel, ...]

    def __len__(self):
        return len(self.channels)

    @property
    def operators(self) -> list[Operator]:
        return [c.op for c in self.channels]

    @classmethod
    def empty(cls) -> "DissipatorSet":
        return cls(())

    def merged(self) -> list[sp.csr_matrix]:
        """Jump operators, with channels sharing an operator shape (same ion and Pauli kind) folded.

        sqrt(r1) A and sqrt(r2) A act like one channel sqrt(r1 + r2) A.
        """
        rates: dict[tuple[int, str], float] = {}
        bases: dict[tuple[int, str], sp.csr_matrix] = {}
        out = []
        for c in self.channels:
            if c.rate == 0:
                continue
            if c.kind == "custom":
                out.append(c.op.csr())
                continue
            key = (c.ion, c.kind)
            rates[key] = rates.get(key, 0.0) + c.rate
            bases.setdefault(key, c.op.csr() / math.sqrt(c.rate))
        out.extend(bases[k] * math.sqrt(rates[k]) for k in bases)
        return out


def sandwich_terms(D: DissipatorSet, frame=lambda m: m) -> list[Sandwich] | None:
    """Fast sandwich terms for ``D`` in the basis given by ``frame``, or None if unavailable."""
    pauli_ch = [c for c in D.channels if c.kind != "custom" and c.rate > 0]
    other = [c for c in D.channels if c.kind == "custom" and c.rate > 0]
    if any(c.layout is None for c in pauli_ch):
        return None
    terms = _pauli_terms(pauli_ch, lambda m: frame(m.csr())) if pauli_ch else []
    if pauli_ch and not terms:
        return None
    for c in other:
        L = frame(c.op.csr())
        sw = Sandwich.build(1.0, L, L)
        if sw is None:
            return None
        terms.append(sw)
    return terms


def gate_dissipators(raman: RamanModel, layout: HilbertLayout) -> DissipatorSet:
    """Eight effective scattering channels (four per ion) of the two-ion gate."""
    rates = effective_scattering_rates(raman)
    chans = []
    for ion in range(2):
        for label, kind in CHANNELS:
            r = rates[label]
            op = embed(pauli(kind), ion, layout) * math.sqrt(r)
            chans.append(Channel(ion=ion, label=label, kind=kind, rate=r, op=op, layout=layout))
    return DissipatorSet(tuple(chans))


def single_channel(op: Operator, rate: float, layout: HilbertLayout | None = None,
                   ion: int = 0, label: str = "custom") -> DissipatorSet:
    """One jump channel sqrt(rate) * op, optionally embedded on factor ``ion``."""
    full = embed(op, ion, layout) if layout is not None else op
    return DissipatorSet((Channel(ion=ion, label=label, kind="custom", rate=rate,
                                  op=full * math.sqrt(rate)),))


def _row_monomial(A: sp.spmatrix):
    """(perm, vals) with A[r, perm[r]] = vals[r] if every row has at most one entry, else None."""
    A = sp.csr_matrix(A)
    counts = np.diff(A.indptr)
    if np.any(counts > 1):
        return None
    perm = np.zeros(A.shape[0], dtype=np.intp)
    vals = np.zeros(A.shape[0], dtype=complex)
    rows = np.nonzero(counts)[0]
    perm[rows] = A.indices[A.indptr[rows]]
    vals[rows] = A.data[A.indptr[rows]]
    return perm, vals


@dataclass(frozen=True, eq=False)
class Sandwich:
    """The map rho -> A rho B^+ for row-monomial A and B, stored as a gather and a mask."""
    rows: np.ndarray
    cols: np.ndarray
    mask: np.ndarray

    @classmethod
    def build(cls, coef: complex, A: sp.spmatrix, B: sp.spmatrix) -> "Sandwich | None":
        ma, mb = _row_monomial(A), _row_monomial(B)
        if ma is None or mb is None:
            return None
        return cls(rows=ma[0], cols=mb[0], mask=coef * np.outer(ma[1], mb[1].conj()))

    def apply_add(self, rho: np.ndarray, out: np.ndarray) -> None:
        out += self.mask * rho.take(self.rows, axis=0).take(self.cols, axis=1)


_LOCAL_PAULIS = ("x", "y", "z")


def _pauli_terms(channels, frame) -> list[Sandwich]:
    """Sandwich terms sum_ab chi_ab P_a rho P_b for Pauli-type channels, grouped per ion."""
    basis = [np.eye(2, dtype=complex)] + [pauli(a).dense() for a in _LOCAL_PAULIS]
    by_ion: dict[int, np.ndarray] = {}
    layout = None
    for c in channels:
        local = pauli(c.kind).dense() * math.sqrt(c.rate)
        coeffs = np.array([np.trace(P.conj().T @ local) / 2 for P in basis])
        chi = np.outer(coeffs, coeffs.conj())
        by_ion[c.ion] = by_ion.get(c.ion, 0) + chi
        layout = c.layout
    terms = []
    for ion, chi in by_ion.items():
        emb = [frame(embed_local(P, ion, layout)) for P in basis]
        for a in range(4):
            for b in range(4):
                if abs(chi[a, b]) <= 1e-300:
                    continue
                sw = Sandwich.build(chi[a, b], emb[a], emb[b])
                if sw is None:
                    return []
                terms.append(sw)
    return terms


class LindbladGenerator:
    """Right-hand side -i[H, rho] + sum_k (L rho L^+ - {L^+ L, rho}/2) in a fixed basis.

    ``sandwiches`` optionally replaces the generic sparse evaluation of
    sum_k L rho L^+ by gathers (valid whenever the terms are row-monomial).
    """

    def __init__(self, H: sp.spmatrix, jumps: list[sp.spmatrix],
                 sandwiches: list[Sandwich] | None = None):
        H = sp.csr_matrix(H, dtype=complex)
        K = sp.csr_matrix(H.shape, dtype=complex)
        self.jumps = [sp.csr_matrix(L, dtype=complex) for L in jumps]
        for L in self.jumps:
            K = K + L.conj().T @ L
        self.H = H
        self.K = K.tocsr()
        self.Heff = (H - 0.5j * K).tocsr()
        self.dim = H.shape[0]
        if sandwiches is None:
            sandwiches = []
            generic = []
            for L in self.jumps:
                sw = Sandwich.build(1.0, L, L)
                if sw is None:
                    generic.append(L)
                else:
                    sandwiches.append(sw)
        else:
            generic = []
        self.sandwiches = sandwiches
        self.generic = [(L, L.conj().tocsr()) for L in generic]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Generator applied to a state vector or to a Hermitian matrix."""
        X = self.Heff @ rho
        if rho.ndim == 1:
            # pure-state (Schrodinger) right-hand side, jumps ignored
            return -1j * X
        # -i Heff rho + i rho Heff^+ = i (X^+ - X) for Hermitian rho
        out = X.conj().T - X
        out *= 1j
        for sw in self.sandwiches:
            sw.apply_add(rho, out)
        for L, Lc in self.generic:
            Y = L @ rho
            # L rho L^+ = (Lc Y^T)^T with Y = L rho
            out += (Lc @ Y.T).T
        return out

    def spectral_bounds(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue of H (Gershgorin bound for large H)."""
        if self.dim <= 1500:
            e = np.linalg.eigvalsh(self.H.toarray())
            return float(e[0]), float(e[-1])
        absrow = np.asarray(abs(self.H).sum(axis=1)).ravel()
        return -float(absrow.max()), float(absrow.max())

    def dissipation_norm(self) -> float:
        if self.K.nnz == 0:
            return 0.0
        return float(np.max(np.asarray(abs(self.K).sum(axis=1))))


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``rk4`` is classic fixed-step Runge-Kutta on the full generator, ``rk4ip`` the
    same scheme in the interaction picture of the diagonal free part (requires a
    free split), ``exact`` a Chebyshev expansion of the propagator accurate to
    ``tol`` per segment.
    """
    method: str = "exact"
    dt: float | None = None
    steps_per_period: int = 40
    tol: float = 1e-13
    leakage_threshold: float = 1e-6
    leakage_policy: str = "flag"
    trace_tolerance: float = 1e-8
    positivity_floor: float = -1e-7
    n_checkpoints: int = 16
    store_states: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.leakage_policy not in LEAKAGE_POLICIES:
            raise ValueError(f"leakage_policy must be one of {LEAKAGE_POLICIES}")
        if self.steps_per_period < MIN_STEPS_PER_PERIOD:
            raise ValueError(f"steps_per_period must be >= {MIN_STEPS_PER_PERIOD}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")

    def step_size(self, omega_fast: float) -> float:
        """Largest allowed fixed step, resolving ``omega_fast`` with the configured density."""
        limit = 2 * math.pi / omega_fast / MIN_STEPS_PER_PERIOD if omega_fast > 0 else math.inf
        if self.dt is not None:
            if self.dt > limit * (1 + 1e-12):
                raise ValueError(f"dt = {self.dt:.3g} s exceeds (2 pi / omega_fast) / "
                                 f"{MIN_STEPS_PER_PERIOD} = {limit:.3g} s")
            return self.dt
        if omega_fast <= 0:
            raise ValueError("no frequency scale to choose dt from; set dt explicitly")
        return 2 * math.pi / omega_fast / self.steps_per_period


@dataclass
class RunDiagnostics:
    trace_error: float = 0.0
    norm_error: float = 0.0
    min_eigenvalue: float = 0.0
    max_leakage: float = 0.0
    leakage_flagged: bool = False
    n_steps: int = 0
    dt: float | None = None

    @property
    def accepted(self) -> bool:
        return not self.leakage_flagged


@dataclass
class Trajectory:
    times: np.ndarray
    final: np.ndarray
    diagnostics: RunDiagnostics
    states: list | None = None
    observables: dict = field(default_factory=dict)


def top_fock_population(data: np.ndarray, layout: HilbertLayout) -> float:
    """Largest population of the highest retained Fock level over the two modes."""
    dims = layout.factor_dims
    if len(dims) != 4:
        return 0.0
    if data.ndim == 1:
        p = (np.abs(data) ** 2).reshape(dims)
    else:
        p = np.real(np.diagonal(data)).reshape(dims)
    return float(max(p[:, :, -1, :].sum(), p[:, :, :, -1].sum()))


class _Monitor:
    """Collects trace/positivity/leakage diagnostics at checkpoints."""

    def __init__(self, layout, config: IntegratorConfig, observables, to_lab):
        self.layout = layout
        self.config = config
        self.diag = RunDiagnostics()
        self.times: list[float] = []
        self.states: list[np.ndarray] | None = [] if config.store_states else None
        self.observables = observables or {}
        self.values: dict[str, list] = {k: [] for k in self.observables}
        self.to_lab = to_lab

    def __call__(self, t: float, data: np.ndarray):
        d = self.diag
        cfg = self.config
        if data.ndim == 2:
            tr = np.trace(data).real
            d.trace_error = max(d.trace_error, abs(tr - 1.0))
            herm = 0.5 * (data + data.conj().T)
            d.min_eigenvalue = min(d.min_eigenvalue, float(np.linalg.eigvalsh(herm)[0]))
            if d.trace_error > cfg.trace_tolerance:
                raise IntegrationError(f"trace drift {d.trace_error:.3g} at t = {t:.6g} s")
            if d.min_eigenvalue < cfg.positivity_floor:
                raise IntegrationError(
                    f"negative eigenvalue {d.min_eigenvalue:.3g} at t = {t:.6g} s")
        else:
            nrm = float(np.linalg.norm(data))
            d.norm_error = max(d.norm_error, abs(nrm - 1.0))
            if d.norm_error > cfg.trace_tolerance:
                raise IntegrationError(f"norm drift {d.norm_error:.3g} at t = {t:.6g} s")
        leak = top_fock_population(data, self.layout)
        d.max_leakage = max(d.max_leakage, leak)
        if leak > cfg.leakage_threshold:
            if cfg.leakage_policy == "raise":
                raise LeakageError(f"top Fock population {leak:.3g} exceeds "
                                   f"{cfg.leakage_threshold:.3g} at t = {t:.6g} s")
            d.leakage_flagged = True
        self.times.append(t)
        if self.states is not None or self.observables:
            lab = self.to_lab(data)
            if self.states is not None:
                self.states.append(lab)
            for name, fn in self.observables.items():
                self.values[name].append(fn(lab))


def chebyshev_propagate(gen, v: np.ndarray, t: float, radius: float, center: float = 0.0,
                        damping: float = 0.0, tol: float = 1e-13) -> tuple[np.ndarray, int]:
    """exp(t G) v for a generator with i G spectrum near [center - radius, center + radius].

    Expands exp(-i z x) in Chebyshev polynomials of x = (i G - center) / r with
    r slightly above ``radius``; ``damping`` bounds the real part of the spectrum
    of G (dissipation) and only widens the margin. Returns the result and the
    number of terms used.
    """
    r = 1.01 * radius + damping + 1e-300
    z = r * t
    kmax = int(z + 20 * z ** (1 / 3) + 40)
    coef = jv(np.arange(kmax + 1), z)
    # keep terms until the Bessel tail is negligible
    tail = np.nonzero(np.abs(coef[int(z):]) > tol * 1e-2)[0]
    kmax = int(z) + (int(tail[-1]) + 2 if tail.size else 2)
    kmax = min(kmax, len(coef) - 1)

    if v.ndim == 2 and not center:
        # For a Hermiticity-preserving generator T_k = i^k S_k with Hermitian S_k,
        # S_{k+1} = (2/r) G S_k + S_{k-1}, and the series has real coefficients.
        # This keeps every generator call on Hermitian input.
        S0 = v
        S1 = gen(v) / r
        acc = coef[0] * S0 + (2 * coef[1]) * S1
        for k in range(2, kmax + 1):
            S2 = (2 / r) * gen(S1) + S0
            acc += (2 * coef[k]) * S2
            S0, S1 = S1, S2
        return acc, kmax

    def apply(x):
        out = (1j / r) * gen(x)
        if center:
            out -= (center / r) * x
        return out

    T0 = v
    T1 = apply(v)
    acc = coef[0] * T0 + 2 * (-1j) * coef[1] * T1
    phase = -1j
    for k in range(2, kmax + 1):
        T2 = 2 * apply(T1) - T0
        phase *= -1j
        acc += (2 * phase * coef[k]) * T2
        T0, T1 = T1, T2
    if center:
        acc *= np.exp(-1j * center * t)
    return acc, kmax


def _rk4_steps(gen, y: np.ndarray, h: float, n: int) -> np.ndarray:
    for _ in range(n):
        k1 = gen(y)
        k2 = gen(y + (0.5 * h) * k1)
        k3 = gen(y + (0.5 * h) * k2)
        k4 = gen(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _rk4ip_steps(gen, phases: np.ndarray, y: np.ndarray, h: float, n: int) -> np.ndarray:
    """RK4 in the interaction picture; ``phases`` multiplies by exp(L0 h/2) elementwise."""
    for _ in range(n):
        yI = phases * y
        k1 = phases * gen(y)
        k2 = gen(yI + (0.5 * h) * k1)
        k3 = gen(yI + (0.5 * h) * k2)
        k4 = gen(phases * (yI + h * k3))
        y = phases * (yI + (h / 6.0) * (k1 + 2 * k2 + 2 * k3)) + (h / 6.0) * k4
    return y


def _segments(t_final: float, echo_at: float | None) -> list[float]:
    if echo_at is None:
        return [t_final]
    if not 0 < echo_at < t_final:
        raise ValueError("echo time must lie strictly inside the run")
    return [echo_at, t_final - echo_at]


def _evolve(data, lab_to_frame, frame_to_lab, gen, free_phase_fn, echo_frame, layout,
            t_final, config: IntegratorConfig, echo_at, omega_fast, observables):
    """Shared driver for density matrices (ndim 2) and state vectors (ndim 1)."""
    y = lab_to_frame(data)
    mon = _Monitor(layout, config, observables, frame_to_lab)
    diag = mon.diag
    t = 0.0
    mon(t, y)
    segs = _segments(t_final, echo_at)
    if config.method == "exact":
        emin, emax = gen.spectral_bounds()
        if y.ndim == 2:
            # commutator eigenvalues E_i - E_j are centred on zero
            radius, center = emax - emin, 0.0
        else:
            radius, center = 0.5 * (emax - emin), 0.5 * (emax + emin)
        damp = gen.dissipation_norm()
    else:
        h_max = config.step_size(omega_fast)
    for si, seg in enumerate(segs):
        n_chk = max(1, config.n_checkpoints)
        if config.method == "exact":
            for _ in range(n_chk):
                y, _k = chebyshev_propagate(gen, y, seg / n_chk, radius, center, damp,
                                            config.tol)
                t += seg / n_chk
                if y.ndim == 2:
                    y = 0.5 * (y + y.conj().T)
                mon(t, y)
        else:
            n_steps = max(n_chk, math.ceil(seg / h_max - 1e-9))
            n_steps = math.ceil(n_steps / n_chk) * n_chk
            h = seg / n_steps
            diag.dt = h if diag.dt is None else min(diag.dt, h)
            per = n_steps // n_chk
            phases = free_phase_fn(h) if config.method == "rk4ip" else None
            for _ in range(n_chk):
                if config.method == "rk4":
                    y = _rk4_steps(gen, y, h, per)
                else:
                    y = _rk4ip_steps(gen, phases, y, h, per)
                diag.n_steps += per
                t += per * h
                mon(t, y)
        if si == 0 and echo_at is not None:
            if y.ndim == 2:
                y = echo_frame @ y
                y = (echo_frame.conj() @ y.T).T
            else:
                y = echo_frame @ y
    return Trajectory(times=np.array(mon.times), final=frame_to_lab(y), diagnostics=diag,
                      states=mon.states,
                      observables={k: np.array(v) for k, v in mon.values.items()})


def _frame_tools(H: Operator, D: DissipatorSet, free: FreeSplit | None, config, echo_op, pure):
    """Generator, basis maps and free-evolution phases for the chosen method."""
    jumps = [] if pure else D.merged()
    if free is not None:
        W = free.W
        Wh = W.conj().T.tocsr()
        if config.method == "rk4ip":
            Hf = free.V
        else:
            Hf = (free.V + sp.diags(free.energies)).tocsr()
        jumps = [free.to_frame(L) for L in jumps]
        echo_f = free.to_frame(echo_op.csr()) if echo_op is not None else None

        def to_frame(x):
            if x.ndim == 1:
                return np.asarray(Wh @ x)
            return np.asarray((Wh @ (Wh @ x).conj().T).conj().T)

        def to_lab(x):
            if x.ndim == 1:
                return np.asarray(W @ x)
            return np.asarray((W @ (W @ x).conj().T).conj().T)
        E = free.energies
        omega_fast = float(np.max(E) - np.min(E)) if config.method == "rk4ip" else None
    else:
        if config.method == "rk4ip":
            raise ValueError("rk4ip needs a free split of the Hamiltonian")
        Hf = H.csr()
        echo_f = echo_op.csr() if echo_op is not None else None
        to_frame = to_lab = np.array
        E = None
        omega_fast = None
    sws = None
    if not pure and len(D):
        sws = sandwich_terms(D, free.to_frame if free is not None else (lambda m: m))
    gen = LindbladGenerator(Hf, jumps, sws)
    if omega_fast is None:
        # fastest frequency of the stepped generator (1-norm bound of H); density
        # matrices oscillate at E_i - E_j, up to twice that bound
        omega_fast = float(np.max(np.asarray(abs(gen.Heff).sum(axis=1))))
        if not pure:
            omega_fast *= 2.0
    else:
        # the coupling still links free levels split by up to the full free width;
        # resolve whichever of that width and the coupling norm is faster
        omega_fast = max(omega_fast, float(np.max(np.asarray(abs(gen.Heff).sum(axis=1)))))

    def free_phases(h):
        if pure:
            return np.exp(-0.5j * E * h)
        p = np.exp(-0.5j * E * h)
        return np.outer(p, p.conj())
    return gen, to_frame, to_lab, free_phases, echo_f, omega_fast


def integrate_master(H: Operator, D: DissipatorSet, rho0: QuantumState, t_final: float,
                     config: IntegratorConfig = IntegratorConfig(), echo_at: float | None = None,
                     free: FreeSplit | None = None, echo_op: Operator | None = None,
                     observables: dict | None = None) -> Trajectory:
    """Integrate the Lindblad equation from ``rho0`` to ``t_final``.

    With ``echo_at`` the instantaneous unitary ``echo_op`` (default sigma_1^z
    sigma_2^z) is applied as rho -> U rho U^+ exactly at that time.
    ``free`` (from :func:`free_split`) lets the integrator work in the sigma^x
    frame, required for ``rk4ip``. ``observables`` maps names to functions of rho
    evaluated at every checkpoint.
    """
    layout = rho0.layout
    if H.dim != layout.total_dim:
        raise ValueError("Hamiltonian and state dimensions differ")
    if echo_at is not None and echo_op is None:
        from .hamiltonians import echo_operator
        echo_op = echo_operator(layout)
    gen, to_frame, to_lab, phases, echo_f, wfast = _frame_tools(H, D, free, config, echo_op,
                                                                pure=False)
    return _evolve(rho0.density(), to_frame, to_lab, gen, phases, echo_f, layout, t_final,
                   config, echo_at, wfast, observables)


def lindblad_rhs(H: Operator, D: DissipatorSet, rho: np.ndarray) -> np.ndarray:
    """d rho / dt of the Lindblad equation (sparse operators, dense rho)."""
    return LindbladGenerator(H.csr(), [c.op.csr() for c in D.channels])(np.asarray(rho))


def liouvillian(H: Operator, D: DissipatorSet) -> sp.csr_matrix:
    """Superoperator acting on row-major vec(rho), used for small-system checks."""
    n = H.dim
    I = sp.identity(n, format="csr", dtype=complex)
    Hm = H.csr()
    Lv = -1j * (sp.kron(Hm, I) - sp.kron(I, Hm.T))
    for c in D.channels:
        L = c.op.csr()
        LdL = (L.conj().T @ L).tocsr()
        Lv = Lv + sp.kron(L, L.conj()) - 0.5 * sp.kron(LdL, I) - 0.5 * sp.kron(I, LdL.T)
    return Lv.tocsr()
