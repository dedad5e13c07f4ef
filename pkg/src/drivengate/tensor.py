"""Operator and state algebra over a fixed tensor factorization.

Project-wide conventions:

* single-qubit basis order is ``(|down>, |up>)``;
* factor order of the gate model is ``(qubit 1, qubit 2, COM mode, zig-zag mode)``;
* phonon ladders are hard-truncated at ``n_max`` and ``a^dagger`` is the adjoint
  of the truncated ``a``.

Operators hold a scipy CSR matrix (or a dense array for small locals); states
hold dense numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-9


class DimensionError(ValueError):
    """Raised when operator/state dimensions do not match."""


@dataclass(frozen=True)
class HilbertLayout:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise ValueError("layout needs at least one factor")
        if any(d < 2 for d in dims):
            raise ValueError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def gate(cls, n_max: int) -> "HilbertLayout":
        """Two qubits and two phonon modes truncated at ``n_max``."""
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        return cls((2, 2, n_max + 1, n_max + 1))

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def basis_index(self, *digits: int) -> int:
        """Flat index of the product basis state with the given per-factor labels."""
        return int(np.ravel_multi_index(digits, self.factor_dims))

    def basis_vector(self, *digits: int) -> np.ndarray:
        v = np.zeros(self.total_dim, dtype=complex)
        v[self.basis_index(*digits)] = 1.0
        return v


ArrayLike = Union[np.ndarray, sp.spmatrix]


class Operator:
    """Square complex operator, sparse (CSR) or dense.

    Instances are treated as immutable; arithmetic returns new operators.
    """

    __slots__ = ("_mat", "hermitian")

    def __init__(self, matrix: ArrayLike, hermitian: bool = False):
        if sp.issparse(matrix):
            mat = sp.csr_matrix(matrix, dtype=complex)
            mat.sum_duplicates()
            mat.eliminate_zeros()
            finite = np.all(np.isfinite(mat.data))
        else:
            mat = np.array(matrix, dtype=complex)
            finite = np.all(np.isfinite(mat))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"operator must be square, got shape {mat.shape}")
        if not finite:
            raise ValueError("operator has non-finite entries")
        self._mat = mat
        self.hermitian = bool(hermitian)
        if hermitian and not self.is_hermitian():
            raise ValueError("operator flagged Hermitian is not Hermitian")

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self._mat)

    @property
    def nnz(self) -> int:
        if self.is_sparse:
            return self._mat.nnz
        return int(np.count_nonzero(self._mat))

    def csr(self) -> sp.csr_matrix:
        if self.is_sparse:
            return self._mat
        return sp.csr_matrix(self._mat)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self._mat.toarray()
        return self._mat.copy()

    @property
    def matrix(self) -> ArrayLike:
        return self._mat

    def dag(self) -> "Operator":
        return Operator(self._mat.conj().T, hermitian=self.hermitian)

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        diff = self._mat - self._mat.conj().T
        if sp.issparse(diff):
            return diff.nnz == 0 or np.max(np.abs(diff.data)) <= atol
        return np.max(np.abs(diff), initial=0.0) <= atol

    def trace(self) -> complex:
        return complex(self._mat.diagonal().sum())

    def _coerce(self, other) -> ArrayLike:
        if isinstance(other, Operator):
            if other.dim != self.dim:
                raise DimensionError(f"dimension mismatch {self.dim} vs {other.dim}")
            return other._mat
        raise TypeError(f"cannot combine Operator with {type(other).__name__}")

    def __add__(self, other):
        m = self._coerce(other)
        herm = self.hermitian and other.hermitian
        return Operator(self._mat + m, hermitian=herm)

    def __sub__(self, other):
        m = self._coerce(other)
        herm = self.hermitian and other.hermitian
        return Operator(self._mat - m, hermitian=herm)

    def __neg__(self):
        return Operator(-self._mat, hermitian=self.hermitian)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        scalar = complex(scalar)
        herm = self.hermitian and scalar.imag == 0.0
        return Operator(self._mat * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self._mat @ self._coerce(other))
        return self._mat @ other

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"Operator(dim={self.dim}, {kind}, nnz={self.nnz}, hermitian={self.hermitian})"


def identity(dim: int) -> Operator:
    return Operator(sp.identity(dim, dtype=complex, format="csr"), hermitian=True)


_PAULI = {
    "x": (np.array([[0, 1], [1, 0]]), True),
    "y": (np.array([[0, 1j], [-1j, 0]]), True),
    "z": (np.array([[-1, 0], [0, 1]]), True),
    # sigma+ = |up><down|; basis order (down, up)
    "plus": (np.array([[0, 0], [1, 0]]), False),
    "minus": (np.array([[0, 1], [0, 0]]), False),
}


def pauli(axis: str) -> Operator:
    """Single-qubit Pauli-type operator in the (|down>, |up>) basis.

    ``axis`` is one of ``x``, ``y``, ``z``, ``plus``, ``minus``. With this basis
    order sigma^z = |up><up| - |down><down| = diag(-1, +1) and
    sigma^y = i(sigma^- - sigma^+).
    """
    try:
        mat, herm = _PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None
    return Operator(mat.astype(complex), hermitian=herm)


def ladder(n_max: int) -> Operator:
    """Truncated annihilation operator on Fock states 0..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    amps = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    return Operator(sp.diags(amps, offsets=1, format="csr", dtype=complex))


def number(n_max: int) -> Operator:
    return Operator(sp.diags(np.arange(n_max + 1, dtype=float), format="csr", dtype=complex),
                    hermitian=True)


def embed(local: Operator | np.ndarray, factor_index: int, layout: HilbertLayout) -> Operator:
    """Place ``local`` on one factor of ``layout``, identity elsewhere."""
    return embed_many({factor_index: local}, layout)


def embed_many(locals_: dict, layout: HilbertLayout) -> Operator:
    """Tensor product of local operators on distinct factors (identity elsewhere)."""
    mats = []
    herm = True
    for idx, dim in enumerate(layout.factor_dims):
        if idx in locals_:
            loc = locals_[idx]
            if not isinstance(loc, Operator):
                loc = Operator(np.asarray(loc))
            if loc.dim != dim:
                raise DimensionError(
                    f"local operator of dim {loc.dim} on factor {idx} of dim {dim}")
            herm = herm and loc.hermitian
            mats.append(loc.csr())
        else:
            mats.append(sp.identity(dim, dtype=complex, format="csr"))
    bad = set(locals_) - set(range(layout.n_factors))
    if bad:
        raise DimensionError(f"factor indices {sorted(bad)} outside layout")
    mat = reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)
    return Operator(mat, hermitian=herm)


@dataclass(frozen=True, eq=False)
class QuantumState:
    kind: str
    data: np.ndarray
    layout: HilbertLayout

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        dim = self.layout.total_dim
        if self.kind == "pure":
            if data.shape != (dim,):
                raise DimensionError(f"pure state needs shape ({dim},), got {data.shape}")
            if abs(np.linalg.norm(data) - 1.0) > NORM_ATOL:
                raise ValueError("pure state is not normalized")
        elif self.kind == "mixed":
            if data.shape != (dim, dim):
                raise DimensionError(f"density matrix needs shape ({dim}, {dim}), got {data.shape}")
            if abs(np.trace(data) - 1.0) > NORM_ATOL:
                raise ValueError("density matrix trace is not 1")
            if np.max(np.abs(data - data.conj().T)) > HERMITIAN_ATOL:
                raise ValueError("density matrix is not Hermitian")
            if np.linalg.eigvalsh(data)[0] < -NORM_ATOL:
                raise ValueError("density matrix has negative eigenvalues")
        else:
            raise ValueError(f"kind must be 'pure' or 'mixed', got {self.kind!r}")
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, vec, layout: HilbertLayout) -> "QuantumState":
        return cls("pure", vec, layout)

    @classmethod
    def mixed(cls, rho, layout: HilbertLayout) -> "QuantumState":
        return cls("mixed", rho, layout)

    @classmethod
    def product(cls, layout: HilbertLayout, *digits: int) -> "QuantumState":
        return cls("pure", layout.basis_vector(*digits), layout)

    def density(self) -> np.ndarray:
        if self.kind == "mixed":
            return self.data
        return np.outer(self.data, self.data.conj())

    def expect(self, op: Operator) -> complex:
        if self.kind == "pure":
            return complex(np.vdot(self.data, op @ self.data))
        return complex(np.trace((op @ self.data)))


def apply(op: Operator, state: QuantumState | np.ndarray, side: str = "left") -> np.ndarray:
    """Apply ``op`` to a state vector or density matrix.

    ``side`` is ``left`` (A psi or A rho), ``right`` (rho A) or ``sandwich``
    (A rho A^dagger). Sparse operators are never densified.
    """
    data = state.data if isinstance(state, QuantumState) else np.asarray(state)
    if data.shape[0] != op.dim:
        raise DimensionError(f"operator dim {op.dim} vs state dim {data.shape[0]}")
    mat = op.matrix
    if side == "left":
        return np.asarray(mat @ data)
    if data.ndim != 2:
        raise DimensionError(f"side={side!r} needs a density matrix")
    if side == "right":
        # rho A = (A^T rho^T)^T keeps the sparse factor on the left
        return np.asarray((mat.T @ data.T).T)
    if side == "sandwich":
        left = mat @ data
        return np.asarray((mat.conj() @ np.asarray(left).T).T)
    raise ValueError(f"unknown side {side!r}")


def partial_trace_keep(rho: np.ndarray, layout: HilbertLayout, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the factors listed in ``keep`` (in layout order)."""
    keep = sorted(keep)
    dims = layout.factor_dims
    n = len(dims)
    rho_t = np.asarray(rho).reshape(dims + dims)
    trace_out = [i for i in range(n) if i not in keep]
    # contract each traced factor's row and column index
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in trace_out:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, rho_t)
    d = math.prod(dims[i] for i in keep)
    return red.reshape(d, d)


def pure_reduced(psi: np.ndarray, layout: HilbertLayout, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state without forming the full projector."""
    keep = sorted(keep)
    dims = layout.factor_dims
    rest = [i for i in range(len(dims)) if i not in keep]
    t = np.asarray(psi).reshape(dims).transpose(list(keep) + rest)
    d = math.prod(dims[i] for i in keep)
    m = t.reshape(d, -1)
    return m @ m.conj().T
