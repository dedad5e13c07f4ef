import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from drivengate.tensor import (DimensionError, HilbertLayout, Operator, QuantumState, apply, embed,
                               embed_many, identity, ladder, number, partial_trace_keep, pauli,
                               pure_reduced)

DOWN = np.array([1, 0], dtype=complex)
UP = np.array([0, 1], dtype=complex)


def rand_op(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def rand_density(rng, d):
    A = rand_op(rng, d)
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def test_pauli_definitions():
    assert np.allclose(pauli("z").dense() @ DOWN, -DOWN)
    assert np.allclose(pauli("plus").dense() @ DOWN, UP)
    assert np.allclose(pauli("minus").dense() @ UP, DOWN)
    x = pauli("plus") + pauli("minus")
    assert np.array_equal(x.dense(), pauli("x").dense())
    assert x.is_hermitian()
    # sigma^y = i (sigma^- - sigma^+)
    y = (pauli("minus") - pauli("plus")) * 1j
    assert np.allclose(y.dense(), pauli("y").dense())
    with pytest.raises(ValueError):
        pauli("w")


def test_ladder_and_number():
    a = ladder(3)
    one = np.eye(4)[1]
    assert np.allclose(a @ one, np.eye(4)[0])
    n = (a.dag() @ a).dense()
    # sqrt(n)^2 is exact only up to one rounding
    assert np.max(np.abs(n - np.diag(np.arange(4)))) < 1e-14
    assert np.max(np.abs(n - number(3).dense())) < 1e-14
    two = np.eye(6)[2]
    assert np.allclose((ladder(5).dag() @ ladder(5)) @ two, 2 * two)
    # truncation: a^+ |n_max> = 0
    assert np.allclose(a.dag() @ np.eye(4)[3], 0)
    with pytest.raises(ValueError):
        ladder(0)


def test_layout_invariants():
    lay = HilbertLayout.gate(3)
    assert lay.factor_dims == (2, 2, 4, 4)
    assert lay.total_dim == 64
    with pytest.raises(ValueError):
        HilbertLayout((2, 1))
    with pytest.raises(ValueError):
        HilbertLayout(())


def test_operator_invariants():
    with pytest.raises(DimensionError):
        Operator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        Operator(np.array([[np.nan, 0], [0, 0]]))
    with pytest.raises(ValueError):
        Operator(np.array([[0, 1], [0, 0]]), hermitian=True)
    with pytest.raises(DimensionError):
        pauli("x") + ladder(3)


def test_embed_examples():
    lay = HilbertLayout((2, 2, 2, 2))
    z0 = embed(pauli("z"), 0, lay)
    z1 = embed(pauli("z"), 1, lay)
    d = z0.dense().diagonal().real.reshape(2, 2, 2, 2)
    assert np.all(d[1] == 1) and np.all(d[0] == -1)
    both = embed_many({0: pauli("z"), 1: pauli("z")}, lay)
    assert np.array_equal((z0 @ z1).dense(), both.dense())
    assert embed(pauli("z"), 0, HilbertLayout((2, 2))).trace() == 0
    g = HilbertLayout.gate(3)
    a = embed(ladder(3), 2, g).dense()
    x = embed(pauli("x"), 0, g).dense()
    assert np.linalg.norm(a @ x - x @ a) < 1e-14
    with pytest.raises(DimensionError):
        embed(ladder(3), 0, g)
    with pytest.raises(DimensionError):
        embed(pauli("x"), 7, g)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_embed_multiplicative_on_disjoint_factors(seed):
    rng = np.random.default_rng(seed)
    lay = HilbertLayout((2, 3, 2))
    A = Operator(rand_op(rng, 2))
    B = Operator(rand_op(rng, 3))
    C = Operator(rand_op(rng, 2))
    prod = (embed(A, 0, lay) @ embed(B, 1, lay) @ embed(C, 2, lay)).dense()
    direct = embed_many({0: A, 1: B, 2: C}, lay).dense()
    assert np.linalg.norm(prod - direct) < 1e-13 * max(1.0, np.linalg.norm(direct))
    comm = embed(A, 0, lay) @ embed(B, 1, lay) - embed(B, 1, lay) @ embed(A, 0, lay)
    assert np.linalg.norm(comm.dense()) < 1e-13


def test_apply_examples():
    lay = HilbertLayout.gate(1)
    rng = np.random.default_rng(1)
    rho = rand_density(rng, lay.total_dim)
    st_ = QuantumState.mixed(rho, lay)
    assert np.array_equal(apply(identity(lay.total_dim), st_, "left"), st_.data)
    psi = QuantumState.product(lay, 0, 0, 0, 0)
    out = apply(embed(pauli("plus"), 0, lay), psi)
    assert np.allclose(out, lay.basis_vector(1, 0, 0, 0))
    U = Operator(np.linalg.qr(rand_op(rng, lay.total_dim))[0])
    assert abs(np.trace(apply(U, st_, "sandwich")) - 1) < 1e-12
    with pytest.raises(DimensionError):
        apply(ladder(3), st_)
    with pytest.raises(ValueError):
        apply(U, st_, "upside")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), side=st.sampled_from(["left", "right", "sandwich"]))
def test_sparse_and_dense_paths_agree(seed, side):
    rng = np.random.default_rng(seed)
    lay = HilbertLayout((2, 2, 4, 4))
    A = rand_op(rng, 4)
    sparse_op = embed(Operator(A), 2, lay)
    dense_op = Operator(sparse_op.dense())
    rho = rand_density(rng, lay.total_dim)
    a = apply(sparse_op, rho, side)
    b = apply(dense_op, rho, side)
    assert np.max(np.abs(a - b)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_hermitian_expectation_is_real(seed):
    rng = np.random.default_rng(seed)
    lay = HilbertLayout((2, 2, 3, 3))
    A = rand_op(rng, 3)
    H = embed(Operator(A + A.conj().T, hermitian=True), 3, lay) + embed(pauli("y"), 0, lay)
    assert H.hermitian
    st_ = QuantumState.mixed(rand_density(rng, lay.total_dim), lay)
    val = st_.expect(H)
    assert abs(val.imag) <= 1e-10 * max(1.0, abs(val.real))


def test_state_invariants():
    lay = HilbertLayout((2, 2))
    with pytest.raises(ValueError):
        QuantumState.pure(np.array([1, 1, 0, 0]), lay)
    with pytest.raises(DimensionError):
        QuantumState.pure(np.array([1, 0]), lay)
    with pytest.raises(ValueError):
        QuantumState.mixed(np.diag([0.5, 0.5, 0.5, -0.5]), lay)
    with pytest.raises(ValueError):
        QuantumState.mixed(np.array([[0.5, 0.1, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]), lay)
    with pytest.raises(ValueError):
        QuantumState("weird", np.eye(4) / 4, lay)


def test_partial_traces():
    rng = np.random.default_rng(3)
    lay = HilbertLayout((2, 2, 3))
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    psi /= np.linalg.norm(psi)
    r1 = pure_reduced(psi, lay, [0, 1])
    r2 = partial_trace_keep(np.outer(psi, psi.conj()), lay, [0, 1])
    assert np.allclose(r1, r2)
    assert np.isclose(np.trace(r1), 1)
    r3 = partial_trace_keep(np.outer(psi, psi.conj()), lay, [2])
    assert r3.shape == (3, 3)


def test_sparse_storage_preserved():
    op = embed(ladder(3), 2, HilbertLayout.gate(3))
    assert op.is_sparse and sp.issparse(op.matrix)
    assert op.nnz == 4 * 4 * 3
