"""Pencil storage, shifted solves, reduced eigenproblem and Matrix Market I/O."""

import os
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from rational_feast.errors import (DomainError, MatrixMarketError, RankDeficiencyWarning,
                                   SingularShiftError)
from rational_feast.linalg import (HermitianPencil, b_inner, load_matrix_market,
                                   reduced_eig, shifted_solve, write_matrix_market)

DATA = os.path.join(os.path.dirname(__file__), "data")


def random_hermitian(rng, n, complex_=True):
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    return (X + X.conj().T) / 2


def random_hpd(rng, n, complex_=True):
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    return X @ X.conj().T + n * np.eye(n)


def inertia_count(A, x):
    """Eigenvalues of Hermitian ``A`` below ``x``: negative pivots of LDL^H."""
    M = np.array(A, dtype=complex) - x * np.eye(len(A))
    n = len(M)
    count = 0
    for k in range(n):
        d = M[k, k].real
        if d == 0.0:
            d = -1e-300
        if d < 0:
            count += 1
        col = M[k + 1:, k] / d
        M[k + 1:, k + 1:] -= np.outer(col, M[k, k + 1:])
    return count


def bisection_eigenvalues(A, tol=1e-14):
    """All eigenvalues of a small Hermitian matrix by inertia bisection."""
    n = len(A)
    r = np.max(np.sum(np.abs(A), axis=1))
    out = []
    for k in range(n):
        lo, hi = -r - 1, r + 1
        while hi - lo > tol * max(1.0, r):
            mid = (lo + hi) / 2
            if inertia_count(A, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return np.array(out)


def write_text(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- pencil ------------------------------------------------------------

def test_pencil_defaults_to_identity():
    P = HermitianPencil(np.diag([1.0, 2.0]))
    assert P.b_is_identity and P.real_symmetric and P.N == 2
    np.testing.assert_array_equal(P.matvec_B(np.ones(2)), np.ones(2))


def test_pencil_rejects_non_hermitian():
    with pytest.raises(DomainError):
        HermitianPencil(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_pencil_rejects_indefinite_B():
    with pytest.raises(DomainError):
        HermitianPencil(np.eye(2), np.diag([1.0, -1.0]))


def test_pencil_rejects_non_square_and_mismatch():
    with pytest.raises(DomainError):
        HermitianPencil(np.ones((2, 3)))
    with pytest.raises(DomainError):
        HermitianPencil(np.eye(2), np.eye(3))


def test_pencil_complex_flag():
    rng = np.random.default_rng(0)
    assert not HermitianPencil(random_hermitian(rng, 4)).real_symmetric


# -- shifted solves ----------------------------------------------------

def test_shifted_solve_diagonal():
    P = HermitianPencil(np.diag([1.0, 2.0, 3.0]))
    X = shifted_solve(P, 1j, np.eye(3)[:, :1])
    np.testing.assert_allclose(X[:, 0], [1 / (1j - 1), 0, 0], atol=1e-16)


def test_shifted_solve_random_50():
    rng = np.random.default_rng(50)
    A, B = random_hermitian(rng, 50), random_hpd(rng, 50)
    P = HermitianPencil(A, B)
    R = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
    z = 0.3 + 0.7j
    X = shifted_solve(P, z, R)
    assert np.linalg.norm((z * B - A) @ X - R) / np.linalg.norm(R) < 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_shifted_solve_multiply_back(seed):
    rng = np.random.default_rng(1000 + seed)
    N = int(rng.integers(5, 201))
    cplx = bool(seed % 2)
    A, B = random_hermitian(rng, N, cplx), random_hpd(rng, N, cplx)
    z = complex(rng.uniform(-3, 3), rng.uniform(0.05, 3) * (1 if seed % 3 else -1))
    R = rng.standard_normal((N, 3))
    X = shifted_solve(HermitianPencil(A, B), z, R)
    assert np.linalg.norm((z * B - A) @ X - R) / np.linalg.norm(R) < 1e-10


def test_shifted_solve_singular_shift():
    P = HermitianPencil(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(SingularShiftError) as info:
        shifted_solve(P, 2.0, np.ones((3, 1)))
    assert info.value.z == 2.0


def test_shifted_solve_sparse_pencil():
    A = load_matrix_market(os.path.join(DATA, "banded100.mtx"))
    P = HermitianPencil(A)
    R = np.ones((100, 2))
    X = shifted_solve(P, 1 + 1j, R)
    assert np.linalg.norm((1 + 1j) * X - A @ X - R) / np.linalg.norm(R) < 1e-10


# -- reduced eigenproblem ----------------------------------------------

def test_reduced_eig_diagonal():
    theta, W = reduced_eig(np.diag([3.0, 1.0]), np.eye(2))
    np.testing.assert_allclose(theta, [1.0, 3.0])
    np.testing.assert_allclose(np.abs(W), [[0, 1], [1, 0]], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_reduced_eig_random_residual(seed):
    rng = np.random.default_rng(seed)
    Ah, Bh = random_hermitian(rng, 10), random_hpd(rng, 10)
    theta, W = reduced_eig(Ah, Bh)
    assert np.all(np.diff(theta) >= 0)
    assert np.linalg.norm(Ah @ W - Bh @ W * theta) < 1e-10 * np.linalg.norm(Ah)
    np.testing.assert_allclose(W.conj().T @ Bh @ W, np.eye(10), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("seed", range(3))
def test_reduced_eig_matches_bisection(n, seed):
    rng = np.random.default_rng(100 * n + seed)
    Ah = random_hermitian(rng, n, complex_=bool(seed % 2))
    theta, _ = reduced_eig(Ah, np.eye(n))
    np.testing.assert_allclose(theta, bisection_eigenvalues(Ah), atol=1e-10)


def test_reduced_eig_rank_deficient():
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((20, 4))
    Z = np.hstack([Z, Z[:, :2]])
    A = random_hermitian(rng, 20, complex_=False)
    Ah, Bh = Z.T @ A @ Z, Z.T @ Z
    with pytest.warns(RankDeficiencyWarning):
        theta, W = reduced_eig(Ah, Bh)
    assert len(theta) == 4 and W.shape == (6, 4)
    np.testing.assert_allclose(W.T @ Bh @ W, np.eye(4), atol=1e-10)
    assert np.linalg.norm(Ah @ W - Bh @ W * theta) < 1e-10 * np.linalg.norm(Ah)


def test_reduced_eig_full_rank_no_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reduced_eig(np.diag([1.0, 2.0]), np.diag([1.0, 1e-6]))


# -- B inner products --------------------------------------------------

def test_b_inner():
    rng = np.random.default_rng(7)
    A, B = random_hermitian(rng, 12), random_hpd(rng, 12)
    P = HermitianPencil(A, B)
    U = rng.standard_normal((12, 3)) + 1j * rng.standard_normal((12, 3))
    V = rng.standard_normal((12, 2))
    np.testing.assert_allclose(b_inner(P, U, V), U.conj().T @ B @ V, rtol=1e-14)
    # B-orthonormal basis from the generalized eigenvectors
    _, X = reduced_eig(A, B)
    np.testing.assert_allclose(b_inner(P, X, X), np.eye(12), atol=1e-10)
    P0 = HermitianPencil(A)
    np.testing.assert_allclose(b_inner(P0, U, U), U.conj().T @ U, rtol=1e-14)
    with pytest.raises(DomainError):
        b_inner(P, U[:5], V)


# -- Matrix Market -----------------------------------------------------

def test_mm_identity(tmp_path):
    p = write_text(tmp_path, "I.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                      "2 2 2\n1 1 1.0\n2 2 1.0\n")
    np.testing.assert_array_equal(load_matrix_market(p).toarray(), np.eye(2))


def test_mm_symmetric_expansion(tmp_path):
    p = write_text(tmp_path, "s.mtx", "%%MatrixMarket matrix coordinate real symmetric\n"
                                      "% comment\n3 3 4\n1 1 2\n2 1 -1\n3 2 -1\n3 3 2\n")
    M = load_matrix_market(p).toarray()
    np.testing.assert_array_equal(M, [[2, -1, 0], [-1, 0, -1], [0, -1, 2]])


def test_mm_hermitian_and_array(tmp_path):
    p = write_text(tmp_path, "h.mtx", "%%MatrixMarket matrix coordinate complex hermitian\n"
                                      "2 2 3\n1 1 1 0\n2 1 0 2\n2 2 3 0\n")
    np.testing.assert_array_equal(load_matrix_market(p).toarray(), [[1, -2j], [2j, 3]])
    p = write_text(tmp_path, "a.mtx", "%%MatrixMarket matrix array real general\n"
                                      "2 2\n1\n2\n3\n4\n")
    np.testing.assert_array_equal(load_matrix_market(p), [[1, 3], [2, 4]])


def test_mm_banded_matvec():
    M = load_matrix_market(os.path.join(DATA, "banded100.mtx"))
    # dense reconstruction straight from the file text
    D = np.zeros((100, 100))
    with open(os.path.join(DATA, "banded100.mtx")) as fh:
        lines = [l for l in fh.read().splitlines() if not l.startswith("%")][1:]
    for line in lines:
        i, j, v = line.split()
        D[int(i) - 1, int(j) - 1] = D[int(j) - 1, int(i) - 1] = float(v)
    x = np.random.default_rng(0).standard_normal((100, 3))
    np.testing.assert_allclose(M @ x, D @ x, atol=1e-13)
    assert M.nnz == 100 + 2 * 99 + 2 * 98


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 1.0\n", 4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 1.0\n", 4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n2 2 1.0\n", 4),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
    ("%%MatrixMarket matrix tensor real general\n2 2 1\n1 1 1.0\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 two 1\n1 1 1.0\n", 2),
    ("%%MatrixMarket matrix array real general\n2 2\n1\n2\nabc\n4\n", 5),
])
def test_mm_errors_name_line(tmp_path, text, line):
    p = write_text(tmp_path, "bad.mtx", text)
    with pytest.raises(MatrixMarketError) as info:
        load_matrix_market(p)
    assert f"line {line}" in str(info.value)


def test_mm_non_square_rejected_for_pencil(tmp_path):
    p = write_text(tmp_path, "r.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                      "2 3 1\n1 1 1.0\n")
    M = load_matrix_market(p)
    assert M.shape == (2, 3)
    with pytest.raises(DomainError):
        HermitianPencil(M)


@pytest.mark.parametrize("symmetry", ["general", "symmetric"])
def test_mm_round_trip_sparse(tmp_path, symmetry):
    D = sp.random(30, 30, density=0.1, random_state=5, format="csr")
    D = (D + D.T + sp.identity(30)).tocsr()
    # exactly representable values
    D.data = np.round(D.data * 64) / 64
    p = tmp_path / "rt.mtx"
    write_matrix_market(p, D, symmetry=symmetry, comment="round trip")
    M = load_matrix_market(p)
    assert (M != D).nnz == 0
    np.testing.assert_array_equal(np.sort(M.indices), np.sort(D.tocsr().indices))


def test_mm_round_trip_hermitian_dense(tmp_path):
    rng = np.random.default_rng(6)
    H = random_hermitian(rng, 5)
    for fmt in ("dense", "sparse"):
        p = tmp_path / f"h_{fmt}.mtx"
        M = H if fmt == "dense" else sp.csr_matrix(H)
        write_matrix_market(p, M, symmetry="hermitian")
        back = load_matrix_market(p)
        back = back if fmt == "dense" else back.toarray()
        np.testing.assert_array_equal(back, H)


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=4))
def test_mm_round_trip_property(tmp_path_factory, vals):
    M = np.array(vals).reshape(2, 2)
    p = tmp_path_factory.mktemp("mm") / "m.mtx"
    write_matrix_market(p, M)
    np.testing.assert_array_equal(load_matrix_market(p), M)
